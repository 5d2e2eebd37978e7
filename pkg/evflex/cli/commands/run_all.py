from pathlib import Path
from typing import Optional
import time

import click

from evflex.cli.deps import config_option, get_config, out_option, preset_option, staged_output
from evflex.core.config import RunConfig, settings
from evflex.schemas.fleet import Season
from evflex.schemas.report import FleetSummary
from evflex.services import reporting
from evflex.services.aggregation import compare_seasons
from evflex.services.ingestion import REGIONS_FILE
from evflex.services.manifest import MANIFEST_FILE, build_manifest, write_manifest
from evflex.services.pipeline import flex_stage, generate_stage, report_stage, simulate_stage


def run_season(config: RunConfig, seed: int, season: Season, root: Path, threads: int,
               config_path: Optional[Path]) -> FleetSummary:
    """generate -> simulate -> flex -> report for one season, communicating through files under root/<season>."""
    base = root / season.value
    scenario_dir, sim_dir, flex_dir, report_dir = (base / n for n in ("scenario", "simulation", "flex", "report"))
    generate_stage(config, seed, scenario_dir, season, config_path)
    simulate_stage(scenario_dir, config, sim_dir, seed=seed, threads=threads, season=season, config_path=config_path)
    flex_stage(sim_dir / reporting.EVENTS_FILE, scenario_dir, config, flex_dir, config_path)
    _, summary = report_stage(
        sim_dir / reporting.EVENTS_FILE, flex_dir / reporting.ENVELOPES_FILE, scenario_dir / REGIONS_FILE,
        config, report_dir, season_label=season.value, global_seed=seed, config_path=config_path,
    )
    return summary


@click.command("run-all")
@config_option
@preset_option
@click.option("--seed", type=int, default=0, show_default=True)
@out_option
@click.option("--threads", type=click.IntRange(min=1), default=None)
@click.option("--season", type=click.Choice([s.value for s in Season] + ["all"]), default=Season.WINTER.value,
              show_default=True, help="One season, or 'all' for the four seasons and their comparison.")
@click.option("--drivers", type=click.IntRange(min=0), default=None, help="Override synthetic.driver_count.")
def run_all(config_path: Optional[Path], preset: Optional[str], seed: int, out: Path, threads: Optional[int],
            season: str, drivers: Optional[int]):
    """Full pipeline for one season or all four."""
    started = time.perf_counter()
    config = get_config(config_path, drivers, preset)
    seasons = list(Season) if season == "all" else [Season(season)]
    with staged_output(out) as staging:
        summaries = {
            s.value: run_season(config, seed, s, staging, threads or settings.THREADS, config_path)
            for s in seasons
        }
        if len(seasons) > 1:
            reporting.write_season_comparison(compare_seasons(summaries),
                                              staging / reporting.SEASON_COMPARISON_FILE)
        outputs = [p for p in staging.rglob("*") if p.is_file() and p.name != MANIFEST_FILE]
        manifest = build_manifest(
            "run-all", config.config_hash(), seed, outputs,
            [config_path] if config_path is not None else [],
            season_label=season, driver_count=config.synthetic.driver_count,
            wall_clock_s=time.perf_counter() - started, base=staging,
        )
        write_manifest(manifest, staging)
    for name, summary in summaries.items():
        click.echo(f"{name}: weekday peak {summary.national_weekday_peak_kw:.1f} kW, "
                   f"weekday/weekend flexible share {summary.national_weekday_share:.1%}/"
                   f"{summary.national_weekend_share:.1%}")
