from pathlib import Path
from typing import Optional

import click

from evflex.cli.deps import SEASON_CHOICE, config_option, get_config, out_option, preset_option, staged_output
from evflex.core.config import settings
from evflex.schemas.fleet import Season
from evflex.services.pipeline import simulate_stage


@click.command("simulate")
@click.option("--scenario", "scenario_dir", type=click.Path(file_okay=False, path_type=Path), required=True,
              help="Scenario directory written by generate.")
@config_option
@preset_option
@click.option("--seed", type=int, default=None, help="Global seed (defaults to the scenario's).")
@out_option
@click.option("--threads", type=click.IntRange(min=1), default=None,
              help="Worker processes (defaults to EVFLEX_THREADS). Does not change the output.")
@click.option("--season", type=SEASON_CHOICE, default=None, help="Season for the energy factor (defaults to the scenario's).")
def simulate(scenario_dir: Path, config_path: Optional[Path], preset: Optional[str], seed: Optional[int], out: Path,
             threads: Optional[int], season: Optional[str]):
    """Simulate charging decisions and write charging events and diagnostics."""
    config = get_config(config_path, preset=preset)
    with staged_output(out) as staging:
        manifest = simulate_stage(scenario_dir, config, staging, seed=seed, threads=threads or settings.THREADS,
                                  season=Season(season) if season else None, config_path=config_path)
    click.echo(f"simulated {manifest.driver_count} drivers: {manifest.counts['charging_events']} charging events, "
               f"{manifest.counts['infeasible_drivers']} infeasible")
