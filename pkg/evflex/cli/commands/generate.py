from pathlib import Path
from typing import Optional

import click

from evflex.cli.deps import SEASON_CHOICE, config_option, get_config, out_option, preset_option, staged_output
from evflex.schemas.fleet import Season
from evflex.services.pipeline import generate_stage


@click.command("generate")
@config_option
@preset_option
@click.option("--seed", type=int, default=0, show_default=True, help="Global seed.")
@out_option
@click.option("--season", type=SEASON_CHOICE, default=Season.WINTER.value, show_default=True,
              help="Season label written to scenario.yaml.")
@click.option("--drivers", type=click.IntRange(min=0), default=None, help="Override synthetic.driver_count.")
def generate(config_path: Optional[Path], preset: Optional[str], seed: int, out: Path, season: str,
             drivers: Optional[int]):
    """Write a synthetic scenario (schedules, regions, scenario metadata)."""
    config = get_config(config_path, drivers, preset)
    with staged_output(out) as staging:
        manifest = generate_stage(config, seed, staging, Season(season), config_path)
    click.echo(f"generated {manifest.driver_count} drivers into {out}")
