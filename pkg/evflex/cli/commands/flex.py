from pathlib import Path
from typing import Optional

import click

from evflex.cli.deps import config_option, get_config, out_option, preset_option, resolve_file, staged_output
from evflex.services.pipeline import flex_stage
from evflex.services.reporting import EVENTS_FILE


@click.command("flex")
@click.option("--events", "events_path", type=click.Path(path_type=Path), required=True,
              help="events.csv or the simulate output directory.")
@click.option("--scenario", "scenario_dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@config_option
@preset_option
@out_option
def flex(events_path: Path, scenario_dir: Path, config_path: Optional[Path], preset: Optional[str], out: Path):
    """Quantify flexibility envelopes for every eligible charging event."""
    config = get_config(config_path, preset=preset)
    with staged_output(out) as staging:
        manifest = flex_stage(resolve_file(events_path, EVENTS_FILE), scenario_dir, config, staging, config_path)
    click.echo(f"{manifest.counts['envelopes']} envelopes, {manifest.counts['excluded']} events excluded")
