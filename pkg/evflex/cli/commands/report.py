from pathlib import Path
from typing import Optional

import click

from evflex.cli.deps import config_option, get_config, out_option, preset_option, resolve_file, staged_output
from evflex.services.ingestion import REGIONS_FILE
from evflex.services.pipeline import report_stage
from evflex.services.reporting import ENVELOPES_FILE, EVENTS_FILE


@click.command("report")
@click.option("--events", "events_path", type=click.Path(path_type=Path), required=True)
@click.option("--envelopes", "envelopes_path", type=click.Path(path_type=Path), required=True)
@click.option("--regions", "regions_path", type=click.Path(path_type=Path), required=True,
              help="regions.csv or the scenario directory.")
@config_option
@preset_option
@out_option
@click.option("--season", default="", help="Season label carried into the summary.")
def report(events_path: Path, envelopes_path: Path, regions_path: Path, config_path: Optional[Path],
           preset: Optional[str], out: Path, season: str):
    """Aggregate profiles, daily energies and the fleet summary."""
    config = get_config(config_path, preset=preset)
    with staged_output(out) as staging:
        _, summary = report_stage(
            resolve_file(events_path, EVENTS_FILE),
            resolve_file(envelopes_path, ENVELOPES_FILE),
            resolve_file(regions_path, REGIONS_FILE),
            config, staging, season_label=season, config_path=config_path,
        )
    click.echo(f"weekday peak {summary.national_weekday_peak_kw:.1f} kW, "
               f"weekly flexible share {summary.national_week_share:.1%}")
