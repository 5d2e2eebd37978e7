# Shared helpers for the command modules
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional
import os
import shutil
import tempfile

import click

from evflex.core.config import RunConfig, load_run_config, preset_names
from evflex.core.logs import logger
from evflex.schemas.fleet import Season


def get_config(config_path: Optional[Path], drivers: Optional[int] = None,
               preset: Optional[str] = None) -> RunConfig:
    """Run configuration from --config or --preset (defaults when both are omitted), with a driver-count override."""
    config = load_run_config(config_path, preset)
    if drivers is not None:
        synthetic = config.synthetic.model_copy(update={"driver_count": drivers})
        config = config.model_copy(update={"synthetic": synthetic})
    return config


def resolve_file(path: Path, default_name: str) -> Path:
    """Accept either the file itself or the directory a previous stage wrote it to."""
    path = Path(path)
    return path / default_name if path.is_dir() else path


def _publish(staging: Path, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for entry in sorted(staging.iterdir()):
        target = out / entry.name
        if target.is_dir() and not target.is_symlink():
            shutil.rmtree(target)
        elif target.exists() or target.is_symlink():
            target.unlink()
        os.replace(entry, target)
    staging.rmdir()


@contextmanager
def staged_output(out: Path) -> Iterator[Path]:
    """
    Yield a temporary sibling of `out`; its contents replace the matching
    entries of `out` only if the block succeeds. Failures remove it.
    """
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{out.name}.staging-", dir=out.parent))
    try:
        yield staging
    except BaseException:
        logger.error(f"Run failed; discarding staged outputs for {out}")
        shutil.rmtree(staging, ignore_errors=True)
        raise
    _publish(staging, out)
    logger.info(f"Published outputs to {out}")


SEASON_CHOICE = click.Choice([s.value for s in Season])

config_option = click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path),
                             default=None, help="YAML run configuration (defaults when omitted).")
preset_option = click.option("--preset", default=None,
                             help=f"Shipped run configuration instead of --config: {', '.join(preset_names())}.")
out_option = click.option("--out", "out", type=click.Path(file_okay=False, path_type=Path), required=True,
                          help="Output directory.")
