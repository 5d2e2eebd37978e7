# Run manifests: file digests and the deterministic fingerprint
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Optional
import hashlib
import json

import numpy
import pydantic
import scipy

from evflex import __version__
from evflex.schemas.report import RunManifest

MANIFEST_FILE = "manifest.json"


def file_digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1024 * 64), b""):
            h.update(chunk)
    return h.hexdigest()


def digests(paths: Iterable[Path], base: Optional[Path] = None) -> dict[str, str]:
    """sha256 per file, keyed by file name (or path relative to `base`), sorted."""
    def key(p: Path) -> str:
        return p.relative_to(base).as_posix() if base is not None else p.name
    return {key(p): file_digest(p) for p in sorted((Path(p) for p in paths), key=key)}


def module_versions() -> dict[str, str]:
    return {
        "evflex": __version__,
        "numpy": numpy.__version__,
        "pydantic": pydantic.VERSION,
        "scipy": scipy.__version__,
    }


def build_manifest(
        command: str,
        config_hash: str,
        global_seed: int,
        outputs: Iterable[Path],
        inputs: Iterable[Path] = (),
        scenario_id: str = "",
        season_label: str = "",
        driver_count: int = 0,
        counts: Optional[Mapping[str, int]] = None,
        wall_clock_s: float = 0.0,
        base: Optional[Path] = None,
) -> RunManifest:
    return RunManifest(
        command=command,
        version=__version__,
        config_hash=config_hash,
        global_seed=global_seed,
        scenario_id=scenario_id,
        season_label=season_label,
        module_versions=module_versions(),
        inputs=digests(inputs),
        outputs=digests((p for p in outputs if Path(p).name != MANIFEST_FILE), base),
        driver_count=driver_count,
        counts=dict(sorted((counts or {}).items())),
        wall_clock_s=round(wall_clock_s, 3),
        created_at=datetime.now(timezone.utc).isoformat(),
    )


def write_manifest(manifest: RunManifest, directory: Path) -> Path:
    path = Path(directory) / MANIFEST_FILE
    path.write_text(json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def read_manifest(directory: Path) -> RunManifest:
    return RunManifest.model_validate_json((Path(directory) / MANIFEST_FILE).read_text(encoding="utf-8"))
