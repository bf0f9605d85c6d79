"""
Run Artifacts

Run manifests, CSV tables and gnuplot scripts. Every CSV opens with a comment
line naming the manifest that produced it and the digest of the resolved
configuration, so a table can always be traced back to its parameters.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from app import __version__
from app.config.config_validator import RunConfig
from app.utils.emoji_logger import EmojiLogger

logger = logging.getLogger(__name__)

ANALYZE_COLUMNS = ["vehicle", "r", "Ps", "s", "D_opportunities", "PsD", "D_delay_s"]
SWEEP_EQUAL_COLUMNS = ["p", "collision_prob", "stderr", "trials"]
SWEEP_2D_COLUMNS = ["p_safe", "p_unsafe", "collision_prob", "stderr", "trials"]
ADAPT_COLUMNS = ["iter", "vehicle", "collision_est", "class", "p_access"]


def config_digest(config: RunConfig) -> str:
    """SHA-256 of the resolved configuration; the worker count is left out."""
    data = config.resolved()
    data["montecarlo"].pop("workers", None)
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """Everything needed to rerun a command: resolved config, seed, version and outputs."""
    command: str
    config: Dict[str, Any]
    digest: str
    seed: int
    workers: int
    version: str = __version__
    started_at: str = field(default_factory=_now)
    finished_at: Optional[str] = None
    outputs: List[str] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def start(cls, command: str, config: RunConfig, workers: int) -> "RunManifest":
        return cls(command=command, config=config.resolved(), digest=config_digest(config),
                   seed=config.montecarlo.seed, workers=workers)

    @property
    def filename(self) -> str:
        return f"{self.command}-manifest.json"

    def write(self, out_dir: Path) -> Path:
        self.finished_at = _now()
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / self.filename
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=False), encoding="utf-8")
        EmojiLogger.log('save', f"Manifest written to {path}")
        return path


def write_csv(frame: pd.DataFrame, path: Path, manifest: RunManifest,
              flags: Optional[Dict[str, Any]] = None) -> Path:
    """Write a table preceded by its ``# manifest=... sha256=...`` reference line."""
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"# manifest={manifest.filename} sha256={manifest.digest}"
    for key, value in (flags or {}).items():
        header += f" {key}={value}"
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(header + "\n")
        frame.to_csv(handle, index=False, lineterminator="\n")
    manifest.outputs.append(path.name)
    EmojiLogger.log('save', f"{len(frame)} rows written to {path}")
    return path


def read_csv(path: Path) -> pd.DataFrame:
    """Read a table written by write_csv."""
    return pd.read_csv(path, comment="#")


def write_curve_script(path: Path, csv_name: str, manifest: RunManifest,
                       x_column: str = "p", y_column: str = "collision_prob",
                       title: str = "Chain collision probability vs access probability") -> Path:
    """gnuplot script drawing y vs x with standard-error bars."""
    columns = SWEEP_EQUAL_COLUMNS
    x, y, err = columns.index(x_column) + 1, columns.index(y_column) + 1, columns.index("stderr") + 1
    script = "\n".join([
        f"# generated from {csv_name}, manifest {manifest.filename}",
        "set datafile separator ','",
        "set key off",
        f"set title '{title}'",
        f"set xlabel '{x_column}'",
        f"set ylabel '{y_column}'",
        "set grid",
        f"plot '{csv_name}' every ::1 using {x}:{y}:{err} with yerrorlines lw 2",
        "",
    ])
    return _write_script(path, script, manifest)


def write_surface_script(path: Path, csv_name: str, manifest: RunManifest,
                         title: str = "Chain collision probability over (p_safe, p_unsafe)") -> Path:
    """gnuplot script drawing the 2-D sweep as a point-cloud surface."""
    columns = SWEEP_2D_COLUMNS
    x, y, z = (columns.index(name) + 1 for name in ("p_safe", "p_unsafe", "collision_prob"))
    script = "\n".join([
        f"# generated from {csv_name}, manifest {manifest.filename}",
        "set datafile separator ','",
        "set key off",
        f"set title '{title}'",
        "set xlabel 'p_safe'",
        "set ylabel 'p_unsafe'",
        "set zlabel 'collision_prob' rotate",
        "set dgrid3d 20,20 qnorm 2",
        "set hidden3d",
        f"splot '{csv_name}' every ::1 using {x}:{y}:{z} with lines",
        "",
    ])
    return _write_script(path, script, manifest)


def _write_script(path: Path, script: str, manifest: RunManifest) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(script, encoding="utf-8")
    manifest.outputs.append(path.name)
    return path


def frame_from_rows(rows: Sequence[Dict[str, Any]], columns: List[str]) -> pd.DataFrame:
    """Build a table with a fixed column order, even when there are no rows."""
    return pd.DataFrame(list(rows), columns=columns)
