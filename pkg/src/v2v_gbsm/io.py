"""CSV curve emission and run manifests."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .series import CurveSeries

FLOAT_FMT = "{:.17g}"


def _fmt(value: float) -> str:
    return FLOAT_FMT.format(float(value))


def emit_curve(series: CurveSeries, path: str | Path, extra_columns: dict[str, np.ndarray] | None = None) -> Path:
    """Write ``series`` as CSV: ``# key=value`` metadata lines, a header row, data rows.

    Complex values become ``<y>_re,<y>_im,<y>_abs`` columns. Numbers use 17
    significant digits so a round trip through text is exact.
    """
    path = Path(path)
    y = series.y_name
    columns: list[tuple[str, np.ndarray]] = [(series.x_name, series.x)]
    if series.is_complex:
        v = series.values
        columns += [(f"{y}_re", v.real), (f"{y}_im", v.imag), (f"{y}_abs", np.abs(v))]
    else:
        columns.append((y, series.values.astype(float)))
    if series.band is not None:
        columns.append((f"{y}_band", np.asarray(series.band, dtype=float)))
    for name, col in (extra_columns or {}).items():
        columns.append((name, np.asarray(col, dtype=float)))
    meta = dict(series.metadata)
    meta.setdefault("x_unit", series.x_unit)
    meta.setdefault("y_unit", series.y_unit)
    lines = [f"# {k}={meta[k]}" for k in sorted(meta)]
    lines.append(",".join(name for name, _ in columns))
    for i in range(series.x.size):
        lines.append(",".join(_fmt(col[i]) for _, col in columns))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def read_curve(path: str | Path) -> tuple[dict[str, str], list[str], np.ndarray]:
    """Parse a file written by :func:`emit_curve` into (metadata, header, data)."""
    meta: dict[str, str] = {}
    header: list[str] = []
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
        elif not header:
            header = line.split(",")
        elif line:
            rows.append([float(x) for x in line.split(",")])
    return meta, header, np.array(rows)


@dataclass
class RunManifest:
    command: str
    config: dict[str, Any]
    seed: int | None
    scenario_hash: str
    outputs: list[str] = field(default_factory=list)
    duration_s: float = 0.0
    version: str = __version__
    warnings: list[str] = field(default_factory=list)

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True, default=repr) + "\n")
        return path


class Stopwatch:
    def __enter__(self):
        self.start = time.perf_counter()
        self.elapsed = 0.0
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False
