"""Sampled curves and tap coefficient series, the common output containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass
class CurveSeries:
    """A real or complex function sampled on a strictly increasing axis."""

    x_name: str
    x_unit: str
    x: np.ndarray
    values: np.ndarray
    y_name: str = "value"
    y_unit: str = ""
    metadata: dict[str, Any] = field(default_factory=dict)
    band: np.ndarray | None = None  # optional half-width of a confidence band

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values)
        if self.x.ndim != 1 or self.values.shape[:1] != self.x.shape:
            raise ValueError("x and values must be 1-D arrays of the same length")
        if self.x.size > 1 and np.any(np.diff(self.x) <= 0):
            raise ValueError("x axis must be strictly increasing")

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def __len__(self) -> int:
        return self.x.size

    def abs(self) -> np.ndarray:
        return np.abs(self.values)


@dataclass
class TapCoefficientSeries:
    """Complex samples of one tap coefficient h_{l,pq}(t) on a uniform time grid."""

    tap: int
    p: int
    q: int
    times: np.ndarray
    samples: np.ndarray
    tau: float
    metadata: dict[str, Any] = field(default_factory=dict)

    def power(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    def as_curve(self) -> CurveSeries:
        meta = dict(self.metadata, tap=self.tap, p=self.p, q=self.q, tau=repr(self.tau))
        return CurveSeries("t", "s", self.times, self.samples, "h", "", meta)
