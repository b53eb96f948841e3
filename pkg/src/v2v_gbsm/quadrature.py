"""Tensor quadrature on the (azimuth, elevation) rectangle and an adaptive driver."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

# Elevation panel breakpoints; cylinder heights are clamped beyond BETA_CLAMP,
# which puts a kink in the integrand there.
BETA_CLAMP = 0.99 * math.pi / 2
_BETA_BREAKS = (-math.pi / 2, -BETA_CLAMP, 0.0, BETA_CLAMP, math.pi / 2)


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error {achieved:.3g})")
        self.achieved = achieved


@dataclass(frozen=True)
class SphereRule:
    alpha: np.ndarray
    beta: np.ndarray
    weights: np.ndarray  # dalpha dbeta weights, density not included

    @property
    def size(self) -> int:
        return self.alpha.size


@lru_cache(maxsize=64)
def _gauss_panels(n_beta: int, lower: float, extra: tuple[float, ...] = ()) -> tuple[np.ndarray, np.ndarray]:
    breaks = sorted({b for b in _BETA_BREAKS + extra if b >= lower - 1e-15})
    nodes, weights = [], []
    x, w = np.polynomial.legendre.leggauss(n_beta)
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        # Beyond the clamp the integrand is smooth, so few nodes suffice.
        if lo >= BETA_CLAMP - 1e-12 or hi <= -BETA_CLAMP + 1e-12:
            xs, ws = np.polynomial.legendre.leggauss(max(4, n_beta // 8))
        else:
            xs, ws = x, w
        half = 0.5 * (hi - lo)
        nodes.append(lo + half * (xs + 1.0))
        weights.append(half * ws)
    return np.concatenate(nodes), np.concatenate(weights)


@lru_cache(maxsize=64)
def _sphere_rule(n_alpha: int, n_beta: int, upper_only: bool, extra: tuple[float, ...]) -> SphereRule:
    alpha = -math.pi + 2.0 * math.pi * np.arange(n_alpha) / n_alpha
    beta, wb = _gauss_panels(n_beta, 0.0 if upper_only else -math.pi / 2, extra)
    A, B = np.meshgrid(alpha, beta, indexing="ij")
    W = np.outer(np.full(n_alpha, 2.0 * math.pi / n_alpha), wb)
    for arr in (A, B, W):
        arr.setflags(write=False)
    return SphereRule(A.ravel(), B.ravel(), W.ravel())


def sphere_rule(n_alpha: int, n_beta: int, upper_only: bool = False,
                extra_breaks: tuple[float, ...] = ()) -> SphereRule:
    """Periodic trapezoid in azimuth times panelled Gauss-Legendre in elevation.

    ``n_beta`` is the node count per main elevation panel; ``extra_breaks``
    splits the elevation panels further.
    """
    return _sphere_rule(int(n_alpha), int(n_beta), bool(upper_only), tuple(float(b) for b in extra_breaks))


@lru_cache(maxsize=64)
def circle_rule(n_alpha: int) -> SphereRule:
    alpha = -math.pi + 2.0 * math.pi * np.arange(n_alpha) / n_alpha
    return SphereRule(alpha, np.zeros(n_alpha), np.full(n_alpha, 2.0 * math.pi / n_alpha))


def adaptive(evaluate: Callable[[int], np.ndarray], tol: float = 1e-5,
             start: int = 0, max_level: int = 6) -> tuple[np.ndarray, float, int]:
    """Refine ``evaluate(level)`` until two successive levels agree to ``tol``.

    ``evaluate`` returns an array (any shape); the error estimate is the max
    absolute change between levels. Returns (value, error, level).
    """
    prev = np.asarray(evaluate(start))
    err = math.inf
    for level in range(start + 1, max_level + 1):
        cur = np.asarray(evaluate(level))
        err = float(np.max(np.abs(cur - prev))) if cur.size else 0.0
        if err < tol:
            return cur, err, level
        prev = cur
    raise QuadratureError(f"no convergence to tol={tol:g} after level {max_level}", err)
