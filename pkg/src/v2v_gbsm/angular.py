"""Von Mises-Fisher scatterer density on the sphere: evaluation, sampling, marginals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import i0e

if TYPE_CHECKING:  # pragma: no cover
    from .config import ScenarioConfig, ValidatedScenario
    from .series import CurveSeries

TINY_K = 1e-12


@dataclass(frozen=True)
class VonMisesFisher:
    """Fisher density with mean azimuth ``alpha0``, mean elevation ``beta0`` and concentration ``k``."""

    alpha0: float = 0.0
    beta0: float = 0.0
    k: float = 0.0

    def mean_direction(self) -> np.ndarray:
        cb = math.cos(self.beta0)
        return np.array([cb * math.cos(self.alpha0), cb * math.sin(self.alpha0), math.sin(self.beta0)])


def _check_beta(beta: np.ndarray) -> None:
    if np.any(np.abs(beta) > math.pi / 2 + 1e-12):
        raise ValueError("elevation must lie in [-pi/2, pi/2]")


def vmf_pdf(dist: VonMisesFisher, alpha, beta):
    """Joint density in (alpha, beta), per dalpha dbeta, for beta in [-pi/2, pi/2].

    Evaluated as k cos(b) exp(k (mu.x - 1)) / (2 pi (1 - exp(-2k))), which is the
    textbook form k cos(b) exp(k mu.x) / (4 pi sinh k) without overflow at large k.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    _check_beta(beta)
    cb = np.cos(beta)
    k = float(dist.k)
    if k < TINY_K:
        return np.broadcast_to(cb / (4.0 * math.pi), np.broadcast(alpha, beta).shape).copy()
    dot = (math.cos(dist.beta0) * cb * np.cos(alpha - dist.alpha0)
           + math.sin(dist.beta0) * np.sin(beta))
    return k * cb * np.exp(k * (dot - 1.0)) / (2.0 * math.pi * -math.expm1(-2.0 * k))


def von_mises_pdf(alpha, mu: float, k: float):
    """Circular von Mises density exp(k cos(a - mu)) / (2 pi I0(k))."""
    alpha = np.asarray(alpha, dtype=float)
    return np.exp(k * (np.cos(alpha - mu) - 1.0)) / (2.0 * math.pi * i0e(k))


def mean_resultant_length(k: float) -> float:
    """Expected |mean unit vector| of a Fisher distribution: coth k - 1/k."""
    if k < 1e-4:
        return k / 3.0
    return 1.0 / math.tanh(k) - 1.0 / k


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _rotate_from_pole(w: np.ndarray, phi: np.ndarray, dist: VonMisesFisher) -> np.ndarray:
    """Unit vectors at cos-colatitude ``w`` and longitude ``phi`` about the mean direction."""
    s = np.sqrt(np.clip(1.0 - w * w, 0.0, None))
    mu = dist.mean_direction()
    # Orthonormal frame (e1, e2, mu); e1 points toward increasing elevation.
    e1 = np.array([-math.sin(dist.beta0) * math.cos(dist.alpha0),
                   -math.sin(dist.beta0) * math.sin(dist.alpha0),
                   math.cos(dist.beta0)])
    e2 = np.cross(mu, e1)
    return (w[:, None] * mu + (s * np.cos(phi))[:, None] * e1 + (s * np.sin(phi))[:, None] * e2)


def vmf_sample(dist: VonMisesFisher, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` (alpha, beta) pairs; returns an array of shape (n, 2).

    ``seed`` may be an int, a sequence of ints or a ``numpy.random.Generator``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _as_generator(seed)
    u = rng.random(n)
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    k = float(dist.k)
    if k < TINY_K:
        w = 2.0 * u - 1.0
    else:
        w = 1.0 + np.log(u + (1.0 - u) * math.exp(-2.0 * k)) / k
    x = _rotate_from_pole(np.clip(w, -1.0, 1.0), phi, dist)
    alpha = np.arctan2(x[:, 1], x[:, 0])
    beta = np.arcsin(np.clip(x[:, 2], -1.0, 1.0))
    return np.column_stack([alpha, beta])


def sample_von_mises(mu: float, k: float, n: int, seed=None) -> np.ndarray:
    """Circular von Mises draws wrapped to [-pi, pi)."""
    rng = _as_generator(seed)
    a = rng.vonmises(mu, k, n) if k > 0 else rng.uniform(-math.pi, math.pi, n)
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def vmf_normalization(dist: VonMisesFisher, n_alpha: int = 128, n_beta: int = 64) -> float:
    """Integral of the density over the sphere by tensor quadrature (node counts >= 64)."""
    from .quadrature import sphere_rule

    if n_alpha < 64 or n_beta < 64:
        raise ValueError("quadrature needs at least 64 nodes per axis")
    rule = sphere_rule(n_alpha, n_beta)
    return float(np.sum(rule.weights * vmf_pdf(dist, rule.alpha, rule.beta)))


def _arrival_marginal_grid(dist: VonMisesFisher, alpha: np.ndarray, n_beta: int = 256) -> np.ndarray:
    beta, wb = np.polynomial.legendre.leggauss(n_beta)
    beta = beta * math.pi / 2
    wb = wb * math.pi / 2
    return vmf_pdf(dist, alpha[:, None], beta[None, :]) @ wb


def marginal_aoa_pdf(scenario: "ValidatedScenario | ScenarioConfig", tap: int = 1,
                     beamwidth: float | None = None, n_points: int = 720,
                     population: str | None = None) -> "CurveSeries":
    """Arrival-azimuth density of the semi-ellipsoid scatterers of ``tap``.

    The population's angular law is read in the receiver frame. With a
    ``beamwidth`` the transmitter only illuminates scatterers whose departure
    azimuth lies in [-beamwidth, beamwidth]; each arrival direction is traced to
    the ellipsoid surface, its departure azimuth is computed from the exact
    geometry and the surviving density is renormalized.
    """
    from .config import ValidatedScenario
    from .geometry import ellipsoid_point_from_receiver
    from .series import CurveSeries

    cfg = scenario.config if isinstance(scenario, ValidatedScenario) else scenario
    if not 1 <= tap <= cfg.n_taps:
        raise IndexError(f"tap {tap} not configured")
    if beamwidth is not None and not 0.0 < beamwidth <= math.pi:
        raise ValueError("beamwidth must lie in (0, pi]")
    dist = cfg.population(population or f"ell{tap}")
    alpha = -math.pi + 2.0 * math.pi * np.arange(n_points) / n_points
    if beamwidth is None:
        values = _arrival_marginal_grid(dist, alpha)
    else:
        n_beta = 256
        beta, wb = np.polynomial.legendre.leggauss(n_beta)
        beta = beta * math.pi / 2
        wb = wb * math.pi / 2
        dens = vmf_pdf(dist, alpha[:, None], beta[None, :])
        A, B = np.meshgrid(alpha, beta, indexing="ij")
        point = ellipsoid_point_from_receiver(cfg, tap, A, np.abs(B))
        alpha_t = np.arctan2(point[..., 1], point[..., 0])
        lit = np.abs(alpha_t) <= beamwidth + 1e-12
        values = (dens * lit) @ wb
        total = values.sum() * 2.0 * math.pi / n_points
        if total <= 0.0:
            raise ValueError("no scatterers illuminated by the given beamwidth")
        values = values / total
    meta = {"scenario_hash": cfg.digest(), "tap": tap, "method": "quadrature",
            "beamwidth": "none" if beamwidth is None else repr(beamwidth)}
    return CurveSeries("alpha_R", "rad", alpha, values, "pdf", "1/rad", meta)
