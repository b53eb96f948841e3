"""Finite-scatterer (sum-of-sinusoids) realization of the tap coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .angular import sample_von_mises, vmf_sample
from .config import SPEED_OF_LIGHT, tap_geometry
from .model import Component, cfg_of, doppler_factor, los_doppler, tap_components
from .geometry import path_lengths
from .series import CurveSeries, TapCoefficientSeries

# Sub-stream ids for np.random.default_rng([seed, ..., stream]); fixed so that
# adding a population never perturbs the draws of another.
STREAM_ANGLES = {"tcyl": 1, "rcyl": 2, "ground": 3}
STREAM_ELL_BASE = 10
STREAM_PHASE_OFFSET = 100
STREAM_PAIR_BASE = 1000


def _stream(population: str) -> int:
    if population.startswith("ell"):
        return STREAM_ELL_BASE + int(population[3:])
    return STREAM_ANGLES[population]


def _rng(seed: Sequence[int] | int, stream: int) -> np.random.Generator:
    base = [int(seed)] if np.isscalar(seed) else [int(s) for s in seed]
    return np.random.default_rng(base + [stream])


def populations_of(scenario) -> list[str]:
    cfg = cfg_of(scenario)
    pops = ["tcyl", "rcyl"] + [f"ell{l}" for l in range(1, cfg.n_taps + 1)]
    if cfg.ground is not None:
        pops.append("ground")
    return pops


@dataclass
class DoublePairs:
    first: np.ndarray   # indices into the transmitter-side population
    second: np.ndarray  # indices into the receiver-side population
    phases: np.ndarray
    amplitude: float    # 1/sqrt(number of rays)


@dataclass
class ScattererEnsemble:
    """Scatterer angles (population frames) and random phases for one realization."""

    seed: tuple[int, ...]
    angles: dict[str, np.ndarray]
    phases: dict[str, np.ndarray]
    pairs: dict[str, DoublePairs] = field(default_factory=dict)
    full_product: bool = False
    random_phase: bool = True

    def count(self, population: str) -> int:
        return self.angles[population].shape[0]


def _sample_angles(cfg, population: str, n: int, rng: np.random.Generator) -> np.ndarray:
    dist = cfg.population(population)
    if cfg.planar:
        alpha = sample_von_mises(dist.alpha0, dist.k, n, rng)
        return np.column_stack([alpha, np.zeros(n)])
    ab = vmf_sample(dist, n, rng)
    if population.startswith("ell"):
        ab[:, 1] = np.abs(ab[:, 1])  # semi-ellipsoid: fold onto the upper half
    return ab


def build_ensemble(scenario, counts: int | Mapping[str, int] = 1000, seed: int | Sequence[int] = 0,
                   full_product: bool = False, random_phase: bool = True) -> ScattererEnsemble:
    """Draw every scatterer population and the per-ray random phases.

    Each population and each phase set uses its own sub-stream
    ``default_rng([*seed, stream_id])``, so results do not depend on the order
    in which populations are drawn.
    """
    cfg = cfg_of(scenario)
    seed_t = (int(seed),) if np.isscalar(seed) else tuple(int(s) for s in seed)
    angles: dict[str, np.ndarray] = {}
    phases: dict[str, np.ndarray] = {}
    for pop in populations_of(cfg):
        n = counts if isinstance(counts, int) else int(counts.get(pop, counts.get("default", 1000)))
        if n < 1:
            raise ValueError(f"scatterer count for {pop} must be >= 1")
        angles[pop] = _sample_angles(cfg, pop, n, _rng(seed_t, _stream(pop)))
        ph_rng = _rng(seed_t, STREAM_PHASE_OFFSET + _stream(pop))
        phases[pop] = ph_rng.uniform(0.0, 2.0 * math.pi, n) if random_phase else np.zeros(n)
    ens = ScattererEnsemble(seed_t, angles, phases, {}, full_product, random_phase)
    idx = 0
    for tap in range(1, cfg.n_taps + 1):
        for comp in tap_components(cfg, tap):
            if len(comp.populations) != 2:
                continue
            idx += 1
            rng = _rng(seed_t, STREAM_PAIR_BASE + idx)
            n1, n2 = ens.count(comp.populations[0]), ens.count(comp.populations[1])
            if full_product:
                first, second = (a.ravel() for a in np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij"))
            else:
                n = max(n1, n2)
                first = rng.permutation(n) % n1
                second = rng.permutation(n) % n2
            ph = rng.uniform(0.0, 2.0 * math.pi, first.size) if random_phase else np.zeros(first.size)
            ens.pairs[comp.label] = DoublePairs(first, second, ph, 1.0 / math.sqrt(first.size))
    return ens


def _component_rays(comp: Component, cfg, ens: ScattererEnsemble, p: int, q: int, t: float, mode: str):
    """(amplitude, total length, doppler factor, phase) arrays for every ray of ``comp``."""
    if comp.ray_class == "los":
        xi = path_lengths("los", cfg, p, q, (), t, 1, mode).total
        return (np.array([math.sqrt(comp.power)]), np.atleast_1d(xi), np.array([los_doppler(cfg)]),
                np.zeros(1))
    if len(comp.populations) == 1:
        pop = comp.populations[0]
        ab = ens.angles[pop]
        xi = path_lengths(comp.ray_class, cfg, p, q, [(ab[:, 0], ab[:, 1])], t, comp.l, mode).total
        nu = doppler_factor(cfg, pop, ab[:, 0], ab[:, 1], t)
        amp = np.full(ab.shape[0], math.sqrt(comp.power / ab.shape[0]))
        return amp, xi, nu, ens.phases[pop]
    pop1, pop2 = comp.populations
    pairs = ens.pairs[comp.label]
    a1 = ens.angles[pop1][pairs.first]
    a2 = ens.angles[pop2][pairs.second]
    xi = path_lengths(comp.ray_class, cfg, p, q, [(a1[:, 0], a1[:, 1]), (a2[:, 0], a2[:, 1])], t,
                      comp.l, mode).total
    nu = doppler_factor(cfg, pop2, a2[:, 0], a2[:, 1], t)
    amp = np.full(xi.shape, math.sqrt(comp.power) * pairs.amplitude)
    return amp, xi, nu, pairs.phases


def tap_coefficient(scenario, ensemble: ScattererEnsemble, tap: int, p: int, q: int, times,
                    mode: str = "exact", include_ground: bool = True) -> TapCoefficientSeries:
    """h_{l,pq}(t) on ``times``: sum over rays of amp * exp(-j k xi(t) + j 2 pi f_max t nu(t) + j phi)."""
    cfg = cfg_of(scenario)
    comps = tap_components(cfg, tap, include_ground)
    for comp in comps:
        missing = [pop for pop in comp.populations if pop not in ensemble.angles]
        if missing:
            raise ValueError(f"ensemble lacks populations {missing} needed by {comp.label}")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    k0 = 2.0 * math.pi * cfg.f_c / SPEED_OF_LIGHT
    out = np.zeros(times.size, dtype=complex)
    for i, t in enumerate(times):
        total = 0.0 + 0.0j
        for comp in comps:
            if comp.power == 0.0:
                continue
            amp, xi, nu, phi = _component_rays(comp, cfg, ensemble, p, q, float(t), mode)
            total += np.sum(amp * np.exp(1j * (-k0 * xi + 2.0 * math.pi * cfg.f_max * t * nu + phi)))
        out[i] = total
    meta = {"scenario_hash": cfg.digest(), "seed": ",".join(map(str, ensemble.seed)), "geometry": mode,
            "ricean_K": cfg.ricean_K, "components": ";".join(f"{c.label}:{c.power:.6g}" for c in comps)}
    return TapCoefficientSeries(tap, p, q, times, out, tap_geometry(cfg, tap).tau_l, meta)


def tap1_coefficient(scenario, ensemble, p, q, times, mode: str = "exact",
                     include_ground: bool = True) -> TapCoefficientSeries:
    return tap_coefficient(scenario, ensemble, 1, p, q, times, mode, include_ground)


def tapl_coefficient(scenario, ensemble, l: int, p, q, times, mode: str = "exact") -> TapCoefficientSeries:
    if l < 2:
        raise ValueError("tapl_coefficient needs l >= 2")
    return tap_coefficient(scenario, ensemble, l, p, q, times, mode)


def ground_coefficient(scenario, ensemble, p, q, times) -> TapCoefficientSeries:
    """The ground single-bounce term on its own."""
    cfg = cfg_of(scenario)
    if cfg.ground is None:
        raise ValueError("scenario has no ground configuration")
    comp = [c for c in tap_components(cfg, 1) if c.label == "SB_g"][0]
    times = np.atleast_1d(np.asarray(times, dtype=float))
    k0 = 2.0 * math.pi * cfg.f_c / SPEED_OF_LIGHT
    out = np.empty(times.size, dtype=complex)
    for i, t in enumerate(times):
        amp, xi, nu, phi = _component_rays(comp, cfg, ensemble, p, q, float(t), "exact")
        out[i] = np.sum(amp * np.exp(1j * (-k0 * xi + 2.0 * math.pi * cfg.f_max * t * nu + phi)))
    meta = {"scenario_hash": cfg.digest(), "seed": ",".join(map(str, ensemble.seed)), "component": "SB_g"}
    return TapCoefficientSeries(1, p, q, times, out, tap_geometry(cfg, 1).tau_l, meta)


@dataclass
class ImpulseResponse:
    """Sparse h_pq(t, tau): one delay per kept tap."""

    times: np.ndarray
    delays: np.ndarray
    coefficients: np.ndarray  # (n_delays, n_times)
    taps: tuple[int, ...]


def assemble_tdl(taps: Sequence[TapCoefficientSeries], weights: Sequence[float] | None = None) -> ImpulseResponse:
    if not taps:
        raise ValueError("no taps given")
    indices = [s.tap for s in taps]
    if len(set(indices)) != len(indices):
        raise ValueError(f"duplicate tap indices {indices}")
    weights = [1.0] * len(taps) if weights is None else list(weights)
    if len(weights) != len(taps):
        raise ValueError("one weight per tap required")
    times = taps[0].times
    for s in taps[1:]:
        if s.times.shape != times.shape or np.any(s.times != times):
            raise ValueError("taps must share one time grid")
    keep = [(s, w) for s, w in zip(taps, weights) if w != 0.0]
    order = sorted(keep, key=lambda sw: sw[0].tau)
    delays = np.array([s.tau for s, _ in order])
    coeffs = np.array([w * s.samples for s, w in order]).reshape(len(order), times.size)
    return ImpulseResponse(times, delays, coeffs, tuple(s.tap for s, _ in order))


def power_delay_profile(scenario, ensemble: ScattererEnsemble, resolution: float = 20e-9, t: float = 0.0,
                        p: int = 1, q: int = 1, mode: str = "exact") -> CurveSeries:
    """Ray power binned by geometric delay (total path length / c).

    Bins are ``resolution`` wide and centered on D/c + i*resolution. Each ray
    carries amplitude^2 times the squared tap weight.
    """
    cfg = cfg_of(scenario)
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    delays, powers = [], []
    for tap, w in zip(range(1, cfg.n_taps + 1), cfg.weights):
        for comp in tap_components(cfg, tap):
            if comp.power == 0.0 or w == 0.0:
                continue
            amp, xi, _, _ = _component_rays(comp, cfg, ensemble, p, q, t, mode)
            delays.append(np.atleast_1d(xi) / SPEED_OF_LIGHT)
            powers.append(w * w * amp ** 2)
    delay = np.concatenate(delays)
    power = np.concatenate(powers)
    start = cfg.D / SPEED_OF_LIGHT
    idx = np.floor((delay - start) / resolution + 0.5).astype(int)
    shift = min(int(idx.min()), 0)
    hist = np.bincount(idx - shift, weights=power)
    centers = start + resolution * (np.arange(hist.size) + shift)
    meta = {"scenario_hash": cfg.digest(), "seed": ",".join(map(str, ensemble.seed)), "t": repr(t),
            "resolution": repr(resolution), "method": "monte-carlo", "max_ray_delay": repr(float(delay.max())),
            "min_ray_delay": repr(float(delay.min()))}
    return CurveSeries("delay", "s", centers, hist, "power", "", meta)
