"""Correlation functions and Doppler spectra by quadrature, plus the Monte Carlo oracle.

Every scattered component reduces, at a fixed time t, to weighted quadrature
nodes: a complex coefficient c_i (density weight times the spatial phase
difference between the two links) and a Doppler factor nu_i. The space CF is
then sum_i c_i exp(-j 2 pi f_max tau nu_i). Double-bounce components factor
into a transmitter-side sum and a receiver-side node set because the segment
between the two scatterers is common to both links.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .angular import von_mises_pdf, vmf_pdf
from .config import SPEED_OF_LIGHT
from .geometry import path_lengths
from .model import Component, cfg_of, doppler_factor, los_doppler, tap_components, tap_power
from .quadrature import QuadratureError, adaptive, circle_rule, sphere_rule
from .realization import build_ensemble, tap_coefficient
from .series import CurveSeries

DEFAULT_TOL = 1e-5
# Cylinder heights R tan(beta) reach 64 R, so delay phasors oscillate fast near
# the poles; frequency CFs get graded elevation panels and a looser default.
FREQ_TOL = 1e-3
_GRADED = tuple(s * math.atan(2.0 ** j) for j in range(1, 6) for s in (1.0, -1.0))
MAX_LEVEL = 5
THREADS_ENV = "V2V_GBSM_THREADS"

Link = tuple[int, int]


@dataclass(frozen=True)
class CfRequest:
    """One space-CF evaluation: links (p, q) and (p', q') of ``tap`` at time ``t`` and lag ``tau``."""

    tap: int = 1
    t: float = 0.0
    tau: float = 0.0
    link1: Link = (1, 1)
    link2: Link = (1, 1)
    component: str = "total"
    delta_f: float = 0.0


def _population_nodes(cfg, population: str, level: int,
                      graded: bool = False) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quadrature nodes (alpha, beta) with density-weighted weights for one population."""
    dist = cfg.population(population)
    if cfg.planar:
        rule = circle_rule(64 * 2 ** level)
        return rule.alpha, rule.beta, rule.weights * von_mises_pdf(rule.alpha, dist.alpha0, dist.k)
    extra = _GRADED if graded and population in ("tcyl", "rcyl") else ()
    rule = sphere_rule(32 * 2 ** level, 8 * 2 ** level, extra_breaks=extra)
    return rule.alpha, rule.beta, rule.weights * vmf_pdf(dist, rule.alpha, rule.beta)


def _k0(cfg) -> float:
    return 2.0 * math.pi * cfg.f_c / SPEED_OF_LIGHT


def _leg(comp: Component, cfg, link: Link, angles, t: float, mode: str, which: str) -> np.ndarray:
    pl = path_lengths(comp.ray_class, cfg, link[0], link[1], angles, t, comp.l, mode)
    names = list(pl.components)
    if which == "total":
        return pl.total
    return pl.components[names[0] if which == "first" else names[-1]]


def spectral_nodes(scenario, comp: Component, t: float, link1: Link, link2: Link, level: int,
                   mode: str = "exact") -> tuple[np.ndarray, np.ndarray]:
    """(coefficients, Doppler factors) of ``comp``, scaled by its power share."""
    cfg = cfg_of(scenario)
    k0 = _k0(cfg)
    if comp.ray_class == "los":
        x1 = path_lengths("los", cfg, *link1, (), t, 1, mode).total
        x2 = path_lengths("los", cfg, *link2, (), t, 1, mode).total
        return (np.atleast_1d(comp.power * np.exp(1j * k0 * (x2 - x1))), np.array([los_doppler(cfg)]))
    if len(comp.populations) == 1:
        pop = comp.populations[0]
        a, b, w = _population_nodes(cfg, pop, level)
        ang = [(a, b)]
        phase = k0 * (_leg(comp, cfg, link2, ang, t, mode, "total") - _leg(comp, cfg, link1, ang, t, mode, "total"))
        return comp.power * w * np.exp(1j * phase), doppler_factor(cfg, pop, a, b, t)
    pop1, pop2 = comp.populations
    a1, b1, w1 = _population_nodes(cfg, pop1, level)
    a2, b2, w2 = _population_nodes(cfg, pop2, level)
    # Pair each node set with a fixed partner; only the leg touching the antennas is used.
    ang_t = [(a1, b1), (0.0, 0.0)]
    ang_r = [(0.0, 0.0), (a2, b2)]
    phase_t = k0 * (_leg(comp, cfg, link2, ang_t, t, mode, "first") - _leg(comp, cfg, link1, ang_t, t, mode, "first"))
    phase_r = k0 * (_leg(comp, cfg, link2, ang_r, t, mode, "last") - _leg(comp, cfg, link1, ang_r, t, mode, "last"))
    t_factor = np.sum(w1 * np.exp(1j * phase_t))
    return comp.power * t_factor * w2 * np.exp(1j * phase_r), doppler_factor(cfg, pop2, a2, b2, t)


def _select(scenario, tap: int, component: str) -> list[Component]:
    comps = tap_components(scenario, tap)
    if component == "total":
        return comps
    chosen = [c for c in comps if c.label == component]
    if not chosen:
        labels = ", ".join(c.label for c in comps)
        raise KeyError(f"component {component!r} not in tap {tap} (choose from {labels}, total)")
    return chosen


def _lag_sum(coeff: np.ndarray, nu: np.ndarray, f_max: float, taus: np.ndarray, chunk: int = 200_000) -> np.ndarray:
    out = np.zeros(taus.size, dtype=complex)
    for s in range(0, coeff.size, chunk):
        c = coeff[s:s + chunk]
        v = nu[s:s + chunk]
        out += np.exp(-2j * math.pi * f_max * np.outer(taus, v)) @ c
    return out


def space_cf(scenario, tap: int = 1, component: str = "total", t: float = 0.0, tau=0.0,
             link1: Link = (1, 1), link2: Link = (1, 1), mode: str = "exact", tol: float = DEFAULT_TOL,
             normalize: bool = True) -> np.ndarray | complex:
    """Normalized time-variant space CF rho(t, tau) between links ``link1`` and ``link2``.

    ``component`` selects one ray class (its value keeps the power share, so
    the components sum to the total) or ``"total"``. Raises QuadratureError
    when the adaptive refinement does not reach ``tol``.
    """
    cfg = cfg_of(scenario)
    comps = _select(cfg, tap, component)
    taus = np.atleast_1d(np.asarray(tau, dtype=float))

    def evaluate(level: int) -> np.ndarray:
        total = np.zeros(taus.size, dtype=complex)
        for comp in comps:
            if comp.power == 0.0:
                continue
            c, nu = spectral_nodes(cfg, comp, t, link1, link2, level, mode)
            total += _lag_sum(c, nu, cfg.f_max, taus)
        return total

    value, _, _ = adaptive(evaluate, tol, max_level=MAX_LEVEL)
    if normalize:
        value = value / tap_power(cfg, tap)
    return value if np.ndim(tau) else complex(value[0])


def space_cf_component(req: CfRequest, scenario, mode: str = "exact", tol: float = DEFAULT_TOL) -> complex:
    if req.component == "total":
        raise ValueError("use space_cf_total for the total CF")
    return space_cf(scenario, req.tap, req.component, req.t, req.tau, req.link1, req.link2, mode, tol)


def space_cf_total(req: CfRequest, scenario, mode: str = "exact", tol: float = DEFAULT_TOL) -> complex:
    return space_cf(scenario, req.tap, "total", req.t, req.tau, req.link1, req.link2, mode, tol)


def spacing_scenario(scenario, spacing_m: float, side: str = "T"):
    """Two-element arrays with ``spacing_m`` on ``side`` (T, R or both) and the links to correlate."""
    cfg = cfg_of(scenario)
    if side == "T":
        return cfg.replace(M_T=2, delta_T=spacing_m), (1, 1), (2, 1)
    if side == "R":
        return cfg.replace(M_R=2, delta_R=spacing_m), (1, 1), (1, 2)
    if side == "both":
        return cfg.replace(M_T=2, M_R=2, delta_T=spacing_m, delta_R=spacing_m), (1, 1), (2, 2)
    raise ValueError(f"side must be T, R or both, got {side!r}")


def space_cf_curve(scenario, spacings_wl: Sequence[float], tap: int = 1, component: str = "total",
                   t: float = 0.0, tau: float = 0.0, side: str = "T", mode: str = "exact",
                   tol: float = DEFAULT_TOL) -> CurveSeries:
    """Space CF against normalized antenna spacing (in wavelengths)."""
    cfg = cfg_of(scenario)
    vals = []
    for s in spacings_wl:
        c2, l1, l2 = spacing_scenario(cfg, s * cfg.wavelength, side)
        vals.append(space_cf(c2, tap, component, t, tau, l1, l2, mode, tol))
    meta = {"scenario_hash": cfg.digest(), "component": component, "tap": tap, "t": repr(t), "tau": repr(tau),
            "gamma_R": repr(cfg.gamma_R), "side": side, "geometry": mode, "method": "quadrature"}
    return CurveSeries("spacing", "wavelength", np.asarray(spacings_wl, float), np.array(vals), "rho", "", meta)


def temporal_acf(scenario, taus, tap: int = 1, t: float = 0.0, p: int = 1, q: int = 1,
                 component: str = "total", mode: str = "exact", tol: float = DEFAULT_TOL) -> CurveSeries:
    cfg = cfg_of(scenario)
    taus = np.asarray(taus, dtype=float)
    vals = space_cf(cfg, tap, component, t, taus, (p, q), (p, q), mode, tol)
    meta = {"scenario_hash": cfg.digest(), "component": component, "tap": tap, "t": repr(t), "method": "quadrature"}
    return CurveSeries("tau", "s", taus, np.atleast_1d(vals), "rho", "", meta)


# --- frequency correlation -------------------------------------------------------


def _compress(weights: np.ndarray, x: np.ndarray, width: float) -> tuple[np.ndarray, np.ndarray]:
    """Merge nonnegative-weight samples into bins of ``width`` at their weighted mean abscissa."""
    if x.size == 0:
        return weights, x
    idx = np.floor((x - x.min()) / width).astype(np.int64)
    w = np.bincount(idx, weights=weights)
    wx = np.bincount(idx, weights=weights * x)
    keep = w > 0
    return w[keep], wx[keep] / w[keep]


class _DelayAccumulator:
    def __init__(self, width: float):
        self.width = width
        self.w: list[np.ndarray] = []
        self.x: list[np.ndarray] = []

    def add(self, weights: np.ndarray, lengths: np.ndarray):
        w, x = _compress(np.ravel(weights), np.ravel(lengths), self.width)
        self.w.append(w)
        self.x.append(x)

    def result(self) -> tuple[np.ndarray, np.ndarray]:
        w = np.concatenate(self.w) if self.w else np.zeros(0)
        x = np.concatenate(self.x) if self.x else np.zeros(0)
        return _compress(w, x, self.width)


def delay_distribution(scenario, comp: Component, t: float, link: Link, level: int, width: float,
                       mode: str = "exact", chunk: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Power-weighted total path lengths of ``comp``, compressed into ``width``-meter bins."""
    cfg = cfg_of(scenario)
    acc = _DelayAccumulator(width)
    if comp.ray_class == "los":
        acc.add(np.array([comp.power]), np.atleast_1d(path_lengths("los", cfg, *link, (), t, 1, mode).total))
        return acc.result()
    if len(comp.populations) == 1:
        a, b, w = _population_nodes(cfg, comp.populations[0], level, graded=True)
        acc.add(comp.power * w, path_lengths(comp.ray_class, cfg, *link, [(a, b)], t, comp.l, mode).total)
        return acc.result()
    a1, b1, w1 = _population_nodes(cfg, comp.populations[0], level, graded=True)
    a2, b2, w2 = _population_nodes(cfg, comp.populations[1], level, graded=True)
    for s in range(0, a1.size, chunk):
        sl = slice(s, s + chunk)
        ang = [(a1[sl, None], b1[sl, None]), (a2[None, :], b2[None, :])]
        lengths = path_lengths(comp.ray_class, cfg, *link, ang, t, comp.l, mode).total
        acc.add(comp.power * w1[sl, None] * w2[None, :], lengths)
    return acc.result()


def frequency_cf(scenario, delta_f, tap: int = 1, t: float = 0.0, p: int = 1, q: int = 1,
                 component: str = "total", mode: str = "exact", tol: float = FREQ_TOL,
                 max_level: int = 3, normalize: bool = True) -> CurveSeries:
    """Power-weighted delay characteristic function sum_i w_i exp(j 2 pi df xi_i / c)."""
    cfg = cfg_of(scenario)
    comps = _select(cfg, tap, component)
    dfs = np.atleast_1d(np.asarray(delta_f, dtype=float))
    df_max = max(float(np.max(np.abs(dfs))), 1.0)
    # Replacing a bin by its weighted mean costs about (2 pi df width / c)^2 / 24.
    width = SPEED_OF_LIGHT * math.sqrt(2.4 * tol) / (2.0 * math.pi * df_max)

    def evaluate(level: int) -> np.ndarray:
        out = np.zeros(dfs.size, dtype=complex)
        for comp in comps:
            if comp.power == 0.0:
                continue
            w, x = delay_distribution(cfg, comp, t, (p, q), level, width, mode)
            out += np.exp(2j * math.pi * np.outer(dfs, x) / SPEED_OF_LIGHT) @ w
        return out

    start = 0
    value, err, level = adaptive(evaluate, tol, start=start, max_level=max_level)
    if normalize:
        value = value / tap_power(cfg, tap)
    meta = {"scenario_hash": cfg.digest(), "component": component, "tap": tap, "t": repr(t),
            "gamma_R": repr(cfg.gamma_R), "geometry": mode, "method": "quadrature", "error": repr(err)}
    return CurveSeries("delta_f", "Hz", dfs, value, "rho", "", meta)


# --- characteristic functions and Doppler spectra ------------------------------


def characteristic_function(rho, omegas, limits: tuple[float, float] = (-math.pi, math.pi),
                            n_nodes: int = 64, df_grid=None) -> np.ndarray:
    """rho(omega) = integral over ``limits`` of rho(df) exp(j omega df) d(df).

    ``rho`` is either a callable of df (integrated by Gauss-Legendre with
    ``n_nodes`` nodes) or an array sampled on the uniform ``df_grid`` spanning
    ``limits`` (composite Simpson; the grid must resolve the fastest
    oscillation exp(j omega df) with at least four points per period).
    """
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    lo, hi = limits
    if callable(rho):
        x, w = np.polynomial.legendre.leggauss(n_nodes)
        half = 0.5 * (hi - lo)
        dfs = lo + half * (x + 1.0)
        vals = np.asarray(rho(dfs), dtype=complex)
        return np.exp(1j * np.outer(omegas, dfs)) @ (half * w * vals)
    grid = np.asarray(df_grid, dtype=float)
    vals = np.asarray(rho, dtype=complex)
    if grid.size != vals.size or grid.size < 3:
        raise ValueError("rho samples and df_grid must match and have >= 3 points")
    step = grid[1] - grid[0]
    if np.max(np.abs(omegas)) * step > math.pi / 2:
        raise ValueError(f"df grid step {step:g} too coarse for |omega| up to {np.max(np.abs(omegas)):g}")
    from scipy.integrate import simpson
    return np.array([simpson(vals * np.exp(1j * om * grid), x=grid) for om in omegas])


def doppler_psd_from_characteristic(char_funcs: Sequence[Callable[[float, np.ndarray], np.ndarray]],
                                    gammas, t_window: tuple[float, float] = (-math.pi, math.pi),
                                    omega_limits: tuple[float, float] = (-math.pi, math.pi),
                                    n_t: int = 64, n_omega: int = 64) -> np.ndarray:
    """S(gamma) = int rho(t, 0) exp(-j 2 pi t gamma) dt with
    rho(t, 0) = (1 / 2 pi) int prod_i CF_i(t, omega) d omega.

    ``char_funcs[i](t, omegas)`` returns the characteristic function values.
    """
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    xw, ww = np.polynomial.legendre.leggauss(n_omega)
    oh = 0.5 * (omega_limits[1] - omega_limits[0])
    omegas = omega_limits[0] + oh * (xw + 1.0)
    xt, wt = np.polynomial.legendre.leggauss(n_t)
    th = 0.5 * (t_window[1] - t_window[0])
    ts = t_window[0] + th * (xt + 1.0)
    rho_t = np.empty(n_t, dtype=complex)
    for i, t in enumerate(ts):
        prod = np.ones(n_omega, dtype=complex)
        for cf in char_funcs:
            prod = prod * np.asarray(cf(float(t), omegas), dtype=complex)
        rho_t[i] = np.sum(oh * ww * prod) / (2.0 * math.pi)
    if not np.all(np.isfinite(rho_t)):
        raise QuadratureError("non-finite product integral", math.inf)
    return np.exp(-2j * math.pi * np.outer(gammas, ts)) @ (th * wt * rho_t)


def doppler_psd_cf_chain(scenario, gammas, tap: int = 2, t_window: tuple[float, float] = (-math.pi, math.pi),
                      n_t: int = 32, n_omega: int = 32, n_df: int = 32, level: int = 0,
                      mode: str = "exact") -> CurveSeries:
    """The characteristic-function chain taken literally, with Delta f = 0.

    Per time node, each non-LoS component's frequency CF over Delta f in
    [-pi, pi] Hz is transformed to a characteristic function; their product
    is inverted at Delta f = 0 and transformed over ``t_window``.
    """
    cfg = cfg_of(scenario)
    comps = [c for c in tap_components(cfg, tap, include_ground=False) if c.ray_class != "los"]
    width = SPEED_OF_LIGHT * math.sqrt(2.4 * 1e-9) / (2.0 * math.pi * math.pi)
    cache: dict[tuple[str, float], tuple[np.ndarray, np.ndarray]] = {}

    def make(comp: Component):
        def cf(t: float, omegas: np.ndarray) -> np.ndarray:
            key = (comp.label, t)
            if key not in cache:
                cache[key] = delay_distribution(cfg, comp, t, (1, 1), level, width, mode)
            w, x = cache[key]

            def rho_df(dfs):
                return np.exp(2j * math.pi * np.outer(dfs, x) / SPEED_OF_LIGHT) @ w

            return characteristic_function(rho_df, omegas, n_nodes=n_df)
        return cf

    values = doppler_psd_from_characteristic([make(c) for c in comps], gammas, t_window, n_t=n_t, n_omega=n_omega)
    meta = {"scenario_hash": cfg.digest(), "tap": tap, "method": "characteristic-chain",
            "t_window": f"{t_window[0]!r}:{t_window[1]!r}"}
    return CurveSeries("gamma", "Hz", np.asarray(gammas, float), values.real, "S", "", meta)


def _lag_window(name: str, n_half: int) -> np.ndarray:
    k = np.arange(-n_half, n_half + 1)
    x = k / (n_half + 1)
    if name == "hann":
        return 0.5 * (1.0 + np.cos(math.pi * x))
    if name == "bartlett":
        return 1.0 - np.abs(x)
    if name == "rect":
        return np.ones_like(x)
    raise ValueError(f"unknown lag window {name!r}")


def doppler_psd_standard(scenario, gammas, tap: int = 1, t: float = 0.0, component: str = "total",
                         lag_step: float | None = None, span: float = 100.0, window: str = "hann",
                         mode: str = "exact", level: int | None = None, p: int = 1, q: int = 1) -> CurveSeries:
    """Windowed discrete Fourier transform of the temporal ACF, normalized to unit area.

    The ACF is sampled every ``lag_step`` seconds (default 1/(4 f_max)) over
    |tau| <= span / f_max. Node coefficients are real at zero spacing, so they
    are merged into narrow Doppler bins before the transform.
    """
    cfg = cfg_of(scenario)
    f = cfg.f_max
    if f <= 0:
        raise ValueError("f_max must be positive for a Doppler spectrum")
    step = 1.0 / (4.0 * f) if lag_step is None else lag_step
    if step > 1.0 / (2.0 * f):
        raise ValueError(f"lag step {step:g} s violates Nyquist for f_max={f:g} Hz (need <= {1 / (2 * f):g})")
    n_half = int(math.ceil(span / (f * step)))
    taus = step * np.arange(-n_half, n_half + 1)
    lvl = (4 if cfg.planar else 3) if level is None else level
    weights, nus = [], []
    for comp in _select(cfg, tap, component):
        if comp.power == 0.0:
            continue
        c, nu = spectral_nodes(cfg, comp, t, (p, q), (p, q), lvl, mode)
        weights.append(c.real)
        nus.append(nu)
    w, nu = _compress(np.concatenate(weights), np.concatenate(nus), 1e-5)
    acf = np.exp(2j * math.pi * f * np.outer(taus, nu)) @ w  # conj of rho(tau)
    r0 = acf[n_half].real
    win = _lag_window(window, n_half)
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    psd = (np.exp(-2j * math.pi * np.outer(gammas, taus)) @ (win * acf)).real * step / r0
    meta = {"scenario_hash": cfg.digest(), "tap": tap, "component": component, "t": repr(t),
            "gamma_R": repr(cfg.gamma_R), "window": window, "lag_step": repr(step), "method": "quadrature"}
    return CurveSeries("gamma", "Hz", gammas, psd, "S", "1/Hz", meta)


# --- Monte Carlo oracle --------------------------------------------------------------


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else 1
    return max(1, int(threads))


def monte_carlo_cf(scenario, spacings_wl: Sequence[float], tap: int = 1, t: float = 0.0,
                   realizations: int = 500, n_scatterers: int = 10_000, seed: int = 0, side: str = "T",
                   mode: str = "exact", threads: int | None = None, full_product: bool = False,
                   random_phase: bool = True) -> CurveSeries:
    """Sample space CF over independent ensembles, with a 3-sigma band.

    Realization r uses sub-seed (seed, r); results are reduced in realization
    order, so the output does not depend on ``threads``.
    """
    if realizations < 10:
        raise ValueError("monte_carlo_cf needs at least 10 realizations")
    cfg = cfg_of(scenario)
    setups = [spacing_scenario(cfg, s * cfg.wavelength, side) for s in spacings_wl]

    def one(r: int) -> np.ndarray:
        ens = build_ensemble(cfg, n_scatterers, (seed, r), full_product, random_phase)
        row = np.empty((len(setups), 2), dtype=complex)
        for i, (c2, l1, l2) in enumerate(setups):
            row[i, 0] = tap_coefficient(c2, ens, tap, l1[0], l1[1], [t], mode).samples[0]
            row[i, 1] = tap_coefficient(c2, ens, tap, l2[0], l2[1], [t], mode).samples[0]
        return row

    n_threads = resolve_threads(threads)
    if n_threads == 1:
        rows = [one(r) for r in range(realizations)]
    else:
        with ThreadPoolExecutor(n_threads) as pool:
            rows = list(pool.map(one, range(realizations)))
    data = np.array(rows)  # (R, n_spacing, 2)
    h1, h2 = data[..., 0], data[..., 1]
    prod = h1 * np.conj(h2)
    norm = np.sqrt(np.mean(np.abs(h1) ** 2, axis=0) * np.mean(np.abs(h2) ** 2, axis=0))
    rho = prod.mean(axis=0) / norm
    sigma = np.sqrt((prod.real.var(axis=0, ddof=1) + prod.imag.var(axis=0, ddof=1)) / realizations) / norm
    meta = {"scenario_hash": cfg.digest(), "tap": tap, "t": repr(t), "seed": seed, "realizations": realizations,
            "n_scatterers": n_scatterers, "side": side, "geometry": mode, "method": "monte-carlo"}
    return CurveSeries("spacing", "wavelength", np.asarray(spacings_wl, float), rho, "rho", "", meta,
                       band=3.0 * sigma)
