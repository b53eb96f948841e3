"""Ray components of each tap and the per-scatterer quantities shared by realization and statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig, ValidatedScenario
from .geometry import path_lengths, receiver_center, scatterer_position


@dataclass(frozen=True)
class Component:
    label: str            # e.g. "SB_1,3", "DB_2,1"
    ray_class: str
    populations: tuple[str, ...]  # bounce order, transmitter side first
    power: float          # share of the tap's unit power (before ground)
    l: int


def cfg_of(scenario) -> ScenarioConfig:
    return scenario.config if isinstance(scenario, ValidatedScenario) else scenario


def tap_components(scenario, tap: int, include_ground: bool = True) -> list[Component]:
    """Components of ``tap`` with their power shares; ground rides on tap 1."""
    cfg = cfg_of(scenario)
    if not 1 <= tap <= cfg.n_taps:
        raise IndexError(f"tap {tap} not configured (1..{cfg.n_taps})")
    e = cfg.energies(tap)
    if tap == 1:
        scale = 1.0 / (cfg.ricean_K + 1.0)
        comps = [
            Component("LoS", "los", (), cfg.ricean_K * scale, 1),
            Component("SB_1,1", "sb_tcyl", ("tcyl",), e["SB_1,1"] * scale, 1),
            Component("SB_1,2", "sb_rcyl", ("rcyl",), e["SB_1,2"] * scale, 1),
            Component("SB_1,3", "sb_ell", ("ell1",), e["SB_1,3"] * scale, 1),
            Component("DB", "db_cyl", ("tcyl", "rcyl"), e["DB"] * scale, 1),
        ]
        if include_ground and cfg.ground is not None:
            comps.append(Component("SB_g", "sb_ground", ("ground",), cfg.ground.eta_SBg * scale, 1))
        return comps
    ell = f"ell{tap}"
    return [
        Component(f"SB_{tap},3", "sb_ell", (ell,), e[f"SB_{tap},3"], tap),
        Component(f"DB_{tap},1", "db_tcyl_ell", ("tcyl", ell), e[f"DB_{tap},1"], tap),
        Component(f"DB_{tap},2", "db_ell_rcyl", (ell, "rcyl"), e[f"DB_{tap},2"], tap),
    ]


def find_component(scenario, tap: int, label: str) -> Component:
    for comp in tap_components(scenario, tap):
        if comp.label == label:
            return comp
    raise KeyError(f"component {label!r} not in tap {tap}")


def tap_power(scenario, tap: int) -> float:
    return sum(c.power for c in tap_components(scenario, tap))


def doppler_factor(scenario, population: str, alpha, beta, t: float) -> np.ndarray:
    """cos(alpha_R - gamma_R) cos(beta_R) of the last-bounce scatterer seen from the receiver at ``t``."""
    cfg = cfg_of(scenario)
    S = scatterer_position(population, alpha, beta, cfg, t)
    c = receiver_center(cfg, t)
    if population == "ground" and cfg.ground is not None:
        c = c + np.array([0.0, 0.0, cfg.ground.H_r])
    d = S - c
    horiz = np.hypot(d[..., 0], d[..., 1])
    rng = np.sqrt(horiz ** 2 + d[..., 2] ** 2)
    # cos(aR - g) cos(bR) = (d_h . e_g) / |d|
    return (d[..., 0] * math.cos(cfg.gamma_R) + d[..., 1] * math.sin(cfg.gamma_R)) / rng


def los_doppler(scenario) -> float:
    cfg = cfg_of(scenario)
    return math.cos(cfg.alpha_R_los - cfg.gamma_R) * math.cos(cfg.beta_R_los)


def leg_lengths(comp: Component, scenario, p: int, q: int, angles, t: float, mode: str):
    """Total path length of ``comp`` for scatterer angles ``angles`` (one pair per bounce)."""
    return path_lengths(comp.ray_class, scenario, p, q, angles, t, comp.l, mode)


__all__ = ["Component", "tap_components", "find_component", "tap_power", "doppler_factor",
           "los_doppler", "leg_lengths", "cfg_of"]
