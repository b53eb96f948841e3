"""Antenna and scatterer placement, exact path lengths and the closed-form approximations.

Coordinates: origin at the transmitter cylinder center, x toward the receiver,
z up. The receiver center sits at (D + v t cos g, v t sin g, 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import ScenarioConfig, ValidatedScenario
from .quadrature import BETA_CLAMP

RAY_CLASSES = ("los", "sb_tcyl", "sb_rcyl", "sb_ell", "db_cyl", "db_tcyl_ell", "db_ell_rcyl", "sb_ground")
GEOMETRY_MODES = ("exact", "corrected", "as-printed")


def _cfg(scenario) -> ScenarioConfig:
    return scenario.config if isinstance(scenario, ValidatedScenario) else scenario


@dataclass
class PathLengthSet:
    """Per-segment lengths (meters) of one ray class, arrays broadcast over draws."""

    ray_class: str
    components: dict[str, np.ndarray]
    t: float
    l: int | None = None
    mode: str = "exact"

    @property
    def total(self) -> np.ndarray:
        return sum(self.components.values())


@dataclass
class ArrayElementOffsets:
    """Element displacement from the array center along the array axis."""

    spacing: float
    psi: float
    theta: float
    count: int
    unit: np.ndarray = field(init=False)

    def __post_init__(self):
        self.unit = np.array([math.cos(self.theta) * math.cos(self.psi),
                              math.cos(self.theta) * math.sin(self.psi),
                              math.sin(self.theta)])

    def signed_index(self, index: int) -> float:
        if not 1 <= index <= self.count:
            raise IndexError(f"element {index} out of range 1..{self.count}")
        return index - (self.count + 1) / 2.0

    def offset(self, index: int) -> np.ndarray:
        return self.signed_index(index) * self.spacing * self.unit

    def all(self) -> np.ndarray:
        return np.array([self.offset(i) for i in range(1, self.count + 1)])


def array_offsets(scenario, side: str) -> ArrayElementOffsets:
    cfg = _cfg(scenario)
    if side == "MT":
        return ArrayElementOffsets(cfg.spacing_T, cfg.psi_T, cfg.theta_T, cfg.M_T)
    if side == "MR":
        return ArrayElementOffsets(cfg.spacing_R, cfg.psi_R, cfg.theta_R, cfg.M_R)
    raise ValueError(f"side must be MT or MR, got {side!r}")


def receiver_center(scenario, t: float = 0.0) -> np.ndarray:
    cfg = _cfg(scenario)
    s = cfg.v_R * t
    return np.array([cfg.D + s * math.cos(cfg.gamma_R), s * math.sin(cfg.gamma_R), 0.0])


def antenna_position(side: str, index: int, scenario, t: float = 0.0) -> np.ndarray:
    """Position of element ``index`` (1-based) of the MT or MR array at time ``t``."""
    offset = array_offsets(scenario, side).offset(index)
    if side == "MT":
        return offset
    return receiver_center(scenario, t) + offset


def _unit(alpha, beta) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    cb = np.cos(beta)
    return np.stack(np.broadcast_arrays(cb * np.cos(alpha), cb * np.sin(alpha), np.sin(beta)), axis=-1)


def _ray_to_ellipsoid(cfg: ScenarioConfig, l: int, origin_x: float, direction: np.ndarray) -> np.ndarray:
    """Distance along ``direction`` from (origin_x, 0, 0) to ellipsoid ``l``."""
    a = cfg.a[l - 1]
    b = cfg.b[l - 1]
    u = cfg.u_axes[l - 1]
    x0 = origin_x - cfg.f0  # origin relative to the ellipsoid center
    dx, dy, dz = direction[..., 0], direction[..., 1], direction[..., 2]
    qa = dx * dx / a ** 2 + dy * dy / b ** 2 + dz * dz / u ** 2
    qb = 2.0 * x0 * dx / a ** 2
    qc = x0 * x0 / a ** 2 - 1.0
    if qc >= 0:
        raise AssertionError("ray origin is not inside the ellipsoid")
    return (-qb + np.sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa)


def _ell_index(population: str) -> int:
    try:
        return int(population[3:])
    except ValueError:
        raise ValueError(f"bad ellipsoid population {population!r}") from None


def ground_radius(cfg: ScenarioConfig) -> float:
    """Receiver-side range of the specular ground point."""
    g = cfg.ground
    if g is None or g.H_t + g.H_r == 0.0:
        return cfg.D / 2.0
    return cfg.D * g.H_r / (g.H_t + g.H_r)


def scatterer_position(population: str, alpha, beta, scenario, t: float = 0.0) -> np.ndarray:
    """Scatterer location for angles given in the population's own frame.

    ``tcyl`` and ``ell<l>`` take departure angles from the transmitter, ``rcyl``
    and ``ground`` take arrival angles at the receiver. Cylinder heights are
    R tan(beta) with |beta| clamped below 0.99 pi/2; ellipsoid elevations are
    folded onto the upper half. Only ``rcyl`` scatterers move (with the receiver).
    """
    cfg = _cfg(scenario)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if population in ("tcyl", "rcyl"):
        radius = cfg.R_t if population == "tcyl" else cfg.R_r
        bc = np.clip(beta, -BETA_CLAMP, BETA_CLAMP)
        pts = np.stack(np.broadcast_arrays(radius * np.cos(alpha), radius * np.sin(alpha),
                                           radius * np.tan(bc)), axis=-1)
        if population == "rcyl":
            pts = pts + receiver_center(cfg, t)
        return pts
    if population.startswith("ell"):
        l = _ell_index(population)
        d = _unit(alpha, np.abs(beta))
        r = _ray_to_ellipsoid(cfg, l, 0.0, d)
        return r[..., None] * d
    if population == "ground":
        rho = ground_radius(cfg)
        c = receiver_center(cfg, 0.0)
        return np.stack(np.broadcast_arrays(c[0] + rho * np.cos(alpha), c[1] + rho * np.sin(alpha),
                                            np.zeros_like(alpha)), axis=-1)
    raise ValueError(f"unknown population {population!r}")


def ellipsoid_point_from_receiver(scenario, l: int, alpha_r, beta_r) -> np.ndarray:
    """Surface point of ellipsoid ``l`` seen from the receiver focus at t = 0."""
    cfg = _cfg(scenario)
    d = _unit(np.asarray(alpha_r, dtype=float), np.asarray(beta_r, dtype=float))
    r = _ray_to_ellipsoid(cfg, l, cfg.D, d)
    out = r[..., None] * d
    out[..., 0] += cfg.D
    return out


def exact_path_length(points: Sequence) -> np.ndarray:
    """Sum of Euclidean segment lengths through ``points`` (each broadcastable (..., 3))."""
    if len(points) < 2:
        raise ValueError("need at least two points")
    total = 0.0
    for p0, p1 in zip(points[:-1], points[1:]):
        total = total + np.linalg.norm(np.asarray(p1, float) - np.asarray(p0, float), axis=-1)
    return total


def _angles_from(origin: np.ndarray, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = np.asarray(points, dtype=float) - origin
    horiz = np.hypot(d[..., 0], d[..., 1])
    if np.any((horiz == 0) & (d[..., 2] == 0)):
        raise ValueError("scatterer coincides with the array center")
    return np.arctan2(d[..., 1], d[..., 0]), np.arctan2(d[..., 2], horiz)


def arrival_angles(scatterer, scenario, t: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Azimuth and elevation of ``scatterer`` seen from the receiver center at ``t``."""
    return _angles_from(receiver_center(scenario, t), scatterer)


def departure_angles(scatterer, scenario) -> tuple[np.ndarray, np.ndarray]:
    return _angles_from(np.zeros(3), scatterer)


# --- exact lengths per ray class ------------------------------------------------


def _terminals(cfg: ScenarioConfig, p: int, q: int, t: float, ground: bool = False):
    tx = antenna_position("MT", p, cfg, t)
    rx = antenna_position("MR", q, cfg, t)
    if ground and cfg.ground is not None:
        tx = tx + np.array([0.0, 0.0, cfg.ground.H_t])
        rx = rx + np.array([0.0, 0.0, cfg.ground.H_r])
    return tx, rx


def _dist(a, b) -> np.ndarray:
    return np.linalg.norm(np.asarray(b, float) - np.asarray(a, float), axis=-1)


def exact_lengths(ray_class: str, scenario, p: int, q: int, angles: Sequence, t: float = 0.0,
                  l: int | None = None) -> PathLengthSet:
    """Exact segment lengths for ``ray_class`` with bounce angles in population frames.

    ``angles`` is a sequence of (alpha, beta) pairs, one per bounce, ordered
    from transmitter to receiver.
    """
    cfg = _cfg(scenario)
    tx, rx = _terminals(cfg, p, q, t, ground=ray_class == "sb_ground")
    ell = f"ell{l or 1}"
    pops = {
        "sb_tcyl": ("tcyl",), "sb_rcyl": ("rcyl",), "sb_ell": (ell,), "sb_ground": ("ground",),
        "db_cyl": ("tcyl", "rcyl"), "db_tcyl_ell": ("tcyl", ell), "db_ell_rcyl": (ell, "rcyl"),
    }
    names = {
        "los": ("xi_pq",),
        "sb_tcyl": ("xi_pn11", "xi_qn11"), "sb_rcyl": ("xi_pn12", "xi_qn12"),
        "sb_ell": ("xi_pnl3", "xi_qnl3"), "sb_ground": ("xi_png", "xi_qng"),
        "db_cyl": ("xi_pn11", "xi_n11n12", "xi_qn12"),
        "db_tcyl_ell": ("xi_pn11", "xi_n11nl3", "xi_qnl3"),
        "db_ell_rcyl": ("xi_pnl3", "xi_nl3n12", "xi_qn12"),
    }
    if ray_class not in names:
        raise ValueError(f"unknown ray class {ray_class!r}")
    if ray_class == "los":
        return PathLengthSet("los", {"xi_pq": np.asarray(_dist(tx, rx))}, t, l)
    pts = [tx]
    for pop, (alpha, beta) in zip(pops[ray_class], angles):
        pts.append(scatterer_position(pop, alpha, beta, cfg, t))
    pts.append(rx)
    comps = {name: _dist(a, b) for name, a, b in zip(names[ray_class], pts[:-1], pts[1:])}
    return PathLengthSet(ray_class, comps, t, l)


# --- closed-form approximations -------------------------------------------------


def _root(value: np.ndarray, label: str, inputs: dict) -> np.ndarray:
    value = np.asarray(value, dtype=float)
    if np.any(value < 0):
        bad = {k: np.asarray(v).ravel()[:3].tolist() for k, v in inputs.items()}
        raise ValueError(f"negative radicand in {label}: min {value.min():.6g}, inputs {bad}")
    return np.sqrt(value)


def closed_form_lengths(ray_class: str, scenario, p: int, q: int, angles: Sequence, t: float = 0.0,
                        l: int | None = None, mode: str = "corrected") -> PathLengthSet:
    """Small-offset closed-form segment lengths.

    ``mode="corrected"`` takes the square root of every squared-distance bracket,
    uses the exact focus-to-surface distance for the ellipsoid leg and the
    law-of-cosines receiver leg. ``mode="as-printed"`` keeps the rational
    ellipsoid expression and the printed receiver-leg bracket (still rooted).
    Segments between two scatterers, which have no closed form, use the exact
    distance. Angles are in population frames; the other-frame angles a
    formula needs are computed from the exact scatterer positions.
    """
    if mode not in ("corrected", "as-printed"):
        raise ValueError(f"mode must be 'corrected' or 'as-printed', got {mode!r}")
    cfg = _cfg(scenario)
    l = l or 1
    D, vt, g = cfg.D, cfg.v_R * t, cfg.gamma_R
    T = array_offsets(cfg, "MT")
    R = array_offsets(cfg, "MR")
    dT = T.signed_index(p) * T.spacing
    dR = R.signed_index(q) * R.spacing
    dTx, dTy, dTz = dT * T.unit
    dRx, dRy, dRz = dR * R.unit
    cT, cR = math.cos(cfg.theta_T), math.cos(cfg.theta_R)
    c0 = receiver_center(cfg, 0.0)

    def los():
        x = D - dTx
        val = x * x + vt * vt - 2 * x * vt * math.cos(cfg.alpha_R_los - g)
        return _root(val, "xi_pq", {"D": D})

    def pn11(aT, bT):
        return cfg.R_t - (dTx * np.cos(aT) * np.cos(bT) + dTy * np.sin(aT) * np.cos(bT) + dTz * np.sin(bT))

    def qn11(aT, bT):
        S = scatterer_position("tcyl", aT, bT, cfg)
        aR, _ = _angles_from(c0, S)
        Qq = dR * cR * (cfg.R_t / D * math.sin(cfg.psi_R) * np.sin(aT) - math.cos(cfg.psi_R))
        x = D - Qq * cR
        return _root(x * x + vt * vt - 2 * x * vt * np.cos(aR - g), "xi_qn11", {"alpha_T": aT})

    def qn12(aR, bR):
        return cfg.R_r - (dRx * np.cos(aR) * np.cos(bR) + dRy * np.sin(aR) * np.cos(bR) + dRz * np.sin(bR))

    def pn12(aR, bR):
        Qp = dT * cT * (cfg.R_r / D * math.sin(cfg.psi_T) * np.sin(aR) + math.cos(cfg.psi_T))
        x = D - Qp * cT
        return _root(x * x + vt * vt - 2 * x * vt * np.cos(aR - g), "xi_pn12", {"alpha_R": aR})

    def pnl3(aT, bT):
        a_l, b_l, u_l = cfg.a[l - 1], cfg.b[l - 1], cfg.u_axes[l - 1]
        offset = dT * cT * (cfg.R_r / D * math.sin(cfg.psi_T) * np.sin(aT) + math.cos(cfg.psi_T))
        if mode == "as-printed":
            cb2, sb2 = np.cos(bT) ** 2, np.sin(bT) ** 2
            xi_l3 = (b_l ** 2 * u_l ** 2 * cb2 * np.cos(aT) ** 2 + a_l ** 2 * u_l ** 2 * cb2 * np.sin(aT) ** 2
                     + a_l ** 2 * b_l ** 2 * sb2)
            lead = 2 * a_l ** 2 * b_l ** 2 * u_l ** 2 / xi_l3
        else:
            lead = _ray_to_ellipsoid(cfg, l, 0.0, _unit(aT, np.abs(bT)))
        return lead - offset, lead

    def qnl3(aT, bT, focus_dist):
        bT = np.abs(bT)
        S = focus_dist[..., None] * _unit(aT, bT)
        aR, _ = _angles_from(c0, S)
        if mode == "as-printed":
            xi_R = _root(D * D + focus_dist ** 2 * np.cos(aT) ** 2
                         - 2 * D * focus_dist * np.cos(bT) * np.cos(aT), "xi_R", {"alpha_T": aT})
            val = (focus_dist ** 2 * np.sin(bT) ** 2 + xi_R ** 2 + vt * vt
                   + 2 * D * xi_R * np.cos(g + aR))
        else:
            xi_R = _root(D * D + focus_dist ** 2 * np.cos(bT) ** 2
                         - 2 * D * focus_dist * np.cos(bT) * np.cos(aT), "xi_R", {"alpha_T": aT})
            val = focus_dist ** 2 * np.sin(bT) ** 2 + xi_R ** 2 + vt * vt - 2 * vt * xi_R * np.cos(aR - g)
        return _root(val, "xi_qnl3", {"alpha_T": aT})

    def n11n12():
        return _root(D * D + vt * vt - 2 * D * vt * math.cos(cfg.alpha_R_los - g), "xi_n11n12", {"D": D})

    comps: dict[str, np.ndarray]
    if ray_class == "los":
        comps = {"xi_pq": np.asarray(los())}
    elif ray_class == "sb_tcyl":
        (aT, bT), = angles
        comps = {"xi_pn11": pn11(aT, bT), "xi_qn11": qn11(aT, bT)}
    elif ray_class == "sb_rcyl":
        (aR, bR), = angles
        comps = {"xi_pn12": pn12(aR, bR), "xi_qn12": qn12(aR, bR)}
    elif ray_class == "sb_ell":
        (aT, bT), = angles
        xi_p, lead = pnl3(aT, bT)
        comps = {"xi_pnl3": xi_p, "xi_qnl3": qnl3(aT, bT, lead)}
    elif ray_class == "db_cyl":
        (aT, bT), (aR, bR) = angles
        shape = np.broadcast(np.asarray(aT), np.asarray(aR)).shape
        comps = {"xi_pn11": pn11(aT, bT), "xi_n11n12": np.full(shape, n11n12()), "xi_qn12": qn12(aR, bR)}
    elif ray_class == "db_tcyl_ell":
        (aT, bT), (aE, bE) = angles
        _, lead = pnl3(aE, bE)
        mid = _dist(scatterer_position("tcyl", aT, bT, cfg, t), scatterer_position(f"ell{l}", aE, bE, cfg, t))
        comps = {"xi_pn11": pn11(aT, bT), "xi_n11nl3": mid, "xi_qnl3": qnl3(aE, bE, lead)}
    elif ray_class == "db_ell_rcyl":
        (aE, bE), (aR, bR) = angles
        xi_p, _ = pnl3(aE, bE)
        mid = _dist(scatterer_position(f"ell{l}", aE, bE, cfg, t), scatterer_position("rcyl", aR, bR, cfg, t))
        comps = {"xi_pnl3": xi_p, "xi_nl3n12": mid, "xi_qn12": qn12(aR, bR)}
    elif ray_class == "sb_ground":
        return exact_lengths("sb_ground", cfg, p, q, angles, t, l)
    else:
        raise ValueError(f"unknown ray class {ray_class!r}")
    comps = {k: np.asarray(v, dtype=float) for k, v in comps.items()}
    return PathLengthSet(ray_class, comps, t, l, mode)


def path_lengths(ray_class: str, scenario, p: int, q: int, angles: Sequence, t: float = 0.0,
                 l: int | None = None, mode: str = "exact") -> PathLengthSet:
    if mode == "exact":
        return exact_lengths(ray_class, scenario, p, q, angles, t, l)
    return closed_form_lengths(ray_class, scenario, p, q, angles, t, l, mode)
