"""Scenario parameters, validation, per-tap geometry and the built-in presets."""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .angular import VonMisesFisher

SPEED_OF_LIGHT = 3.0e8
ENERGY_TOL = 1e-9

PRESET_NAMES = ("tap1-highway", "tap1-urban", "tap2-highway", "tap2-urban")

# Mean scattering directions (radians). These are not part of the published
# parameter table; see docs/config.md for the road-geometry reasoning.
DEFAULT_TCYL_ALPHA0 = math.pi / 2
DEFAULT_RCYL_ALPHA0 = math.pi / 2
DEFAULT_ELL_ALPHA0 = math.pi / 2
DEFAULT_GROUND_ALPHA0 = math.pi


class ScenarioValidationError(ValueError):
    """Raised when a scenario violates one or more constraints.

    ``problems`` holds one message per violated constraint.
    """

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class GroundConfig:
    H_t: float = 10.0
    H_r: float = 10.0
    eta_SBg: float = 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Full model parameterization. SI units, angles in radians."""

    D: float = 200.0
    a: tuple[float, ...] = (120.0, 140.0)
    u: tuple[float, ...] | None = None  # defaults to b_l (spheroid of revolution)
    R_t: float = 40.0
    R_r: float = 40.0
    f_c: float = 5.4e9
    bandwidth: float = 50e6
    v_R: float = 25.0
    gamma_R: float = math.pi / 3
    f_max: float = 433.0
    M_T: int = 2
    M_R: int = 2
    delta_T: float | None = None  # defaults to one wavelength
    delta_R: float | None = None
    psi_T: float = math.pi / 3
    theta_T: float = math.pi / 3
    psi_R: float = math.pi / 3
    theta_R: float = math.pi / 3
    ricean_K: float = 3.942
    energy_tap1: tuple[float, float, float, float] = (0.371, 0.212, 0.402, 0.015)
    energy_tapl: tuple[tuple[float, float, float], ...] = ((0.724, 0.138, 0.138),)
    vmf: dict[str, VonMisesFisher] = field(default_factory=dict)
    alpha_R_los: float = math.pi
    beta_R_los: float = 0.0
    ground: GroundConfig | None = None
    tap_weights: tuple[float, ...] | None = None
    planar: bool = False
    default_tap: int = 1
    origin: str = "user"
    name: str = "custom"

    @property
    def f0(self) -> float:
        return self.D / 2.0

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.f_c

    @property
    def n_taps(self) -> int:
        return len(self.a)

    @property
    def b(self) -> tuple[float, ...]:
        return tuple(math.sqrt(max(al * al - self.f0 ** 2, 0.0)) for al in self.a)

    @property
    def u_axes(self) -> tuple[float, ...]:
        return tuple(self.u) if self.u is not None else self.b

    @property
    def spacing_T(self) -> float:
        return self.wavelength if self.delta_T is None else self.delta_T

    @property
    def spacing_R(self) -> float:
        return self.wavelength if self.delta_R is None else self.delta_R

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(self.tap_weights) if self.tap_weights is not None else (1.0,) * self.n_taps

    def population(self, name: str) -> VonMisesFisher:
        """Angular law of one scatterer population (``tcyl``, ``rcyl``, ``ell<l>``, ``ground``)."""
        if name in self.vmf:
            return self.vmf[name]
        if name.startswith("ell") and "ell" in self.vmf:
            return self.vmf["ell"]
        defaults = {
            "tcyl": VonMisesFisher(DEFAULT_TCYL_ALPHA0, 0.0, 0.0),
            "rcyl": VonMisesFisher(DEFAULT_RCYL_ALPHA0, 0.0, 0.0),
            "ground": VonMisesFisher(DEFAULT_GROUND_ALPHA0, 0.0, 0.0),
        }
        if name.startswith("ell"):
            return VonMisesFisher(DEFAULT_ELL_ALPHA0, 0.0, 0.0)
        try:
            return defaults[name]
        except KeyError:
            raise KeyError(f"unknown scatterer population {name!r}") from None

    def energies(self, tap: int) -> dict[str, float]:
        """Component energy shares for ``tap`` keyed by component label."""
        if tap == 1:
            e = self.energy_tap1
            return {"SB_1,1": e[0], "SB_1,2": e[1], "SB_1,3": e[2], "DB": e[3]}
        e = self.energy_tapl[tap - 2]
        return {f"SB_{tap},3": e[0], f"DB_{tap},1": e[1], f"DB_{tap},2": e[2]}

    def replace(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["vmf"] = {k: dataclasses.asdict(v) for k, v in sorted(self.vmf.items())}
        return out

    def digest(self) -> str:
        """Stable short hash of the resolved configuration."""
        blob = json.dumps(self.to_dict(), sort_keys=True, default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ValidatedScenario:
    config: ScenarioConfig
    warnings: tuple[str, ...] = ()

    def __getattr__(self, item: str) -> Any:
        # Delegate parameter access so callers can treat it like the config.
        if item == "config":
            raise AttributeError(item)
        return getattr(self.config, item)


@dataclass(frozen=True)
class TapGeometry:
    l: int
    a_l: float
    b_l: float
    u_l: float
    tau_l: float
    delay_resolution: float


def validate_scenario(config: ScenarioConfig, allow_tdl_violation: bool = False) -> ValidatedScenario:
    """Check every physical and normalization constraint of ``config``.

    The tapped-delay-line separability condition ``max(R_t, R_r) < min(a_{l+1} - a_l)``
    is only a warning for presets (the published parameter set violates it) or
    when ``allow_tdl_violation`` is set.
    """
    cfg = config
    problems: list[str] = []
    warnings: list[str] = []

    if not cfg.a:
        problems.append("at least one semi-major axis a_l is required")
    for name in ("D", "R_t", "R_r", "f_c", "bandwidth", "v_R", "f_max", "ricean_K"):
        value = getattr(cfg, name)
        if not math.isfinite(value) or value < 0:
            problems.append(f"{name} must be finite and non-negative (got {value})")
    if cfg.D <= 0:
        problems.append(f"D must be positive (got {cfg.D})")
    if cfg.f_c <= 0:
        problems.append(f"f_c must be positive (got {cfg.f_c})")
    if cfg.bandwidth <= 0:
        problems.append(f"bandwidth must be positive (got {cfg.bandwidth})")
    for name in ("M_T", "M_R"):
        if int(getattr(cfg, name)) < 1:
            problems.append(f"{name} must be >= 1 (got {getattr(cfg, name)})")
    for name in ("delta_T", "delta_R"):
        value = getattr(cfg, name)
        if value is not None and value < 0:
            problems.append(f"{name} must be non-negative (got {value})")

    f0 = cfg.f0
    for l, al in enumerate(cfg.a, start=1):
        if not al > f0:
            problems.append(f"a_l must exceed f0: a_{l} = {al} <= f0 = {f0} (b_{l} would not be positive)")
    for l in range(1, len(cfg.a)):
        if not cfg.a[l] > cfg.a[l - 1]:
            problems.append(f"a must be strictly increasing: a_{l} = {cfg.a[l - 1]}, a_{l + 1} = {cfg.a[l]}")
    if cfg.u is not None:
        if len(cfg.u) != len(cfg.a):
            problems.append(f"u has {len(cfg.u)} entries but a has {len(cfg.a)}")
        elif any(ul <= 0 for ul in cfg.u):
            problems.append(f"u_l must be positive (got {cfg.u})")
    if cfg.tap_weights is not None:
        if len(cfg.tap_weights) != len(cfg.a):
            problems.append(f"tap_weights has {len(cfg.tap_weights)} entries but a has {len(cfg.a)}")
        elif any(w < 0 for w in cfg.tap_weights):
            problems.append(f"tap weights must be non-negative (got {cfg.tap_weights})")

    e1 = cfg.energy_tap1
    if len(e1) != 4:
        problems.append(f"energy_tap1 needs 4 entries (got {len(e1)})")
    else:
        if any(x < 0 for x in e1):
            problems.append(f"tap-1 energies must be non-negative (got {tuple(e1)})")
        if abs(sum(e1) - 1.0) > ENERGY_TOL:
            problems.append(f"energy sum != 1 for tap 1: eta_SB11+eta_SB12+eta_SB13+eta_DB = {sum(e1):.12g}")
    if len(cfg.energy_tapl) != max(len(cfg.a) - 1, 0):
        problems.append(f"energy_tapl needs one triple per tap l >= 2 ({len(cfg.a) - 1}), got {len(cfg.energy_tapl)}")
    for l, el in enumerate(cfg.energy_tapl, start=2):
        if len(el) != 3:
            problems.append(f"energy triple for tap {l} needs 3 entries (got {len(el)})")
            continue
        if any(x < 0 for x in el):
            problems.append(f"tap-{l} energies must be non-negative (got {tuple(el)})")
        if abs(sum(el) - 1.0) > ENERGY_TOL:
            problems.append(f"energy sum != 1 for tap {l}: eta_SB{l}3+eta_DB{l}1+eta_DB{l}2 = {sum(el):.12g}")

    for name, dist in cfg.vmf.items():
        if dist.k < 0 or not math.isfinite(dist.k):
            problems.append(f"vmf.{name}.k must be finite and >= 0 (got {dist.k})")
        if abs(dist.beta0) > math.pi / 2:
            problems.append(f"vmf.{name}.beta0 must lie in [-pi/2, pi/2] (got {dist.beta0})")

    if cfg.ground is not None:
        g = cfg.ground
        if g.H_t < 0 or g.H_r < 0 or g.eta_SBg < 0:
            problems.append(f"ground heights and energy must be non-negative (got {g})")

    if len(cfg.a) >= 2 and not problems:
        gaps = [cfg.a[i + 1] - cfg.a[i] for i in range(len(cfg.a) - 1)]
        radius = max(cfg.R_t, cfg.R_r)
        if not radius < min(gaps):
            msg = (f"TDL separability violated: max(R_t, R_r) = {radius} is not < "
                   f"min(a_(l+1) - a_l) = {min(gaps)}")
            if cfg.origin == "preset" or allow_tdl_violation:
                warnings.append(msg)
            else:
                problems.append(msg + " (use --allow-tdl-violation to accept)")
        resolution = 1.0 / cfg.bandwidth
        step = 2.0 * min(gaps) / SPEED_OF_LIGHT
        if step < resolution:
            problems.append(f"inter-tap delay {step:.6g} s is below the delay resolution 1/bandwidth = {resolution:.6g} s")

    if problems:
        raise ScenarioValidationError(problems)
    return ValidatedScenario(cfg, tuple(warnings))


def tap_geometry(scenario: ValidatedScenario | ScenarioConfig, l: int) -> TapGeometry:
    cfg = scenario.config if isinstance(scenario, ValidatedScenario) else scenario
    if not 1 <= l <= cfg.n_taps:
        raise IndexError(f"tap index {l} out of range 1..{cfg.n_taps}")
    a_l = cfg.a[l - 1]
    tau_l = cfg.D / SPEED_OF_LIGHT + 2.0 * (a_l - cfg.a[0]) / SPEED_OF_LIGHT
    return TapGeometry(l, a_l, cfg.b[l - 1], cfg.u_axes[l - 1], tau_l, 1.0 / cfg.bandwidth)


def load_preset(name: str) -> ScenarioConfig:
    """One column of the published parameter table (highway/urban, tap 1/2)."""
    if name not in PRESET_NAMES:
        raise KeyError(f"unknown preset {name!r}; choose one of {', '.join(PRESET_NAMES)}")
    tap = int(name[3])
    highway = name.endswith("highway")
    if highway:
        basics = dict(R_t=40.0, R_r=40.0, v_R=25.0, f_max=433.0, ricean_K=3.942)
        ks = (8.9, 2.7, 12.3)
        e1 = (0.371, 0.212, 0.402, 0.015)
        e2 = (0.724, 0.138, 0.138)
    else:
        basics = dict(R_t=20.0, R_r=20.0, v_R=8.3, f_max=144.0, ricean_K=1.062)
        ks = (0.55, 1.21, 12.3)
        e1 = (0.142, 0.142, 0.085, 0.631)
        e2 = (0.056, 0.472, 0.472)
    vmf = {
        "tcyl": VonMisesFisher(DEFAULT_TCYL_ALPHA0, 0.0, ks[0]),
        "rcyl": VonMisesFisher(DEFAULT_RCYL_ALPHA0, 0.0, ks[1]),
        "ell1": VonMisesFisher(DEFAULT_ELL_ALPHA0, 0.0, ks[2]),
        "ell2": VonMisesFisher(DEFAULT_ELL_ALPHA0, 0.0, ks[2]),
    }
    return ScenarioConfig(
        D=200.0, a=(120.0, 140.0), f_c=5.4e9,
        psi_T=math.pi / 3, theta_T=math.pi / 3, psi_R=math.pi / 3, theta_R=math.pi / 3,
        energy_tap1=e1, energy_tapl=(e2,), vmf=vmf,
        default_tap=tap, origin="preset", name=name, **basics,
    )


# --- config file -----------------------------------------------------------

_ANGLE_KEYS = {"gamma_R", "psi_T", "theta_T", "psi_R", "theta_R", "alpha_R_los", "beta_R_los", "alpha0", "beta0"}
_FLOAT_KEYS = {"D", "R_t", "R_r", "f_c", "bandwidth", "v_R", "f_max", "delta_T", "delta_R", "ricean_K",
               "H_t", "H_r", "eta_SBg", "k"}
_INT_KEYS = {"M_T", "M_R", "default_tap"}
_LIST_KEYS = {"a", "u", "tap_weights", "energy_tap1"}


def parse_angle(text: str) -> float:
    """Parse ``"60 deg"``, ``"1.047 rad"``, ``"pi/3"`` or a bare number (radians)."""
    s = str(text).strip().lower()
    unit = "rad"
    for suffix in ("deg", "rad"):
        if s.endswith(suffix):
            unit, s = suffix, s[: -len(suffix)].strip()
    if "pi" in s:
        num, _, den = s.partition("/")
        coeff = num.replace("pi", "").replace("*", "").strip()
        value = (float(coeff) if coeff not in ("", "+", "-") else float(coeff + "1")) * math.pi
        if den:
            value /= float(den)
    else:
        value = float(s)
    return math.radians(value) if unit == "deg" else value


def _parse_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in re.split(r"[,\s]+", text.strip()) if x)


def _coerce(key: str, raw: str) -> Any:
    if key in _ANGLE_KEYS:
        return parse_angle(raw)
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _LIST_KEYS:
        return _parse_list(raw)
    if key == "planar":
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if key in ("name",):
        return raw.strip()
    raise KeyError(f"unknown config key {key!r}")


# Overriding any of these leaves the preset's tap layout, so separability is enforced again.
_LAYOUT_KEYS = {"D", "a", "R_t", "R_r"}


def apply_overrides(config: ScenarioConfig, items: dict[str, str]) -> ScenarioConfig:
    """Apply flat dotted ``key -> text value`` overrides (``vmf.tcyl.k``, ``energy.tap2`` ...).

    A preset stays a preset unless the tap layout keys change.
    """
    changes: dict[str, Any] = {}
    vmf = dict(config.vmf)
    tapl = list(config.energy_tapl)
    ground = config.ground
    for dotted, raw in items.items():
        parts = dotted.split(".")
        head = parts[0]
        if head == "vmf" and len(parts) == 3:
            pop, attr = parts[1], parts[2]
            base = vmf.get(pop, config.population(pop))
            vmf[pop] = dataclasses.replace(base, **{attr: _coerce(attr, raw)})
        elif head == "energy" and len(parts) == 2 and parts[1].startswith("tap"):
            l = int(parts[1][3:])
            values = _parse_list(raw)
            if l == 1:
                changes["energy_tap1"] = values
            else:
                while len(tapl) < l - 1:
                    tapl.append((0.0, 0.0, 0.0))
                tapl[l - 2] = values
        elif head == "ground" and len(parts) == 2:
            ground = dataclasses.replace(ground or GroundConfig(), **{parts[1]: _coerce(parts[1], raw)})
        elif len(parts) == 1:
            changes[head] = _coerce(head, raw)
        else:
            raise KeyError(f"unknown config key {dotted!r}")
    if config.origin == "preset" and _LAYOUT_KEYS & changes.keys():
        changes["origin"] = "user"
    return dataclasses.replace(config, vmf=vmf, energy_tapl=tuple(tapl), ground=ground, **changes)


def read_config_file(path: str | Path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Load an INI-style scenario file; see docs/config.md for the schema.

    Keys in the ``[scenario]`` section map to top-level parameters; other
    sections are dotted prefixes (``[vmf.tcyl]``, ``[energy]``, ``[ground]``).
    A ``preset`` key in ``[scenario]`` seeds the values before overrides.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str  # keep key case (R_t, M_T, ...)
    path = Path(path)
    try:
        with path.open() as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc.strerror}") from exc
    items: dict[str, str] = {}
    preset = None
    for section in parser.sections():
        for key, value in parser.items(section):
            if section == "scenario":
                if key == "preset":
                    preset = value.strip()
                    continue
                items[key] = value
            else:
                items[f"{section}.{key}"] = value
    if base is None:
        base = load_preset(preset) if preset else ScenarioConfig()
    return apply_overrides(base, items)
