"""3D non-stationary wideband MIMO vehicle-to-vehicle channel simulator."""

__version__ = "0.1.0"

from .angular import VonMisesFisher, marginal_aoa_pdf, vmf_normalization, vmf_pdf, vmf_sample  # noqa: E402
from .config import (  # noqa: E402
    PRESET_NAMES,
    GroundConfig,
    ScenarioConfig,
    ScenarioValidationError,
    TapGeometry,
    ValidatedScenario,
    load_preset,
    tap_geometry,
    validate_scenario,
)
from .series import CurveSeries, TapCoefficientSeries  # noqa: E402

__all__ = [
    "PRESET_NAMES", "CurveSeries", "GroundConfig", "ScenarioConfig", "ScenarioValidationError",
    "TapCoefficientSeries", "TapGeometry", "ValidatedScenario", "VonMisesFisher", "load_preset",
    "marginal_aoa_pdf", "tap_geometry", "validate_scenario", "vmf_normalization", "vmf_pdf", "vmf_sample",
]
