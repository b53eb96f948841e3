import math

import pytest
from hypothesis import HealthCheck, settings

from v2v_gbsm import load_preset
from v2v_gbsm.angular import VonMisesFisher

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def highway():
    return load_preset("tap1-highway")


@pytest.fixture
def urban():
    return load_preset("tap1-urban")


def clarke_scenario(f_max=433.0):
    """Receiver-cylinder scattering only, uniform azimuth, no elevation."""
    cfg = load_preset("tap1-highway")
    vmf = dict(cfg.vmf)
    vmf["rcyl"] = VonMisesFisher(0.0, 0.0, 0.0)
    return cfg.replace(vmf=vmf, ricean_K=0.0, energy_tap1=(0.0, 1.0, 0.0, 0.0), planar=True, f_max=f_max)


def isotropic(cfg):
    return cfg.replace(vmf={k: VonMisesFisher(d.alpha0, d.beta0, 0.0) for k, d in cfg.vmf.items()})


def single_element(cfg):
    return cfg.replace(M_T=1, M_R=1)


PI = math.pi
