import math

import numpy as np
import pytest
from scipy.special import j0

from v2v_gbsm import load_preset
from v2v_gbsm.statistics import (characteristic_function, doppler_psd_from_characteristic, doppler_psd_standard,
                                 frequency_cf, monte_carlo_cf, space_cf, space_cf_curve, temporal_acf)

from conftest import clarke_scenario, isotropic

PI = math.pi


def test_los_component_at_zero_lag(highway):
    rho = space_cf(highway, 1, "LoS")
    assert abs(rho) == pytest.approx(3.942 / 4.942, abs=1e-12)


def test_single_bounce_magnitude_at_zero_lag(highway):
    rho = space_cf(highway, 1, "SB_1,1")
    assert abs(rho) == pytest.approx(0.371 / 4.942, abs=2e-5)


@pytest.mark.parametrize("name", ["tap1-highway", "tap1-urban", "tap2-highway", "tap2-urban"])
def test_total_zero_lag_is_one(name):
    cfg = load_preset(name)
    assert abs(space_cf(cfg, cfg.default_tap) - 1.0) <= 2e-5


def test_components_sum_to_total(highway):
    cfg, l1, l2 = highway.replace(M_T=2), (1, 1), (2, 1)
    parts = sum(space_cf(cfg, 1, c, 1.0, 1e-3, l1, l2) for c in ("LoS", "SB_1,1", "SB_1,2", "SB_1,3", "DB"))
    assert parts == pytest.approx(space_cf(cfg, 1, "total", 1.0, 1e-3, l1, l2), abs=5e-5)


def test_unknown_component(highway):
    with pytest.raises(KeyError):
        space_cf(highway, 1, "SB_9,9")


def test_gamma_invariance_at_rest(highway):
    ref = space_cf_curve(highway, [0.5, 1.0, 2.0]).values
    for g in (PI / 6, PI / 2, 2 * PI / 3):
        other = space_cf_curve(highway.replace(gamma_R=g), [0.5, 1.0, 2.0]).values
        assert np.max(np.abs(other - ref)) <= 1e-12


def test_isotropic_gamma_invariance_any_lag(highway):
    cfg = isotropic(highway).replace(ricean_K=0.0)
    taus = np.array([0.0, 5e-4, 2e-3])
    ref = temporal_acf(cfg, taus, component="SB_1,2").values
    other = temporal_acf(cfg.replace(gamma_R=PI / 6), taus, component="SB_1,2").values
    assert np.max(np.abs(other - ref)) <= 1e-4


def test_acf_is_hermitian(highway):
    taus = np.array([1e-4, 7e-4, 3e-3])
    pos = temporal_acf(highway, taus).values
    neg = temporal_acf(highway, -taus[::-1]).values[::-1]
    assert np.allclose(neg, np.conj(pos), atol=1e-12)


def test_pure_los_acf_unit_magnitude(highway):
    cfg = highway.replace(ricean_K=1e12)
    vals = temporal_acf(cfg, np.linspace(0, 0.02, 9)).values
    assert np.allclose(np.abs(vals), 1.0, atol=1e-9)


def test_clarke_acf():
    cfg = clarke_scenario()
    taus = np.linspace(0, 3, 61) / cfg.f_max
    vals = temporal_acf(cfg, taus, component="SB_1,2").values
    assert np.max(np.abs(vals - j0(2 * PI * cfg.f_max * taus))) < 1e-3


def test_clarke_psd():
    cfg = clarke_scenario()
    gammas = np.linspace(-0.9, 0.9, 37) * cfg.f_max
    psd = doppler_psd_standard(cfg, gammas, component="SB_1,2").values
    clarke = 1.0 / (PI * cfg.f_max * np.sqrt(1 - (gammas / cfg.f_max) ** 2))
    assert np.max(np.abs(psd / clarke - 1)) < 0.05
    assert clarke[18] == pytest.approx(7.35e-4, abs=1e-6)


def test_standard_psd_is_a_density(highway):
    f = highway.f_max
    gammas = np.linspace(-1.5 * f, 1.5 * f, 601)
    psd = doppler_psd_standard(highway, gammas).values
    assert np.min(psd) > -1e-3 * np.max(psd)
    assert np.trapezoid(psd, gammas) == pytest.approx(1.0, abs=0.02)


def test_los_line_position(highway):
    cfg = highway.replace(ricean_K=1e9, gamma_R=0.3)
    f = cfg.f_max
    gammas = np.linspace(-f, f, 801)
    psd = doppler_psd_standard(cfg, gammas).values
    line = f * math.cos(cfg.alpha_R_los - cfg.gamma_R) * math.cos(cfg.beta_R_los)
    assert abs(gammas[np.argmax(psd)] - line) <= gammas[1] - gammas[0]


def test_psd_rejects_nyquist_violation(highway):
    with pytest.raises(ValueError, match="Nyquist"):
        doppler_psd_standard(highway, [0.0], lag_step=1.0 / highway.f_max)


def test_frequency_cf_zero_lag(highway):
    cf = frequency_cf(highway, [0.0, 1e6])
    assert cf.values[0] == pytest.approx(1.0, abs=1e-3)
    assert abs(cf.values[1]) <= 1.0 + 1e-3


def test_frequency_cf_single_ray(highway):
    cfg = highway.replace(energy_tap1=(0.0, 0.0, 0.0, 0.0))
    cf = frequency_cf(cfg, [0.0, 1e6, 7e6, 20e6])
    assert np.allclose(np.abs(cf.values), 1.0, atol=1e-9)


def test_characteristic_function_of_unity():
    omegas = np.array([-2.5, -1.0, 0.0, 0.7, 3.0])
    got = characteristic_function(lambda df: np.ones_like(df), omegas)
    expected = np.where(omegas == 0, 2 * PI, 2 * np.sin(PI * omegas) / np.where(omegas == 0, 1, omegas))
    assert np.allclose(got, expected, atol=1e-10)


def test_characteristic_function_sampled_grid():
    grid = np.linspace(-PI, PI, 401)
    got = characteristic_function(np.ones_like(grid), [0.0, 1.5], df_grid=grid)
    assert np.allclose(got, [2 * PI, 2 * math.sin(1.5 * PI) / 1.5], atol=1e-6)
    with pytest.raises(ValueError, match="coarse"):
        characteristic_function(np.ones(5), [10.0], df_grid=np.linspace(-PI, PI, 5))


def test_characteristic_function_linearity_and_symmetry():
    f1 = lambda df: np.exp(-df ** 2)
    f2 = lambda df: np.cos(3 * df) + 0.5
    omegas = np.linspace(-4, 4, 17)
    lhs = characteristic_function(lambda df: 2 * f1(df) - 3j * f2(df), omegas)
    rhs = 2 * characteristic_function(f1, omegas) - 3j * characteristic_function(f2, omegas)
    assert np.allclose(lhs, rhs, atol=1e-12)
    cf = characteristic_function(f2, omegas)
    assert np.allclose(cf[::-1], np.conj(cf), atol=1e-12)


def test_unity_chain_gives_sinc_kernel():
    gammas = np.array([0.0, 0.1, 0.25])
    unity = lambda t, om: np.ones_like(om)
    s = doppler_psd_from_characteristic([unity, unity, unity], gammas)
    expected = [2 * PI, math.sin(2 * PI ** 2 * 0.1) / (PI * 0.1), math.sin(2 * PI ** 2 * 0.25) / (PI * 0.25)]
    assert np.allclose(s.real, expected, atol=1e-8)


def test_monte_carlo_needs_realizations(highway):
    with pytest.raises(ValueError):
        monte_carlo_cf(highway, [0.0], realizations=5, n_scatterers=10)


def test_monte_carlo_deterministic_and_thread_independent(highway):
    a = monte_carlo_cf(highway, [0.0, 1.0], realizations=12, n_scatterers=50, seed=7)
    b = monte_carlo_cf(highway, [0.0, 1.0], realizations=12, n_scatterers=50, seed=7, threads=3)
    assert a.values.tobytes() == b.values.tobytes()
    assert a.band.tobytes() == b.band.tobytes()
    assert abs(a.values[0] - 1.0) < 1e-12


def test_monte_carlo_tracks_quadrature(highway):
    mc = monte_carlo_cf(highway, [1.0], realizations=80, n_scatterers=300, seed=1)
    ref = space_cf_curve(highway, [1.0]).values
    assert abs(mc.values[0] - ref[0]) <= mc.band[0]
