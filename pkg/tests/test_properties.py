import math
import pathlib
import tempfile

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from v2v_gbsm import load_preset
from v2v_gbsm.angular import VonMisesFisher, vmf_normalization, vmf_pdf
from v2v_gbsm.cli import parse_grid
from v2v_gbsm.geometry import array_offsets, closed_form_lengths, exact_lengths
from v2v_gbsm.io import emit_curve, read_curve
from v2v_gbsm.series import CurveSeries
from v2v_gbsm.statistics import characteristic_function, space_cf

PI = math.pi
HIGHWAY = load_preset("tap1-highway")
URBAN = load_preset("tap1-urban")

angle = st.floats(-PI, PI, allow_nan=False)
elevation = st.floats(-PI / 2, PI / 2, allow_nan=False)
concentration = st.floats(0.0, 20.0, allow_nan=False)


@given(angle, st.floats(-1.2, 1.2), concentration, angle, elevation)
def test_vmf_symmetric_about_mean_azimuth(a0, b0, k, da, beta):
    d = VonMisesFisher(a0, b0, k)
    assert math.isclose(float(vmf_pdf(d, a0 + da, beta)), float(vmf_pdf(d, a0 - da, beta)),
                        rel_tol=1e-9, abs_tol=1e-300)


@settings(max_examples=15)
@given(angle, st.floats(-1.2, 1.2), concentration)
def test_vmf_normalized(a0, b0, k):
    assert abs(vmf_normalization(VonMisesFisher(a0, b0, k), 256, 128) - 1.0) < 1e-6


@given(st.floats(105.0, 400.0), angle, st.floats(-2.0, 2.0))
def test_focal_sum_any_ellipse(a1, alpha, gamma):
    cfg = HIGHWAY.replace(a=(a1, a1 + 20.0), M_T=1, M_R=1, gamma_R=gamma)
    total = exact_lengths("sb_ell", cfg, 1, 1, [(np.array(alpha), np.array(0.0))], 0.0, 1).total
    assert abs(float(total) - 2 * a1) <= 1e-9 * a1


@given(st.integers(1, 6), st.floats(0.1, 3.0), angle, st.floats(-1.5, 1.5))
def test_array_offsets_are_linear_and_centered(m, delta_wl, psi, theta):
    cfg = HIGHWAY.replace(M_T=m, delta_T=delta_wl * HIGHWAY.wavelength, psi_T=psi, theta_T=theta)
    off = array_offsets(cfg, "MT").all()
    assert np.allclose(off.sum(axis=0), 0.0, atol=1e-12)
    if m > 1:
        steps = np.diff(off, axis=0)
        assert np.allclose(np.linalg.norm(steps, axis=1), cfg.delta_T)
        assert np.allclose(steps, steps[0])


@given(st.floats(0.0, 20.0), angle)
def test_receding_los_monotone(t, alpha_los):
    cfg = HIGHWAY.replace(M_T=1, alpha_R_los=alpha_los, gamma_R=alpha_los + PI)
    a = float(closed_form_lengths("los", cfg, 1, 1, (), t).total)
    b = float(closed_form_lengths("los", cfg, 1, 1, (), t + 0.1).total)
    assert b > a


@given(st.sampled_from(["sb_tcyl", "sb_rcyl", "sb_ell", "db_cyl"]), angle, st.floats(0, 1.2), angle,
       st.floats(0, 1.2), angle, angle)
def test_closed_forms_gamma_free_at_rest(rc, a1, b1, a2, b2, g1, g2):
    draws = [(np.array(a1), np.array(b1)), (np.array(a2), np.array(b2))][: 2 if rc == "db_cyl" else 1]
    x = closed_form_lengths(rc, HIGHWAY.replace(gamma_R=g1), 1, 2, draws, 0.0).total
    y = closed_form_lengths(rc, HIGHWAY.replace(gamma_R=g2), 1, 2, draws, 0.0).total
    assert np.array_equal(x, y)


@settings(max_examples=12)
@given(st.sampled_from([HIGHWAY, URBAN]), st.floats(0.0, 3.0), st.floats(0.0, 2.0), st.floats(-5e-3, 5e-3))
def test_cf_bounded(cfg, spacing, t, tau):
    c2 = cfg.replace(M_T=2, delta_T=spacing * cfg.wavelength)
    assert abs(space_cf(c2, 1, "total", t, tau, (1, 1), (2, 1))) <= 1 + 2e-5


@settings(max_examples=12)
@given(st.sampled_from([HIGHWAY, URBAN]), st.floats(1e-5, 1e-2))
def test_acf_hermitian(cfg, tau):
    pos = space_cf(cfg, 1, "total", 0.0, tau)
    neg = space_cf(cfg, 1, "total", 0.0, -tau)
    assert abs(neg - pos.conjugate()) < 1e-12


@given(st.floats(-50, 50), st.floats(0.01, 5), st.integers(0, 200))
def test_grid_parsing(start, step, n):
    stop = start + n * step
    grid = parse_grid(f"{start!r}:{step!r}:{stop!r}")
    assert grid.size in (n + 1, n)  # stop may fall just short after rounding
    assert grid[0] == start
    assert np.allclose(np.diff(grid), step)


@given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6)), min_size=1, max_size=20))
def test_csv_round_trip_exact(pairs):
    vals = np.array([complex(a, b) for a, b in pairs])
    s = CurveSeries("x", "", np.arange(len(pairs), dtype=float), vals, "rho")
    with tempfile.TemporaryDirectory() as d:
        _, _, data = read_curve(emit_curve(s, pathlib.Path(d) / "c.csv"))
    data = np.atleast_2d(data)
    assert np.array_equal(data[:, 1] + 1j * data[:, 2], vals)


@given(st.complex_numbers(max_magnitude=10, allow_nan=False), st.complex_numbers(max_magnitude=10, allow_nan=False),
       st.floats(0.1, 5), st.floats(-2, 2))
def test_characteristic_function_linear(a, b, freq, omega):
    f1 = lambda x: np.cos(freq * x)
    f2 = lambda x: np.exp(1j * freq * x)
    lhs = characteristic_function(lambda x: a * f1(x) + b * f2(x), [omega])
    rhs = a * characteristic_function(f1, [omega]) + b * characteristic_function(f2, [omega])
    assert abs(lhs[0] - rhs[0]) < 1e-9 * (1 + abs(a) + abs(b))
