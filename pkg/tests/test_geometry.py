import math

import numpy as np
import pytest

from v2v_gbsm.config import GroundConfig
from v2v_gbsm.geometry import (antenna_position, arrival_angles, closed_form_lengths, exact_lengths,
                               exact_path_length, path_lengths, receiver_center, scatterer_position)

from conftest import single_element

PI = math.pi


def test_mt_single_element_at_origin(highway):
    cfg = single_element(highway)
    for t in (0.0, 2.0, 7.5):
        assert np.array_equal(antenna_position("MT", 1, cfg, t), np.zeros(3))


@pytest.mark.parametrize("gamma,expected", [(0.0, (250.0, 0.0, 0.0)), (PI / 2, (200.0, 50.0, 0.0))])
def test_receiver_center_moves_along_gamma(highway, gamma, expected):
    cfg = highway.replace(gamma_R=gamma)
    assert np.allclose(receiver_center(cfg, 2.0), expected, atol=1e-12)


def test_two_element_array_is_symmetric(highway):
    p1 = antenna_position("MT", 1, highway)
    p2 = antenna_position("MT", 2, highway)
    assert np.allclose(p1, -p2)
    assert np.linalg.norm(p2 - p1) == pytest.approx(highway.wavelength)


def test_ellipsoid_intersections(highway):
    far = scatterer_position("ell1", 0.0, 0.0, highway)
    near = scatterer_position("ell1", PI, 0.0, highway)
    assert np.allclose(far, (220.0, 0.0, 0.0))
    assert np.linalg.norm(near) == pytest.approx(20.0)


def test_ellipsoid_points_satisfy_surface_equation(highway):
    rng = np.random.default_rng(3)
    a, b, u = highway.a[0], highway.b[0], highway.u_axes[0]
    pts = scatterer_position("ell1", rng.uniform(-PI, PI, 500), rng.uniform(0, PI / 2, 500), highway)
    x = pts[:, 0] - highway.f0
    assert np.allclose(x ** 2 / a ** 2 + pts[:, 1] ** 2 / b ** 2 + pts[:, 2] ** 2 / u ** 2, 1.0)
    assert np.all(pts[:, 2] >= 0)


def test_tcyl_point(highway):
    assert np.allclose(scatterer_position("tcyl", PI / 2, 0.0, highway), (0.0, 40.0, 0.0), atol=1e-12)


def test_cylinder_height_clamped(highway):
    z = scatterer_position("tcyl", 0.0, PI / 2, highway)[2]
    assert z == pytest.approx(40.0 * math.tan(0.99 * PI / 2))


def test_rcyl_follows_receiver(highway):
    p = scatterer_position("rcyl", 0.0, 0.0, highway.replace(gamma_R=0.0), t=2.0)
    assert np.allclose(p, (290.0, 0.0, 0.0))


def test_exact_path_length_examples():
    assert exact_path_length([(0, 0, 0), (200, 0, 0)]) == 200.0
    assert exact_path_length([(0, 0, 0), (0, 40, 0), (200, 0, 0)]) == pytest.approx(40 + math.hypot(200, 40))
    assert exact_path_length([(0, 0, 0), (0, 40, 0), (200, 0, 0)]) == pytest.approx(243.96, abs=5e-3)
    with pytest.raises(ValueError):
        exact_path_length([(0, 0, 0)])


@pytest.mark.parametrize("l", [1, 2])
def test_focal_sum(highway, l):
    cfg = single_element(highway)
    alphas = np.linspace(-PI, PI, 721)
    total = exact_lengths("sb_ell", cfg, 1, 1, [(alphas, np.zeros_like(alphas))], 0.0, l).total
    assert np.max(np.abs(total - 2 * cfg.a[l - 1])) <= 1e-9 * cfg.a[l - 1]


@pytest.mark.parametrize("point,angles", [
    ((220.0, 0.0, 0.0), (0.0, 0.0)),
    ((200.0, 40.0, 0.0), (PI / 2, 0.0)),
    ((200.0, 0.0, 30.0), (None, PI / 2)),
])
def test_arrival_angles(highway, point, angles):
    a, b = arrival_angles(np.array(point), highway, 0.0)
    if angles[0] is not None:
        assert a == pytest.approx(angles[0])
    assert b == pytest.approx(angles[1])


def test_arrival_angles_reject_center(highway):
    with pytest.raises(ValueError):
        arrival_angles(receiver_center(highway), highway)


def test_collinear_los(highway):
    cfg = single_element(highway).replace(gamma_R=highway.alpha_R_los)
    assert closed_form_lengths("los", cfg, 1, 1, (), 2.0).total == pytest.approx(150.0)


def test_receding_los_grows(highway):
    cfg = single_element(highway).replace(gamma_R=highway.alpha_R_los + PI)
    lengths = [float(closed_form_lengths("los", cfg, 1, 1, (), t).total) for t in np.linspace(0, 2, 9)]
    assert all(b > a for a, b in zip(lengths, lengths[1:]))


def test_cylinder_to_cylinder_leg_at_rest(highway):
    cfg = single_element(highway)
    aT, aR = np.array([0.3, 2.0]), np.array([-1.0, 0.4])
    z = np.zeros(2)
    comps = closed_form_lengths("db_cyl", cfg, 1, 1, [(aT, z), (aR, z)], 0.0).components
    assert np.allclose(comps["xi_n11n12"], 200.0)


def test_transmit_leg_without_offset(highway):
    cfg = single_element(highway)
    aT = np.linspace(-PI, PI, 13)
    comps = closed_form_lengths("sb_tcyl", cfg, 1, 1, [(aT, np.zeros_like(aT))], 0.0).components
    assert np.allclose(comps["xi_pn11"], 40.0)


def test_closed_forms_ignore_gamma_at_rest(highway):
    rng = np.random.default_rng(5)
    draws = [(rng.uniform(-PI, PI, 200), rng.uniform(0, 1, 200)) for _ in range(2)]
    for rc in ("los", "sb_tcyl", "sb_rcyl", "sb_ell", "db_cyl", "db_tcyl_ell", "db_ell_rcyl"):
        n = {"los": 0, "sb_tcyl": 1, "sb_rcyl": 1, "sb_ell": 1}.get(rc, 2)
        ref = closed_form_lengths(rc, highway, 1, 2, draws[:n], 0.0).total
        for g in (PI / 6, PI / 2, 2 * PI / 3):
            other = closed_form_lengths(rc, highway.replace(gamma_R=g), 1, 2, draws[:n], 0.0).total
            assert np.array_equal(ref, other)


def test_ground_path_single_element(highway):
    cfg = single_element(highway).replace(ground=GroundConfig(10.0, 10.0, 0.1))
    total = exact_lengths("sb_ground", cfg, 1, 1, [(np.array(PI), np.array(0.0))], 0.0).total
    assert float(total) == pytest.approx(200.99751242241783, rel=1e-12)
    # mirror image: the specular path equals the straight line to the reflected receiver
    assert float(total) == pytest.approx(math.hypot(200.0, 20.0), rel=1e-12)


def test_negative_radicand_reported(highway):
    # the printed receiver-leg bracket adds 2 D xi_R cos(gamma + alpha_R); a slim ellipse drives it negative
    cfg = single_element(highway).replace(a=(101.0, 120.0), gamma_R=PI / 2)
    with pytest.raises(ValueError, match="negative radicand"):
        closed_form_lengths("sb_ell", cfg, 1, 1, [(PI / 2, 0.0)], 0.0, 1, "as-printed")
    closed_form_lengths("sb_ell", cfg, 1, 1, [(PI / 2, 0.0)], 0.0, 1, "corrected")


def test_unknown_mode_and_class(highway):
    with pytest.raises(ValueError):
        closed_form_lengths("sb_tcyl", highway, 1, 1, [(0.0, 0.0)], mode="approx")
    with pytest.raises(ValueError):
        exact_lengths("triple", highway, 1, 1, [])


def test_planar_cylinder_error_scales_with_radius_over_distance(highway):
    # far-terminal legs are approximated by the center distance, so error ~ R/D
    rng = np.random.default_rng(11)
    aT = rng.uniform(-PI, PI, 4000)
    z = np.zeros_like(aT)
    for R in (40.0, 4.0, 0.4):
        cfg = single_element(highway).replace(R_t=R, R_r=R)
        e = exact_lengths("sb_tcyl", cfg, 1, 1, [(aT, z)], 0.0).total
        c = closed_form_lengths("sb_tcyl", cfg, 1, 1, [(aT, z)], 0.0).total
        assert np.max(np.abs(c - e) / e) <= 1.05 * R / cfg.D


def test_corrected_ellipsoid_single_bounce_is_exact(highway):
    cfg = single_element(highway)
    rng = np.random.default_rng(2)
    ang = [(rng.uniform(-PI, PI, 1000), rng.uniform(0, PI / 2, 1000))]
    for t in (0.0, 2.0):
        e = path_lengths("sb_ell", cfg, 1, 1, ang, t, 1, "exact").total
        c = path_lengths("sb_ell", cfg, 1, 1, ang, t, 1, "corrected").total
        assert np.allclose(c, e, rtol=1e-9)


def test_as_printed_ellipsoid_is_not_a_length(highway):
    cfg = single_element(highway)
    comps = closed_form_lengths("sb_ell", cfg, 1, 1, [(0.0, 0.0)], 0.0, 1, "as-printed").components
    # the printed leading term evaluates to 2 a^2 / 1 at alpha=0, beta=0 (units of length^2 / length)
    assert float(comps["xi_pnl3"]) == pytest.approx(2 * cfg.a[0] ** 2 * cfg.b[0] ** 2 * cfg.u_axes[0] ** 2
                                                  / (cfg.b[0] ** 2 * cfg.u_axes[0] ** 2))
