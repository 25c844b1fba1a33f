import warnings
from math import exp, lgamma, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import fsolve

from vortexbif.hermite_basis import overlap_closed_form
from vortexbif.hessian_blocks import locate_crossing
from vortexbif.primary_branch import solve_primary
from vortexbif.secondary_branch import DihedralSector, continue_secondary, last_curve_continue
from vortexbif.vortex_map import (
    TwoModeTruncation,
    WindingMismatch,
    asymmetric_pair,
    asymmetric_vortex,
    locate_zeros,
    polygon_defects,
    polygon_radius,
    polygon_radius_closed_form,
    synthesize_field,
    winding_number,
)


def reduced_zeros(m0, b, J=10):
    """Zeros near the origin from the leading-order (a -> 0) reduced problem on the last curve.

    Only the n = 0 modes e_{j,0} e^{i j theta} are kept; the field near the
    origin is then a polynomial in z = x + i y whose small roots are returned.
    """
    js = np.arange(J + 1)
    table = {}
    for j1 in js:
        for j2 in js:
            for j3 in js:
                j = j1 - j2 + j3
                if 0 <= j <= J:
                    table[(j1, j2, j3)] = overlap_closed_form([j1, j2, j3, j])
    w = overlap_closed_form([m0] * 4)
    s = sqrt(1 / (2 * m0 + 1))
    fV, fW = -s * sqrt(m0), s * sqrt(m0 + 1)

    def F(u):
        x, Om = u[:-1], u[-1]
        N = np.zeros(J + 1)
        for (j1, j2, j3), v in table.items():
            N[j1 - j2 + j3] += x[j1] * x[j2] * x[j3] * v
        G = (-w - Om * (js - m0)) * x + N
        G[m0] = x[m0] - 1.0
        return np.append(G, fV * x[m0 + 1] + fW * x[m0 - 1] - b)

    x0 = np.zeros(J + 2)
    x0[m0], x0[m0 + 1], x0[m0 - 1] = 1, b * fV, b * fW
    x0[-1] = -exp(lgamma(2 * m0 + 1) - m0 * np.log(4) - lgamma(m0 + 1) - lgamma(m0 + 2))
    u = fsolve(F, x0, xtol=1e-14)
    assert np.abs(F(u)).max() < 1e-12
    poly = [u[j] * sqrt(2 / exp(lgamma(j + 1))) for j in js]
    r = np.roots(poly[::-1])
    return r[np.abs(r) < 1]


@pytest.fixture(scope="module")
def last_points():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return {m0: last_curve_continue(m0, 0.05, np.linspace(0.025, 0.1, 4)) for m0 in (1, 2)}


def galerkin_point(m0, m, a=0.05, ratio=0.1):
    br = solve_primary(m0, a)
    c = locate_crossing(m, 0, br)
    return continue_secondary(DihedralSector(m0, m), br, c, np.linspace(ratio * a / 4, ratio * a, 4))[-1]


def test_triangle_from_truncation():
    cfg = locate_zeros(TwoModeTruncation(2, 5, 0, 0.1, 0.01))
    centre = cfg.central()
    assert len(centre) == 1 and centre[0].charge == -1
    d = polygon_defects(cfg, 3)
    assert d["count"] == 3 and d["radius_spread"] < 1e-6 and d["angle_defect"] < 1e-6
    assert d["radius"] == pytest.approx(sqrt(2) * 0.1, rel=1e-6)
    # vertices sit at zeta/2 + k zeta
    assert np.allclose(np.sort(d["angles"]), np.pi / 3 * np.array([1, 3, 5]), atol=1e-6)
    assert cfg.winding == cfg.total_charge == 2


@pytest.mark.parametrize("m0,m,n,centre", [(3, 7, 0, -1), (3, 8, 0, -2), (6, 12, 1, None)])
def test_other_truncation_polygons(m0, m, n, centre):
    cfg = locate_zeros(TwoModeTruncation(m0, m, n, 0.1, 0.01))
    d = polygon_defects(cfg, m - m0)
    assert d["count"] == m - m0 and d["radius_spread"] < 1e-6 and d["angle_defect"] < 1e-6
    assert d["radius"] == pytest.approx(polygon_radius(m0, m, n, 0.1, 0.01), rel=1e-6)
    ctr = cfg.central()
    if centre is None:
        assert ctr == []
    else:
        assert len(ctr) == 1 and ctr[0].charge == centre
    assert cfg.winding == m0


@pytest.mark.parametrize("m0", [1, 2, 3])
def test_zero_mode_amplitude_gives_single_central_charge(m0):
    cfg = locate_zeros(TwoModeTruncation(m0, 2 * m0 + 1, 0, 0.1, 0.0))
    assert len(cfg.zeros) == 1
    assert cfg.zeros[0].charge == m0 and cfg.zeros[0].rho < 1e-6


@settings(max_examples=20)
@given(st.sampled_from([(2, 5), (3, 7), (3, 8)]), st.floats(0.2, 3.0), st.floats(0, 2 * np.pi))
def test_truncation_dihedral_symmetry(mm, r, theta):
    m0, m = mm
    tr = TwoModeTruncation(m0, m, 0, 0.1, 0.01)
    q = m - m0
    zeta = 2 * np.pi / q
    assert tr(r, theta + zeta) == pytest.approx(tr(r, theta) * np.exp(1j * m0 * zeta), abs=1e-14)


def test_b_zero_field_is_radially_symmetric():
    tr = TwoModeTruncation(2, 5, 0, 0.1, 0.0)
    U = synthesize_field(tr, ("polar", np.linspace(0, 3, 13), np.linspace(0, 2 * np.pi, 17)))
    assert np.allclose(np.abs(U), np.abs(U[:, :1]), atol=1e-15)


def test_synthesize_grids_agree():
    tr = TwoModeTruncation(2, 5, 0, 0.1, 0.01)
    x = np.array([0.3, -0.7])
    U = synthesize_field(tr, ("cartesian", x, np.array([0.5])))
    V = tr(np.hypot(x, 0.5), np.arctan2(0.5, x))
    assert np.allclose(U[:, 0], V)
    with pytest.raises(ValueError):
        synthesize_field(tr, ("spherical", x, x))
    with pytest.raises(TypeError):
        synthesize_field(3.0, ("polar", x, x))


@pytest.mark.parametrize(
    "m0,m,n,ratio,value",
    [(2, 5, 0, 0.1, 0.141421), (3, 8, 0, 0.1, 0.173205)],
)
def test_polygon_radius_examples(m0, m, n, ratio, value):
    assert polygon_radius_closed_form(m0, m, ratio, n) == pytest.approx(value, abs=1e-6)
    assert polygon_radius(m0, m, n, 1.0, ratio) == pytest.approx(value, abs=1e-6)


@given(st.sampled_from([(2, 5), (3, 7), (3, 8), (4, 9), (4, 10), (5, 12)]), st.floats(0.01, 0.3))
def test_polygon_radius_closed_form_n0(mm, ratio):
    m0, m = mm
    assert polygon_radius(m0, m, 0, 1.0, ratio) == pytest.approx(polygon_radius_closed_form(m0, m, ratio), rel=1e-9)


@pytest.mark.parametrize("m0,m", [(3, 6), (4, 9), (6, 12)])
def test_polygon_radius_n1_leading_order(m0, m):
    # relative error of the leading term is O(r0^2)
    scaled = []
    for ratio in (1e-4, 1e-5):
        r0 = polygon_radius(m0, m, 1, 1.0, ratio)
        scaled.append(abs(r0 / polygon_radius_closed_form(m0, m, ratio, 1) - 1) / r0**2)
    assert scaled[1] == pytest.approx(scaled[0], rel=0.05)
    assert scaled[1] < 0.5


def test_polygon_radius_errors():
    with pytest.raises(ValueError):
        polygon_radius(2, 6, 0, 0.1, 0.01)
    with pytest.raises(ValueError):
        polygon_radius(2, 5, 0, 0.1, 0.0)
    with pytest.raises(ValueError):
        polygon_radius_closed_form(3, 6, 0.1, n=2)


def test_winding_number_of_monomials():
    for k in (-2, 1, 3):
        d, mn = winding_number(lambda x, y: (x + 1j * y) ** k, 0.0, 0.0, 0.5)
        assert d == k and mn == pytest.approx(0.5**k)


def test_winding_mismatch_is_fatal():
    # a zero just inside the reference circle escapes the interior search
    with pytest.raises(WindingMismatch):
        locate_zeros(lambda r, th: r * np.exp(1j * th) - 2.99)


@pytest.mark.parametrize("m0,m,centre", [(2, 5, -1), (3, 8, -2), (3, 7, -1)])
def test_galerkin_polygons(m0, m, centre):
    a, ratio = 0.05, 0.1
    cfg = locate_zeros(galerkin_point(m0, m, a, ratio))
    d = polygon_defects(cfg, m - m0)
    assert d["count"] == m - m0
    assert d["radius_spread"] < 1e-6 and d["angle_defect"] < 1e-6
    r0 = polygon_radius(m0, m, 0, a, ratio * a)
    assert abs(d["radius"] - r0) <= max(0.1 * r0, 5 * a * a)
    ctr = cfg.central()
    assert len(ctr) == 1 and ctr[0].charge == centre
    assert cfg.winding == m0


def test_asymmetric_vortex(last_points):
    for p in last_points[1][1:]:
        cfg = asymmetric_vortex(p)
        assert len(cfg.zeros) == 1
        z = cfg.zeros[0]
        assert z.charge == 1 and cfg.winding == 1
        assert z.rho == pytest.approx(p.b * sqrt(2 / 3), rel=0.03)
        assert z.theta == pytest.approx(np.pi, abs=1e-6)
    assert cfg.params["displacement"] == z.rho


def test_asymmetric_vortex_matches_reduced_problem(last_points):
    p = last_points[1][-1]
    (ref,) = reduced_zeros(1, p.b)
    z = asymmetric_vortex(p).zeros[0]
    assert z.rho == pytest.approx(abs(ref), rel=0.02)


def test_asymmetric_pair_charges_and_scaling(last_points):
    rhos = []
    for p in last_points[2][1:]:
        cfg = asymmetric_pair(p)
        ones = cfg.by_charge(1)
        assert len(ones) == 2 and cfg.total_charge == cfg.winding == 2
        rhos.append(cfg.params["rho_plus"] / p.b)
    # radii are O(b): rho / b settles to a constant
    assert np.ptp(rhos) < 0.02 * np.mean(rhos)


def test_asymmetric_pair_matches_reduced_problem(last_points):
    p = last_points[2][-1]
    cfg = asymmetric_pair(p)
    ref = reduced_zeros(2, p.b)
    got = np.sort([z.rho for z in cfg.by_charge(1)])
    assert np.allclose(got, np.sort(np.abs(ref)), rtol=0.03)
    assert np.allclose(np.sort([z.theta for z in cfg.by_charge(1)]), np.sort(np.angle(ref) % (2 * np.pi)), atol=0.02)
    # both model and Galerkin field give a mirror-symmetric pair
    assert cfg.params["layout"] == "conjugate pair"


def test_asymmetric_helpers_check_sector(last_points):
    with pytest.raises(ValueError):
        asymmetric_vortex(last_points[2][-1])
    with pytest.raises(ValueError):
        asymmetric_pair(last_points[1][-1])
