import dataclasses
import warnings
from math import sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexbif.hessian_blocks import assemble_H, locate_crossing
from vortexbif.primary_branch import NewtonDivergence, solve_primary
from vortexbif.secondary_branch import (
    DihedralSector,
    assemble_g,
    continue_secondary,
    full_residual,
    kernel_mode,
    last_curve_continue,
    pitchfork_fit,
    predictor,
    rotate,
    sector_jacobian,
    solve_secondary,
    stationary_residual,
    symmetry_defect,
)

A = 0.05
B_GRID = [0.0, 0.0025, 0.005, 0.01]  # up to 0.2 a


@pytest.fixture(scope="module")
def pitchfork(branch_2_005):
    sector = DihedralSector(2, 5)
    crossing = locate_crossing(5, 0, branch_2_005)
    return sector, crossing, continue_secondary(sector, branch_2_005, crossing, B_GRID)


def off_grid():
    r = np.linspace(0.13, 4.1, 23)[:, None]
    theta = np.linspace(0.05, 2 * np.pi, 29)[None, :]
    return r, theta


def test_sector_validation():
    with pytest.raises(ValueError):
        DihedralSector(2, 2)
    with pytest.raises(ValueError):
        DihedralSector(2, 5, K=1)
    s = DihedralSector(2, 5, K=3)
    assert s.q == 3
    assert list(s.harmonics) == [-7, -4, -1, 2, 5, 8, 11]


def test_residual_vanishes_on_primary(branch_2_005):
    s = DihedralSector(2, 5)
    psi = s.embed_primary(branch_2_005)
    assert np.abs(assemble_g(s, branch_2_005, 0.7, psi)).max() <= 1e-11
    with pytest.raises(ValueError):
        assemble_g(s, branch_2_005, 0.7, psi[:-1])


@pytest.mark.parametrize("Omega", [0.3, 0.7, 1.5])
def test_linearization_is_block_diagonal(branch_2_005, disc, Omega):
    s = DihedralSector(2, 5)
    N = s.n_radial
    J = sector_jacobian(s, branch_2_005, Omega, s.embed_primary(branch_2_005))
    for k in range(1, s.K + 1):
        idx = np.r_[(s.index0 + k) * N : (s.index0 + k + 1) * N, (s.index0 - k) * N : (s.index0 - k + 1) * N]
        rest = np.setdiff1d(np.arange(J.shape[0]), idx)
        H = assemble_H(2 + 3 * k, branch_2_005, Omega, disc)
        assert np.abs(J[np.ix_(idx, idx)] - H.matrix).max() <= 1e-11
        assert np.abs(J[np.ix_(idx, rest)]).max() <= 1e-12


def test_jacobian_matches_finite_differences(pitchfork, branch_2_005, rng):
    sector, _, pts = pitchfork
    p = pts[-1]
    J = sector_jacobian(sector, branch_2_005, p.Omega, p.coeffs)
    d = rng.normal(size=p.coeffs.shape) * np.exp(-0.2 * np.arange(sector.n_radial))
    h = 1e-6
    fd = (assemble_g(sector, branch_2_005, p.Omega, p.coeffs + h * d) - assemble_g(sector, branch_2_005, p.Omega, p.coeffs - h * d)) / (2 * h)
    assert np.allclose(J @ d.ravel(), fd.ravel(), atol=1e-8)


def test_zero_amplitude_cubic_residual(disc):
    # at a = 0 and Omega = 2 the mode e_{5,0} e^{5 i theta} is a linear zero mode
    s = DihedralSector(2, 5)
    br = solve_primary(2, 0.0, disc)
    res = []
    for eps in (1e-2, 5e-3):
        c = s.zeros()
        c[s.index0 + 1, 0] = eps
        res.append(np.abs(assemble_g(s, br, 2.0, c)).max())
    assert res[0] / res[1] == pytest.approx(8.0, rel=1e-8)


def test_predictor_mode_is_w_sector(pitchfork, branch_2_005):
    sector, crossing, _ = pitchfork
    f = kernel_mode(sector, branch_2_005, crossing.Omega)
    W = f[sector.index0 - 1]  # harmonic -1
    V = f[sector.index0 + 1]
    assert sector.harmonics[sector.index0 - 1] == -1
    assert np.linalg.norm(f) == pytest.approx(1.0, abs=1e-12)
    assert abs(W[0]) > 0.999
    assert np.linalg.norm(V) < 1e-3


def test_predictor_at_zero_amplitude_is_primary(pitchfork, branch_2_005):
    sector, crossing, _ = pitchfork
    c, Om, _ = predictor(sector, branch_2_005, crossing, 0.0)
    assert np.array_equal(c, sector.embed_primary(branch_2_005))
    assert Om == crossing.Omega


def test_predictor_refuses_resonant_crossing(pitchfork, branch_2_005):
    sector, crossing, _ = pitchfork
    with pytest.raises(ValueError):
        predictor(sector, branch_2_005, dataclasses.replace(crossing, resonant=True), 0.01)


def test_last_curve_predictor_weights(branch_1_005):
    s = DihedralSector(1, 2)
    f = kernel_mode(s, branch_1_005, locate_crossing(2, 0, branch_1_005).Omega)
    lead = np.array([f[s.index0 + 1, 0], f[s.index0 - 1, 0]])  # e_{2,0} e^{2 i theta}, e_{0,0}
    expected = np.array([1.0, -sqrt(2)]) / sqrt(3)
    assert min(np.abs(lead - expected).max(), np.abs(lead + expected).max()) < 1e-3


def test_pitchfork_converges_with_small_residual(pitchfork):
    _, crossing, pts = pitchfork
    assert [p.b for p in pts] == B_GRID
    assert pts[0].Omega == crossing.Omega
    for p in pts:
        assert p.residual <= 1e-9


def test_amplitude_constraint(pitchfork, branch_2_005):
    sector, crossing, pts = pitchfork
    f = kernel_mode(sector, branch_2_005, crossing.Omega)
    psi = sector.embed_primary(branch_2_005)
    for p in pts:
        assert np.sum(f * (p.coeffs - psi)) == pytest.approx(p.b, abs=1e-12)


def test_pitchfork_exponent(pitchfork):
    _, crossing, pts = pitchfork
    p, c = pitchfork_fit(pts, crossing.Omega)
    assert p == pytest.approx(2.0, abs=0.1)
    assert c > 0  # measured: supercritical


def test_sector_morse_exceeds_primary_by_one(pitchfork, branch_2_005):
    sector, _, pts = pitchfork
    psi = sector.embed_primary(branch_2_005)
    for p in pts[1:]:
        primary = np.sum(np.linalg.eigvalsh(sector_jacobian(sector, branch_2_005, p.Omega, psi)) < 0)
        assert p.morse == primary + 1
        assert p.min_abs_eigenvalue > 1e-8


def test_negative_amplitude_gives_same_orbit(pitchfork, branch_2_005):
    sector, crossing, pts = pitchfork
    neg = continue_secondary(sector, branch_2_005, crossing, [-0.01])[0]
    pos = pts[-1]
    assert neg.Omega == pytest.approx(pos.Omega, abs=1e-12)
    # shifting theta by half the polygon angle maps b to -b
    r, theta = off_grid()
    zeta = 2 * np.pi / sector.q
    assert np.allclose(neg.field(r, theta + zeta / 2), pos.field(r, theta) * np.exp(1j * 2 * zeta / 2), atol=1e-9)


def test_doubling_K_leaves_Omega_unchanged(pitchfork, branch_2_005):
    sector, crossing, pts = pitchfork
    wide = DihedralSector(2, 5, K=8)
    p8 = continue_secondary(wide, branch_2_005, locate_crossing(5, 0, branch_2_005), [0.005, 0.01])[-1]
    assert abs(p8.Omega - pts[-1].Omega) < 1e-8


def test_stationary_residual_and_symmetry(pitchfork):
    r, theta = off_grid()
    for p in pitchfork[2][1:]:
        assert stationary_residual(p, r, theta) <= 1e-6
        assert symmetry_defect(p, r, theta) <= 1e-9


@settings(max_examples=15)
@given(st.floats(0, 2 * np.pi))
def test_rotation_equivariance(pitchfork, alpha):
    sector, _, pts = pitchfork
    p = pts[-1]
    assert full_residual(sector, p.omega, p.Omega, rotate(p, alpha)) <= 1e-9


def test_newton_failure_is_reported(pitchfork, branch_2_005):
    sector, crossing, _ = pitchfork
    f = kernel_mode(sector, branch_2_005, crossing.Omega)
    guess = (sector.embed_primary(branch_2_005) + 5 * f, crossing.Omega + 1)
    with pytest.raises(NewtonDivergence):
        solve_secondary(sector, branch_2_005, f, 5.0, guess, max_iter=2)


def test_morse_jump_triggers_step_control(pitchfork, branch_2_005):
    sector, crossing, _ = pitchfork
    # far from the pitchfork (b ~ a) another sector eigenvalue crosses zero
    with pytest.warns(UserWarning, match="Morse"):
        pts = continue_secondary(sector, branch_2_005, crossing, [0.02, 0.04])
    assert [p.b for p in pts] == [0.02, 0.04]
    assert pts[0].morse != pts[1].morse


def test_last_curve_scaling():
    b = 0.1
    out = {}
    for a in (0.05, 0.025):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            p = last_curve_continue(1, a, [0.0, b])
        assert p[0].b == 0.0 and np.abs(p[0].coeffs[p[0].sector.index0, 0] - a) < 1e-15
        q = p[1]
        br = solve_primary(1, a, q.sector.disc)
        Om_star = locate_crossing(2, 0, solve_primary(1, a)).Omega
        out[a] = (np.linalg.norm(q.coeffs - q.sector.embed_primary(br)), q.Omega - Om_star)
        assert q.residual <= 1e-9
    # ||v|| ~ a b and Omega - Omega* ~ a^2 at fixed b
    assert out[0.05][0] / out[0.025][0] == pytest.approx(2.0, rel=0.01)
    assert out[0.05][1] / out[0.025][1] == pytest.approx(4.0, rel=0.01)
    assert out[0.05][0] == pytest.approx(0.05 * b, rel=0.01)
