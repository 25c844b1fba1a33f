import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from vortexbif.hermite_basis import ResolutionError, eval_basis, quartic_overlap
from vortexbif.hessian_blocks import assemble_K
from vortexbif.primary_branch import solve_primary
from vortexbif.radial_spectral import (
    RadialDiscretization,
    assemble_multiplication,
    assemble_schrodinger,
    get_discretization,
    symmetric_eigensolve,
)


def test_schrodinger_examples(disc):
    A = assemble_schrodinger(2, 6.0, disc).matrix
    assert np.allclose(np.diag(A)[:3], [0, 4, 8])
    assert np.count_nonzero(A - np.diag(np.diag(A))) == 0
    B = assemble_schrodinger(0, 0.0, disc).matrix
    assert np.allclose(np.diag(B)[:3], [2, 6, 10])
    assert np.array_equal(assemble_schrodinger(-1, 0, disc).matrix, assemble_schrodinger(1, 0, disc).matrix)


def test_schrodinger_rejects_unsupported_m(disc):
    with pytest.raises(ValueError):
        assemble_schrodinger(disc.m_support + 1, 0.0, disc)


def test_discretization_minimum_size():
    with pytest.raises(ValueError):
        RadialDiscretization(4)


def test_multiplication_examples(disc):
    assert np.count_nonzero(assemble_multiplication(np.zeros_like(disc.nodes), 1, 1, disc)) == 0
    V1 = eval_basis(1, 1, disc.nodes)[0] ** 2
    assert assemble_multiplication(V1, 1, 1, disc)[0, 0] == pytest.approx(0.5, abs=1e-13)
    V2 = eval_basis(2, 1, disc.nodes)[0] ** 2
    assert assemble_multiplication(V2, 3, 3, disc)[0, 0] == pytest.approx(0.3125, abs=1e-13)


def test_multiplication_rejects_mixed_parity(disc):
    with pytest.raises(ResolutionError):
        assemble_multiplication(np.ones_like(disc.nodes), 0, 1, disc)


@given(st.integers(-6, 6), st.integers(-3, 3), st.integers(0, 5), st.integers(0, 5), st.integers(0, 4))
def test_multiplication_entries_match_overlaps(mr, shift, i, j, k):
    disc = get_discretization()
    mc = mr + 2 * shift
    V = eval_basis(3, k + 1, disc.nodes)[-1] ** 2
    M = assemble_multiplication(V, mr, mc, disc)
    assert M[i, j] == pytest.approx(quartic_overlap((3, k), (3, k), (mr, i), (mc, j)), abs=1e-12)


def test_mixed_sector_matches_adaptive_quadrature(disc):
    V = np.exp(-disc.nodes**2) * disc.nodes**2
    M = assemble_multiplication(V, 4, 0, disc)

    def e(m, n, r):
        return eval_basis(m, n + 1, np.array([r]))[-1][0]

    ref = quad(lambda r: np.exp(-r * r) * r * r * e(4, 2, r) * e(0, 3, r) * r, 0, np.inf, epsabs=1e-14)[0]
    assert M[2, 3] == pytest.approx(ref, abs=1e-12)


def test_eigensolve_diagonal_input():
    d = np.array([3.0, -1.0, 2.0])
    res = symmetric_eigensolve(np.diag(d))
    assert np.allclose(res.values, np.sort(d))


@given(st.integers(2, 30), st.integers(0, 2**31 - 1))
def test_eigensolve_orthonormal_and_accurate(n, seed):
    A = np.random.default_rng(seed).normal(size=(n, n))
    A = A + A.T
    vals, vecs = symmetric_eigensolve(A)
    assert np.all(np.diff(vals) >= 0)
    assert np.allclose(vecs.T @ vecs, np.eye(n), atol=1e-9)
    assert np.linalg.norm(A @ vecs - vecs * vals) <= 1e-9 * np.abs(A).max() * n


@pytest.mark.parametrize(
    "m0,m,expected",
    [(1, 2, [-2, 2, 2, 6, 6]), (3, 6, [-6, -2, 2, 6, 6])],
)
def test_block_spectra_at_zero_amplitude(disc, m0, m, expected):
    K = assemble_K(m, solve_primary(m0, 0.0, disc), disc)
    assert np.allclose(K.eigenvalues[:5], expected, atol=1e-10)


@given(st.integers(-12, 12), st.floats(-5, 5))
def test_schrodinger_spectral_exactness(m, shift):
    disc = get_discretization()
    vals = symmetric_eigensolve(assemble_schrodinger(m, shift, disc).matrix).values
    n = np.arange(disc.n_radial)
    assert np.allclose(vals, 2 * (abs(m) + 2 * n + 1) - shift, atol=1e-10)


def test_doubling_resolution_changes_lowest_eigenvalues_little():
    coarse, fine = get_discretization(32, 24), get_discretization(64, 24)
    out = []
    for d in (coarse, fine):
        br = solve_primary(2, 0.1, d)
        out.append(assemble_K(5, br, d).eigenvalues[:10])
    assert np.max(np.abs(out[0] - out[1])) < 1e-8


def test_synthesize_project_roundtrip(disc, rng):
    c = rng.normal(size=disc.n_radial) * np.exp(-0.3 * np.arange(disc.n_radial))
    assert np.allclose(disc.project(disc.synthesize(c, 3), 3), c, atol=1e-12)
