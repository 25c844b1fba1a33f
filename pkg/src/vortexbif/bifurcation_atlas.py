"""Small-amplitude predictions for the bifurcations of a charge-``m0`` vortex.

Everything here is either exact (rational curve locations, counts) or built
from ``n = 0`` quartic overlaps, each assembled twice: from factorials and by
quadrature.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import lgamma, log, sqrt

import numpy as np

from .hermite_basis import overlap_closed_form, quartic_overlap
from .primary_branch import omega_slope

__all__ = [
    "BifurcationPoint",
    "ReducedMatrix",
    "AssemblyMismatch",
    "counts",
    "enumerate_sets",
    "curve_location",
    "curve_list",
    "mu_tilde",
    "last_bifurcation",
    "last_lambda_matrix",
    "tail_lambda",
    "midrange_matrix",
    "classify_midrange",
    "index_parity",
    "sector_morse_count",
    "zero_threshold_slopes",
    "detect_curves",
    "build_atlas",
]

logger = logging.getLogger(__name__)

CLOSED_FORM_TOL = 1e-10


class AssemblyMismatch(AssertionError):
    """Factorial and quadrature assembly of a reduced matrix disagree."""


@dataclass
class BifurcationPoint:
    m: int
    n: int
    Omega0: Fraction
    m0: int
    multiplicity: int = 1
    resonant: bool = False
    Omega_star: float | None = None
    krein: float | None = None
    parity: int | None = None
    morse_before: int | None = None
    morse_after: int | None = None

    @property
    def q(self) -> int:
        """Order of the dihedral symmetry of the bifurcating branch."""
        return self.m - self.m0


@dataclass
class ReducedMatrix:
    context: str
    matrix: np.ndarray
    overlaps: dict = field(default_factory=dict)

    @property
    def eigenvalues(self) -> np.ndarray:
        if np.allclose(self.matrix, self.matrix.T):
            return np.linalg.eigvalsh(self.matrix)
        return np.sort_complex(np.linalg.eigvals(self.matrix))


def _log_fact(n):
    return lgamma(n + 1)


def _check(a, b, what):
    if not np.allclose(a, b, rtol=CLOSED_FORM_TOL, atol=CLOSED_FORM_TOL):
        raise AssemblyMismatch(f"{what}: closed form {a} vs quadrature {b}")


def _quad4(ms):
    return quartic_overlap(*[(m, 0) for m in ms])


# ---------------------------------------------------------------- counts


def enumerate_sets(m0: int):
    """Index sets ``(m, n)`` with ``m > m0`` of negative and zero eigenvalues of ``K_m(0)``."""
    neg, zero = [], []
    for m in range(m0 + 1, 3 * m0 + 1):
        for n in range(m0 + 1):
            d = abs(m - 2 * m0) + 2 * n
            if d < m0:
                neg.append((m, n))
            elif d == m0:
                zero.append((m, n))
    return neg, zero


def curve_location(m0: int, m: int, n: int) -> Fraction:
    """Exact ``Omega_{m,n}(0) = (2(m0 - |m - 2m0|) - 4n)/(m - m0)``."""
    return Fraction(2 * (m0 - abs(m - 2 * m0)) - 4 * n, m - m0)


def counts(m0: int) -> tuple[int, int, int]:
    """``(N, Z, B)`` from the formulas, cross-checked against enumeration."""
    if m0 < 1:
        raise ValueError("m0 must be a positive integer")
    formula = (m0 * (m0 + 1) // 2, m0, m0 * (m0 - 1) // 2)
    neg, zero = enumerate_sets(m0)
    inner = [p for p in neg if 0 < curve_location(m0, *p) < 2]
    enumerated = (len(neg), len(zero), len(inner))
    if formula != enumerated:
        raise AssertionError(f"count mismatch for m0={m0}: formula {formula}, enumeration {enumerated}")
    return formula


def curve_list(m0: int) -> list[BifurcationPoint]:
    """Curves with ``Omega_{m,n}(0)`` in ``(0, 2)``, with multiplicity in their dihedral sector.

    Two curves with the same leading-order location are resonant for the
    ``D_q`` sector of ``(m, n)`` when the other block index is ``m0 + j q``.
    """
    neg, _ = enumerate_sets(m0)
    pts = [
        BifurcationPoint(m, n, curve_location(m0, m, n), m0)
        for m, n in neg
        if 0 < curve_location(m0, m, n) < 2
    ]
    for p in pts:
        p.multiplicity = sum(1 for o in pts if o.Omega0 == p.Omega0 and (o.m - m0) % p.q == 0)
        p.resonant = p.multiplicity > 1
    pts.sort(key=lambda p: (p.Omega0, p.m, p.n))
    return pts


# ------------------------------------------------------- reduced matrices


def mu_tilde(m0: int, ell: int) -> float:
    """``a^-2`` times the small eigenvalue of ``K_{m0+2 ell}(a)`` continuing the zero at ``a=0``."""
    if not 1 <= ell <= m0:
        raise ValueError(f"ell must lie in [1, {m0}]")
    n = (m0 - abs(2 * ell - m0)) // 2
    mw = abs(m0 - 2 * ell)
    return -omega_slope(m0) + 2.0 * quartic_overlap((m0, 0), (m0, 0), (mw, n), (mw, n))


def _last_P(m0: int, source: str) -> tuple[np.ndarray, dict]:
    """``a^-2`` times ``K_{m0+1}`` restricted to ``(e_{m0+1,0}, e_{m0-1,0})`` near ``Omega = 2``."""
    ov = _quad4 if source == "quadrature" else overlap_closed_form
    w = ov([m0] * 4)
    o1 = ov([m0, m0, m0 + 1, m0 + 1])
    o2 = ov([m0, m0, m0 - 1, m0 - 1])
    o12 = ov([m0, m0, m0 + 1, m0 - 1])
    P = np.array([[-w + 2 * o1, o12], [o12, -w + 2 * o2]])
    return P, {"omega": w, "VV": o1, "WW": o2, "VW": o12}


def last_bifurcation(m0: int):
    """Reduced ``Omega``-problem for the last curve ``m = m0 + 1``.

    Returns ``(Omega_tilde, vectors, matrix)``: the nonzero eigenvalue of
    ``R P`` (the curve is ``2 + Omega_tilde a^2``), a dict of unit
    eigenvectors keyed by ``"bifurcating"`` and ``"kohn"`` (the exact
    ``Omega = 2`` zero mode), and the non-symmetric matrix.
    """
    if m0 < 1:
        raise ValueError("m0 must be a positive integer")
    P, ovl = _last_P(m0, "closed")
    Pq, _ = _last_P(m0, "quadrature")
    _check(P, Pq, f"last-bifurcation matrix m0={m0}")
    RP = np.diag([1.0, -1.0]) @ P
    vals, vecs = np.linalg.eig(RP)
    vals, vecs = vals.real, vecs.real
    j = int(np.argmax(np.abs(vals)))
    closed = -np.exp(_log_fact(2 * m0) - m0 * log(4.0) - _log_fact(m0) - _log_fact(m0 + 1))
    _check(np.array([vals[j], vals[1 - j]]), np.array([closed, 0.0]), "last-bifurcation eigenvalues")
    vectors = {}
    for key, idx in (("bifurcating", j), ("kohn", 1 - j)):
        v = vecs[:, idx] / np.linalg.norm(vecs[:, idx])
        vectors[key] = v if v[0] >= 0 else -v
    expected = np.array([sqrt(m0), -sqrt(m0 + 1)]) / sqrt(2 * m0 + 1)
    _check(vectors["bifurcating"], expected, "bifurcating eigenvector")
    return float(closed), vectors, ReducedMatrix("last-bifurcation-Omega", RP, ovl)


def last_lambda_matrix(m0: int) -> ReducedMatrix:
    """Symmetric ``a^-2 H_{m0+1}`` on the two-mode space at ``Omega = Omega_{m0+1,0}(a)``."""
    Om, _, _ = last_bifurcation(m0)
    P, ovl = _last_P(m0, "closed")
    A = P - Om * np.diag([1.0, -1.0])
    lam = np.exp(_log_fact(2 * m0 + 1) - m0 * log(4.0) - _log_fact(m0) - _log_fact(m0 + 1))
    _check(np.linalg.eigvalsh(A), np.array([0.0, lam]), "last lambda eigenvalues")
    return ReducedMatrix("last-bifurcation-lambda", A, ovl)


def tail_lambda(m0: int, m: int) -> float:
    """Small eigenvalue of ``a^-2 H_m`` at the last curve, for ``m >= 2 m0 + 1``."""
    if m < 2 * m0 + 1:
        raise ValueError("tail_lambda needs m >= 2 m0 + 1")
    first = log(2.0) + _log_fact(m0 + m) - (m0 + m) * log(2.0) - _log_fact(m0) - _log_fact(m)
    second = np.exp(_log_fact(2 * m0) - m0 * log(4.0) - _log_fact(m0) - _log_fact(m0 + 1))
    value = float(np.exp(first) + second * (m - 2 * m0 - 1))
    # independent route: 2<e_m0^2, e_m^2> - omega - Omega_tilde (m - m0)
    check = 2 * _quad4([m0, m0, m, m]) - omega_slope(m0) + second * (m - m0)
    _check(value, check, f"tail lambda m0={m0}, m={m}")
    return value


def _midrange_closed(m0: int, m: int, Om: float) -> np.ndarray:
    q = m - m0
    w = omega_slope(m0)
    d1 = -w + 2 * np.exp(_log_fact(m0 + m) - _log_fact(m0) - _log_fact(m) - (m0 + m) * log(2.0))
    d2 = -w + 2 * np.exp(_log_fact(3 * m0 - m) - _log_fact(m0) - _log_fact(2 * m0 - m) - (3 * m0 - m) * log(2.0))
    off = np.exp(_log_fact(2 * m0) - m0 * log(4.0) - _log_fact(m0) - 0.5 * (_log_fact(m) + _log_fact(2 * m0 - m)))
    return np.array([[d1 - q * Om, off], [off, d2 + q * Om]])


def midrange_matrix(m0: int, m: int) -> ReducedMatrix:
    """``a^-2 H_m`` on ``(e_{m,0}, e_{2m0-m,0})`` at the last curve, ``m0+2 <= m <= 2m0``."""
    if not m0 + 2 <= m <= 2 * m0:
        raise ValueError(f"m must lie in [{m0 + 2}, {2 * m0}]")
    Om = -np.exp(_log_fact(2 * m0) - m0 * log(4.0) - _log_fact(m0) - _log_fact(m0 + 1))
    A = _midrange_closed(m0, m, Om)
    q = m - m0
    w = _quad4([m0] * 4)
    Aq = np.array(
        [
            [-w + 2 * _quad4([m0, m0, m, m]) - q * Om, _quad4([m0, m0, m, 2 * m0 - m])],
            [_quad4([m0, m0, m, 2 * m0 - m]), -w + 2 * _quad4([m0, m0, 2 * m0 - m, 2 * m0 - m]) + q * Om],
        ]
    )
    _check(A, Aq, f"midrange matrix m0={m0}, m={m}")
    return ReducedMatrix("mid-range-m", A, {"Omega_tilde": Om})


def _midrange_real(m0: int, m: int) -> bool:
    """Real roots of ``P c = nu (m-m0) diag(1,-1) c`` with ``P`` the ``Omega``-free part."""
    P = _midrange_closed(m0, m, 0.0)
    return (P[0, 0] + P[1, 1]) ** 2 >= 4 * P[0, 1] ** 2


def classify_midrange(m0: int):
    """Eigenvalue signs of each midrange matrix and ``R(m0)`` with its ``m`` values.

    Returns ``(signatures, R, real_ms)`` where ``signatures[m]`` is a pair of
    ``+1/-1`` for the ascending eigenvalues.
    """
    sigs, real_ms = {}, []
    for m in range(m0 + 2, 2 * m0 + 1):
        ev = midrange_matrix(m0, m).eigenvalues
        sigs[m] = tuple(int(np.sign(v)) for v in ev[::-1])
        if _midrange_real(m0, m):
            real_ms.append(m)
    return sigs, len(real_ms), real_ms


# ------------------------------------------------- numerical cross-checks


def sector_morse_count(branch, Omega: float, q: int, disc=None) -> int:
    """Negative eigenvalues of the Hessian restricted to ``Fix(D_q)``."""
    from .hessian_blocks import assemble_H, negative_count, required_m_max

    m0 = branch.m0
    m_top = required_m_max(m0, Omega, branch.omega - 2.0 * (m0 + 1))
    return sum(
        negative_count(assemble_H(m, branch, Omega, disc)) for m in range(m0 + q, m_top + 1, q)
    )


def _side_step(branch) -> float:
    from .hessian_blocks import last_crossing_shift

    return 0.05 * last_crossing_shift(branch.m0) * branch.a**2


def index_parity(m0: int, curve: BifurcationPoint, branch, disc=None) -> int:
    """``(-1)^{n_before} - (-1)^{n_after}`` of the ``D_q`` Morse count across ``Omega_star``."""
    if curve.resonant:
        raise ValueError("index parity is defined for non-resonant curves only")
    if curve.Omega_star is None:
        raise ValueError("curve has no detected location")
    h = _side_step(branch)
    before = sector_morse_count(branch, curve.Omega_star - h, curve.q, disc)
    after = sector_morse_count(branch, curve.Omega_star + h, curve.q, disc)
    curve.morse_before, curve.morse_after = before, after
    return (-1) ** before - (-1) ** after


def zero_threshold_slopes(m0: int, a_values=(0.02, 0.01), disc=None) -> list[dict]:
    """``D_{ell,m0}`` for each ``ell``: zero when ``mu_tilde > 0``, else a fitted ``Omega/a^2``."""
    from .hessian_blocks import locate_crossing
    from .primary_branch import solve_primary

    out = []
    for ell in range(1, m0 + 1):
        mu = mu_tilde(m0, ell)
        rec = {"ell": ell, "m": m0 + 2 * ell, "mu_tilde": mu, "leading_order": max(0.0, -mu / (2 * ell))}
        if mu > 0:
            rec["D"] = 0.0
        else:
            slopes = []
            for a in a_values:
                br = solve_primary(m0, a, disc)
                guess = rec["leading_order"] * a * a
                c = locate_crossing(m0 + 2 * ell, 0, br, (0.2 * guess, 3.0 * guess), disc)
                slopes.append(c.Omega / a**2)
            rec["D"] = float(slopes[-1])
            rec["slopes"] = slopes
        out.append(rec)
    return out


def detect_curves(m0: int, a: float, disc=None, *, with_parity: bool = True) -> list[BifurcationPoint]:
    """All leading-order curves plus the last curve, located at amplitude ``a``."""
    from .hessian_blocks import locate_crossing
    from .primary_branch import solve_primary

    branch = solve_primary(m0, a, disc)
    curves = curve_list(m0)
    curves.append(BifurcationPoint(m0 + 1, 0, Fraction(2), m0))
    for c in curves:
        if c.resonant:
            continue
        cr = locate_crossing(c.m, c.n, branch, None, disc)
        c.Omega_star, c.krein = cr.Omega, cr.krein.S
        if with_parity:
            c.parity = index_parity(m0, c, branch, disc)
    return curves


def build_atlas(m0: int, a: float | None = None, disc=None) -> dict:
    """Everything known about ``m0`` at leading order, and at ``a`` if given."""
    N, Z, B = counts(m0)
    Om, vecs, _ = last_bifurcation(m0)
    report = {
        "m0": m0,
        "counts": {"N": N, "Z": Z, "B": B},
        "omega_slope": omega_slope(m0),
        "curves": curve_list(m0),
        "mu_tilde": {ell: mu_tilde(m0, ell) for ell in range(1, m0 + 1)},
        "last": {
            "Omega_tilde": Om,
            "bifurcating_vector": vecs["bifurcating"].tolist(),
            "lambda_eigenvalues": last_lambda_matrix(m0).eigenvalues.tolist(),
        },
    }
    if m0 >= 2:
        sigs, R, real_ms = classify_midrange(m0)
        report["midrange"] = {"signatures": sigs, "R": R, "real_m": real_ms}
    if a is not None:
        report["a"] = a
        report["detected"] = detect_curves(m0, a, disc)
    return report
