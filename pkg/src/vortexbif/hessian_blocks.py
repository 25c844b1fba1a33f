"""Angular blocks of the Hessian at a primary vortex.

Perturbing ``U = exp(i m0 theta)(psi + v)`` and splitting ``v`` into Fourier
modes pairs ``V_m`` (harmonic ``m``) with ``W_{m-2m0}`` (the conjugate
partner).  Each pair gives a symmetric block

    H_m(a, Omega) = K_m(a) - Omega (m - m0) R,   R = diag(I, -I),

and the spectrum of ``H_{m0-k}`` equals that of ``H_{m0+k}``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import lgamma, log

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment

from .primary_branch import PrimaryBranchPoint
from .radial_spectral import (
    RadialDiscretization,
    assemble_multiplication,
    block_operator,
    symmetric_eigensolve,
)

__all__ = [
    "HessianBlock",
    "KreinData",
    "Crossing",
    "CrossingError",
    "ResonanceWarning",
    "assemble_K",
    "assemble_H",
    "negative_count",
    "full_morse_count",
    "required_m_max",
    "krein_signature",
    "find_crossing",
    "locate_crossing",
    "default_bracket",
    "track_eigenvalues",
    "last_crossing_shift",
    "ZERO_TOL",
]

logger = logging.getLogger(__name__)

ZERO_TOL = 1e-8


class CrossingError(RuntimeError):
    """No admissible sign change of a block eigenvalue in the bracket."""


class ResonanceWarning(UserWarning):
    pass


@dataclass
class HessianBlock:
    m: int
    m0: int
    a: float
    Omega: float
    matrix: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.matrix.shape[0] // 2

    @property
    def shift(self) -> int:
        return self.m - self.m0

    @cached_property
    def eig(self):
        return symmetric_eigensolve(self.matrix)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eig.values

    @property
    def eigenvectors(self) -> np.ndarray:
        return self.eig.vectors

    def split(self, x):
        """``(V, W)`` coefficient halves of a block vector."""
        x = np.asarray(x)
        return x[: self.size], x[self.size :]

    def R(self) -> np.ndarray:
        return np.concatenate([np.ones(self.size), -np.ones(self.size)])


@dataclass(frozen=True)
class KreinData:
    m: int
    n_track: int
    eigenvalue: float
    S: float


@dataclass(frozen=True)
class Crossing:
    m: int
    n: int
    n_track: int
    Omega: float
    eigenvalue: float
    krein: KreinData
    resonant: bool = False


def _disc(branch: PrimaryBranchPoint, disc):
    return disc if disc is not None else branch.disc


def assemble_K(m: int, branch: PrimaryBranchPoint, disc: RadialDiscretization | None = None) -> HessianBlock:
    """``K_m(a)`` on ``(V_m, W_{m-2m0})``."""
    disc = _disc(branch, disc)
    m0 = branch.m0
    mw = m - 2 * m0
    psi2 = branch.psi_nodes**2 if branch.a > 0 else np.zeros_like(disc.nodes)
    shift = branch.omega
    Avv = np.diag(disc.eigenvalues(m) - shift) + 2.0 * assemble_multiplication(psi2, m, m, disc)
    Aww = np.diag(disc.eigenvalues(mw) - shift) + 2.0 * assemble_multiplication(psi2, mw, mw, disc)
    Avw = assemble_multiplication(psi2, m, mw, disc)
    return HessianBlock(m, m0, branch.a, 0.0, block_operator([[Avv, Avw], [Avw.T, Aww]]))


def assemble_H(m: int, branch: PrimaryBranchPoint, Omega: float, disc=None, *, K: HessianBlock | None = None) -> HessianBlock:
    """``H_m(a, Omega) = K_m(a) - Omega (m - m0) R``; pass ``K`` to reuse an assembled block."""
    K = K if K is not None else assemble_K(m, branch, disc)
    k = m - branch.m0
    M = K.matrix - Omega * k * np.diag(K.R())
    return HessianBlock(m, branch.m0, branch.a, float(Omega), M)


def negative_count(block: HessianBlock, tol: float = 0.0) -> int:
    return int(np.sum(block.eigenvalues < -tol))


def required_m_max(m0: int, Omega: float, delta: float) -> int:
    """Largest ``m`` whose block may still have a negative eigenvalue.

    For ``m = m0 + k`` the block is bounded below by
    ``min((2-Omega) k, (2+Omega) k - 4 m0) - delta`` when ``k >= m0``, where
    ``delta = omega(a) - lambda_{m0,0}``; the ``psi^2`` coupling
    ``[[2, 1], [1, 2]] psi^2`` is positive semidefinite.
    """
    if not -2.0 < Omega < 2.0:
        raise ValueError(f"|Omega| must be below 2, got {Omega}")
    delta = max(delta, 0.0)
    k = max(m0, int(np.floor(delta / (2.0 - Omega))), int(np.floor((4 * m0 + delta) / (2.0 + Omega))))
    # the bound is strict only above these thresholds
    while not (min((2.0 - Omega) * k, (2.0 + Omega) * k - 4 * m0) > delta and k >= m0):
        k += 1
    return m0 + k - 1


def full_morse_count(branch: PrimaryBranchPoint, Omega: float, m_max: int | None = None, disc=None, *, per_block: bool = False):
    """Negative eigenvalues of the full Hessian: ``n(H_{m0}) + 2 sum_{m>m0} n(H_m)``."""
    disc = _disc(branch, disc)
    m0 = branch.m0
    delta = branch.omega - 2.0 * (m0 + 1)
    needed = required_m_max(m0, Omega, delta)
    if m_max is None:
        m_max = needed
    elif m_max < needed:
        raise ValueError(f"m_max={m_max} too small; blocks up to m={needed} may be indefinite")
    if max(m_max, abs(m_max - 2 * m0)) > disc.m_support:
        raise ValueError(f"m_max={m_max} exceeds discretization support {disc.m_support}")
    counts = {m0: negative_count(assemble_K(m0, branch, disc))}
    for m in range(m0 + 1, m_max + 1):
        counts[m] = negative_count(assemble_H(m, branch, Omega, disc))
    total = counts[m0] + 2 * sum(v for m, v in counts.items() if m != m0)
    return (total, counts) if per_block else total


def _krein(block: HessianBlock, j: int) -> KreinData:
    x = block.eigenvectors[:, j]
    V, W = block.split(x)
    n_track = int(np.argmax(np.abs(W))) if W @ W >= V @ V else int(np.argmax(np.abs(V)))
    return KreinData(block.m, n_track, float(block.eigenvalues[j]), float(V @ V - W @ W))


def krein_signature(block: HessianBlock, tol: float = 1e-6) -> KreinData:
    """``S_m = ||V||^2 - ||W||^2`` of the eigenvector closest to zero."""
    j = int(np.argmin(np.abs(block.eigenvalues)))
    if abs(block.eigenvalues[j]) > tol:
        raise CrossingError(f"block m={block.m} has no eigenvalue within {tol} of zero")
    return _krein(block, j)


def last_crossing_shift(m0: int) -> float:
    """``(2 m0)! / (4^m0 m0! (m0+1)!)``; the last curve is ``2 - shift * a^2 + O(a^4)``."""
    return float(np.exp(lgamma(2 * m0 + 1) - m0 * log(4.0) - lgamma(m0 + 1) - lgamma(m0 + 2)))


def default_bracket(m: int, n: int, branch: PrimaryBranchPoint) -> tuple[float, float]:
    """Bracket around the small-amplitude crossing of the ``(m, n)`` curve."""
    m0, a = branch.m0, branch.a
    k = m - m0
    if k <= 0:
        raise ValueError("crossings are searched for m > m0")
    Om0 = Fraction(2 * (m0 - abs(m - 2 * m0)) - 4 * n, k)
    if m == m0 + 1 and n == 0:
        s = last_crossing_shift(m0) * a * a
        if s == 0:
            raise ValueError("last curve needs a > 0")
        return 2.0 - 3.0 * s, 2.0 - 0.3 * s
    if not 0 < Om0 < 2:
        raise ValueError(
            f"(m={m}, n={n}) has Omega_0={Om0} outside (0, 2); supply an explicit bracket"
        )
    half = 1.0 / k
    lo = max(float(Om0) - half, 1e-6)
    hi = min(float(Om0) + half, 2.0 - 1e-6)
    return lo, hi


def locate_crossing(m: int, n: int, branch: PrimaryBranchPoint, Omega_bracket=None, disc=None, *, xtol: float = 1e-14) -> Crossing:
    """Root of the block eigenvalue that changes sign inside the bracket.

    The sorted eigenvalue with index ``min(n_lo, n_hi)`` (negative counts at
    the ends) is continuous in ``Omega`` and changes sign exactly once when
    the counts differ by one.
    """
    disc = _disc(branch, disc)
    lo, hi = Omega_bracket if Omega_bracket is not None else default_bracket(m, n, branch)
    K = assemble_K(m, branch, disc)

    def block(Om):
        return assemble_H(m, branch, Om, disc, K=K)

    n_lo, n_hi = negative_count(block(lo)), negative_count(block(hi))
    if n_lo == n_hi:
        raise CrossingError(f"no sign change for m={m} in [{lo}, {hi}]")
    if abs(n_lo - n_hi) > 1:
        raise CrossingError(f"{abs(n_lo - n_hi)} eigenvalues cross zero in [{lo}, {hi}]; narrow the bracket")
    j = min(n_lo, n_hi)
    root = brentq(lambda Om: block(Om).eigenvalues[j], lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
    B = block(root)
    ev = B.eigenvalues
    if abs(ev[j]) > 1e-9:
        raise CrossingError(f"crossing eigenvalue {ev[j]:.3e} not resolved at Omega={root}")
    resonant = int(np.sum(np.abs(ev) < ZERO_TOL)) > 1
    if resonant:
        warnings.warn(f"resonant crossing at Omega={root} in block m={m}", ResonanceWarning)
    kr = _krein(B, j)
    return Crossing(m, n, kr.n_track, float(root), float(ev[j]), kr, resonant)


def find_crossing(m: int, n: int, branch: PrimaryBranchPoint, Omega_bracket=None, disc=None) -> float:
    return locate_crossing(m, n, branch, Omega_bracket, disc).Omega


def track_eigenvalues(m: int, branch: PrimaryBranchPoint, Omega_grid, n_tracks: int = 6, disc=None, *, return_krein: bool = False):
    """Lowest ``n_tracks`` eigenvalues followed along ``Omega_grid`` by eigenvector overlap.

    Column ``j`` of the result stays attached to one eigenvector family even
    where sorted order changes.  With ``return_krein`` the signs of
    ``||V||^2 - ||W||^2`` along each track are returned as well.
    """
    disc = _disc(branch, disc)
    K = assemble_K(m, branch, disc)
    out = np.empty((len(Omega_grid), n_tracks))
    signs = np.empty((len(Omega_grid), n_tracks), dtype=int)
    prev = None
    # follow a few extra vectors so that families entering from above are matched
    pool = min(2 * n_tracks, K.matrix.shape[0])
    for i, Om in enumerate(Omega_grid):
        B = assemble_H(m, branch, Om, disc, K=K)
        vals, vecs = B.eigenvalues[:pool], B.eigenvectors[:, :pool]
        if prev is None:
            order = np.arange(n_tracks)
        else:
            _, order = linear_sum_assignment(-np.abs(prev.T @ vecs))
        out[i] = vals[order]
        prev = vecs[:, order]
        V, W = prev[: K.size], prev[K.size :]
        signs[i] = np.sign(np.sum(V**2, axis=0) - np.sum(W**2, axis=0)).astype(int)
    return (out, signs) if return_krein else out
