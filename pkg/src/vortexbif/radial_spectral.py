"""Galerkin discretization of radial operators in the oscillator basis.

Each angular sector ``m`` uses the first ``n_radial`` eigenfunctions
``e_{|m|,n}``.  Multiplication operators are assembled by Gauss-Laguerre
quadrature on one shared node set, so every sector can be coupled to every
other (``psi^2`` couples ``V_m`` to ``W_{m-2 m0}``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .hermite_basis import MAX_NODES, QuadratureRule, ResolutionError, eval_basis, gauss_laguerre_rule

__all__ = [
    "RadialDiscretization",
    "LinearRadialOperator",
    "EigenDecomposition",
    "assemble_schrodinger",
    "assemble_multiplication",
    "symmetric_eigensolve",
    "block_operator",
    "get_discretization",
    "DEFAULT_N_RADIAL",
]

DEFAULT_N_RADIAL = 48


class EigenDecomposition(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


@dataclass
class RadialDiscretization:
    """Truncated basis ``{e_{|m|,n}}_{n < n_radial}`` for ``|m| <= m_support``.

    The quadrature integrates products of four basis functions (two of them
    possibly replaced by a potential built from two more) exactly.
    """

    n_radial: int = DEFAULT_N_RADIAL
    m_support: int = 40
    rule: QuadratureRule = field(init=False, repr=False)
    _basis: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        if self.n_radial < 8:
            raise ValueError(f"n_radial must be at least 8, got {self.n_radial}")
        # four factors of degree m_support + 2(n_radial - 1)
        total = 4 * (self.m_support + 2 * (self.n_radial - 1))
        n_nodes = (total + 3) // 4 + 2
        if n_nodes > MAX_NODES:
            raise ResolutionError(
                f"n_radial={self.n_radial}, m_support={self.m_support} needs {n_nodes} nodes "
                f"(max {MAX_NODES})"
            )
        self.rule = gauss_laguerre_rule(n_nodes)

    @property
    def nodes(self) -> np.ndarray:
        return self.rule.nodes

    @property
    def weights(self) -> np.ndarray:
        return self.rule.weights

    def check_m(self, m: int) -> int:
        if abs(m) > self.m_support:
            raise ValueError(f"|m|={abs(m)} exceeds discretization support {self.m_support}")
        return abs(int(m))

    def basis(self, m: int) -> np.ndarray:
        """``e_{|m|,n}`` at the nodes, shape ``(n_radial, n_nodes)``."""
        key = self.check_m(m)
        if key not in self._basis:
            B = eval_basis(key, self.n_radial, self.rule.nodes)
            B.setflags(write=False)
            self._basis[key] = B
        return self._basis[key]

    def eigenvalues(self, m: int) -> np.ndarray:
        return 2.0 * (abs(m) + 2.0 * np.arange(self.n_radial) + 1.0)

    def synthesize(self, coeffs, m: int) -> np.ndarray:
        """Values at the nodes of ``sum_n c_n e_{|m|,n}``."""
        return np.asarray(coeffs) @ self.basis(m)

    def project(self, values, m: int) -> np.ndarray:
        """Coefficients ``<f, e_{|m|,n}>`` of a function sampled at the nodes."""
        return self.basis(m) @ (self.rule.weights * np.asarray(values))

    def evaluate(self, coeffs, m: int, r) -> np.ndarray:
        """``sum_n c_n e_{|m|,n}(r)`` at arbitrary radii."""
        return np.asarray(coeffs) @ eval_basis(m, self.n_radial, r)


@lru_cache(maxsize=16)
def get_discretization(n_radial: int = DEFAULT_N_RADIAL, m_support: int = 40) -> RadialDiscretization:
    """Shared discretization instance; basis tables are cached on it."""
    return RadialDiscretization(n_radial, m_support)


@dataclass
class LinearRadialOperator:
    m: int
    matrix: np.ndarray
    terms: tuple = ()


def assemble_schrodinger(m: int, shift: float, disc: RadialDiscretization) -> LinearRadialOperator:
    """``-Delta_m + r^2 - shift``; diagonal in the oscillator basis."""
    disc.check_m(m)
    return LinearRadialOperator(m, np.diag(disc.eigenvalues(m) - shift), ("schrodinger",))


def assemble_multiplication(V, m_row: int, m_col: int, disc: RadialDiscretization) -> np.ndarray:
    """Matrix ``<V e_{|m_col|,n'}, e_{|m_row|,n}>`` for ``V`` sampled at the nodes.

    ``V`` is taken to be even in ``r`` (like ``psi^2``); the two sectors must
    then share parity for the rule to be exact.
    """
    if (abs(m_row) + abs(m_col)) % 2:
        raise ResolutionError(f"sectors m={m_row} and m={m_col} have mixed parity")
    V = np.asarray(V, dtype=float)
    if V.shape != disc.nodes.shape:
        raise ValueError("potential must be sampled at the discretization nodes")
    return (disc.basis(m_row) * (disc.weights * V)) @ disc.basis(m_col).T


def block_operator(blocks) -> np.ndarray:
    """Dense symmetric matrix from a nested list of blocks, re-symmetrized."""
    A = np.block(blocks)
    return 0.5 * (A + A.T)


def symmetric_eigensolve(A, *, check: bool = True) -> EigenDecomposition:
    """Ascending eigenvalues and orthonormal eigenvectors of a dense symmetric matrix."""
    if isinstance(A, LinearRadialOperator):
        A = A.matrix
    A = np.asarray(A, dtype=float)
    values, vectors = scipy.linalg.eigh(A)
    if check:
        scale = max(np.abs(values).max(), 1.0)
        resid = np.linalg.norm(A @ vectors - vectors * values, axis=0).max()
        if resid > 1e-9 * scale:
            raise np.linalg.LinAlgError(f"eigensolver residual {resid:.3e} too large")
    return EigenDecomposition(values, vectors)
