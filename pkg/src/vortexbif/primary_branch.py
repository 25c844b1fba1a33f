"""Radially symmetric vortex branch ``U = exp(i m0 theta) psi(r; a)``.

The profile solves ``-Delta_{m0} psi + r^2 psi + psi^3 = omega psi`` and is
parameterized by its projection ``a = <psi, e_{m0,0}>``; ``omega`` is the
extra unknown of the Newton system.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from math import lgamma, log

import numpy as np

from .radial_spectral import RadialDiscretization, assemble_multiplication, get_discretization

__all__ = [
    "PrimaryBranchPoint",
    "NewtonDivergence",
    "omega_slope",
    "solve_primary",
    "continue_branch",
]

logger = logging.getLogger(__name__)


class NewtonDivergence(RuntimeError):
    def __init__(self, message, residual=np.nan, parameter=None):
        super().__init__(message)
        self.residual = residual
        self.parameter = parameter


@dataclass
class PrimaryBranchPoint:
    m0: int
    a: float
    omega: float
    coeffs: np.ndarray = field(repr=False)
    residual: float = 0.0
    iterations: int = 0
    positive: bool = True
    disc: RadialDiscretization = field(default=None, repr=False)

    def profile(self, r) -> np.ndarray:
        return self.disc.evaluate(self.coeffs, self.m0, r)

    @property
    def psi_nodes(self) -> np.ndarray:
        return self.disc.synthesize(self.coeffs, self.m0)

    def chemical_potential(self, Omega: float) -> float:
        return self.omega - self.m0 * Omega


def omega_slope(m0: int) -> float:
    """``||e_{m0,0}||_4^4 = (2 m0)! / (4^m0 (m0!)^2)``."""
    if m0 < 1:
        raise ValueError("m0 must be a positive integer")
    return float(np.exp(lgamma(2 * m0 + 1) - m0 * log(4.0) - 2 * lgamma(m0 + 1)))


def _residual(coeffs, omega, m0, disc):
    psi = disc.synthesize(coeffs, m0)
    return (disc.eigenvalues(m0) - omega) * coeffs + disc.project(psi**3, m0)


def solve_primary(
    m0: int,
    a: float,
    disc: RadialDiscretization | None = None,
    *,
    guess: tuple | None = None,
    tol: float = 1e-10,
    max_iter: int = 25,
    r_max: float = 6.0,
) -> PrimaryBranchPoint:
    """Newton solve for ``(psi, omega)`` with ``<psi, e_{m0,0}> = a``.

    ``guess`` is an optional ``(coeffs, omega)`` warm start.
    """
    if m0 < 1:
        raise ValueError("m0 must be a positive integer")
    if a < 0:
        raise ValueError("amplitude must be non-negative")
    disc = disc or get_discretization()
    disc.check_m(m0)
    N = disc.n_radial
    lam = disc.eigenvalues(m0)

    if guess is None:
        coeffs = np.zeros(N)
        coeffs[0] = a
        omega = lam[0] + omega_slope(m0) * a * a
    else:
        coeffs = np.array(guess[0], dtype=float)
        coeffs[0] = a
        omega = float(guess[1])
    if a == 0.0:
        return PrimaryBranchPoint(m0, 0.0, float(lam[0]), np.zeros(N), 0.0, 0, True, disc)

    F = _residual(coeffs, omega, m0, disc)
    res = np.linalg.norm(F)
    it = 0
    while res > tol:
        if it >= max_iter or not np.isfinite(res):
            raise NewtonDivergence(
                f"primary Newton failed at a={a} after {it} iterations (residual {res:.3e})",
                residual=res,
                parameter=a,
            )
        psi = disc.synthesize(coeffs, m0)
        J = np.diag(lam - omega) + 3.0 * assemble_multiplication(psi**2, m0, m0, disc)
        # unknowns: coeffs[1:], omega
        Jx = np.column_stack([J[:, 1:], -coeffs])
        step = np.linalg.solve(Jx, -F)
        coeffs[1:] += step[:-1]
        omega += step[-1]
        F = _residual(coeffs, omega, m0, disc)
        res = np.linalg.norm(F)
        it += 1

    r = np.linspace(r_max / 200, r_max, 200)
    positive = bool(np.all(disc.evaluate(coeffs / a, m0, r) > 0))
    if not positive:
        warnings.warn(f"primary profile for m0={m0}, a={a} is not positive on (0, {r_max}]")
    logger.debug("primary m0=%d a=%g omega=%.15g iters=%d res=%.2e", m0, a, omega, it, res)
    return PrimaryBranchPoint(m0, float(a), float(omega), coeffs, float(res), it, positive, disc)


def continue_branch(m0: int, a_grid, disc: RadialDiscretization | None = None, **kwargs):
    """Warm-started sweep over an ascending amplitude grid."""
    a_grid = [float(a) for a in a_grid]
    if any(b < a for a, b in zip(a_grid, a_grid[1:])) or (a_grid and a_grid[0] < 0):
        raise ValueError("a_grid must be ascending and non-negative")
    disc = disc or get_discretization()
    points = []
    for a in a_grid:
        guess = None
        if points and points[-1].a > 0:
            prev = points[-1]
            guess = (prev.coeffs * (a / prev.a), prev.omega + omega_slope(m0) * (a * a - prev.a**2))
        try:
            points.append(solve_primary(m0, a, disc, guess=guess, **kwargs))
        except NewtonDivergence as exc:
            raise NewtonDivergence(
                f"continuation of m0={m0} failed at a={a}: {exc}", exc.residual, a
            ) from exc
    return points
