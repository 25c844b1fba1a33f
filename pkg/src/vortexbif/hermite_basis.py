"""Radial eigenfunctions of the 2D harmonic oscillator and their overlaps.

The functions ``e_{m,n}(r)`` solve ``(-Delta_m + r^2) e = lambda e`` on the
half-line and are normalized in ``L^2(r dr)``.  They are generated through
the associated Laguerre representation

    e_{m,n}(r) = sqrt(2 n! / (n+|m|)!) r^|m| L_n^(|m|)(r^2) exp(-r^2/2)

with a normalized three-term recurrence, so that no factorial is formed
explicitly and large ``|m|`` (up to a few hundred) stay finite.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import lgamma, log, sqrt

import numpy as np
from scipy.special import roots_genlaguerre

__all__ = [
    "ModeIndex",
    "HermiteGaussFn",
    "QuadratureRule",
    "ResolutionError",
    "eigenvalue",
    "build_eigenfunction",
    "eval_basis",
    "gauss_laguerre_rule",
    "rule_for_degree",
    "quartic_overlap",
    "overlap_closed_form",
    "MAX_NODES",
]

# beyond this many nodes exp(t_k) overflows in the scaled weights
MAX_NODES = 170


class ResolutionError(ValueError):
    """Quadrature cannot integrate the requested product exactly."""


@dataclass(frozen=True, order=True)
class ModeIndex:
    """Angular index ``m`` (any sign) and radial index ``n >= 0``."""

    m: int
    n: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"radial index must be non-negative, got n={self.n}")

    @property
    def degree(self) -> int:
        """Degree of the polynomial factor ``p_{m,n}``."""
        return abs(self.m) + 2 * self.n

    @property
    def eigenvalue(self) -> int:
        return eigenvalue(self)


def eigenvalue(mode: ModeIndex) -> int:
    """Oscillator eigenvalue ``2(|m| + 2n + 1)``."""
    return 2 * (abs(mode.m) + 2 * mode.n + 1)


def _as_mode(mode) -> ModeIndex:
    if isinstance(mode, ModeIndex):
        return mode
    m, n = mode
    return ModeIndex(int(m), int(n))


def _normalized_laguerre(alpha: int, n_count: int, t: np.ndarray) -> np.ndarray:
    """Rows ``sqrt(n!/(n+alpha)!) L_n^alpha(t)`` without the ``1/sqrt(alpha!)``.

    The missing factor is carried by the caller together with ``r^alpha`` in
    log space.
    """
    out = np.empty((n_count, t.size))
    if n_count == 0:
        return out
    out[0] = 1.0
    if n_count > 1:
        out[1] = (1.0 + alpha - t) / sqrt(1.0 + alpha)
    for n in range(2, n_count):
        a1 = (2 * n - 1 + alpha - t) / sqrt(n * (n + alpha))
        a2 = sqrt((n - 1) * (n - 1 + alpha) / (n * (n + alpha)))
        out[n] = a1 * out[n - 1] - a2 * out[n - 2]
    return out


def eval_basis(m: int, n_count: int, r) -> np.ndarray:
    """Values of ``e_{|m|,n}(r)`` for ``n < n_count``; shape ``(n_count, len(r))``."""
    alpha = abs(int(m))
    r = np.atleast_1d(np.asarray(r, dtype=float))
    env = -0.5 * r * r + 0.5 * log(2.0)
    if alpha > 0:
        with np.errstate(divide="ignore"):
            env = env + alpha * np.log(np.abs(r)) - 0.5 * lgamma(alpha + 1.0)
    prefactor = np.exp(env)
    if alpha % 2 == 1:
        prefactor = prefactor * np.sign(r)
    return _normalized_laguerre(alpha, n_count, r * r) * prefactor


@dataclass(frozen=True)
class HermiteGaussFn:
    """Normalized eigenfunction ``e_{m,n}(r) = p_{m,n}(r) exp(-r^2/2)``.

    ``coefficients[k]`` multiplies ``r**k`` in ``p_{m,n}``; only powers
    ``|m|, |m|+2, ..., |m|+2n`` are nonzero.
    """

    mode: ModeIndex
    coefficients: np.ndarray = field(repr=False)
    norm: float

    def polynomial(self, r):
        return np.polynomial.polynomial.polyval(np.asarray(r, dtype=float), self.coefficients)

    def __call__(self, r):
        vals = eval_basis(self.mode.m, self.mode.n + 1, r)[-1]
        return vals if np.ndim(r) else float(vals[0])


def build_eigenfunction(mode) -> HermiteGaussFn:
    """Closed-form polynomial data for ``e_{m,n}``.

    Coefficients come from the explicit Laguerre sum evaluated with
    log-gamma; evaluation itself goes through :func:`eval_basis`.
    """
    mode = _as_mode(mode)
    alpha, n = abs(mode.m), mode.n
    log_norm = 0.5 * (log(2.0) + lgamma(n + 1) - lgamma(n + alpha + 1))
    coeffs = np.zeros(alpha + 2 * n + 1)
    for k in range(n + 1):
        logc = lgamma(n + alpha + 1) - lgamma(n - k + 1) - lgamma(alpha + k + 1) - lgamma(k + 1)
        coeffs[alpha + 2 * k] = (-1) ** k * np.exp(log_norm + logc)
    return HermiteGaussFn(mode, coeffs, float(np.exp(log_norm)))


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Laguerre rule in ``t = factors * r^2 / 2`` for ``int f(r) r dr``.

    Exact for ``f = t**alpha * P(t) * exp(-t)`` with ``deg P <= 2 n - 1``,
    i.e. for products of ``factors`` oscillator eigenfunctions whose total
    polynomial degree in ``r`` is at most :attr:`max_degree` (and matches the
    parity).
    """

    nodes: np.ndarray
    weights: np.ndarray
    alpha: float = 0.0
    factors: int = 4

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def max_degree(self) -> int:
        return 2 * (2 * self.size - 1) + int(round(2 * self.alpha))

    def covers(self, total_degree: int) -> bool:
        parity_ok = (total_degree % 2) == int(round(2 * self.alpha)) % 2
        return parity_ok and total_degree <= self.max_degree

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


@lru_cache(maxsize=64)
def gauss_laguerre_rule(n_nodes: int, alpha: float = 0.0, factors: int = 4) -> QuadratureRule:
    if n_nodes > MAX_NODES:
        raise ResolutionError(f"{n_nodes} nodes requested, at most {MAX_NODES} supported")
    t, w = roots_genlaguerre(n_nodes, alpha)
    # int f r dr = int f dt / factors ; f = t^alpha P(t) e^-t
    scaled = w * np.exp(t) * t ** (-alpha) / factors
    nodes = np.sqrt(2.0 * t / factors)
    nodes.setflags(write=False)
    scaled.setflags(write=False)
    return QuadratureRule(nodes, scaled, alpha, factors)


def rule_for_degree(total_degree: int, factors: int = 4) -> QuadratureRule:
    """Smallest-safe rule for a product of ``factors`` eigenfunctions of total degree ``total_degree``."""
    alpha = 0.5 if total_degree % 2 else 0.0
    n_nodes = (total_degree + 3) // 4 + 2
    return gauss_laguerre_rule(n_nodes, alpha, factors)


def overlap_closed_form(ms) -> float:
    """``int prod_i e_{m_i,0}(r) r dr`` for radial index zero, via log-gamma."""
    ms = [abs(int(m)) for m in ms]
    k = len(ms)
    S = sum(ms)
    # prod e = 2^{k/2} / sqrt(prod m!) r^S exp(-k r^2 / 2)
    # int r^S exp(-k r^2/2) r dr = Gamma(S/2+1) / 2 * (2/k)^{S/2+1}
    logv = 0.5 * k * log(2.0) - 0.5 * sum(lgamma(m + 1) for m in ms)
    logv += lgamma(S / 2.0 + 1) - log(2.0) + (S / 2.0 + 1) * log(2.0 / k)
    return float(np.exp(logv))


def quartic_overlap(*modes, rule: QuadratureRule | None = None) -> float:
    """``int e_1 e_2 e_3 e_4 r dr`` for four modes, by Gauss-Laguerre quadrature."""
    if len(modes) == 1:
        modes = tuple(modes[0])
    if len(modes) != 4:
        raise ValueError("quartic_overlap takes exactly four modes")
    modes = [_as_mode(md) for md in modes]
    total = sum(md.degree for md in modes)
    if rule is None:
        rule = rule_for_degree(total)
    elif rule.factors != 4 or not rule.covers(total):
        raise ResolutionError(
            f"rule with {rule.size} nodes cannot integrate degree {total} exactly"
        )
    prod = np.ones(rule.size)
    for md in modes:
        prod = prod * eval_basis(md.m, md.n + 1, rule.nodes)[-1]
    return rule.integrate(prod)
