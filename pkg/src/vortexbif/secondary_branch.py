"""Symmetry-broken branches bifurcating from a primary vortex.

A solution is written ``U = exp(i m0 theta) W`` with

    W(r, theta) = sum_{|kappa| <= K} W_kappa(r) exp(i q kappa theta),

where ``q = m - m0`` and every ``W_kappa`` is real; this is the fixed-point
space of the dihedral group ``D_q``.  ``W_kappa`` is expanded in
``e_{|m0 + q kappa|, n}`` and the stationary equation for harmonic
``j = m0 + q kappa`` reads

    (lambda_{j,n} - omega - Omega q kappa) c_{kappa,n} + <[|W|^2 W]_kappa, e_{j,n}> = 0,

with ``omega = omega(a)`` frozen at the primary branch value.  The cubic
term is evaluated on the radial nodes times a uniform angular grid fine
enough for the projection to be exact.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .hessian_blocks import Crossing, assemble_H, last_crossing_shift, locate_crossing
from .primary_branch import NewtonDivergence, PrimaryBranchPoint, solve_primary
from .radial_spectral import RadialDiscretization, get_discretization

__all__ = [
    "DihedralSector",
    "SecondaryBranchPoint",
    "assemble_g",
    "sector_jacobian",
    "kernel_mode",
    "predictor",
    "solve_secondary",
    "continue_secondary",
    "last_curve_continue",
    "pitchfork_fit",
    "stationary_residual",
    "symmetry_defect",
    "rotate",
    "full_residual",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DihedralSector:
    m0: int
    m: int
    K: int = 4
    n_radial: int = 48

    def __post_init__(self):
        if self.m <= self.m0:
            raise ValueError("bifurcation block must satisfy m > m0")
        if self.K < 2:
            raise ValueError("angular truncation K must be at least 2")

    @property
    def q(self) -> int:
        return self.m - self.m0

    @property
    def kappas(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    @property
    def harmonics(self) -> np.ndarray:
        """Angular indices ``j = m0 + q kappa`` of ``U``."""
        return self.m0 + self.q * self.kappas

    @property
    def n_theta(self) -> int:
        # projecting a degree-3K product onto degree K needs more than 4K points
        return 4 * self.K + 2

    @cached_property
    def disc(self) -> RadialDiscretization:
        support = max(40, int(np.abs(self.harmonics).max()))
        return get_discretization(self.n_radial, support)

    @cached_property
    def _bases(self) -> np.ndarray:
        return np.stack([self.disc.basis(j) for j in self.harmonics])

    @cached_property
    def _lams(self) -> np.ndarray:
        return np.stack([self.disc.eigenvalues(j) for j in self.harmonics])

    @cached_property
    def _phase(self) -> np.ndarray:
        """``exp(i kappa s)`` on ``s_l = 2 pi l / n_theta``; shape ``(n_theta, 2K+1)``."""
        s = 2 * np.pi * np.arange(self.n_theta) / self.n_theta
        return np.exp(1j * np.outer(s, self.kappas))

    @property
    def index0(self) -> int:
        return self.K

    def zeros(self) -> np.ndarray:
        return np.zeros((2 * self.K + 1, self.n_radial))

    def embed_primary(self, branch: PrimaryBranchPoint) -> np.ndarray:
        c = self.zeros()
        c[self.index0] = branch.coeffs[: self.n_radial]
        return c

    def radial_values(self, coeffs) -> np.ndarray:
        """``W_kappa`` at the radial nodes; shape ``(2K+1, n_nodes)``."""
        return np.einsum("kn,kni->ki", coeffs, self._bases)

    def field_on_grid(self, coeffs) -> np.ndarray:
        """``W`` at (radial node, angular node); shape ``(n_nodes, n_theta)``."""
        return self.radial_values(coeffs).T @ self._phase.T

    def fourier(self, values, p) -> np.ndarray:
        """Fourier coefficients of order ``p`` (in ``s = q theta``) of grid values."""
        s = 2 * np.pi * np.arange(self.n_theta) / self.n_theta
        return values @ np.exp(-1j * np.outer(s, np.atleast_1d(p))) / self.n_theta


@dataclass
class SecondaryBranchPoint:
    a: float
    b: float
    Omega: float
    coeffs: np.ndarray = field(repr=False)
    residual: float
    morse: int
    sector: DihedralSector = field(repr=False)
    omega: float = 0.0
    iterations: int = 0
    min_abs_eigenvalue: float = np.nan

    @property
    def harmonics(self) -> dict:
        return {int(j): self.coeffs[i] for i, j in enumerate(self.sector.harmonics)}

    def field(self, r, theta) -> np.ndarray:
        """``U(r, theta)`` for broadcastable arrays."""
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        out = np.zeros(r.shape, complex)
        flat_r = r.ravel()
        for i, j in enumerate(self.sector.harmonics):
            radial = self.sector.disc.evaluate(self.coeffs[i], j, flat_r).reshape(r.shape)
            out += radial * np.exp(1j * j * theta)
        return out


def _cubic_projection(sector: DihedralSector, coeffs) -> tuple[np.ndarray, float]:
    Wg = sector.field_on_grid(coeffs)
    N = np.abs(Wg) ** 2 * Wg
    Nk = sector.fourier(N, sector.kappas)  # (n_nodes, 2K+1)
    proj = np.einsum("kni,i,ik->kn", sector._bases, sector.disc.weights, Nk)
    return proj.real, float(np.abs(proj.imag).max())


def assemble_g(sector: DihedralSector, branch: PrimaryBranchPoint, Omega: float, coeffs) -> np.ndarray:
    """Galerkin residual for ``U = exp(i m0 theta)(psi + v)``; ``coeffs`` holds ``psi + v``."""
    coeffs = np.asarray(coeffs, float)
    if coeffs.shape != (2 * sector.K + 1, sector.n_radial):
        raise ValueError(f"coefficients must have shape {(2 * sector.K + 1, sector.n_radial)}")
    cubic, imag = _cubic_projection(sector, coeffs)
    if imag > 1e-10 * max(1.0, np.abs(cubic).max()):
        warnings.warn(f"cubic projection left an imaginary part {imag:.2e}; symmetry broken")
    diag = sector._lams - branch.omega - Omega * sector.q * sector.kappas[:, None]
    return diag * coeffs + cubic


def sector_jacobian(sector: DihedralSector, branch: PrimaryBranchPoint, Omega: float, coeffs) -> np.ndarray:
    """Symmetric Jacobian of :func:`assemble_g` in the coefficients."""
    K, N = sector.K, sector.n_radial
    Wg = sector.field_on_grid(coeffs)
    orders = np.arange(-2 * K, 2 * K + 1)
    A2 = sector.fourier(2 * np.abs(Wg) ** 2, orders).real  # (nodes, 4K+1)
    W2 = sector.fourier(Wg**2, orders).real
    B, w = sector._bases, sector.disc.weights
    J = np.zeros(((2 * K + 1) * N, (2 * K + 1) * N))
    for i, ki in enumerate(sector.kappas):
        for j, kj in enumerate(sector.kappas):
            pot = A2[:, ki - kj + 2 * K] + W2[:, ki + kj + 2 * K]
            J[i * N : (i + 1) * N, j * N : (j + 1) * N] = (B[i] * (w * pot)) @ B[j].T
    J[np.diag_indices_from(J)] += (sector._lams - branch.omega - Omega * sector.q * sector.kappas[:, None]).ravel()
    return 0.5 * (J + J.T)


def kernel_mode(sector: DihedralSector, branch: PrimaryBranchPoint, Omega_star: float) -> np.ndarray:
    """Unit kernel vector of ``H_m`` at the crossing, laid out as sector coefficients."""
    H = assemble_H(sector.m, branch, Omega_star, branch.disc)
    j = int(np.argmin(np.abs(H.eigenvalues)))
    V, W = H.split(H.eigenvectors[:, j])
    if np.abs(W).max() >= np.abs(V).max():
        sgn = np.sign(W[np.argmax(np.abs(W))])
    else:
        sgn = np.sign(V[np.argmax(np.abs(V))])
    f = sector.zeros()
    f[sector.index0 + 1] = sgn * V[: sector.n_radial]
    f[sector.index0 - 1] = sgn * W[: sector.n_radial]
    return f


def predictor(sector: DihedralSector, branch: PrimaryBranchPoint, crossing: Crossing, b: float):
    """``(coeffs, Omega)`` initial guess ``psi + b f`` at ``Omega_star``."""
    if crossing.resonant:
        raise ValueError("resonant crossing: the kernel in the sector is not simple")
    f = kernel_mode(sector, branch, crossing.Omega)
    return sector.embed_primary(branch) + b * f, float(crossing.Omega), f


def solve_secondary(
    sector: DihedralSector,
    branch: PrimaryBranchPoint,
    f: np.ndarray,
    target: float,
    guess,
    *,
    tol: float = 1e-11,
    max_iter: int = 30,
):
    """Newton on ``(coeffs, Omega)`` with ``<v, f> = target``."""
    coeffs, Omega = np.array(guess[0], float), float(guess[1])
    psi = sector.embed_primary(branch)
    N = coeffs.size
    fv = f.ravel()
    for it in range(max_iter + 1):
        F = assemble_g(sector, branch, Omega, coeffs).ravel()
        G = np.append(F, fv @ (coeffs - psi).ravel() - target)
        res = float(np.linalg.norm(G))
        if res <= tol:
            return coeffs, Omega, res, it
        if it == max_iter or not np.isfinite(res):
            break
        J = sector_jacobian(sector, branch, Omega, coeffs)
        dF_dOm = (-sector.q * sector.kappas[:, None] * coeffs).ravel()
        A = np.zeros((N + 1, N + 1))
        A[:N, :N] = J
        A[:N, N] = dF_dOm
        A[N, :N] = fv
        step = np.linalg.solve(A, -G)
        coeffs = coeffs + step[:N].reshape(coeffs.shape)
        Omega += step[N]
    raise NewtonDivergence(f"secondary Newton failed (residual {res:.3e})", res, target)


def _make_point(sector, branch, b, coeffs, Omega, res, it):
    J = sector_jacobian(sector, branch, Omega, coeffs)
    ev = np.linalg.eigvalsh(J)
    return SecondaryBranchPoint(
        branch.a, b, Omega, coeffs, res, int(np.sum(ev < 0)), sector, branch.omega, it, float(np.abs(ev).min())
    )


def continue_secondary(
    sector: DihedralSector,
    branch: PrimaryBranchPoint,
    crossing: Crossing,
    b_grid,
    *,
    scale: float = 1.0,
    tol: float = 1e-11,
    min_step: float = 1e-6,
) -> list[SecondaryBranchPoint]:
    """Natural-parameter continuation in ``b`` from the crossing.

    The constraint is ``<v, f> = scale * b``.  A point is accepted when
    Newton converges and the sector Morse count does not jump relative to
    the previous point; otherwise the step is halved.
    """
    b_grid = [float(b) for b in b_grid]
    psi0, Om0, f = predictor(sector, branch, crossing, 0.0)
    points: list[SecondaryBranchPoint] = []
    hist = [(0.0, psi0, Om0)]
    last_morse = None
    for b in b_grid:
        if b == 0.0:
            points.append(_make_point(sector, branch, 0.0, psi0, Om0, 0.0, 0))
            continue
        b_done = hist[-1][0]
        while b_done != b:
            trial = b
            while True:
                if len(hist) >= 2 and hist[-1][0] != 0.0:
                    (b1, c1, O1), (b2, c2, O2) = hist[-2], hist[-1]
                    t = (trial - b2) / (b2 - b1)
                    guess = (c2 + t * (c2 - c1), O2 + t * (O2 - O1))
                else:
                    guess = (psi0 + scale * trial * f, Om0)
                try:
                    c, Om, res, it = solve_secondary(sector, branch, f, scale * trial, guess, tol=tol)
                    pt = _make_point(sector, branch, trial, c, Om, res, it)
                    jump = last_morse is not None and pt.morse != last_morse
                    if not jump or abs(trial - b_done) <= min_step:
                        if jump:
                            warnings.warn(f"sector Morse count changed near b={trial}")
                        break
                except NewtonDivergence:
                    if abs(trial - b_done) <= min_step:
                        raise
                trial = b_done + 0.5 * (trial - b_done)
            hist.append((trial, c, Om))
            last_morse = pt.morse
            b_done = trial
            if trial == b:
                points.append(pt)
            logger.debug("secondary b=%g Omega=%.15g res=%.2e", trial, Om, res)
    return points


def last_curve_continue(m0: int, a: float, b_grid, *, K: int = 4, n_radial: int = 48, **kwargs):
    """Branch from ``Omega_{m0+1,0}(a)``; the constraint is ``<v, f> = a b``."""
    disc = get_discretization(n_radial)
    branch = solve_primary(m0, a, disc)
    crossing = locate_crossing(m0 + 1, 0, branch)
    sector = DihedralSector(m0, m0 + 1, K, n_radial)
    cond = 1.0 / (last_crossing_shift(m0) * a * a)
    if cond > 1e6:
        warnings.warn(f"last-curve problem is ill-conditioned (inverse bound ~ {cond:.1e})")
    return continue_secondary(sector, branch, crossing, b_grid, scale=a, **kwargs)


def pitchfork_fit(points, Omega_star: float):
    """Fit ``|Omega - Omega_star| = C |b|^p``; returns ``(p, c)`` with ``c`` the signed ``b^2`` coefficient."""
    pts = [p for p in points if p.b != 0.0]
    b = np.array([abs(p.b) for p in pts])
    d = np.array([p.Omega - Omega_star for p in pts])
    p_exp = np.polyfit(np.log(b), np.log(np.abs(d)), 1)[0]
    c = float(np.sum(d * b**2) / np.sum(b**4))
    return float(p_exp), c


def stationary_residual(point: SecondaryBranchPoint, r, theta) -> float:
    """Pointwise residual of the stationary equation, relative to ``max |U|^3``.

    ``-Delta + r^2`` is applied exactly through the eigen-expansion.
    """
    sector = point.sector
    r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
    lin = np.zeros(r.shape, complex)
    U = point.field(r, theta)
    mu = point.omega - sector.m0 * point.Omega
    for i, j in enumerate(sector.harmonics):
        e = sector.disc.evaluate(point.coeffs[i] * (sector._lams[i] - point.Omega * j - mu), j, r.ravel())
        lin += e.reshape(r.shape) * np.exp(1j * j * theta)
    resid = lin + np.abs(U) ** 2 * U
    return float(np.abs(resid).max() / max(np.abs(U).max() ** 3, 1e-300))


def symmetry_defect(point: SecondaryBranchPoint, r, theta) -> float:
    """Max violation of ``phi(-theta) = conj phi(theta) = phi(theta + 2 pi / q)`` for ``phi = U exp(-i m0 theta)``."""
    m0, q = point.sector.m0, point.sector.q

    def phi(t):
        return point.field(r, t) * np.exp(-1j * m0 * t)

    base = phi(theta)
    d1 = np.abs(phi(-theta) - np.conj(base)).max()
    d2 = np.abs(phi(theta + 2 * np.pi / q) - base).max()
    return float(max(d1, d2))


def rotate(point: SecondaryBranchPoint, alpha: float) -> dict:
    """Complex harmonic coefficients of ``U(r, theta - alpha)``."""
    return {j: c * np.exp(-1j * j * alpha) for j, c in point.harmonics.items()}


def full_residual(sector: DihedralSector, omega: float, Omega: float, harmonics: dict, n_theta: int | None = None) -> float:
    """Galerkin residual of the unrestricted equation for complex coefficients on the harmonics in ``harmonics``."""
    js = np.array(sorted(harmonics))
    disc = sector.disc
    n_theta = n_theta or 4 * (js.max() - js.min()) + 2
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    U = sum(disc.synthesize(harmonics[j], j)[:, None] * np.exp(1j * j * th)[None, :] for j in js)
    N = np.abs(U) ** 2 * U
    mu = omega - sector.m0 * Omega
    worst = 0.0
    for j in js:
        Nj = N @ np.exp(-1j * j * th) / n_theta
        proj = disc.basis(j) @ (disc.weights * Nj)
        F = (disc.eigenvalues(j) - Omega * j - mu) * harmonics[j] + proj
        worst = max(worst, float(np.abs(F).max()))
    return worst
