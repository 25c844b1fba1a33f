"""Zeros and charges of vortex fields in the plane.

Zeros are detected as grid cells with nonzero phase winding, separated by
recursive subdivision, polished by a finite-difference Newton step when simple, and given
an integer charge from the winding on a small loop.  The sum of charges is
checked against the winding on a large reference circle.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import lgamma
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .hermite_basis import eval_basis
from .secondary_branch import SecondaryBranchPoint

__all__ = [
    "Zero",
    "VortexConfiguration",
    "TwoModeTruncation",
    "WindingMismatch",
    "synthesize_field",
    "field_function",
    "polygon_radius",
    "polygon_radius_closed_form",
    "winding_number",
    "locate_zeros",
    "polygon_defects",
    "asymmetric_vortex",
    "asymmetric_pair",
]

logger = logging.getLogger(__name__)

R_REF = 3.0
MIN_LOOP_SAMPLES = 64


class WindingMismatch(RuntimeError):
    """Charges of the located zeros do not add up to the reference winding."""


@dataclass(frozen=True)
class Zero:
    x: float
    y: float
    charge: int

    @property
    def rho(self) -> float:
        return float(np.hypot(self.x, self.y))

    @property
    def theta(self) -> float:
        return float(np.arctan2(self.y, self.x) % (2 * np.pi))


@dataclass
class VortexConfiguration:
    zeros: list
    winding: int
    R_ref: float = R_REF
    params: dict = field(default_factory=dict)

    @property
    def total_charge(self) -> int:
        return sum(z.charge for z in self.zeros)

    def by_charge(self, d: int) -> list:
        return [z for z in self.zeros if z.charge == d]

    def central(self, tol: float = 1e-6):
        return [z for z in self.zeros if z.rho < tol]

    def off_center(self, tol: float = 1e-6):
        return [z for z in self.zeros if z.rho >= tol]


@dataclass(frozen=True)
class TwoModeTruncation:
    """``U = [a p_{m0,0} + b p_{|m-2m0|,n} exp(-i (m-m0) theta)] exp(-r^2/2) exp(i m0 theta)``."""

    m0: int
    m: int
    n: int
    a: float
    b: float

    def __call__(self, r, theta):
        r = np.asarray(r, float)
        theta = np.asarray(theta, float)
        d = abs(self.m - 2 * self.m0)
        e0 = eval_basis(self.m0, 1, r.ravel())[0].reshape(r.shape)
        e1 = eval_basis(d, self.n + 1, r.ravel())[-1].reshape(r.shape)
        q = self.m - self.m0
        return (self.a * e0 + self.b * e1 * np.exp(-1j * q * theta)) * np.exp(1j * self.m0 * theta)


def field_function(source) -> Callable:
    """``U(r, theta)`` callable from a branch point, truncation, or callable."""
    if isinstance(source, SecondaryBranchPoint):
        return source.field
    if callable(source):
        return source
    raise TypeError(f"cannot build a field from {type(source).__name__}")


def synthesize_field(source, grid) -> np.ndarray:
    """Complex samples on ``("polar", r, theta)`` or ``("cartesian", x, y)`` 1D axes (meshgrid order ``ij``)."""
    kind, u, v = grid
    f = field_function(source)
    U, V = np.meshgrid(np.asarray(u, float), np.asarray(v, float), indexing="ij")
    if kind == "polar":
        return f(U, V)
    if kind == "cartesian":
        return f(np.hypot(U, V), np.arctan2(V, U))
    raise ValueError(f"unknown grid kind {kind!r}")


def _xy(f):
    return lambda x, y: f(np.hypot(x, y), np.arctan2(y, x))


def polygon_radius_closed_form(m0: int, m: int, ratio: float, n: int = 0) -> float:
    """Polygon radius from ``ratio = b/a``, with ``d = |m - 2 m0| < m0``.

    For ``n = 0`` this is exact for the truncation,
    ``(ratio sqrt(m0!) / sqrt(d!))^{1/(m0-d)}``.  For ``n = 1`` it is the
    leading term ``(ratio (d+1) sqrt(m0!) / sqrt((d+1)!))^{1/(m0-d)}`` as
    ``ratio -> 0``.
    """
    d = abs(m - 2 * m0)
    if d >= m0:
        raise ValueError("a polygon needs |m - 2 m0| < m0")
    if n == 0:
        log_c = 0.5 * (lgamma(m0 + 1) - lgamma(d + 1))
    elif n == 1:
        log_c = 0.5 * (lgamma(m0 + 1) - lgamma(d + 2)) + np.log(d + 1)
    else:
        raise ValueError("closed forms exist for n = 0 and n = 1")
    return float(np.exp((np.log(ratio) + log_c) / (m0 - d)))


def polygon_radius(m0: int, m: int, n: int, a: float, b: float, R_max: float = 6.0) -> float:
    """First positive root of ``a p_{m0,0}(r) - b p_{|m-2m0|,n}(r)``."""
    d = abs(m - 2 * m0)
    if d >= m0:
        raise ValueError("a polygon needs |m - 2 m0| < m0")
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")

    def z(r):
        r = np.atleast_1d(r)
        env = np.exp(r * r / 2)
        return (a * eval_basis(m0, 1, r)[0] - b * eval_basis(d, n + 1, r)[-1]) * env

    r = np.linspace(1e-6, R_max, 20001)
    zr = z(r)
    idx = np.nonzero(np.sign(zr[:-1]) * np.sign(zr[1:]) < 0)[0]
    if idx.size == 0:
        raise ValueError(f"no root of z in (0, {R_max})")
    i = idx[0]
    r0 = brentq(lambda s: z(s)[0], r[i], r[i + 1], xtol=1e-15)
    h = 1e-6 * max(r0, 1e-3)
    slope = (z(r0 + h)[0] - z(r0 - h)[0]) / (2 * h)
    # a simple root has r z'(r) comparable to either term of z at r0
    size = a * eval_basis(m0, 1, np.array([r0]))[0][0] * np.exp(r0 * r0 / 2)
    if abs(slope) * r0 < 1e-6 * max(size, 1e-300):
        raise ValueError(f"root r0={r0} of z is not simple")
    return float(r0)


def winding_number(f_xy, cx: float, cy: float, radius: float, samples: int = 256) -> tuple[int, float]:
    """Winding of ``U`` on a circle, and ``min |U|`` on it."""
    samples = max(samples, MIN_LOOP_SAMPLES)
    t = np.linspace(0, 2 * np.pi, samples, endpoint=False)
    vals = f_xy(cx + radius * np.cos(t), cy + radius * np.sin(t))
    dphi = np.angle(np.roll(vals, -1) / vals)
    return int(round(dphi.sum() / (2 * np.pi))), float(np.abs(vals).min())


def _rect_winding(f_xy, x0, x1, y0, y1, per_edge: int = 16, max_per_edge: int = 8192) -> int:
    """Winding along a rectangle boundary, refined until every phase step is below ``pi/3``."""
    while True:
        t = np.linspace(0.0, 1.0, per_edge, endpoint=False)
        xs = np.concatenate([x0 + (x1 - x0) * t, np.full_like(t, x1), x1 - (x1 - x0) * t, np.full_like(t, x0)])
        ys = np.concatenate([np.full_like(t, y0), y0 + (y1 - y0) * t, np.full_like(t, y1), y1 - (y1 - y0) * t])
        vals = f_xy(xs, ys)
        steps = np.angle(np.roll(vals, -1) / vals)
        if np.abs(steps).max() < np.pi / 3 or per_edge >= max_per_edge:
            return int(round(steps.sum() / (2 * np.pi)))
        per_edge *= 2


def _cell_winding(vals, X=None, Y=None, f_xy=None):
    """Windings of all cells of a 2D sample array (counterclockwise in x-y).

    Cells with a large phase step between corners are ambiguous and are
    recomputed on a finer boundary when ``f_xy`` is given.
    """
    c00, c10, c11, c01 = vals[:-1, :-1], vals[1:, :-1], vals[1:, 1:], vals[:-1, 1:]
    steps = np.stack([np.angle(c10 / c00), np.angle(c11 / c10), np.angle(c01 / c11), np.angle(c00 / c01)])
    W = np.rint(steps.sum(axis=0) / (2 * np.pi)).astype(int)
    if f_xy is not None:
        for i, j in zip(*np.nonzero(np.abs(steps).max(axis=0) > np.pi / 3)):
            W[i, j] = _rect_winding(f_xy, X[i, j], X[i + 1, j], Y[i, j], Y[i, j + 1])
    return W


_SPLITS = (0.4871, 0.5317, 0.4523, 0.5689)


def _choose_split(f_xy, x0, x1, y0, y1):
    """Split fractions whose cut lines stay farthest from zeros of ``U``."""
    t = np.linspace(0.0, 1.0, 33)
    sp = np.array(_SPLITS)
    xc = x0 + sp * (x1 - x0)
    yc = y0 + sp * (y1 - y0)
    # vertical cuts x = xc[k] and horizontal cuts y = yc[k], evaluated in one call
    vx = np.abs(f_xy(np.repeat(xc, t.size), np.tile(y0 + (y1 - y0) * t, sp.size))).reshape(sp.size, -1).min(axis=1)
    vy = np.abs(f_xy(np.tile(x0 + (x1 - x0) * t, sp.size), np.repeat(yc, t.size))).reshape(sp.size, -1).min(axis=1)
    return float(sp[np.argmax(vx)]), float(sp[np.argmax(vy)])


def _subdivide(f_xy, x0, x1, y0, y1, min_size, simple_size, depth=0):
    """Recursively split a cell with nonzero winding; returns ``[(x0,x1,y0,y1,w)]``.

    Cells of winding one stop at ``simple_size`` (a root solve finishes
    them); higher windings are split down to ``min_size``.
    """
    # cut lines passing close to a zero make the sampled windings unreliable
    sx, sy = _choose_split(f_xy, x0, x1, y0, y1)
    xs = np.array([x0, x0 + sx * (x1 - x0), x1])
    ys = np.array([y0, y0 + sy * (y1 - y0), y1])
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    W = _cell_winding(f_xy(X, Y), X, Y, f_xy)
    hits = [(i, j) for i in range(2) for j in range(2) if W[i, j] != 0]
    total = int(W.sum())
    if abs(total) == 1 and x1 - x0 <= simple_size and len(hits) == 1:
        return [(x0, x1, y0, y1, total)]
    if x1 - x0 <= min_size or depth > 40:
        return [(x0, x1, y0, y1, total)] if total else []
    if not hits:
        # zeros of opposite charge cancelled or the zero moved onto an edge
        return [(x0, x1, y0, y1, total)] if total else []
    out = []
    for i, j in hits:
        out += _subdivide(f_xy, xs[i], xs[i + 1], ys[j], ys[j + 1], min_size, simple_size, depth + 1)
    if sum(c[-1] for c in out) != total:
        return [(x0, x1, y0, y1, total)]
    return out


def _polish(f_xy, x, y, size, max_iter: int = 40):
    """Newton on ``(Re U, Im U)`` with a central-difference Jacobian; stays inside ``size`` of the start."""
    p0 = np.array([x, y], float)
    p = p0.copy()
    d = 1e-7 * max(size, 1e-3)
    offs = np.array([[d, 0.0], [-d, 0.0], [0.0, d], [0.0, -d]])
    for _ in range(max_iter):
        pts = np.vstack([p, p + offs])
        u = f_xy(pts[:, 0], pts[:, 1])
        F = np.array([u[0].real, u[0].imag])
        dx = (u[1] - u[2]) / (2 * d)
        dy = (u[3] - u[4]) / (2 * d)
        J = np.array([[dx.real, dy.real], [dx.imag, dy.imag]])
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return p0
        p = p + step
        if np.hypot(*(p - p0)) > 2 * size:
            return p0
        if np.hypot(*step) < 1e-14 * max(1.0, np.hypot(*p)):
            break
    return p


def locate_zeros(
    source,
    R_ref: float = R_REF,
    n_grid: int = 240,
    *,
    min_cell: float = 1e-7,
    params: dict | None = None,
) -> VortexConfiguration:
    """Zeros of ``U`` inside the disk of radius ``R_ref``, with charges."""
    f = field_function(source)
    f_xy = _xy(f)
    if n_grid % 2 == 0:
        n_grid += 1  # an odd cell count keeps the origin at a cell centre
    axis = np.linspace(-R_ref, R_ref, n_grid + 1)
    h = axis[1] - axis[0]
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    vals = f_xy(X, Y)
    scale = float(np.abs(vals).max())
    floor = 1e-14 * scale
    if np.abs(vals).min() < floor:
        # a sample sits on a zero; nudge the grid
        axis = axis + 0.1234567 * h
        X, Y = np.meshgrid(axis, axis, indexing="ij")
        vals = f_xy(X, Y)
    W = _cell_winding(vals, X, Y, f_xy)
    cells = []
    for i, j in zip(*np.nonzero(W)):
        cx, cy = axis[i] + h / 2, axis[j] + h / 2
        if np.hypot(cx, cy) > R_ref - h:
            continue
        cells += _subdivide(f_xy, axis[i], axis[i + 1], axis[j], axis[j + 1], min_cell, h / 8)

    zeros = []
    for x0, x1, y0, y1, w in cells:
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        if abs(w) == 1:
            cx, cy = _polish(f_xy, cx, cy, max(x1 - x0, y1 - y0))
        for z in zeros:
            # one zero reached from two cells
            if np.hypot(cx - z[0], cy - z[1]) < 10 * min_cell:
                z[2] += w
                break
        else:
            zeros.append([cx, cy, w])

    # charges from loops that avoid neighbouring zeros
    out = []
    for k, (cx, cy, w) in enumerate(zeros):
        others = [np.hypot(cx - z[0], cy - z[1]) for i, z in enumerate(zeros) if i != k]
        rad = min([0.3 * h] + [0.3 * d for d in others])
        for _ in range(30):
            d, mn = winding_number(f_xy, cx, cy, rad, 128)
            if mn > 10 * floor:
                break
            rad *= 0.5
        if d != w:
            logger.debug("loop winding %d differs from cell winding %d at (%g, %g)", d, w, cx, cy)
        if d != 0:
            out.append(Zero(float(cx), float(cy), int(d)))

    total, mn = winding_number(f_xy, 0.0, 0.0, R_ref, 2048)
    if mn < 1e-8 * scale:
        logger.warning("field nearly vanishes on the reference circle (min |U| = %.2e)", mn)
    cfg = VortexConfiguration(sorted(out, key=lambda z: (z.rho, z.theta)), total, R_ref, dict(params or {}))
    if cfg.total_charge != total:
        found = [(round(z.x, 6), round(z.y, 6), z.charge) for z in cfg.zeros]
        raise WindingMismatch(
            f"zeros carry total charge {cfg.total_charge}, reference winding is {total}: {found}"
        )
    return cfg


def polygon_defects(cfg: VortexConfiguration, q: int, charge: int = 1) -> dict:
    """Spread of radii and angular offsets of an orbit of ``q`` equal-charge zeros."""
    zs = [z for z in cfg.off_center() if z.charge == charge]
    if len(zs) != q:
        return {"count": len(zs), "radius_spread": np.inf, "angle_defect": np.inf}
    radii = np.array([z.rho for z in zs])
    ang = np.sort([z.theta for z in zs])
    gaps = np.diff(np.append(ang, ang[0] + 2 * np.pi))
    return {
        "count": q,
        "radius": float(radii.mean()),
        "radius_spread": float(radii.max() - radii.min()),
        "angle_defect": float(np.abs(gaps - 2 * np.pi / q).max()),
        "angles": ang.tolist(),
    }


def asymmetric_vortex(point: SecondaryBranchPoint, **kwargs) -> VortexConfiguration:
    """Single displaced charge-one zero on the last curve of ``m0 = 1``."""
    if point.sector.m0 != 1 or point.sector.q != 1:
        raise ValueError("asymmetric_vortex expects a last-curve point with m0 = 1")
    cfg = locate_zeros(point, params={"m0": 1, "m": 2, "a": point.a, "b": point.b}, **kwargs)
    cfg.params["displacement"] = cfg.zeros[0].rho if cfg.zeros else None
    return cfg


def asymmetric_pair(point: SecondaryBranchPoint, **kwargs) -> VortexConfiguration:
    """Pair of charge-one zeros near the origin on the last curve of ``m0 = 2``."""
    if point.sector.m0 != 2 or point.sector.q != 1:
        raise ValueError("asymmetric_pair expects a last-curve point with m0 = 2")
    cfg = locate_zeros(point, params={"m0": 2, "m": 3, "a": point.a, "b": point.b}, **kwargs)
    near = sorted(cfg.by_charge(1), key=lambda z: z.rho)[:2]
    if len(near) == 2:
        cosines = [np.cos(z.theta) for z in near]
        # mirror images across the symmetry axis y = 0 have equal radii
        mirrored = abs(near[0].rho - near[1].rho) <= 1e-6 * near[1].rho and abs(near[0].y + near[1].y) <= 1e-6 * near[1].rho
        if mirrored and abs(near[0].y) > 1e-9:
            layout = "conjugate pair"
        elif np.sign(cosines[0]) == np.sign(cosines[1]) and near[0].rho > 1e-9:
            layout = "same side"
        else:
            layout = "opposite sides"
        cfg.params.update(rho_minus=near[0].rho, rho_plus=near[1].rho, layout=layout)
    return cfg
