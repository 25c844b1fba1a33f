"""Command-line front end.

Every subcommand builds a :class:`RunConfig`, runs the corresponding module
and writes a JSON (or CSV) record carrying the config hash and the toolkit
version.  Outputs are deterministic: keys keep a fixed order and floats are
written with 17 significant digits.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 acceptance-check mismatch in ``reproduce``.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .bifurcation_atlas import (
    AssemblyMismatch,
    build_atlas,
    classify_midrange,
    counts,
    curve_list,
    detect_curves,
    sector_morse_count,
    zero_threshold_slopes,
)
from .hermite_basis import ResolutionError
from .hessian_blocks import (
    CrossingError,
    assemble_H,
    assemble_K,
    last_crossing_shift,
    locate_crossing,
    track_eigenvalues,
)
from .primary_branch import NewtonDivergence, continue_branch, omega_slope, solve_primary
from .radial_spectral import get_discretization
from .secondary_branch import DihedralSector, continue_secondary, last_curve_continue, pitchfork_fit
from .vortex_map import (
    TwoModeTruncation,
    WindingMismatch,
    asymmetric_pair,
    asymmetric_vortex,
    locate_zeros,
    polygon_defects,
    synthesize_field,
)

logger = logging.getLogger("vortexbif")

SCHEMA = 1
THREADS_ENV = "VORTEXBIF_THREADS"

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_MISMATCH = 0, 2, 3, 4

NUMERICAL_ERRORS = (
    NewtonDivergence,
    CrossingError,
    WindingMismatch,
    AssemblyMismatch,
    ResolutionError,
    np.linalg.LinAlgError,
    FloatingPointError,
)


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ config


@dataclass(frozen=True)
class RunConfig:
    command: str
    m0: int | None = None
    m: int | None = None
    n: int = 0
    a_grid: tuple = ()
    Omega_grid: tuple = ()
    b_grid: tuple = ()
    n_radial: int = 48
    K: int = 4
    tol: float = 1e-10
    options: tuple = ()
    out_dir: str | None = field(default=None, compare=False)
    fmt: str = field(default="json", compare=False)

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError("tolerances must be positive")
        for name in ("a_grid", "Omega_grid", "b_grid"):
            g = getattr(self, name)
            if any(not math.isfinite(x) for x in g):
                raise ConfigError(f"{name} has non-finite entries")
            if any(y < x for x, y in zip(g, g[1:])):
                raise ConfigError(f"{name} must be sorted ascending")
        if self.m0 is not None and self.m0 < 1:
            raise ConfigError("m0 must be a positive integer")
        if self.n < 0:
            raise ConfigError("n must be non-negative")
        if self.n_radial < 8 or self.K < 2:
            raise ConfigError("n_radial must be at least 8 and K at least 2")

    def require(self, *names):
        for name in names:
            v = getattr(self, name)
            if v is None or v == ():
                raise ConfigError(f"{self.command} needs --{name.replace('_', '-')}")

    def option(self, key, default=None):
        return dict(self.options).get(key, default)

    def as_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.compare}
        d["options"] = dict(self.options)
        return d

    @property
    def hash(self) -> str:
        return hashlib.sha256(dumps(self.as_dict(), indent=None).encode()).hexdigest()[:16]


# ------------------------------------------------------------ serialization


def _plain(obj):
    """Convert results to JSON-ready builtins with rationals as ``{num, den}``."""
    if isinstance(obj, Fraction):
        return {"num": obj.numerator, "den": obj.denominator}
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.ndarray):
        return [_plain(x) for x in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj) if f.repr}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(x) for x in obj]
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    return s if any(c in s for c in ".en") else s + ".0"


def dumps(obj, indent: int | None = 2) -> str:
    """JSON text with 17-significant-digit floats and insertion key order."""
    obj = _plain(obj)
    nl = "\n" if indent else ""

    def enc(o, level):
        pad = " " * (indent * (level + 1)) if indent else ""
        end = " " * (indent * level) if indent else ""
        sep = "," + nl if indent else ","
        colon = ": " if indent else ":"
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [pad + json.dumps(k) + colon + enc(v, level + 1) for k, v in o.items()]
            return "{" + nl + sep.join(items) + nl + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(x, (dict, list)) for x in o):
                return "[" + ", ".join(enc(x, level + 1) for x in o) + "]"
            return "[" + nl + sep.join(pad + enc(x, level + 1) for x in o) + nl + end + "]"
        if isinstance(o, float):
            return _float(o)
        return json.dumps(o)

    return enc(obj, 0) + ("\n" if indent else "")


def _csv_text(cfg: RunConfig, header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# vortexbif {__version__} schema={SCHEMA} config={cfg.hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_float(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


@dataclass
class Report:
    result: dict
    tables: dict = field(default_factory=dict)  # name -> (header, rows)
    text: str | None = None
    extra_files: dict = field(default_factory=dict)  # name -> text
    status: int = EXIT_OK


def _envelope(cfg: RunConfig, payload: dict) -> dict:
    return {
        "schema": SCHEMA,
        "version": __version__,
        "command": cfg.command,
        "config_hash": cfg.hash,
        "config": cfg.as_dict(),
        **payload,
    }


def emit(cfg: RunConfig, report: Report, stdout=None) -> None:
    stdout = stdout or sys.stdout
    tables = {k: [dict(zip(h, r)) for r in rows] for k, (h, rows) in report.tables.items()}
    json_text = dumps(_envelope(cfg, {"result": report.result, "tables": tables}))
    if cfg.out_dir is None:
        if cfg.fmt == "text" and report.text is not None:
            stdout.write(report.text + "\n")
        elif cfg.fmt == "csv" and report.tables:
            name = next(iter(report.tables))
            stdout.write(_csv_text(cfg, *report.tables[name]))
        else:
            stdout.write(json_text)
        return
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{cfg.command}.json").write_text(json_text)
    if cfg.fmt == "csv":
        for name, (h, rows) in report.tables.items():
            (out / f"{name}.csv").write_text(_csv_text(cfg, h, rows))
    for name, text in report.extra_files.items():
        (out / name).write_text(text)


# ----------------------------------------------------------------- helpers


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer") from None


def _pmap(fn, items):
    items = list(items)
    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        return list(ex.map(fn, items))


def _clean(v: float) -> str:
    v = round(float(v), 10) + 0.0
    return format(v, ".10g")


def _disc(cfg: RunConfig):
    return get_discretization(cfg.n_radial)


def _curve_key(c) -> str:
    return f"{c.m}/{c.n}"


def _curve_record(c) -> dict:
    rec = {"m": c.m, "n": c.n, "q": c.q, "Omega0": c.Omega0, "multiplicity": c.multiplicity, "resonant": c.resonant}
    if c.Omega_star is not None:
        rec.update(Omega_star=c.Omega_star, krein=c.krein)
    if c.parity is not None:
        rec.update(parity=c.parity, morse_before=c.morse_before, morse_after=c.morse_after)
    return rec


def _one(cfg: RunConfig, grid: str):
    g = getattr(cfg, grid)
    if len(g) != 1:
        raise ConfigError(f"{cfg.command} takes a single value for --{grid.split('_')[0]}")
    return g[0]


def _galerkin_point(cfg: RunConfig, m0: int, m: int, n: int, a: float, b: float, steps: int = 4):
    """Converged secondary-branch point reached by continuation to ``b``."""
    grid = np.linspace(b / steps, b, steps)
    if m == m0 + 1 and n == 0:
        return last_curve_continue(m0, a, grid, K=cfg.K, n_radial=cfg.n_radial)[-1]
    branch = solve_primary(m0, a, _disc(cfg))
    crossing = locate_crossing(m, n, branch)
    sector = DihedralSector(m0, m, cfg.K, cfg.n_radial)
    return continue_secondary(sector, branch, crossing, grid)[-1]


def _field_source(cfg: RunConfig):
    a, b = _one(cfg, "a_grid"), _one(cfg, "b_grid")
    if cfg.option("source", "truncation") == "galerkin":
        return _galerkin_point(cfg, cfg.m0, cfg.m, cfg.n, a, b)
    return TwoModeTruncation(cfg.m0, cfg.m, cfg.n, a, b)


def _zeros_record(zcfg) -> dict:
    return {
        "winding": zcfg.winding,
        "R_ref": zcfg.R_ref,
        "total_charge": zcfg.total_charge,
        "charges": {str(d): len(zcfg.by_charge(d)) for d in sorted({z.charge for z in zcfg.zeros})},
        "zeros": [{"x": z.x, "y": z.y, "rho": z.rho, "theta": z.theta, "charge": z.charge} for z in zcfg.zeros],
        "params": zcfg.params,
    }


def _field_table(source, R: float, n: int):
    axis = np.linspace(-R, R, n)
    U = synthesize_field(source, ("cartesian", axis, axis))
    rows = []
    for i, x in enumerate(axis):
        for j, y in enumerate(axis):
            u = U[i, j]
            rows.append((float(x), float(y), float(u.real), float(u.imag), float(abs(u)), float(np.angle(u))))
    return ("x", "y", "re", "im", "abs", "phase"), rows


# ---------------------------------------------------------------- commands


def cmd_atlas(cfg: RunConfig) -> Report:
    cfg.require("m0")
    m0 = cfg.m0
    rep = build_atlas(m0)
    result = {
        "m0": m0,
        "counts": rep["counts"],
        "curves": {_curve_key(c): c.Omega0 for c in rep["curves"]},
        "curve_details": [_curve_record(c) for c in rep["curves"]],
        "omega_slope": rep["omega_slope"],
        "last_curve": {
            "m": m0 + 1,
            "n": 0,
            "coefficient": last_crossing_shift(m0),
            "Omega_tilde": rep["last"]["Omega_tilde"],
            "bifurcating_vector": rep["last"]["bifurcating_vector"],
            "lambda_eigenvalues": rep["last"]["lambda_eigenvalues"],
        },
        "mu_tilde": rep["mu_tilde"],
    }
    if "midrange" in rep:
        mid = rep["midrange"]
        result["midrange"] = {
            "signatures": {str(m): "".join("+" if s > 0 else "-" for s in sig) for m, sig in mid["signatures"].items()},
            "R": mid["R"],
            "m": mid["real_m"],
        }
    result["D_slopes"] = zero_threshold_slopes(m0, disc=_disc(cfg))
    if cfg.a_grid:
        a = _one(cfg, "a_grid")
        result["detected"] = [_curve_record(c) for c in detect_curves(m0, a, _disc(cfg))]
    header = ("m", "n", "Omega0_num", "Omega0_den", "multiplicity", "resonant")
    rows = [(c.m, c.n, c.Omega0.numerator, c.Omega0.denominator, c.multiplicity, int(c.resonant)) for c in rep["curves"]]
    return Report(result, {"curves": (header, rows)})


def cmd_branch(cfg: RunConfig) -> Report:
    cfg.require("m0", "a_grid")
    pts = continue_branch(cfg.m0, cfg.a_grid, _disc(cfg), tol=cfg.tol)
    rows = [(p.a, p.omega, p.residual, p.iterations, int(p.positive)) for p in pts]
    result = {"m0": cfg.m0, "omega_slope_exact": omega_slope(cfg.m0)}
    nz = [p for p in pts if p.a > 0]
    if len(nz) >= 2:
        a = np.array([p.a for p in nz])
        lam0 = 2.0 * (cfg.m0 + 1)
        w = np.array([p.omega for p in nz]) - lam0
        # omega = lambda + c2 a^2 + c4 a^4
        A = np.column_stack([a**2, a**4]) if len(nz) >= 3 else a[:, None] ** 2
        result["omega_slope_fit"] = float(np.linalg.lstsq(A, w, rcond=None)[0][0])
    return Report(result, {"branch": (("a", "omega", "residual", "iterations", "positive"), rows)})


def cmd_spectrum(cfg: RunConfig) -> Report:
    cfg.require("m0", "m")
    a = _one(cfg, "a_grid")
    Omega = cfg.Omega_grid[0] if cfg.Omega_grid else 0.0
    count = int(cfg.option("count", 6))
    branch = solve_primary(cfg.m0, a, _disc(cfg), tol=cfg.tol)
    block = assemble_K(cfg.m, branch) if Omega == 0.0 else assemble_H(cfg.m, branch, Omega)
    vals = block.eigenvalues[:count]
    result = {"m0": cfg.m0, "m": cfg.m, "a": a, "Omega": Omega, "eigenvalues": vals}
    rows = [(i, float(v)) for i, v in enumerate(vals)]
    return Report(result, {"spectrum": (("index", "eigenvalue"), rows)}, text=",".join(_clean(v) for v in vals))


def cmd_crossings(cfg: RunConfig) -> Report:
    cfg.require("m0")
    a = _one(cfg, "a_grid")
    grid = cfg.Omega_grid or tuple(np.linspace(0.01, 1.99, 199))
    n_tracks = int(cfg.option("tracks", 4))
    disc = _disc(cfg)
    branch = solve_primary(cfg.m0, a, disc, tol=cfg.tol)
    curves = detect_curves(cfg.m0, a, disc)
    blocks = sorted({c.m for c in curves})

    def tracks(m):
        return m, track_eigenvalues(m, branch, grid, n_tracks, disc, return_krein=True)

    rows = []
    for m, (vals, signs) in _pmap(tracks, blocks):
        for j in range(n_tracks):
            for i, Om in enumerate(grid):
                rows.append((m, j, float(Om), float(vals[i, j]), int(signs[i, j])))
    result = {"m0": cfg.m0, "a": a, "blocks": blocks, "crossings": [_curve_record(c) for c in curves]}
    return Report(result, {"tracks": (("m", "n_track", "Omega", "eigenvalue", "krein_sign"), rows)})


def cmd_secondary(cfg: RunConfig) -> Report:
    cfg.require("m0", "m", "a_grid", "b_grid")
    a = _one(cfg, "a_grid")
    m0, m, n = cfg.m0, cfg.m, cfg.n
    disc = _disc(cfg)
    branch = solve_primary(m0, a, disc, tol=cfg.tol)
    crossing = locate_crossing(m, n, branch)
    if m == m0 + 1 and n == 0:
        pts = last_curve_continue(m0, a, cfg.b_grid, K=cfg.K, n_radial=cfg.n_radial)
    else:
        sector = DihedralSector(m0, m, cfg.K, cfg.n_radial)
        pts = continue_secondary(sector, branch, crossing, cfg.b_grid)
    q = m - m0
    rows = []
    for p in pts:
        primary = sector_morse_count(branch, p.Omega, q, disc)
        rows.append((p.b, p.Omega, p.Omega - crossing.Omega, p.residual, p.morse, primary, p.iterations))
    result = {"m0": m0, "m": m, "n": n, "a": a, "K": cfg.K, "Omega_star": crossing.Omega, "krein": crossing.krein.S}
    if sum(1 for p in pts if p.b != 0.0) >= 2:
        exponent, c = pitchfork_fit(pts, crossing.Omega)
        result["pitchfork"] = {"exponent": exponent, "c": c}
    header = ("b", "Omega", "dOmega", "residual", "morse", "primary_morse", "iterations")
    return Report(result, {"secondary": (header, rows)})


def cmd_field(cfg: RunConfig) -> Report:
    cfg.require("m0", "m", "a_grid", "b_grid")
    R = float(cfg.option("R", 3.0))
    n = int(cfg.option("grid", 61))
    header, rows = _field_table(_field_source(cfg), R, n)
    result = {"m0": cfg.m0, "m": cfg.m, "n": cfg.n, "source": cfg.option("source", "truncation"), "R": R, "grid": n}
    return Report(result, {"field": (header, rows)})


def cmd_zeros(cfg: RunConfig) -> Report:
    cfg.require("m0", "m", "a_grid", "b_grid")
    src = _field_source(cfg)
    zc = locate_zeros(src, float(cfg.option("R_ref", 3.0)), int(cfg.option("n_grid", 240)))
    result = _zeros_record(zc)
    q = cfg.m - cfg.m0
    if q >= 2 and zc.by_charge(1):
        result["polygon"] = polygon_defects(zc, q)
    rows = [(z.x, z.y, z.rho, z.theta, z.charge) for z in zc.zeros]
    return Report(result, {"zeros": (("x", "y", "rho", "theta", "charge"), rows)})


# the lists of bifurcation curves at a = 0 for m0 = 1..4
_REFERENCE_LISTS = {
    1: {},
    2: {(5, 0): Fraction(2, 3)},
    3: {(7, 0): Fraction(1), (8, 0): Fraction(2, 5), (6, 1): Fraction(2, 3)},
    4: {
        (9, 0): Fraction(6, 5),
        (10, 0): Fraction(2, 3),
        (11, 0): Fraction(2, 7),
        (7, 1): Fraction(2, 3),
        (8, 1): Fraction(1),
        (9, 1): Fraction(2, 5),
    },
}
_REFERENCE_COUNTS = {1: (1, 1, 0), 2: (3, 2, 1), 3: (6, 3, 3)}
_REFERENCE_R = {4: [8], 5: [10], 6: [11, 12], 7: [12, 13, 14], 8: [14, 15, 16]}


def cmd_reproduce(cfg: RunConfig) -> Report:
    """Data behind the curve schematic, the polygon and asymmetric-vortex panels, and the curve lists."""
    if cfg.out_dir is None:
        raise ConfigError("reproduce needs --out-dir")
    quick = bool(cfg.option("quick", False))
    checks: dict[str, bool] = {}
    files: dict[str, str] = {}
    notes: dict[str, str] = {}

    lists = {}
    for m0, expected in _REFERENCE_LISTS.items():
        got = {(c.m, c.n): c.Omega0 for c in curve_list(m0)}
        lists[str(m0)] = {"counts": counts(m0), "curves": {f"{m}/{n}": v for (m, n), v in sorted(got.items())}}
        checks[f"curve_list_m0={m0}"] = got == expected
    for m0, expected in _REFERENCE_COUNTS.items():
        checks[f"counts_m0={m0}"] = counts(m0) == expected
    rtab = {}
    for m0, expected in _REFERENCE_R.items():
        _, R, ms = classify_midrange(m0)
        rtab[str(m0)] = {"R": R, "m": ms}
        checks[f"R_m0={m0}"] = ms == expected
    files["lists.json"] = dumps(_envelope(cfg, {"curve_lists": lists, "R_table": rtab}))

    # curve positions over amplitude
    a_values = cfg.a_grid or ((0.02, 0.05) if quick else (0.02, 0.04, 0.06, 0.08, 0.1))
    rows = []
    for m0 in (2, 3):
        for a in a_values:
            for c in detect_curves(m0, a, _disc(cfg), with_parity=False):
                if c.Omega_star is not None:
                    rows.append((m0, c.m, c.n, a, c.Omega_star, float(c.Omega0)))
    files["curves.csv"] = _csv_text(cfg, ("m0", "m", "n", "a", "Omega_star", "Omega0"), rows)

    # polygon panels from the two-mode truncation, a = 0.1 and b = 0.01
    grid_n = 31 if quick else 81
    panels = {
        "polygon_m0=2_m=5": ((2, 5, 0), 3, -1),
        "polygon_m0=3_m=7": ((3, 7, 0), 4, -1),
        "polygon_m0=3_m=8": ((3, 8, 0), 5, -2),
        "polygon_m0=6_m=12_n=1": ((6, 12, 1), 6, None),
    }
    for name, ((m0, m, n), k, centre) in panels.items():
        src = TwoModeTruncation(m0, m, n, 0.1, 0.01)
        zc = locate_zeros(src)
        ring = [z for z in zc.by_charge(1) if z.rho > 1e-6]
        ok = zc.total_charge == zc.winding == m0 and len(ring) >= k
        if centre is not None:
            ctr = zc.central()
            ok = ok and len(ctr) == 1 and ctr[0].charge == centre
        else:
            ok = ok and not zc.central()
        checks[name] = bool(ok)
        files[f"{name}.json"] = dumps(_envelope(cfg, _zeros_record(zc)))
        files[f"{name}_field.csv"] = _csv_text(cfg, *_field_table(src, 3.0, grid_n))

    # asymmetric vortex and pair from the converged last-curve branch
    b = 0.1
    for m0 in (1, 2):
        pt = _galerkin_point(cfg, m0, m0 + 1, 0, 0.05, b)
        zc = asymmetric_vortex(pt) if m0 == 1 else asymmetric_pair(pt)
        near = [z for z in zc.by_charge(1) if z.rho < 0.5]
        checks[f"asymmetric_m0={m0}"] = zc.total_charge == m0 and len(near) == m0
        if m0 == 2 and "layout" in zc.params:
            notes["asymmetric_m0=2"] = (
                f"layout {zc.params['layout']}, radii {zc.params['rho_minus']:.6g} and {zc.params['rho_plus']:.6g}"
            )
        files[f"asymmetric_m0={m0}.json"] = dumps(_envelope(cfg, _zeros_record(zc)))
        files[f"asymmetric_m0={m0}_field.csv"] = _csv_text(cfg, *_field_table(pt, 3.0, grid_n))

    manifest = {
        "files": {k: hashlib.sha256(v.encode()).hexdigest() for k, v in sorted(files.items())},
        "checks": checks,
        "notes": notes,
    }
    files["manifest.json"] = dumps(_envelope(cfg, manifest))
    status = EXIT_OK if all(checks.values()) else EXIT_MISMATCH
    return Report({"checks": checks, "notes": notes, "files": sorted(files)}, extra_files=files, status=status)


COMMANDS = {
    "atlas": cmd_atlas,
    "branch": cmd_branch,
    "spectrum": cmd_spectrum,
    "crossings": cmd_crossings,
    "secondary": cmd_secondary,
    "field": cmd_field,
    "zeros": cmd_zeros,
    "reproduce": cmd_reproduce,
}


# ------------------------------------------------------------------ parser


def _grid(text: str) -> tuple:
    """``"0.1"``, ``"0.1,0.2"`` or ``"start:stop:num"`` (inclusive linspace)."""
    try:
        if ":" in text:
            lo, hi, num = text.split(":")
            num = int(num)
            if num < 1:
                raise ValueError
            return tuple(float(x) for x in np.linspace(float(lo), float(hi), num))
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vortexbif", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", help="write files here instead of printing")
    common.add_argument("--format", dest="fmt", choices=("json", "csv", "text"), default=None)
    common.add_argument("--n-radial", type=int, default=48)
    common.add_argument("--K", type=int, default=4, help="harmonics kept on each side in the dihedral sector")
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    s = add("atlas", "counts, curve list and reduced matrices for one m0")
    s.add_argument("--m0", type=int, required=True)
    s.add_argument("--a", dest="a_grid", type=_grid, default=(), help="also locate the curves at this amplitude")

    s = add("branch", "primary branch omega(a)")
    s.add_argument("--m0", type=int, required=True)
    s.add_argument("--a", dest="a_grid", type=_grid, required=True, help="amplitudes, list or start:stop:num")

    s = add("spectrum", "lowest eigenvalues of one Hessian block")
    s.add_argument("--m0", type=int, required=True)
    s.add_argument("--a", dest="a_grid", type=_grid, required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--Omega", dest="Omega_grid", type=_grid, default=())
    s.add_argument("--count", type=int, default=6)

    s = add("crossings", "eigenvalue tracks over Omega and detected bifurcations")
    s.add_argument("--m0", type=int, required=True)
    s.add_argument("--a", dest="a_grid", type=_grid, required=True)
    s.add_argument("--Omega", dest="Omega_grid", type=_grid, default=())
    s.add_argument("--tracks", type=int, default=4)

    for name, help_ in (
        ("secondary", "continue a secondary branch in b"),
        ("field", "sample U on a Cartesian grid"),
        ("zeros", "locate the vortices of U"),
    ):
        s = add(name, help_)
        s.add_argument("--m0", type=int, required=True)
        s.add_argument("--m", type=int, required=True)
        s.add_argument("--n", type=int, default=0)
        s.add_argument("--a", dest="a_grid", type=_grid, required=True)
        s.add_argument("--b", dest="b_grid", type=_grid, required=True)
        if name != "secondary":
            s.add_argument("--source", choices=("truncation", "galerkin"), default="truncation")
        if name == "field":
            s.add_argument("--R", type=float, default=3.0)
            s.add_argument("--grid", type=int, default=61)
        if name == "zeros":
            s.add_argument("--R-ref", dest="R_ref", type=float, default=3.0)
            s.add_argument("--n-grid", type=int, default=240)

    s = add("reproduce", "regenerate figure data and curve lists with a checked manifest")
    s.add_argument("--quick", action="store_true", help="coarser grids")
    s.add_argument("--a", dest="a_grid", type=_grid, default=())
    return p


_OPTION_KEYS = ("count", "tracks", "source", "R", "grid", "R_ref", "n_grid", "quick")


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    default_fmt = "text" if ns.command == "spectrum" else "json"
    options = tuple((k, getattr(ns, k)) for k in _OPTION_KEYS if hasattr(ns, k))
    return RunConfig(
        command=ns.command,
        m0=getattr(ns, "m0", None),
        m=getattr(ns, "m", None),
        n=getattr(ns, "n", 0),
        a_grid=tuple(getattr(ns, "a_grid", ()) or ()),
        Omega_grid=tuple(getattr(ns, "Omega_grid", ()) or ()),
        b_grid=tuple(getattr(ns, "b_grid", ()) or ()),
        n_radial=ns.n_radial,
        K=ns.K,
        tol=ns.tol,
        options=options,
        out_dir=ns.out_dir,
        fmt=ns.fmt or default_fmt,
    )


def _error(kind: str, exc: Exception, cfg: RunConfig | None, code: int) -> int:
    record = {"schema": SCHEMA, "version": __version__, "error": kind, "type": type(exc).__name__, "message": str(exc)}
    if cfg is not None:
        record["command"] = cfg.command
        record["config_hash"] = cfg.hash
        if cfg.out_dir:
            out = Path(cfg.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(dumps(record))
    sys.stderr.write(dumps(record))
    return code


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)  # usage errors exit with status 2
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING, format="%(name)s: %(message)s")
    cfg = None
    try:
        cfg = config_from_args(ns)
        report = COMMANDS[cfg.command](cfg)
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, NUMERICAL_ERRORS):
            return _error("numerical", exc, cfg, EXIT_NUMERICAL)
        return _error("config", exc, cfg, EXIT_CONFIG)
    except NUMERICAL_ERRORS as exc:
        return _error("numerical", exc, cfg, EXIT_NUMERICAL)
    emit(cfg, report)
    return report.status


if __name__ == "__main__":
    sys.exit(main())
