"""Bifurcations of rotating vortices in the two-dimensional Gross-Pitaevskii equation.

The modules build on one another: a Laguerre-Gauss radial basis, the radially
symmetric charge-``m0`` branch, the angular blocks of its Hessian, exact
small-amplitude predictions, the symmetry-broken secondary branches and the
vortex configurations they carry.
"""
from importlib.metadata import PackageNotFoundError, version as _version

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .bifurcation_atlas import BifurcationPoint, build_atlas, classify_midrange, counts, curve_list
from .hermite_basis import ModeIndex, build_eigenfunction, gauss_laguerre_rule, overlap_closed_form
from .hessian_blocks import assemble_H, assemble_K, full_morse_count, locate_crossing
from .primary_branch import PrimaryBranchPoint, continue_branch, solve_primary
from .radial_spectral import RadialDiscretization, assemble_schrodinger, get_discretization
from .secondary_branch import DihedralSector, SecondaryBranchPoint, continue_secondary, last_curve_continue
from .vortex_map import TwoModeTruncation, VortexConfiguration, locate_zeros

__all__ = [
    "__version__",
    "BifurcationPoint",
    "DihedralSector",
    "ModeIndex",
    "PrimaryBranchPoint",
    "RadialDiscretization",
    "SecondaryBranchPoint",
    "TwoModeTruncation",
    "VortexConfiguration",
    "assemble_H",
    "assemble_K",
    "assemble_schrodinger",
    "build_atlas",
    "build_eigenfunction",
    "classify_midrange",
    "continue_branch",
    "continue_secondary",
    "counts",
    "curve_list",
    "full_morse_count",
    "gauss_laguerre_rule",
    "get_discretization",
    "last_curve_continue",
    "locate_crossing",
    "locate_zeros",
    "overlap_closed_form",
    "solve_primary",
]
