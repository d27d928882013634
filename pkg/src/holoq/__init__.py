"""Holonomies of degenerate levels of pseudo-Hermitian Hamiltonians.

Modules: ``biortho`` (biorthogonal eigensystems, metrics), ``gaugeholo``
(gauge fields and path-ordered holonomies), ``dynamics`` (time evolution with
the metric-corrected generator), ``tripod`` (the four-level tripod model and its
gates), ``bundles`` (Stiefel frames and Grassmann projectors), ``cli``.
"""

from .biortho import (BiorthoSystem, MetricOperator, biorthogonal_eig, metric_from_left, pseudo_adjoint,
                      pseudo_hermiticity_residual, pseudo_unitarity_residual, random_pseudo_hermitian)
from .errors import HoloqError
from .gaugeholo import HamiltonianFamily, HolonomyResult, ParamLoop, holonomy_of_loop

__version__ = "0.1.0"

__all__ = [
    "BiorthoSystem", "MetricOperator", "biorthogonal_eig", "metric_from_left", "pseudo_adjoint",
    "pseudo_hermiticity_residual", "pseudo_unitarity_residual", "random_pseudo_hermitian",
    "HoloqError", "HamiltonianFamily", "HolonomyResult", "ParamLoop", "holonomy_of_loop",
]
