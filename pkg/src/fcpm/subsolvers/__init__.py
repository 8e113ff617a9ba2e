"""Inner solvers used by the block preconditioner."""

from fcpm.subsolvers.amg import (
    FLUID_AMG,
    MECHANICS_AMG,
    AmgCoarseningWarning,
    AmgHierarchy,
    AmgOptions,
    amg_setup,
    amg_vcycle,
)
from fcpm.subsolvers.direct import (
    DirectFactor,
    SingularMatrixError,
    direct_factorize,
    direct_solve,
)
from fcpm.subsolvers.ilu import Ilu0Factor, ZeroPivotError, ilu0_apply, ilu0_factorize

__all__ = [
    "AmgCoarseningWarning",
    "AmgHierarchy",
    "AmgOptions",
    "DirectFactor",
    "FLUID_AMG",
    "Ilu0Factor",
    "MECHANICS_AMG",
    "SingularMatrixError",
    "ZeroPivotError",
    "amg_setup",
    "amg_vcycle",
    "direct_factorize",
    "direct_solve",
    "ilu0_apply",
    "ilu0_factorize",
]
