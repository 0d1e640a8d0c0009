"""Generalized alternating projections with residual and projected line searches."""

from .gap import AssumptionError, GapConfig, GapOperator, IterationState, averagedness_constant, beta, outer_alpha, validate
from .linesearch import LineSearchConfig
from .projections import (
    AffineSubspace,
    Box,
    ConvexSet,
    FreeSpace,
    NonnegativeOrthant,
    ProductSet,
    RankDeficientError,
    RelaxedProjector,
    SecondOrderCone,
    ZeroCone,
    distance,
    project,
    project_product,
    relaxed_apply,
)
from .solver import SolveResult, affine_criterion, feasibility_criterion, solve

__version__ = "0.1.0"
