"""interplab: which solution does your optimizer find when many interpolate?

Tools for studying the implicit bias of first-order methods on
over-parameterized linear models: preconditioned gradient descent and its
closed forms, adaptive methods, span/ball projection wrappers, max-margin
and min-norm oracles, preconditioner constructions (equivalent, inverse
covariance, risk-bound-optimized), NTK feature maps, and a reproducible
experiment harness with a CSV/CLI interface.
"""

from . import analysis, datasets, linalg, losses, ntk, optimizers, precond
from .datasets import Dataset, SplitDataset
from .errors import (
    ConfigError,
    CsvFormatError,
    DivergenceError,
    FactorizationError,
    InterplabError,
    LineSearchError,
    NonSeparableError,
    NotPositiveDefiniteError,
    OptimizationError,
    SingularGramError,
)
from .optimizers import (
    BallProject,
    OptimizerSpec,
    SpanProjectAtEnd,
    SpanProjectEachStep,
    SwitchToGd,
    Trajectory,
    pgd_closed_form,
    pgd_unrolled,
    projected_pgd,
    run,
)
from .precond import Preconditioner

__version__ = "0.1.0"

__all__ = [
    "analysis",
    "datasets",
    "linalg",
    "losses",
    "ntk",
    "optimizers",
    "precond",
    "Dataset",
    "SplitDataset",
    "Preconditioner",
    "OptimizerSpec",
    "Trajectory",
    "BallProject",
    "SpanProjectAtEnd",
    "SpanProjectEachStep",
    "SwitchToGd",
    "run",
    "pgd_closed_form",
    "pgd_unrolled",
    "projected_pgd",
    "InterplabError",
    "ConfigError",
    "CsvFormatError",
    "DivergenceError",
    "FactorizationError",
    "LineSearchError",
    "NonSeparableError",
    "NotPositiveDefiniteError",
    "OptimizationError",
    "SingularGramError",
]
