"""Config-driven experiment harness: TOML configs in, trajectory CSVs out."""

from . import config, metrics, runner, select, verify
from .cli import main
from .config import ExperimentConfig, OptimizerEntry, load, validate
from .metrics import COLUMNS

__all__ = [
    "COLUMNS",
    "ExperimentConfig",
    "OptimizerEntry",
    "config",
    "load",
    "main",
    "metrics",
    "runner",
    "select",
    "validate",
    "verify",
]
