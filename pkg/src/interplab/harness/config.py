"""Experiment configuration: a TOML document validated into a typed object.

The format is sections + scalars + lists, hand-editable and diff-friendly:

    [dataset]
    generator = "regression"      # or relative_margin, two_point,
    n = 100                       #    random_features, ntk_regression, csv
    d = 200
    zeta_sq = 10.0

    [loss]
    kind = "squared"

    [run]
    iters = 2000
    seeds = [0, 1, 2]
    out = "results"

    [[optimizers]]
    id = "adagrad"
    method = "adagrad_diag"
    step_sizes = [20, 10, 5, 2.5, 1, 0.5, 0.25, 0.1]
    wrappers = ["span_each"]

Validation errors always name the offending key path.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..errors import ConfigError
from ..losses import KINDS as LOSS_KINDS
from ..optimizers import METHODS

GENERATORS = (
    "regression",
    "relative_margin",
    "two_point",
    "random_features",
    "ntk_regression",
    "csv",
)

WRAPPER_KINDS = ("span_each", "span_end", "switch_gd", "ball")

PRECONDITIONERS = (
    "inverse_covariance_empirical",
    "inverse_covariance_true",
    "inverse_covariance_true_normalized",
)

# mini-batch defaults when a stochastic method omits batch_size: five
# examples on synthetic data, two on ingested CSV data
DEFAULT_BATCH_SYNTHETIC = 5
DEFAULT_BATCH_CSV = 2


@dataclass
class OptimizerEntry:
    id: str
    method: str
    step_sizes: list
    batch_size: int | None = None
    wrappers: list = field(default_factory=list)
    preconditioner: str | None = None
    lm_lambda: float = 1e-3
    eps: float = 1e-10


@dataclass
class ExperimentConfig:
    dataset: dict
    loss: str
    optimizers: list
    iters: int
    seeds: list
    out: str
    record_cap: int = 500
    record_ratio: float = 1.3
    config_hash: str = ""
    raw: dict = field(default_factory=dict)


def _require(table, key, types, path, choices=None):
    if key not in table:
        raise ConfigError(f"{path}.{key}: missing required key")
    value = table[key]
    if not isinstance(value, types):
        raise ConfigError(
            f"{path}.{key}: expected {getattr(types, '__name__', types)}, "
            f"got {type(value).__name__}"
        )
    if choices is not None and value not in choices:
        raise ConfigError(f"{path}.{key}: {value!r} not one of {sorted(choices)}")
    return value


def _optional(table, key, types, path, default=None):
    if key not in table:
        return default
    value = table[key]
    if not isinstance(value, types):
        raise ConfigError(
            f"{path}.{key}: expected {getattr(types, '__name__', types)}, "
            f"got {type(value).__name__}"
        )
    return value


_NUM = (int, float)


def _validate_dataset(d):
    gen = _require(d, "generator", str, "dataset", choices=GENERATORS)
    if gen == "regression":
        _require(d, "n", int, "dataset")
        _require(d, "d", int, "dataset")
    elif gen in ("relative_margin", "random_features", "ntk_regression"):
        _require(d, "n_train", int, "dataset")
        _require(d, "n_test", int, "dataset")
        if gen == "random_features":
            _require(d, "d", int, "dataset")
    elif gen == "two_point":
        a = _require(d, "a", _NUM, "dataset")
        if not 0.0 < float(a) < 1.0:
            raise ConfigError(f"dataset.a: must lie in (0, 1), got {a}")
    elif gen == "csv":
        _require(d, "path", str, "dataset")
        _require(d, "target_column", str, "dataset")
    for key in ("zeta_sq", "noise_var"):
        value = _optional(d, key, _NUM, "dataset")
        if value is not None and float(value) < 0:
            raise ConfigError(f"dataset.{key}: must be non-negative")
    return dict(d)


def _validate_wrapper(entry, path):
    if isinstance(entry, str):
        kind, params = entry, {}
    elif isinstance(entry, dict):
        kind = _require(entry, "kind", str, path)
        params = {k: v for k, v in entry.items() if k != "kind"}
    else:
        raise ConfigError(f"{path}: wrapper must be a string or a table")
    if kind not in WRAPPER_KINDS:
        raise ConfigError(f"{path}: unknown wrapper {kind!r}; one of {WRAPPER_KINDS}")
    if kind == "ball" and "radius" not in params:
        raise ConfigError(f"{path}: ball wrapper needs a radius")
    return {"kind": kind, **params}


def _validate_optimizer(entry, index, synthetic):
    path = f"optimizers[{index}]"
    if not isinstance(entry, dict):
        raise ConfigError(f"{path}: expected a table")
    method = _require(entry, "method", str, path, choices=METHODS)
    opt_id = _optional(entry, "id", str, path, default=method)
    steps = _require(entry, "step_sizes", list, path)
    if not steps or not all(isinstance(s, _NUM) for s in steps):
        raise ConfigError(f"{path}.step_sizes: need a non-empty list of numbers")
    batch = _optional(entry, "batch_size", int, path)
    if method == "sgd" and batch is None:
        batch = DEFAULT_BATCH_SYNTHETIC if synthetic else DEFAULT_BATCH_CSV
    wrappers = [
        _validate_wrapper(w, f"{path}.wrappers[{i}]")
        for i, w in enumerate(_optional(entry, "wrappers", list, path, default=[]))
    ]
    pre = _optional(entry, "preconditioner", str, path)
    if pre is not None and pre not in PRECONDITIONERS:
        raise ConfigError(
            f"{path}.preconditioner: {pre!r} not one of {PRECONDITIONERS}"
        )
    return OptimizerEntry(
        id=opt_id,
        method=method,
        step_sizes=[float(s) for s in steps],
        batch_size=batch,
        wrappers=wrappers,
        preconditioner=pre,
        lm_lambda=float(_optional(entry, "lm_lambda", _NUM, path, default=1e-3)),
        eps=float(_optional(entry, "eps", _NUM, path, default=1e-10)),
    )


def validate(doc):
    """Validate a parsed config document into an ExperimentConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a table")
    dataset = _validate_dataset(_require(doc, "dataset", dict, "config"))
    loss_table = _require(doc, "loss", dict, "config")
    loss = _require(loss_table, "kind", str, "loss", choices=LOSS_KINDS)
    run = _require(doc, "run", dict, "config")
    iters = _require(run, "iters", int, "run")
    if iters <= 0:
        raise ConfigError("run.iters: must be positive")
    seeds = _require(run, "seeds", list, "run")
    if not seeds or not all(isinstance(s, int) for s in seeds):
        raise ConfigError("run.seeds: need a non-empty list of integers")
    out = _optional(run, "out", str, "run", default="results")
    record_cap = _optional(run, "record_cap", int, "run", default=500)
    record_ratio = float(_optional(run, "record_ratio", _NUM, "run", default=1.3))
    if record_cap <= 0 or record_ratio <= 1.0:
        raise ConfigError("run.record_cap/record_ratio: need cap > 0, ratio > 1")
    raw_opts = _require(doc, "optimizers", list, "config")
    if not raw_opts:
        raise ConfigError("optimizers: need at least one entry")
    synthetic = dataset["generator"] != "csv"
    optimizers = [
        _validate_optimizer(o, i, synthetic) for i, o in enumerate(raw_opts)
    ]
    ids = [o.id for o in optimizers]
    if len(set(ids)) != len(ids):
        raise ConfigError("optimizers: duplicate id")
    digest = hashlib.sha256(
        json.dumps(doc, sort_keys=True, default=str).encode()
    ).hexdigest()[:12]
    return ExperimentConfig(
        dataset=dataset,
        loss=loss,
        optimizers=optimizers,
        iters=iters,
        seeds=list(seeds),
        out=out,
        record_cap=record_cap,
        record_ratio=record_ratio,
        config_hash=digest,
        raw=doc,
    )


def load(path):
    """Parse and validate a TOML config file."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return validate(doc)
