"""Thin scikit-learn style facade over the library's optimizers and oracles.

These wrappers exist for pipeline interoperability (``get_params``,
``fit``/``predict``/``transform``, input validation); all substance lives in
:mod:`interplab.optimizers`, :mod:`interplab.analysis`, :mod:`interplab.ntk`
and :mod:`interplab.precond`, which remain directly usable without sklearn.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import analysis, ntk
from .datasets import Dataset
from .optimizers import (
    OptimizerSpec,
    SpanProjectAtEnd,
    SpanProjectEachStep,
    run,
)


def _as_precond_matrix(preconditioner):
    if preconditioner is None:
        return None
    return np.asarray(getattr(preconditioner, "matrix", preconditioner), dtype=float)


class NtkFeatureMap(BaseEstimator, TransformerMixin):
    """Feature map given by the network Jacobian of a one-hidden-layer net
    at a random standard-normal initialization (sigmoid activations).

    ``fit`` samples and freezes the initialization; ``transform`` maps rows
    to the flattened per-parameter gradient features.
    """

    def __init__(self, hidden_units=50, seed=0):
        self.hidden_units = hidden_units
        self.seed = seed

    def fit(self, X, y=None):
        X = check_array(X)
        self.config_ = ntk.NtkConfig(
            input_dim=X.shape[1], hidden_units=self.hidden_units, seed=self.seed
        )
        self.weights_ = ntk.sample_weights(self.config_)
        self.n_output_features_ = ntk.param_count(self.config_)
        return self

    def transform(self, X):
        check_is_fitted(self, "weights_")
        X = check_array(X)
        if X.shape[1] != self.config_.input_dim:
            raise ValueError(
                f"expected {self.config_.input_dim} input features, got {X.shape[1]}"
            )
        return ntk.ntk_features(X, self.config_)


class InterpolatingRegressor(BaseEstimator, RegressorMixin):
    """Linear regression fitted by one of the library's iterative methods.

    In the over-parameterized regime the chosen method decides *which*
    interpolating solution is reached; ``span_project`` exposes the
    projection wrappers that pull non-span methods back toward the
    minimum-norm solution.
    """

    def __init__(
        self,
        method="gd",
        step_size=None,
        iters=1000,
        preconditioner=None,
        batch_size=None,
        span_project="none",
        lm_lambda=1e-3,
        seed=0,
    ):
        self.method = method
        self.step_size = step_size
        self.iters = iters
        self.preconditioner = preconditioner
        self.batch_size = batch_size
        self.span_project = span_project
        self.lm_lambda = lm_lambda
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        data = Dataset(x=X, y=y, kind="regression")
        spec = OptimizerSpec(
            method=self.method,
            step_size=self.step_size,
            preconditioner=_as_precond_matrix(self.preconditioner),
            batch_size=self.batch_size,
            lm_lambda=self.lm_lambda,
        )
        wrappers = {
            "none": (),
            "each": (SpanProjectEachStep(),),
            "end": (SpanProjectAtEnd(),),
        }.get(self.span_project)
        if wrappers is None:
            raise ValueError(f"unknown span_project mode {self.span_project!r}")
        traj = run(
            spec,
            data,
            kind="squared",
            iters=self.iters,
            seed=self.seed,
            wrappers=wrappers,
        )
        self.coef_ = traj.final_w
        self.trajectory_ = traj
        self.n_iter_ = traj.final_iter
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_


class MaxMarginClassifier(BaseEstimator, ClassifierMixin):
    """Homogeneous (bias-free) linear classifier.

    ``solver="oracle"`` computes the maximum-margin direction in the norm
    induced by ``preconditioner`` via the dual; ``solver="gd"`` (or any
    library method name) minimizes ``loss`` iteratively, which for
    exponential-type losses drifts toward the same direction.
    """

    def __init__(
        self,
        solver="oracle",
        loss="exponential",
        step_size=None,
        iters=1000,
        preconditioner=None,
        seed=0,
    ):
        self.solver = solver
        self.loss = loss
        self.step_size = step_size
        self.iters = iters
        self.preconditioner = preconditioner
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = np.unique(y)
        if len(self.classes_) != 2:
            raise ValueError("exactly two classes required")
        signs = np.where(y == self.classes_[1], 1.0, -1.0)
        data = Dataset(x=X, y=signs, kind="classification")
        p = _as_precond_matrix(self.preconditioner)
        if self.solver == "oracle":
            ref = analysis.max_margin(data, p=p)
            self.coef_ = ref.w
            self.margin_ = ref.gamma
            self.n_iter_ = 0
        else:
            spec = OptimizerSpec(
                method=self.solver, step_size=self.step_size, preconditioner=p
            )
            traj = run(
                spec, data, kind=self.loss, iters=self.iters, seed=self.seed
            )
            self.coef_ = traj.final_w
            self.margin_ = analysis.empirical_margin(traj.final_w, data)
            self.n_iter_ = traj.final_iter
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_

    def predict(self, X):
        scores = self.decision_function(X)
        return np.where(scores >= 0.0, self.classes_[1], self.classes_[0])
