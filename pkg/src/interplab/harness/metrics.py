"""Per-iterate metric rows with a fixed column set.

Every run CSV has exactly these columns in this order; metrics that do not
apply to a run (e.g. margins for regression) are emitted as NaN so the
schema never varies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import analysis, linalg, losses
from ..datasets import Dataset, SplitDataset
from ..errors import NonSeparableError, SingularGramError

COLUMNS = (
    "iter",
    "train_loss",
    "train_acc",
    "test_loss_or_risk",
    "test_acc",
    "l2_norm",
    "p_norm",
    "emp_margin",
    "angle_to_mm",
    "span_residual",
)


@dataclass
class MetricContext:
    train: Dataset
    test: Dataset | None
    loss_kind: str
    projector: np.ndarray
    reference: np.ndarray | None  # min-norm (regression) / max-margin direction
    p_inv: np.ndarray | None = None

    @property
    def classification(self):
        return self.train.kind == "classification"


def make_context(data, loss_kind, p_matrix=None):
    """Precompute the per-dataset pieces every metric row needs."""
    if isinstance(data, SplitDataset):
        train, test = data.train, data.test
    else:
        train, test = data, None
    # built from the row-space basis so rank-deficient (under-parameterized)
    # feature matrices work too; there pi is the identity on the row space
    basis = linalg.span_basis(train.x)
    projector = basis.T @ basis
    reference = None
    if train.kind == "regression":
        try:
            reference = analysis.min_norm(train.x, train.y).w
        except SingularGramError:
            pass
    else:
        try:
            reference = analysis.max_margin(train).w
        except NonSeparableError:
            pass
    p_inv = None
    if p_matrix is not None:
        p_inv = np.linalg.pinv(linalg.sym(np.asarray(p_matrix, dtype=float)))
    return MetricContext(
        train=train,
        test=test,
        loss_kind=loss_kind,
        projector=projector,
        reference=reference,
        p_inv=p_inv,
    )


def _loss_on(ctx, data, w):
    if ctx.loss_kind == "squared":
        return losses.loss("squared", data.x, data.y, w)
    return losses.loss(ctx.loss_kind, data.absorbed(), None, w)


def _accuracy(data, w):
    return float(np.mean((data.x @ w) * data.y > 0.0))


def row(ctx, iteration, w):
    """One metric row for the model w at the given iteration."""
    w = np.asarray(w, dtype=float)
    nan = float("nan")
    norm = float(np.linalg.norm(w))

    train_loss = float(_loss_on(ctx, ctx.train, w))
    train_acc = _accuracy(ctx.train, w) if ctx.classification else nan

    if ctx.test is not None:
        if ctx.test.kind == "regression":
            resid = ctx.test.x @ w - ctx.test.y
            test_loss = float(np.mean(resid**2))
        else:
            test_loss = float(_loss_on(ctx, ctx.test, w))
        test_acc = _accuracy(ctx.test, w) if ctx.classification else nan
    elif ctx.train.w_star is not None and ctx.train.sigma is not None:
        test_loss = analysis.excess_risk(w, ctx.train)
        test_acc = nan
    else:
        test_loss, test_acc = nan, nan

    p_norm = (
        linalg.quad_norm(w, ctx.p_inv) if ctx.p_inv is not None and norm > 0 else nan
    )
    if ctx.classification and norm > 0:
        emp_margin = analysis.empirical_margin(w, ctx.train)
    else:
        emp_margin = nan
    if ctx.reference is not None and norm > 0:
        angle = analysis.angle_to(w, ctx.reference)
    else:
        angle = nan
    span_residual = float(
        np.linalg.norm(w - ctx.projector @ w) / max(norm, 1e-12)
    )

    return {
        "iter": int(iteration),
        "train_loss": train_loss,
        "train_acc": train_acc,
        "test_loss_or_risk": test_loss,
        "test_acc": test_acc,
        "l2_norm": norm,
        "p_norm": p_norm,
        "emp_margin": emp_margin,
        "angle_to_mm": angle,
        "span_residual": span_residual,
    }
