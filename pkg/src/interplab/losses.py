"""Training losses for interpolating linear models.

Conventions:

* ``squared``: un-normalized least squares ``||X w - y||^2``.
* Classification losses (``squared_hinge``, ``exponential``, ``logistic``)
  are written in terms of margins ``<w, x_i>`` and expect the labels to be
  absorbed into the feature rows beforehand (``x_i <- y_i x_i``), so ``y``
  is ignored and may be ``None``.  They are averaged over the sample.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .linalg import as_matrix, as_vector

KINDS = ("squared", "squared_hinge", "exponential", "logistic")

# Margin threshold below which the exponential loss is evaluated through a
# shifted log-sum-exp to dodge overflow in the individual exp terms.
_EXP_GUARD = -30.0


def _check_kind(kind):
    if kind not in KINDS:
        raise ValueError(f"unknown loss kind {kind!r}; expected one of {KINDS}")


def loss(kind, x, y, w):
    """Evaluate the loss at w.  ``y`` is only used by the squared loss."""
    _check_kind(kind)
    x = as_matrix(x, "X")
    w = as_vector(w, "w")
    m = x @ w
    n = x.shape[0]
    if kind == "squared":
        r = m - as_vector(y, "y")
        return float(r @ r)
    if kind == "squared_hinge":
        h = np.maximum(0.0, 1.0 - m)
        return float(h @ h / n)
    if kind == "exponential":
        if m.min() < _EXP_GUARD:
            return float(np.exp(logsumexp(-m) - np.log(n)))
        return float(np.exp(-m).sum() / n)
    # logistic
    return float(np.logaddexp(0.0, -m).sum() / n)


def grad(kind, x, y, w):
    """Gradient of ``loss`` with respect to w."""
    _check_kind(kind)
    x = as_matrix(x, "X")
    w = as_vector(w, "w")
    m = x @ w
    n = x.shape[0]
    if kind == "squared":
        return 2.0 * (x.T @ (m - as_vector(y, "y")))
    if kind == "squared_hinge":
        return (-2.0 / n) * (x.T @ np.maximum(0.0, 1.0 - m))
    if kind == "exponential":
        with np.errstate(over="ignore"):
            e = np.exp(-m)
        return (-1.0 / n) * (x.T @ e)
    # logistic: d/dm log(1 + e^-m) = -sigmoid(-m)
    s = _sigmoid(-m)
    return (-1.0 / n) * (x.T @ s)


def _sigmoid(t):
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    et = np.exp(t[~pos])
    out[~pos] = et / (1.0 + et)
    return out


def smoothness(kind, x, norm_cap=None):
    """Upper bound on the gradient-Lipschitz constant of the loss.

    For the exponential loss the Hessian is unbounded on all of R^d, so a
    bound is only available on a ball ``||w||_2 <= norm_cap``; passing no
    cap raises ValueError.
    """
    _check_kind(kind)
    x = as_matrix(x, "X")
    n = x.shape[0]
    s = np.linalg.svd(x, compute_uv=False)
    lam_max = float(s[0] ** 2) if s.size else 0.0
    if kind == "squared":
        return 2.0 * lam_max
    if kind == "squared_hinge":
        return 2.0 * lam_max / n
    if kind == "logistic":
        return lam_max / (4.0 * n)
    # exponential
    if norm_cap is None:
        raise ValueError(
            "exponential loss has no global smoothness constant; "
            "pass norm_cap to bound it on a ball"
        )
    row_max = float(np.max(np.linalg.norm(x, axis=1))) if n else 0.0
    return float(np.exp(row_max * norm_cap)) * lam_max / n
