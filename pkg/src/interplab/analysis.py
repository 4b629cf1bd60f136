"""Reference solutions and evaluation metrics.

Provides the minimum-norm and max-margin oracles (in the Euclidean or any
quadratic norm), empirical margins, excess risk under a known generative
model, angles between directions, and the margin-based generalization
bound.  The hard-margin problem is solved through its dual by projected
gradient ascent with Nesterov acceleration and adaptive restarts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import (
    NonSeparableError,
    NotPositiveDefiniteError,
    OptimizationError,
    SingularGramError,
)

# Divergence guards for the hard-margin dual: an unbounded dual objective
# certifies that no separating direction exists.
_DUAL_OBJECTIVE_CAP = 1e12
_DUAL_ALPHA_CAP = 1e10


@dataclass
class ReferenceSolution:
    """A closed-form or oracle solution used as a comparison target."""

    w: np.ndarray
    kind: str
    gamma: float | None = None
    alpha: np.ndarray | None = None


def min_norm(x, y, p=None, rtol=linalg.DEFAULT_RTOL):
    """Minimum-norm interpolating solution X^T (X X^T)^(-1) y.

    With a preconditioner P, returns the minimum ||.||_{P^-1}-norm
    interpolant P X^T (X P X^T)^(-1) y instead.
    """
    x = linalg.as_matrix(x, "X")
    y = linalg.as_vector(y, "y")
    if p is None:
        gram = x @ x.T
        kind = "min_norm"
    else:
        p = linalg.as_matrix(p, "P")
        gram = x @ p @ x.T
        kind = "min_p_norm"
    gram = linalg.sym(gram)
    if linalg.matrix_rank(gram, rtol=rtol) < gram.shape[0]:
        raise SingularGramError(
            "interpolation system is singular: X (or X P X^T) is rank deficient"
        )
    coef = linalg.pinv(gram, rtol=rtol) @ y
    w = x.T @ coef if p is None else p @ (x.T @ coef)
    return ReferenceSolution(w=w, kind=kind)


def _dual_objective(alpha, g):
    return float(alpha.sum() - 0.5 * (alpha @ (g @ alpha)))


def max_margin(data, p=None, tol=1e-8, max_iter=500_000):
    """Hard-margin solution in the ||.||_{P^-1} geometry (P = I by default).

    Maps rows through P^(1/2), maximizes the dual
    ``sum(alpha) - 0.5 alpha^T G alpha`` over ``alpha >= 0`` by accelerated
    projected gradient ascent (step 1/lambda_max(G)), and back-maps the
    support combination.  The returned direction is unit l2-normalized;
    ``gamma`` is the achieved margin in the stated norm.
    """
    if data.kind != "classification":
        raise ValueError("max_margin requires a classification dataset")
    xt = data.absorbed()
    n = xt.shape[0]
    if p is not None:
        p = linalg.as_matrix(p, "P")
        if not linalg.psd_check(p, tol=1e-8):
            raise NotPositiveDefiniteError("max_margin preconditioner must be PSD")
        root = linalg.sqrt_psd(p)
        xh = xt @ root
        kind = "max_margin_p"
    else:
        xh = xt
        kind = "max_margin_l2"

    g = linalg.sym(xh @ xh.T)
    lam = float(np.linalg.eigvalsh(g)[-1])
    if lam <= 0.0:
        raise NonSeparableError("all transformed rows are zero; no margin exists")
    step = 1.0 / lam

    alpha = np.zeros(n)
    z = alpha.copy()
    t = 1.0
    obj = 0.0
    for it in range(max_iter):
        grad_z = 1.0 - g @ z
        alpha_new = np.maximum(0.0, z + step * grad_z)
        obj_new = _dual_objective(alpha_new, g)
        if obj_new < obj:
            # adaptive restart: fall back to a plain projected step
            z = alpha
            t = 1.0
            alpha_new = np.maximum(0.0, alpha + step * (1.0 - g @ alpha))
            obj_new = _dual_objective(alpha_new, g)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = alpha_new + ((t - 1.0) / t_new) * (alpha_new - alpha)
        alpha, t, obj = alpha_new, t_new, obj_new

        if obj > _DUAL_OBJECTIVE_CAP or alpha.max(initial=0.0) > _DUAL_ALPHA_CAP:
            raise NonSeparableError(
                "hard-margin dual is unbounded: data admits no separating direction"
            )
        if it % 25 == 0 or it == max_iter - 1:
            margins = g @ alpha
            viol = max(0.0, 1.0 - float(margins.min()))
            fixed_point = (
                alpha - np.maximum(0.0, alpha + step * (1.0 - margins))
            )
            kkt = max(viol, float(np.max(np.abs(fixed_point))) / step)
            if kkt < tol:
                break
    else:
        raise OptimizationError(
            f"hard-margin dual did not reach KKT tolerance {tol} "
            f"in {max_iter} iterations (last residual {kkt:.3e})"
        )

    z_norm_sq = float(alpha @ (g @ alpha))
    if z_norm_sq <= 0.0:
        raise NonSeparableError("dual solution is zero; no active margin")
    gamma = 1.0 / np.sqrt(z_norm_sq)
    w = xt.T @ alpha
    if p is not None:
        w = p @ w
    w_norm = np.linalg.norm(w)
    if w_norm == 0.0:
        raise NonSeparableError("margin solution collapsed to zero")
    return ReferenceSolution(w=w / w_norm, kind=kind, gamma=float(gamma), alpha=alpha)


def empirical_margin(w, data, p_inv=None):
    """Minimum absorbed margin of w divided by its norm (l2, or the
    quadratic norm induced by ``p_inv``).  Negative if w misclassifies."""
    w = linalg.as_vector(w, "w")
    norm = (
        np.linalg.norm(w) if p_inv is None else linalg.quad_norm(w, p_inv)
    )
    if norm <= 0.0:
        raise ValueError("empirical margin undefined for zero w")
    margins = data.absorbed() @ w
    return float(margins.min() / norm)


def excess_risk(w, data):
    """True risk (w - w*)^T Sigma (w - w*) + sigma^2 under the stored model."""
    if data.w_star is None or data.sigma is None:
        raise ValueError("excess_risk needs a dataset with w_star and sigma")
    w = linalg.as_vector(w, "w")
    diff = w - data.w_star
    return float(diff @ data.sigma @ diff + data.noise_var)


def angle_to(w, ref):
    """Angle in radians between w and a reference direction (vector or
    ReferenceSolution), via clipped cosine similarity."""
    w = linalg.as_vector(w, "w")
    r = linalg.as_vector(getattr(ref, "w", ref), "ref")
    nw, nr = np.linalg.norm(w), np.linalg.norm(r)
    if nw == 0.0 or nr == 0.0:
        raise ValueError("angle undefined for a zero vector")
    cos = float(np.clip(w @ r / (nw * nr), -1.0, 1.0))
    return float(np.arccos(cos))


def support_vectors(w, data, rel_tol=1e-6):
    """Indices whose absorbed margin is within rel_tol (relative) of the
    minimum margin attained by w."""
    w = linalg.as_vector(w, "w")
    if np.linalg.norm(w) == 0.0:
        raise ValueError("support set undefined for zero w")
    margins = data.absorbed() @ w
    m0 = float(margins.min())
    if not np.isfinite(rel_tol):
        return np.arange(len(margins))
    thr = m0 + rel_tol * abs(m0)
    return np.flatnonzero(margins <= thr)


def bayes_direction(mu_plus, mu_minus, sigma):
    """Unit direction of Sigma^(-1) (mu_plus - mu_minus): the optimal
    classifier for equal-covariance Gaussian classes."""
    mu_plus = linalg.as_vector(mu_plus, "mu_plus")
    mu_minus = linalg.as_vector(mu_minus, "mu_minus")
    sigma = linalg.as_matrix(sigma, "Sigma")
    w_eigs = np.linalg.eigvalsh(linalg.sym(sigma))
    if w_eigs.min() <= 1e-12 * max(1.0, w_eigs.max()):
        raise NotPositiveDefiniteError("class covariance is singular")
    w = np.linalg.solve(linalg.sym(sigma), mu_plus - mu_minus)
    return ReferenceSolution(w=w / np.linalg.norm(w), kind="bayes_gaussian")


def rademacher_bound(p, x, e):
    """Complexity bound (2 sqrt(2 E) / n) sqrt(tr(P Sigma_hat)) for the
    class of linear predictors with 0.5 ||w||^2_{P^-1} <= E, where
    Sigma_hat = X^T X is the scaled sample covariance."""
    p = linalg.as_matrix(p, "P")
    x = linalg.as_matrix(x, "X")
    if e < 0:
        raise ValueError("the norm budget E must be non-negative")
    n = x.shape[0]
    tr = float(np.sum(p * (x.T @ x)))
    return (2.0 * np.sqrt(2.0 * e) / n) * np.sqrt(max(tr, 0.0))


def generalization_bound(w, data, p, gamma, delta=0.05, e=None):
    """Margin-based test-error bound: slack term + complexity term at the
    working margin gamma + the usual confidence term.

    ``e`` defaults to the budget of w itself, 0.5 ||w||^2_{P^-1}.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    w = linalg.as_vector(w, "w")
    xt = data.absorbed()
    n = xt.shape[0]
    margins = xt @ w
    slack = float(np.maximum(0.0, gamma - margins).sum())
    if e is None:
        p_inv = linalg.pinv(p)
        e = 0.5 * linalg.quad_norm(w, p_inv) ** 2
    term1 = slack / (n * gamma)
    term2 = rademacher_bound(p, xt, e) / gamma
    term3 = 3.0 * np.sqrt(np.log(2.0 / delta) / (2.0 * n))
    return float(term1 + term2 + term3)
