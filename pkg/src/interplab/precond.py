"""Preconditioner constructions and preconditioner-selection procedures.

Four families live here:

* equivalent preconditioners built from an interpolating solution (regression)
  or a separating direction (classification), so that preconditioned GD
  reproduces that solution / direction;
* inverse-covariance preconditioners (empirical or true);
* in-span reductions that replicate span-projected PGD without projections;
* preconditioners selected by minimizing an excess-risk bound (exact,
  Frobenius, or operator-norm variants), plus the closed form available
  when the true covariance is known from unlabeled data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import (
    NotPositiveDefiniteError,
    OptimizationError,
    SingularGramError,
)

PROVENANCES = (
    "identity",
    "interpolant_equivalent",
    "margin_equivalent",
    "inverse_covariance",
    "in_span_equivalent",
    "risk_opt_exact",
    "risk_opt_frobenius",
    "risk_opt_operator",
    "unlabeled_closed_form",
    "custom",
)

_PSD_TOL = 1e-10
_DRAW_BUDGET = 20

# the bound-minimization protocol: fixed-step GD over a small step grid,
# capped iterations with a gradient-norm stop, best iterate kept by value
BOUND_STEP_GRID = (5e-1, 1e-1, 1e-2, 5e-3, 1e-3, 1e-4)
BOUND_MAX_ITERS = 7500
BOUND_GRAD_TOL = 1e-7


@dataclass
class Preconditioner:
    matrix: np.ndarray
    provenance: str = "custom"
    in_span: bool = False
    psd: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        m = linalg.as_matrix(self.matrix, "preconditioner")
        if m.shape[0] != m.shape[1]:
            raise ValueError("preconditioner must be square")
        scale = max(float(np.abs(m).max()), 1.0)
        if not np.allclose(m, m.T, atol=1e-8 * scale):
            raise ValueError("preconditioner must be symmetric")
        self.matrix = linalg.sym(m)
        min_eig = float(np.linalg.eigvalsh(self.matrix)[0])
        self.meta.setdefault("min_eigenvalue", min_eig)
        is_psd = min_eig > -_PSD_TOL * scale
        if not is_psd and self.provenance not in (
            "risk_opt_exact",
            "risk_opt_frobenius",
            "risk_opt_operator",
            "unlabeled_closed_form",
        ):
            # bound-minimization can legitimately leave the PSD cone; every
            # other construction is positive (semi-)definite by design
            raise NotPositiveDefiniteError(
                f"{self.provenance} preconditioner has eigenvalue {min_eig:.3e}"
            )
        self.psd = bool(is_psd)
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    @property
    def d(self):
        return self.matrix.shape[0]


def identity(d):
    return Preconditioner(np.eye(d), provenance="identity")


def _invert_spd(m, context):
    """Inverse through an eigendecomposition, insisting on positive spectrum."""
    w, v = np.linalg.eigh(linalg.sym(m))
    if w[0] <= 0:
        raise NotPositiveDefiniteError(
            f"{context}: smallest eigenvalue {w[0]:.3e} is not positive"
        )
    return linalg.sym((v / w) @ v.T)


# ---------------------------------------------------------------------------
# equivalent preconditioners


def interpolant_equivalent(
    w_opt, x, y=None, nu_mode="one_step_normalized", seed=0, max_attempts=_DRAW_BUDGET
):
    """Preconditioner P for which PGD from w0 = 0 converges to ``w_opt``.

    P inverts M = ||w||^2 I - w w^T + nu nu^T / <w, nu> where nu = X^T alpha
    lies in the data span and <w, nu> > 0 (nu's sign is flipped when needed).
    ``one_step_normalized`` uses nu = (||w|| / ||X^T y||) X^T y, a scaled
    single gradient step from zero; ``random_in_span`` draws alpha entries
    from a standard normal.
    """
    w = linalg.as_vector(w_opt, "w_opt")
    x = linalg.as_matrix(x, "X")
    wnorm_sq = float(w @ w)
    if wnorm_sq == 0.0:
        raise ValueError("w_opt must be nonzero")
    if nu_mode not in ("one_step_normalized", "random_in_span"):
        raise ValueError(f"unknown nu_mode {nu_mode!r}")

    rng = np.random.default_rng(seed)
    attempts = max_attempts if nu_mode == "random_in_span" else 1
    for attempt in range(attempts):
        if nu_mode == "one_step_normalized":
            if y is None:
                raise ValueError("one_step_normalized requires the targets y")
            xty = x.T @ linalg.as_vector(y, "y")
            denom = float(np.linalg.norm(xty))
            if denom == 0.0:
                raise ValueError("X^T y is zero; cannot normalize")
            nu = (np.sqrt(wnorm_sq) / denom) * xty
        else:
            nu = x.T @ rng.standard_normal(x.shape[0])
        inner = float(w @ nu)
        if inner < 0.0:
            nu, inner = -nu, -inner
        if inner <= 1e-12 * np.sqrt(wnorm_sq) * max(np.linalg.norm(nu), 1e-300):
            continue
        m = wnorm_sq * np.eye(w.shape[0]) - np.outer(w, w) + np.outer(nu, nu) / inner
        try:
            p = _invert_spd(m, "interpolant-equivalent inner matrix")
        except NotPositiveDefiniteError:
            continue
        return Preconditioner(
            p,
            provenance="interpolant_equivalent",
            meta={"nu_mode": nu_mode, "attempts": attempt + 1, "nu": nu},
        )
    raise OptimizationError(
        f"no valid direction found in {attempts} draws "
        f"(all had <w, nu> ~ 0 or produced a non-PD inner matrix)"
    )


def margin_equivalent(w, data, seed=0, rel_tol=1e-6, max_attempts=_DRAW_BUDGET):
    """Preconditioner P whose maximum P-margin direction is ``w``'s direction.

    P inverts M = ||w||^2 I - w w^T + nu nu^T with nu = V^T alpha built from
    the support vectors V of w, alpha rescaled so <w, nu> = 1.  This makes
    ||w||_{P^-1} = 1 exactly (w^T M w = <w, nu>^2 = 1).  The coefficients are
    drawn nonnegative: nu must be a nonnegative combination of the active
    rows for w to satisfy the optimality conditions of the margin problem, so
    signed draws would only make w approximately extremal.
    """
    from . import analysis

    w = linalg.as_vector(w, "w")
    if not np.any(w):
        raise ValueError("w must be nonzero")
    rows = data.absorbed()
    margins = rows @ w
    if margins.min() <= 0:
        raise ValueError("w must separate the data (all absorbed margins > 0)")
    support = analysis.support_vectors(w, data, rel_tol=rel_tol)
    if len(support) == 0:
        raise OptimizationError("empty support set")
    v_mat = rows[np.asarray(support, dtype=int)]

    rng = np.random.default_rng(seed)
    wnorm_sq = float(w @ w)
    for attempt in range(max_attempts):
        alpha = np.abs(rng.standard_normal(v_mat.shape[0]))
        scale = float(alpha @ (v_mat @ w))
        if abs(scale) <= 1e-12:
            continue
        alpha = alpha / scale
        nu = v_mat.T @ alpha
        m = wnorm_sq * np.eye(w.shape[0]) - np.outer(w, w) + np.outer(nu, nu)
        try:
            p = _invert_spd(m, "margin-equivalent inner matrix")
        except NotPositiveDefiniteError:
            continue
        return Preconditioner(
            p,
            provenance="margin_equivalent",
            meta={
                "support": list(map(int, support)),
                "alpha": alpha,
                "nu": nu,
                "attempts": attempt + 1,
            },
        )
    raise OptimizationError(
        f"no valid alpha draw in {max_attempts} attempts for the "
        "margin-equivalent construction"
    )


# ---------------------------------------------------------------------------
# covariance-based preconditioners


def _as_cov_matrix(sigma, d):
    s = np.asarray(sigma, dtype=float)
    if s.ndim == 1:
        s = np.diag(s)
    if s.shape != (d, d):
        raise ValueError(f"covariance must be {d}x{d}")
    return linalg.sym(s)


def inverse_covariance(data, mode="empirical", rtol=linalg.DEFAULT_RTOL):
    """P = (covariance)^-1: the empirical second-moment matrix X^T X, or the
    generating covariance when the dataset carries one.  Singular covariances
    fall back to a thresholded pseudo-inverse and are flagged."""
    if mode == "empirical":
        x = data.x
        cov = linalg.sym(x.T @ x)
    elif mode == "true":
        if data.sigma is None:
            raise ValueError("dataset has no stored covariance")
        cov = _as_cov_matrix(data.sigma, data.d)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    rank = linalg.matrix_rank(cov, rtol=rtol)
    pseudo = rank < cov.shape[0]
    p = linalg.pinv(cov, rtol=rtol) if pseudo else _invert_spd(cov, "covariance")
    return Preconditioner(
        p,
        provenance="inverse_covariance",
        meta={"mode": mode, "pseudo_inverse": bool(pseudo)},
    )


def in_span_equivalent(p, x, rtol=linalg.DEFAULT_RTOL):
    """The rank-n preconditioner X^T Pbar X, Pbar = (XX^T)^-1 XPX^T (XX^T)^-1,
    that makes plain PGD reproduce span-projected PGD with P."""
    p = np.asarray(getattr(p, "matrix", p), dtype=float)
    x = linalg.as_matrix(x, "X")
    gram = linalg.sym(x @ x.T)
    if linalg.matrix_rank(gram, rtol=rtol) < gram.shape[0]:
        raise SingularGramError("X X^T is singular; rows are dependent")
    gram_inv = _invert_spd(gram, "data Gram")
    pbar = gram_inv @ (x @ p @ x.T) @ gram_inv
    mat = linalg.sym(x.T @ pbar @ x)
    return Preconditioner(
        mat,
        provenance="in_span_equivalent",
        in_span=True,
        meta={"pbar": linalg.sym(pbar)},
    )


# ---------------------------------------------------------------------------
# excess-risk bound and its minimization


def _risk_terms(p, x, sigma, rtol=linalg.DEFAULT_RTOL):
    gram = linalg.sym(x @ p @ x.T)
    if linalg.matrix_rank(gram, rtol=rtol) < gram.shape[0]:
        raise SingularGramError("X P X^T is singular in the risk bound")
    gram_inv = linalg.pinv(gram, rtol=rtol)
    b = np.eye(x.shape[1]) - p @ x.T @ gram_inv @ x
    c = gram_inv @ x @ p @ sigma @ p @ x.T @ gram_inv
    return b, c


def risk_bound(p, data, w0=None, variant="exact"):
    """Excess-risk value/upper bound for the PGD limit with preconditioner P.

    exact:      (w0-w*)^T B^T Sigma B (w0-w*) + sigma^2 tr(C)
    operator:   ||w0-w*||^2 ||B^T Sigma B||_2 + sigma^2 tr(C)
    frobenius:  ||w0-w*||^2 ||B^T Sigma B||_F + sigma^2 tr(C)

    with B = I - P X^T (X P X^T)^-1 X and
    C = (X P X^T)^-1 X P Sigma P X^T (X P X^T)^-1.  The operator and
    Frobenius forms only need ||w0 - w*||, not w* itself, and each upper
    bounds the exact value.
    """
    if variant not in ("exact", "frobenius", "operator"):
        raise ValueError(f"unknown variant {variant!r}")
    p = np.asarray(getattr(p, "matrix", p), dtype=float)
    x = data.x
    if data.w_star is None or data.sigma is None:
        raise ValueError("risk bound needs the generating w*, Sigma, sigma^2")
    sigma = _as_cov_matrix(data.sigma, data.d)
    noise = float(data.noise_var or 0.0)
    w_star = np.asarray(data.w_star, dtype=float)
    w0 = np.zeros(data.d) if w0 is None else linalg.as_vector(w0, "w0")
    b, c = _risk_terms(p, x, sigma)
    core = linalg.sym(b.T @ sigma @ b)
    delta = w0 - w_star
    if variant == "exact":
        first = float(delta @ core @ delta)
    elif variant == "operator":
        first = float(delta @ delta) * float(np.linalg.eigvalsh(core)[-1])
    else:
        first = float(delta @ delta) * float(np.linalg.norm(core, "fro"))
    return first + noise * float(np.trace(c))


@dataclass(frozen=True)
class BoundGdParams:
    step_grid: tuple = BOUND_STEP_GRID
    iters: int = BOUND_MAX_ITERS
    grad_tol: float = BOUND_GRAD_TOL


def _jax():
    import jax

    jax.config.update("jax_enable_x64", True)
    import jax.numpy as jnp

    return jax, jnp


def optimize_preconditioner(
    data, w0=None, variant="exact", shape="full", gd_params=None
):
    """Minimize the chosen risk-bound variant over P by fixed-step GD.

    Follows the grid/budget protocol in ``BoundGdParams``: each step size in
    the grid runs up to ``iters`` iterations (stopping early when the
    gradient norm drops below ``grad_tol``), the best iterate by bound value
    is kept per run, and the best run across the grid wins.  The search is
    unconstrained, so the returned matrix can leave the PSD cone (this is
    flagged on the result rather than rejected).  The operator variant is
    only available for diagonal preconditioners; its gradient goes through
    the top eigenpair, found by power iteration, held fixed per step.
    """
    if variant not in ("exact", "frobenius", "operator"):
        raise ValueError(f"unknown variant {variant!r}")
    if shape not in ("diagonal", "full"):
        raise ValueError(f"unknown shape {shape!r}")
    if variant == "operator" and shape != "diagonal":
        raise ValueError("operator variant supports diagonal preconditioners only")
    if data.w_star is None or data.sigma is None:
        raise ValueError("bound optimization needs the generating w*, Sigma")
    params = gd_params or BoundGdParams()

    jax, jnp = _jax()
    x = jnp.asarray(data.x)
    d = data.d
    sigma = jnp.asarray(_as_cov_matrix(data.sigma, d))
    noise = float(data.noise_var or 0.0)
    delta = jnp.asarray(
        (np.zeros(d) if w0 is None else np.asarray(w0, dtype=float))
        - np.asarray(data.w_star, dtype=float)
    )
    delta_sq = float(np.dot(np.asarray(delta), np.asarray(delta)))
    x_delta = x @ delta

    # all objectives are written to avoid d x d intermediates: with
    # W = P X^T and G = X W, B-products reduce to matvecs and the traces
    # contract through n-sized matrices, which keeps full-matrix
    # optimization tractable in the over-parameterized regime

    def pieces(theta):
        if shape == "diagonal":
            w_mat = theta[:, None] * x.T
        else:
            p = 0.5 * (theta + theta.T)
            w_mat = p @ x.T
        gram = x @ w_mat
        return w_mat, gram

    def noise_trace(w_mat, gram):
        # tr(C) = || Sigma^(1/2) W G^-1 ||_F^2
        u = jnp.linalg.solve(gram, w_mat.T).T
        return jnp.sum(u * (sigma @ u))

    def first_term_exact(w_mat, gram):
        b_delta = delta - w_mat @ jnp.linalg.solve(gram, x_delta)
        return b_delta @ (sigma @ b_delta)

    if variant == "operator":

        def objective(theta):
            w_mat, gram = pieces(theta)

            def apply_core(u):
                # (B^T Sigma B) u through matvecs only
                bu = u - w_mat @ jnp.linalg.solve(gram, x @ u)
                sv = sigma @ bu
                return sv - x.T @ jnp.linalg.solve(gram, w_mat.T @ sv)

            def body(_, u):
                v = apply_core(u)
                return v / jnp.linalg.norm(v)

            u0 = jnp.ones(d) / jnp.sqrt(d)
            u = jax.lax.fori_loop(0, 200, body, u0)
            # the eigenvector is held constant so the gradient is the
            # standard top-pair subgradient u^T (d core / dP) u
            u = jax.lax.stop_gradient(u)
            bu = u - w_mat @ jnp.linalg.solve(gram, x @ u)
            top = bu @ (sigma @ bu)
            return delta_sq * top + noise * noise_trace(w_mat, gram)

    elif variant == "frobenius":
        sig_x_t = sigma @ x.T  # d x n, constant
        tr_s_sq = float(np.trace(np.asarray(sigma) @ np.asarray(sigma)))
        xxt = x @ x.T
        xsxt = x @ sig_x_t

        def objective(theta):
            # || B^T Sigma B ||_F^2 expanded around V = (W G^-1) X so every
            # trace contracts through n x n products; risk_bound holds the
            # direct d x d reference this must match
            w_mat, gram = pieces(theta)
            wg = jnp.linalg.solve(gram, w_mat.T).T  # W G^-1, d x n
            sw = sigma @ wg                         # d x n
            xsw = x @ sw                            # n x n
            xs2w = sig_x_t.T @ sw                   # n x n  (X S^2 WG)
            wtsw = wg.T @ sw                        # n x n
            wts2w = sw.T @ sw                       # n x n  (WG^T S^2 WG)
            tr_s2v = jnp.trace(xs2w)
            tr_avav = jnp.trace(xsw @ xsw)
            tr_aat = jnp.trace(xxt @ wts2w)
            tr_sq = jnp.trace(xsxt @ wtsw)
            tr_aq = jnp.trace(xsw @ xxt @ wtsw)
            tr_atq = jnp.trace(xsw.T @ wtsw @ xxt)
            tr_qq = jnp.trace(wtsw @ xxt @ wtsw @ xxt)
            norm_sq = (
                tr_s_sq
                - 4.0 * tr_s2v
                + 2.0 * tr_avav
                + 2.0 * tr_aat
                + 2.0 * tr_sq
                - 2.0 * tr_aq
                - 2.0 * tr_atq
                + tr_qq
            )
            first = delta_sq * jnp.sqrt(jnp.maximum(norm_sq, 0.0))
            return first + noise * noise_trace(w_mat, gram)

    else:

        def objective(theta):
            w_mat, gram = pieces(theta)
            return first_term_exact(w_mat, gram) + noise * noise_trace(
                w_mat, gram
            )

    value_and_grad = jax.value_and_grad(objective)

    @jax.jit
    def descend(eta):
        theta0 = jnp.ones(d) if shape == "diagonal" else jnp.eye(d)

        def cond(state):
            k, _, _, _, gnorm, alive = state
            return (k < params.iters) & (gnorm >= params.grad_tol) & alive

        def body(state):
            k, theta, best_f, best_theta, _, _ = state
            f, g = value_and_grad(theta)
            better = f < best_f
            best_f = jnp.where(better, f, best_f)
            best_theta = jnp.where(better, theta, best_theta)
            theta = theta - eta * g
            gnorm = jnp.linalg.norm(g)
            alive = jnp.isfinite(f) & jnp.all(jnp.isfinite(theta))
            return k + 1, theta, best_f, best_theta, gnorm, alive

        f0 = objective(theta0)
        init = (0, theta0, f0, theta0, jnp.inf, jnp.isfinite(f0))
        k, theta, best_f, best_theta, gnorm, alive = jax.lax.while_loop(
            cond, body, init
        )
        # the loop exits before scoring its last iterate; fold it in
        f_last = objective(theta)
        better = jnp.isfinite(f_last) & (f_last < best_f)
        best_f = jnp.where(better, f_last, best_f)
        best_theta = jnp.where(better, theta, best_theta)
        return k, best_f, best_theta, gnorm, alive

    results = []
    for eta in params.step_grid:
        k, best_f, best_theta, gnorm, alive = descend(float(eta))
        best_f = float(best_f)
        results.append(
            {
                "eta": float(eta),
                "iters": int(k),
                "bound": best_f,
                "grad_norm": float(gnorm),
                "diverged": not bool(alive),
                "theta": np.asarray(best_theta),
            }
        )
    ok = [r for r in results if np.isfinite(r["bound"])]
    if not ok:
        raise OptimizationError(
            "every step size diverged while minimizing the bound: "
            + "; ".join(f"eta={r['eta']:g} diverged" for r in results)
        )
    best = min(ok, key=lambda r: r["bound"])
    theta = best["theta"]
    mat = np.diag(theta) if shape == "diagonal" else linalg.sym(theta)
    return Preconditioner(
        mat,
        provenance=f"risk_opt_{variant}",
        meta={
            "shape": shape,
            "eta": best["eta"],
            "iters": best["iters"],
            "bound": best["bound"],
            "grad_norm": best["grad_norm"],
            "grid": [
                {key: r[key] for key in ("eta", "iters", "bound", "diverged")}
                for r in results
            ],
        },
    )


# ---------------------------------------------------------------------------
# closed form from the true covariance (unlabeled data)


def covariance_blocks(x, sigma):
    """Split a covariance into its span/complement blocks (S1, S2, S3) with
    respect to the rows of X and an orthonormal complement basis."""
    x = linalg.as_matrix(x, "X")
    sigma = _as_cov_matrix(sigma, x.shape[1])
    x_perp = linalg.null_basis(x)
    gram_inv = _invert_spd(x @ x.T, "data Gram")
    s1 = gram_inv @ x @ sigma @ x.T @ gram_inv
    s2 = gram_inv @ x @ sigma @ x_perp.T
    s3 = x_perp @ sigma @ x_perp.T
    return s1, s2, s3, x_perp


def unlabeled_optimal(data, sigma_sq=None, rtol=linalg.DEFAULT_RTOL):
    """Assembled preconditioner whose complement/span coupling block
    minimizes the trace surrogate of the excess risk, given the true
    covariance (e.g. estimated from plentiful unlabeled data).

    With K = XX^T and an orthonormal complement basis (so its Gram is the
    identity), the optimal coupling is
    Q* = -(S3)^-1 (sigma^2 S2^T K^-1) (K^-1 + K^-2)^-1, and the returned
    matrix is X^T X + X^T Q*^T Xp + Xp^T Q* X + Xp^T Xp.  Noiseless targets
    give Q* = 0: the coupling block cannot help without label noise.
    """
    if data.sigma is None:
        raise ValueError("needs the generating covariance")
    noise = float(data.noise_var or 0.0) if sigma_sq is None else float(sigma_sq)
    x = data.x
    s1, s2, s3, x_perp = covariance_blocks(x, data.sigma)
    k = linalg.sym(x @ x.T)
    k_inv = _invert_spd(k, "data Gram")
    pseudo = False
    if noise == 0.0:
        q = np.zeros((x_perp.shape[0], x.shape[0]))
    else:
        rank = linalg.matrix_rank(s3, rtol=rtol)
        if rank < s3.shape[0]:
            s3_inv = linalg.pinv(s3, rtol=rtol)
            pseudo = True
        else:
            s3_inv = _invert_spd(s3, "complement covariance block")
        q = -s3_inv @ (noise * s2.T @ k_inv) @ np.linalg.inv(k_inv + k_inv @ k_inv)
    mat = linalg.sym(
        x.T @ x + x.T @ q.T @ x_perp + x_perp.T @ q @ x + x_perp.T @ x_perp
    )
    return Preconditioner(
        mat,
        provenance="unlabeled_closed_form",
        meta={"sigma_sq": noise, "pseudo_inverse_s3": pseudo, "q": q},
    )
