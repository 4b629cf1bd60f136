"""Iterative optimizers, projection/switching wrappers, and closed forms.

All methods share one driver (`run`) that owns the iteration loop, records
snapshots on a schedule, applies wrappers in their listed order after each
step, and detects divergence (non-finite iterate, or recorded loss above a
cap).  Stochastic methods draw their batch order from the run seed only, so
every run is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import linalg, losses
from .errors import DivergenceError, LineSearchError

METHODS = (
    "gd",
    "sgd",
    "pgd",
    "pgd_linesearch",
    "nesterov_gd",
    "newton_lm",
    "adagrad_full",
    "adagrad_diag",
    "adam",
    "coin_betting",
)

_NEEDS_STEP = {
    "gd",
    "sgd",
    "pgd",
    "nesterov_gd",
    "newton_lm",
    "adagrad_full",
    "adagrad_diag",
    "adam",
}

LOSS_DIVERGENCE_CAP = 1e12


def _precond_matrix(p):
    """Accept a bare matrix or any object exposing a ``matrix`` attribute."""
    if p is None:
        return None
    return np.asarray(getattr(p, "matrix", p), dtype=float)


@dataclass
class OptimizerSpec:
    method: str
    step_size: float | None = None
    preconditioner: object | None = None
    batch_size: int | None = None
    lm_lambda: float = 1e-3
    eps: float = 1e-10
    betas: tuple = (0.9, 0.999)
    armijo_c: float = 0.5
    eta_max: float = 1.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(
                f"unknown method {self.method!r}; expected one of {METHODS}"
            )
        if self.method in _NEEDS_STEP:
            if self.step_size is None or self.step_size <= 0:
                raise ValueError(f"{self.method} requires step_size > 0")
        if self.method == "sgd" and (
            self.batch_size is None or self.batch_size <= 0
        ):
            raise ValueError("sgd requires a positive batch_size")
        if self.method == "pgd" and self.preconditioner is None:
            raise ValueError("pgd requires a preconditioner")
        if self.method == "pgd_linesearch":
            if not 0.0 < self.armijo_c < 1.0:
                raise ValueError("armijo_c must lie in (0, 1)")
            if self.eta_max <= 0:
                raise ValueError("eta_max must be positive")
        if self.method == "adagrad_full":
            # eps == 0 selects the pseudo-inverse root of the accumulated
            # outer-product matrix; negative makes no sense.
            if self.eps < 0:
                raise ValueError("eps must be non-negative")
        elif self.method in ("adagrad_diag", "adam"):
            if self.eps <= 0:
                raise ValueError("eps must be positive")
        if self.method == "adam":
            b1, b2 = self.betas
            if not (0.0 < b1 < 1.0 and 0.0 < b2 < 1.0):
                raise ValueError("adam betas must lie in (0, 1)")
        if self.method == "newton_lm" and self.lm_lambda < 0:
            raise ValueError("lm_lambda must be non-negative")


# ---------------------------------------------------------------------------
# wrappers


@dataclass(frozen=True)
class SpanProjectEachStep:
    """Project the iterate onto the data span after every update."""


@dataclass(frozen=True)
class SpanProjectAtEnd:
    """Project only the final iterate onto the data span."""


@dataclass(frozen=True)
class BallProject:
    """Project onto {||v||_M <= radius} by exact rescaling (M = I default)."""

    radius: float
    norm_matrix: object = None

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")


@dataclass(frozen=True)
class SwitchToGd:
    """Run the configured method for ``fraction`` of the budget, then
    finish with plain full-batch GD at ``gd_step``."""

    fraction: float = 0.75
    gd_step: float = 10.0

    def __post_init__(self):
        if not 0.0 < self.fraction < 1.0:
            raise ValueError("switch fraction must lie in (0, 1)")
        if self.gd_step <= 0:
            raise ValueError("gd_step must be positive")


@dataclass
class Trajectory:
    iterations: np.ndarray
    snapshots: np.ndarray
    losses: np.ndarray
    final_w: np.ndarray
    final_iter: int
    diverged: bool = False
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        its = np.asarray(self.iterations)
        if its.size and np.any(np.diff(its) <= 0):
            raise ValueError("recorded iterations must be strictly increasing")


def record_schedule(iters, cap=500, ratio=1.3):
    """Logarithmically spaced iteration indices (always includes 0 and the
    final iteration), capped at ``cap`` entries."""
    if iters < 0:
        raise ValueError("iters must be non-negative")
    pts = {0, iters}
    k = 1.0
    while k < iters:
        pts.add(int(round(k)))
        k = max(k + 1.0, k * ratio)
    out = sorted(pts)
    if len(out) > cap:
        idx = np.unique(np.linspace(0, len(out) - 1, cap).round().astype(int))
        out = [out[i] for i in idx]
    return out


# ---------------------------------------------------------------------------
# exposed stateful steps (adagrad_full / coin_betting)


@dataclass
class AdagradFullState:
    w: np.ndarray
    step_size: float
    eps: float = 1e-10
    grad_sq_sum: np.ndarray | None = None

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        if self.grad_sq_sum is None:
            d = self.w.shape[0]
            self.grad_sq_sum = np.zeros((d, d))


def step_adagrad_full(state, g):
    """One full-matrix adaptive step: accumulate the gradient outer product
    and move along (S + eps I)^(-1/2) g, with the inverse root computed by
    eigendecomposition."""
    g = np.asarray(g, dtype=float)
    s = state.grad_sq_sum + np.outer(g, g)
    scaling = linalg.invsqrt_psd(s, eps=state.eps)
    w = state.w - state.step_size * (scaling @ g)
    return replace(state, w=w, grad_sq_sum=s)


@dataclass
class CoinBettingState:
    """Per-coordinate betting state: anchor point, running max gradient
    magnitude, absolute-gradient sum, signed gradient sum, and accumulated
    reward.  Initial wealth is one unit per coordinate."""

    w: np.ndarray
    anchor: np.ndarray | None = None
    max_grad: np.ndarray | None = None
    abs_sum: np.ndarray | None = None
    signed_sum: np.ndarray | None = None
    reward: np.ndarray | None = None
    ratio_cap: float = 100.0
    initial_wealth: float = 1.0

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        d = self.w.shape[0]
        if self.anchor is None:
            self.anchor = self.w.copy()
        for name in ("max_grad", "abs_sum", "signed_sum", "reward"):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(d))


def step_coin_betting(state, g):
    """Parameter-free betting update: the offset from the anchor point is
    the betting fraction times the accumulated wealth (initial + reward)."""
    g = np.asarray(g, dtype=float)
    abs_g = np.abs(g)
    max_grad = np.maximum(state.max_grad, abs_g)
    abs_sum = state.abs_sum + abs_g
    reward = np.maximum(state.reward - (state.w - state.anchor) * g, 0.0)
    signed_sum = state.signed_sum - g
    denom = np.maximum(
        max_grad * np.maximum(abs_sum + max_grad, state.ratio_cap * max_grad),
        1e-300,
    )
    wealth = state.initial_wealth + reward
    w = state.anchor + (signed_sum / denom) * wealth
    return replace(
        state,
        w=w,
        max_grad=max_grad,
        abs_sum=abs_sum,
        signed_sum=signed_sum,
        reward=reward,
    )


# ---------------------------------------------------------------------------
# line search


def _training_view(data, kind):
    """Feature/target arrays actually optimized: label-absorbed rows for the
    classification losses, raw (X, y) for the squared loss."""
    if kind == "squared":
        return data.x, data.y
    return data.absorbed(), None


def _armijo_on_arrays(kind, xx, yy, w, direction, c, eta_max, max_halvings=60):
    g = losses.grad(kind, xx, yy, w)
    slope = float(g @ direction)
    if slope <= 0.0:
        raise LineSearchError(
            f"not a descent direction: <grad, direction> = {slope:.3e} <= 0"
        )
    f0 = losses.loss(kind, xx, yy, w)
    eta = float(eta_max)
    for _ in range(max_halvings + 1):
        if losses.loss(kind, xx, yy, w - eta * direction) <= f0 - c * eta * slope:
            return eta
        eta *= 0.5
    raise LineSearchError(
        f"sufficient-decrease condition unsatisfied after {max_halvings} "
        f"halvings from eta_max={eta_max}"
    )


def armijo_linesearch(kind, data, w, direction, c=0.5, eta_max=1.0):
    """Largest step in the halving schedule {eta_max, eta_max/2, ...} with
    f(w - eta*d) <= f(w) - c*eta*<grad f(w), d>."""
    if not 0.0 < c < 1.0:
        raise ValueError("c must lie in (0, 1)")
    if eta_max <= 0:
        raise ValueError("eta_max must be positive")
    xx, yy = _training_view(data, kind)
    w = linalg.as_vector(w, "w")
    direction = linalg.as_vector(direction, "direction")
    return _armijo_on_arrays(kind, xx, yy, w, direction, c, eta_max)


# ---------------------------------------------------------------------------
# per-method update rules


class _Updater:
    """``lookahead`` returns the point at which the gradient is evaluated
    (only the accelerated method differs from the iterate)."""

    def lookahead(self, w):
        return w

    def step(self, w, g):
        raise NotImplementedError


class _Gd(_Updater):
    def __init__(self, eta):
        self.eta = eta

    def step(self, w, g):
        return w - self.eta * g


class _Pgd(_Updater):
    def __init__(self, eta, p):
        self.eta = eta
        self.p = p

    def step(self, w, g):
        return w - self.eta * (self.p @ g)


class _PgdLinesearch(_Updater):
    def __init__(self, spec, kind, xx, yy, p):
        self.spec = spec
        self.kind = kind
        self.xx = xx
        self.yy = yy
        self.p = p

    def step(self, w, g):
        direction = g if self.p is None else self.p @ g
        eta = _armijo_on_arrays(
            self.kind,
            self.xx,
            self.yy,
            w,
            direction,
            self.spec.armijo_c,
            self.spec.eta_max,
        )
        return w - eta * direction


class _Nesterov(_Updater):
    """Accelerated GD with the standard t-sequence momentum schedule;
    momentum is taken over the (possibly wrapper-projected) iterates."""

    def __init__(self, eta):
        self.eta = eta
        self.w_prev = None
        self.t = 1.0
        self._y = None

    def lookahead(self, w):
        if self.w_prev is None:
            self._y = w
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * self.t * self.t))
            beta = (self.t - 1.0) / t_next
            self._y = w + beta * (w - self.w_prev)
            self.t = t_next
        return self._y

    def step(self, w, g):
        self.w_prev = w
        return self._y - self.eta * g


class _NewtonLm(_Updater):
    def __init__(self, eta, x, lam):
        self.eta = eta
        hess = x.T @ x + lam * np.eye(x.shape[1])
        self.inv = linalg.pinv(hess)

    def step(self, w, g):
        return w - self.eta * (self.inv @ g)


class _AdagradFull(_Updater):
    """Full-matrix accumulation carried in an orthonormal basis of the data
    row span.  Gradients of a linear predictor always lie in that span, so
    folding them to span coordinates before the eigendecomposition keeps the
    null space out entirely: no 1/sqrt(eps) amplification of rounding dust,
    and the decomposition shrinks from d x d to rank x rank."""

    def __init__(self, eta, eps, x, w0):
        self.basis = linalg.span_basis(x)
        self.state = AdagradFullState(
            w=self.basis @ w0, step_size=eta, eps=eps
        )

    def step(self, w, g):
        prev = self.basis @ w
        self.state = step_adagrad_full(
            replace(self.state, w=prev), self.basis @ g
        )
        # carry only the in-span displacement so any off-span component of w
        # (a nonzero w0, say) rides along untouched, as in exact arithmetic
        return w + self.basis.T @ (self.state.w - prev)


class _AdagradDiag(_Updater):
    def __init__(self, eta, eps, d):
        self.eta = eta
        self.eps = eps
        self.acc = np.zeros(d)

    def step(self, w, g):
        self.acc = self.acc + g * g
        return w - self.eta * g / np.sqrt(self.acc + self.eps)


class _Adam(_Updater):
    def __init__(self, eta, betas, eps, d):
        self.eta = eta
        self.b1, self.b2 = betas
        self.eps = eps
        self.m = np.zeros(d)
        self.v = np.zeros(d)
        self.k = 0

    def step(self, w, g):
        self.k += 1
        self.m = self.b1 * self.m + (1.0 - self.b1) * g
        self.v = self.b2 * self.v + (1.0 - self.b2) * g * g
        m_hat = self.m / (1.0 - self.b1**self.k)
        v_hat = self.v / (1.0 - self.b2**self.k)
        return w - self.eta * m_hat / (np.sqrt(v_hat) + self.eps)


class _CoinBetting(_Updater):
    def __init__(self, w0):
        self.state = CoinBettingState(w=w0)

    def step(self, w, g):
        self.state = step_coin_betting(replace(self.state, w=w), g)
        return self.state.w


def _make_updater(spec, kind, xx, yy, w0):
    d = xx.shape[1]
    m = spec.method
    if m in ("gd", "sgd"):
        return _Gd(spec.step_size)
    if m == "pgd":
        return _Pgd(spec.step_size, _precond_matrix(spec.preconditioner))
    if m == "pgd_linesearch":
        return _PgdLinesearch(
            spec, kind, xx, yy, _precond_matrix(spec.preconditioner)
        )
    if m == "nesterov_gd":
        return _Nesterov(spec.step_size)
    if m == "newton_lm":
        return _NewtonLm(spec.step_size, xx, spec.lm_lambda)
    if m == "adagrad_full":
        return _AdagradFull(spec.step_size, spec.eps, xx, w0)
    if m == "adagrad_diag":
        return _AdagradDiag(spec.step_size, spec.eps, d)
    if m == "adam":
        return _Adam(spec.step_size, spec.betas, spec.eps, d)
    if m == "coin_betting":
        return _CoinBetting(w0)
    raise ValueError(f"unknown method {m!r}")


# ---------------------------------------------------------------------------
# the driver


def run(
    spec,
    data,
    kind,
    iters,
    w0=None,
    seed=0,
    wrappers=(),
    record_iters=None,
    loss_cap=LOSS_DIVERGENCE_CAP,
):
    """Run one optimizer for ``iters`` steps and record a trajectory.

    Wrappers apply in their listed order after each update (span/ball
    kinds), once at the end of the run (at-end kind), or by swapping the
    update rule partway through (switch kind).  Raises DivergenceError --
    with the partial trajectory and last finite iterate attached -- when an
    iterate goes non-finite or a recorded loss exceeds ``loss_cap``.

    Mini-batch gradients are per-example averages over the batch; the batch
    order reshuffles without replacement each epoch, driven by ``seed``.
    """
    xx, yy = _training_view(data, kind)
    n, d = xx.shape
    w = (
        np.zeros(d)
        if w0 is None
        else np.array(np.asarray(w0, dtype=float), copy=True)
    )
    if w.shape != (d,):
        raise ValueError(f"w0 must have shape ({d},)")

    wrappers = list(wrappers)
    switch = next((x for x in wrappers if isinstance(x, SwitchToGd)), None)
    switch_at = int(np.ceil(switch.fraction * iters)) if switch is not None else None
    span_each = any(isinstance(x, SpanProjectEachStep) for x in wrappers)
    span_end = any(isinstance(x, SpanProjectAtEnd) for x in wrappers)
    basis = linalg.span_basis(xx) if (span_each or span_end) else None

    def _apply_step_wrappers(v):
        for wr in wrappers:
            if isinstance(wr, SpanProjectEachStep):
                v = basis.T @ (basis @ v)
            elif isinstance(wr, BallProject):
                nm = _precond_matrix(wr.norm_matrix)
                norm = (
                    float(np.linalg.norm(v))
                    if nm is None
                    else float(np.sqrt(max(v @ nm @ v, 0.0)))
                )
                if norm > wr.radius:
                    v = v * (wr.radius / norm)
        return v

    rng = np.random.default_rng(seed)
    batch_size = spec.batch_size
    if batch_size is None and spec.method == "sgd":
        batch_size = 5
    if batch_size is not None:
        batch = min(batch_size, n)
        state = {"perm": rng.permutation(n), "cursor": 0}

        def grad_fn(v):
            if state["cursor"] >= n:
                state["perm"] = rng.permutation(n)
                state["cursor"] = 0
            idx = state["perm"][state["cursor"] : state["cursor"] + batch]
            state["cursor"] += batch
            g = losses.grad(kind, xx[idx], None if yy is None else yy[idx], v)
            if kind == "squared":
                # per-example average, matching the 1/n classification losses
                g = g / len(idx)
            return g

    else:

        def grad_fn(v):
            return losses.grad(kind, xx, yy, v)

    def full_grad(v):
        return losses.grad(kind, xx, yy, v)

    updater = _make_updater(spec, kind, xx, yy, w)
    gd_tail = _Gd(switch.gd_step) if switch is not None else None

    schedule = (
        record_schedule(iters) if record_iters is None else sorted(set(record_iters))
    )
    schedule = [k for k in schedule if 0 <= k <= iters]
    rec_set = set(schedule)

    its, snaps, fvals = [], [], []

    def _partial():
        return Trajectory(
            iterations=np.array(its, dtype=int),
            snapshots=np.array(snaps) if snaps else np.zeros((0, d)),
            losses=np.array(fvals),
            final_w=w.copy(),
            final_iter=its[-1] if its else 0,
            diverged=True,
        )

    def _record(k, v):
        f = losses.loss(kind, xx, yy, v)
        if not np.isfinite(f) or f > loss_cap:
            raise DivergenceError(
                f"training loss {f:.3e} exceeded the divergence cap "
                f"at iteration {k}",
                w_last=v.copy(),
                iteration=k,
                trajectory=_partial(),
            )
        its.append(k)
        snaps.append(v.copy())
        fvals.append(f)

    if 0 in rec_set:
        _record(0, w)

    for k in range(iters):
        if switch_at is not None and k >= switch_at:
            point = w
            g = full_grad(point)
            w_new = gd_tail.step(w, g)
        else:
            point = updater.lookahead(w)
            g = grad_fn(point)
            w_new = updater.step(w, g)
        w_new = _apply_step_wrappers(w_new)
        if not np.all(np.isfinite(w_new)):
            raise DivergenceError(
                f"iterate went non-finite at iteration {k + 1}",
                w_last=w.copy(),
                iteration=k + 1,
                trajectory=_partial(),
            )
        w = w_new
        if (k + 1) in rec_set and not (span_end and (k + 1) == iters):
            _record(k + 1, w)

    if span_end:
        w = basis.T @ (basis @ w)
        if iters in rec_set:
            _record(iters, w)

    return Trajectory(
        iterations=np.array(its, dtype=int),
        snapshots=np.array(snaps) if snaps else np.zeros((0, d)),
        losses=np.array(fvals),
        final_w=w.copy(),
        final_iter=iters,
        diverged=False,
    )


# ---------------------------------------------------------------------------
# closed forms


def pgd_closed_form(p, x, y, w0=None, rtol=linalg.DEFAULT_RTOL):
    """Limit of preconditioned gradient descent on the squared loss:
    w0 + P X^T (X P X^T)^(-1) (y - X w0)."""
    p = _precond_matrix(p)
    x = linalg.as_matrix(x, "X")
    y = linalg.as_vector(y, "y")
    d = x.shape[1]
    w0 = np.zeros(d) if w0 is None else linalg.as_vector(w0, "w0")
    gram = linalg.sym(x @ p @ x.T)
    if linalg.matrix_rank(gram, rtol=rtol) < gram.shape[0]:
        from .errors import SingularGramError

        raise SingularGramError("X P X^T is singular; the PGD limit is undefined")
    return w0 + p @ (x.T @ (linalg.pinv(gram, rtol=rtol) @ (y - x @ w0)))


def pgd_unrolled(p, x, y, w0, eta, k):
    """Exact iterate after k PGD steps on the squared loss, from the
    geometric-series form of the update (the factor 2 below comes from the
    un-normalized squared-loss gradient 2 X^T (Xw - y))."""
    p = _precond_matrix(p)
    x = linalg.as_matrix(x, "X")
    y = linalg.as_vector(y, "y")
    w0 = linalg.as_vector(w0, "w0")
    gram = linalg.sym(x @ p @ x.T)
    evals, evecs = np.linalg.eigh(gram)
    shrink = (1.0 - 2.0 * eta * evals) ** k
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(evals > 1e-300, (1.0 - shrink) / evals, 2.0 * eta * k)
    r = y - x @ w0
    return w0 + p @ (x.T @ (evecs @ (coef * (evecs.T @ r))))


def projected_pgd(spec, data, iters, w0=None, seed=0, extra_wrappers=(), **kw):
    """PGD with a span projection after every step.  The trajectory's
    ``extras`` carry the equivalent in-span preconditioner X^T Pbar X that
    reproduces these iterates without any projection."""
    from .precond import in_span_equivalent

    wrappers = (SpanProjectEachStep(),) + tuple(extra_wrappers)
    traj = run(spec, data, "squared", iters, w0=w0, seed=seed, wrappers=wrappers, **kw)
    p = _precond_matrix(spec.preconditioner)
    if p is None:
        p = np.eye(data.d)
    eq = in_span_equivalent(p, data.x)
    traj.extras["in_span_preconditioner"] = eq.matrix
    return traj
