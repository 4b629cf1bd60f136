"""Built-in consistency suites runnable from the CLI.

Each suite is a fast, self-contained check of a core identity or limit:
it builds its own data from fixed seeds and reports one row per check
with the observed discrepancy and the threshold it must stay under.
"""

from __future__ import annotations

import numpy as np

from .. import analysis, datasets, linalg, precond
from ..errors import ConfigError
from ..optimizers import OptimizerSpec, pgd_closed_form, projected_pgd
from . import metrics as _metrics  # noqa: F401  (re-export convenience)


def _row(suite, check, observed, threshold):
    return {
        "suite": suite,
        "check": check,
        "observed": float(observed),
        "threshold": float(threshold),
        "passed": bool(observed <= threshold),
    }


def _regression(seed=0, n=20, d=50):
    return datasets.gen_regression(n, d, zeta_sq=10.0, noise_var=0.0, seed=seed)


def suite_equivalent_preconditioner():
    """The interpolant-matched preconditioner maps a scaled start back to
    the given interpolant through the closed-form PGD limit."""
    rows = []
    data = _regression(seed=3)
    w = analysis.min_norm(data.x, data.y).w
    for mode in ("one_step_normalized", "random_in_span"):
        pre = precond.interpolant_equivalent(
            w, data.x, y=data.y, nu_mode=mode, seed=7
        )
        w0 = 0.37 * w
        back = pgd_closed_form(pre.matrix, data.x, data.y, w0=w0)
        err = np.linalg.norm(back - w) / np.linalg.norm(w)
        rows.append(_row("equivalent-preconditioner", f"roundtrip_{mode}", err, 1e-8))
        nu = pre.meta["nu"]
        m = linalg.pinv(pre.matrix)
        rows.append(
            _row(
                "equivalent-preconditioner",
                f"m_times_w_equals_nu_{mode}",
                np.linalg.norm(m @ w - nu) / max(np.linalg.norm(nu), 1e-12),
                1e-8,
            )
        )
    return rows


def suite_margin_preconditioner():
    """A separable classifier direction becomes the unit-norm max-margin
    direction of its matched preconditioner geometry."""
    rows = []
    data = datasets.gen_relative_margin(40, 40, seed=1).train
    w = analysis.max_margin(data).w
    pre = precond.margin_equivalent(w, data, seed=5)
    p_inv = linalg.pinv(pre.matrix)
    norm_sq = float(w @ p_inv @ w)
    rows.append(_row("margin-preconditioner", "unit_p_norm", abs(norm_sq - 1.0), 1e-6))
    ref = analysis.max_margin(data, p=pre.matrix)
    rows.append(
        _row("margin-preconditioner", "direction_angle", analysis.angle_to(w, ref), 1e-3)
    )
    return rows


def suite_span_reduction():
    """Plain PGD under the in-span reduction of P lands on the span
    projection of the full-P limit: a smaller interpolant, same fits."""
    rows = []
    rng = np.random.default_rng(11)
    data = _regression(seed=4, n=15, d=40)
    a = rng.standard_normal((data.d, data.d))
    p = a @ a.T + 0.5 * np.eye(data.d)
    eq = precond.in_span_equivalent(p, data.x)
    w_full = pgd_closed_form(p, data.x, data.y)
    w_span = pgd_closed_form(eq.matrix, data.x, data.y)
    proj = linalg.span_projector(data.x)
    rows.append(
        _row(
            "span-reduction",
            "limit_is_projected_limit",
            np.linalg.norm(w_span - proj @ w_full) / np.linalg.norm(w_full),
            1e-8,
        )
    )
    rows.append(
        _row(
            "span-reduction",
            "still_interpolates",
            np.linalg.norm(data.x @ w_span - data.y) / np.linalg.norm(data.y),
            1e-8,
        )
    )
    rows.append(
        _row(
            "span-reduction",
            "l2_norm_not_larger",
            np.linalg.norm(w_span) - np.linalg.norm(w_full) - 1e-10,
            0.0,
        )
    )
    return rows


def suite_projection_identity():
    """Projecting one preconditioner's interpolant onto the span geometry of
    another lands exactly on the other's interpolant."""
    rows = []
    rng = np.random.default_rng(21)
    data = _regression(seed=6, n=12, d=30)
    mats = []
    for _ in range(2):
        a = rng.standard_normal((data.d, data.d))
        mats.append(a @ a.T + 0.3 * np.eye(data.d))
    p1, p2 = mats
    w1 = pgd_closed_form(p1, data.x, data.y)
    w2 = pgd_closed_form(p2, data.x, data.y)
    proj = linalg.p_span_projector(p2, data.x)
    rows.append(
        _row(
            "projection-identity",
            "oblique_projection_maps_between_interpolants",
            np.linalg.norm(proj @ w1 - w2) / np.linalg.norm(w2),
            1e-8,
        )
    )
    return rows


def suite_two_point_limits():
    """The two-point construction's stored margin matches the measured one
    and the max-margin direction approaches the known closed form."""
    rows = []
    for a in (0.5, 0.1, 0.02):
        data = datasets.gen_two_point(a)
        w = analysis.max_margin(data).w
        measured = analysis.empirical_margin(w, data)
        rows.append(
            _row(
                "two-point-limits",
                f"margin_matches_a{a:g}",
                abs(measured - data.meta["margin"]) / data.meta["margin"],
                1e-4,
            )
        )
        rows.append(
            _row(
                "two-point-limits",
                f"direction_angle_a{a:g}",
                analysis.angle_to(w, data.w_star),
                1e-3,
            )
        )
    return rows


def suite_risk_bound_chain():
    """exact <= operator <= frobenius on random preconditioners."""
    rows = []
    rng = np.random.default_rng(33)
    data = _regression(seed=9, n=10, d=25)
    worst = -np.inf
    for _ in range(20):
        a = rng.standard_normal((data.d, data.d))
        p = a @ a.T + 0.2 * np.eye(data.d)
        exact = precond.risk_bound(p, data, variant="exact")
        oper = precond.risk_bound(p, data, variant="operator")
        frob = precond.risk_bound(p, data, variant="frobenius")
        worst = max(worst, exact - oper, oper - frob)
    rows.append(_row("risk-bound-chain", "ordering_violation", worst, 1e-9))
    return rows


def suite_min_norm_convergence():
    """Span-projected PGD with identity P lands on the min-norm solution."""
    rows = []
    data = _regression(seed=2, n=10, d=30)
    spec = OptimizerSpec(method="gd", step_size=1.0 / (4.0 * np.linalg.norm(data.x, 2) ** 2))
    traj = projected_pgd(spec, data, iters=4000)
    ref = analysis.min_norm(data.x, data.y).w
    rows.append(
        _row(
            "min-norm-convergence",
            "relative_error",
            np.linalg.norm(traj.final_w - ref) / np.linalg.norm(ref),
            1e-4,
        )
    )
    return rows


SUITES = {
    "equivalent-preconditioner": suite_equivalent_preconditioner,
    "margin-preconditioner": suite_margin_preconditioner,
    "span-reduction": suite_span_reduction,
    "projection-identity": suite_projection_identity,
    "two-point-limits": suite_two_point_limits,
    "risk-bound-chain": suite_risk_bound_chain,
    "min-norm-convergence": suite_min_norm_convergence,
}


def run_suites(names=None):
    """Run the requested suites (all by default); returns (rows, n_failed)."""
    if names:
        unknown = [n for n in names if n not in SUITES]
        if unknown:
            raise ConfigError(
                f"unknown suite(s) {unknown}; available: {sorted(SUITES)}"
            )
        picked = list(names)
    else:
        picked = list(SUITES)
    rows = []
    for name in picked:
        rows.extend(SUITES[name]())
    failed = sum(1 for r in rows if not r["passed"])
    return rows, failed
