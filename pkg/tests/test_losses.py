import numpy as np
import pytest

from interplab import losses


def fd_grad(kind, x, y, w, h=1e-6):
    g = np.zeros_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        g[i] = (losses.loss(kind, x, y, w + e) - losses.loss(kind, x, y, w - e)) / (2 * h)
    return g


@pytest.fixture
def small_problem():
    rng = np.random.default_rng(42)
    x = rng.standard_normal((12, 5))
    w = rng.standard_normal(5) * 0.3
    y = rng.standard_normal(12)
    # classification losses expect labels absorbed into the rows, so the
    # "data" for them is just a margin matrix
    absorbed = np.sign(rng.standard_normal(12))[:, None] * x
    return x, y, absorbed, w


def test_squared_value_is_unnormalized_residual_norm(small_problem):
    x, y, _, w = small_problem
    assert losses.loss("squared", x, y, w) == pytest.approx(np.sum((x @ w - y) ** 2))


def test_squared_grad_formula(small_problem):
    x, y, _, w = small_problem
    g = losses.grad("squared", x, y, w)
    np.testing.assert_allclose(g, 2 * x.T @ (x @ w - y), atol=1e-12)
    np.testing.assert_allclose(g, fd_grad("squared", x, y, w), rtol=1e-5)


def test_squared_hinge_value(small_problem):
    _, _, a, w = small_problem
    m = a @ w
    expected = np.mean(np.maximum(0.0, 1.0 - m) ** 2)
    assert losses.loss("squared_hinge", a, None, w) == pytest.approx(expected)


def test_squared_hinge_vanishes_past_unit_margin():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((10, 4))
    a[:, 0] = np.abs(a[:, 0]) + 0.5  # every row has first coordinate >= 0.5
    w = np.array([10.0, 0.0, 0.0, 0.0])  # all margins >= 5 > 1
    assert losses.loss("squared_hinge", a, None, w) == 0.0
    np.testing.assert_allclose(losses.grad("squared_hinge", a, None, w), 0.0)


@pytest.mark.parametrize("kind", ["squared_hinge", "exponential", "logistic"])
def test_classification_grads_match_finite_differences(small_problem, kind):
    _, _, a, w = small_problem
    np.testing.assert_allclose(
        losses.grad(kind, a, None, w), fd_grad(kind, a, None, w), rtol=1e-5, atol=1e-8
    )


def test_exponential_matches_naive_at_moderate_margins(small_problem):
    _, _, a, w = small_problem
    naive = np.mean(np.exp(-(a @ w)))
    assert losses.loss("exponential", a, None, w) == pytest.approx(naive, rel=1e-12)


def test_exponential_very_negative_margins_do_not_overflow():
    a = np.eye(2)
    w = np.array([-500.0, -500.0])  # exp(500) per term overflows if summed naively
    with np.errstate(over="raise"):
        val = losses.loss("exponential", a, None, w)
    assert np.isfinite(val)
    assert np.log(val) == pytest.approx(500.0, rel=1e-12)


def test_logistic_value(small_problem):
    _, _, a, w = small_problem
    expected = np.mean(np.log1p(np.exp(-(a @ w))))
    assert losses.loss("logistic", a, None, w) == pytest.approx(expected, rel=1e-12)


def test_logistic_extreme_margins_stay_finite():
    a = np.eye(2)
    w = np.array([-800.0, 800.0])
    val = losses.loss("logistic", a, None, w)
    assert np.isfinite(val)
    assert val == pytest.approx(400.0, rel=1e-6)  # 0.5*(800 + ~0)
    g = losses.grad("logistic", a, None, w)
    assert np.all(np.isfinite(g))


class TestSmoothness:
    """smoothness() returns L with f(v) <= f(w) + <g(w), v-w> + L/2 ||v-w||^2."""

    @pytest.mark.parametrize("kind", ["squared", "squared_hinge", "logistic"])
    def test_quadratic_upper_bound(self, small_problem, kind):
        x, y_reg, a, w = small_problem
        data = x if kind == "squared" else a
        y = y_reg if kind == "squared" else None
        big_l = losses.smoothness(kind, data)
        rng = np.random.default_rng(0)
        for _ in range(25):
            v = w + rng.standard_normal(5)
            lhs = losses.loss(kind, data, y, v)
            rhs = (
                losses.loss(kind, data, y, w)
                + losses.grad(kind, data, y, w) @ (v - w)
                + 0.5 * big_l * np.sum((v - w) ** 2)
            )
            assert lhs <= rhs + 1e-9

    def test_squared_constant_is_tight(self, small_problem):
        x = small_problem[0]
        lam = np.linalg.eigvalsh(x.T @ x).max()
        assert losses.smoothness("squared", x) == pytest.approx(2 * lam)

    def test_exponential_needs_norm_cap(self, small_problem):
        a = small_problem[2]
        with pytest.raises(ValueError):
            losses.smoothness("exponential", a)
        capped = losses.smoothness("exponential", a, norm_cap=1.5)
        assert capped > 0
        rng = np.random.default_rng(3)
        for _ in range(20):
            w = rng.standard_normal(5)
            w *= 1.5 * rng.random() / np.linalg.norm(w)
            v = rng.standard_normal(5)
            v *= 1.5 * rng.random() / np.linalg.norm(v)
            lhs = losses.loss("exponential", a, None, v)
            rhs = (
                losses.loss("exponential", a, None, w)
                + losses.grad("exponential", a, None, w) @ (v - w)
                + 0.5 * capped * np.sum((v - w) ** 2)
            )
            assert lhs <= rhs + 1e-9


def test_unknown_kind_rejected(small_problem):
    x, y, _, w = small_problem
    with pytest.raises(ValueError, match="unknown loss kind"):
        losses.loss("huber", x, y, w)
