import numpy as np
import pytest

from interplab import linalg
from interplab.errors import NotPositiveDefiniteError, SingularGramError


def random_wide(rng, n=6, d=15):
    return rng.standard_normal((n, d))


def test_sym_is_symmetric_and_idempotent():
    rng = np.random.default_rng(42)
    a = rng.standard_normal((7, 7))
    s = linalg.sym(a)
    np.testing.assert_allclose(s, s.T)
    np.testing.assert_allclose(linalg.sym(s), s)


def test_pinv_matches_numpy_on_rank_deficient():
    rng = np.random.default_rng(42)
    b = rng.standard_normal((8, 3))
    m = b @ b.T  # rank 3 of 8
    np.testing.assert_allclose(linalg.pinv(m), np.linalg.pinv(m), atol=1e-10)


def test_matrix_rank():
    rng = np.random.default_rng(0)
    b = rng.standard_normal((10, 4))
    assert linalg.matrix_rank(b @ b.T) == 4
    assert linalg.matrix_rank(np.zeros((3, 3))) == 0


class TestSpanProjector:
    def test_matches_normal_equations_form(self):
        rng = np.random.default_rng(42)
        x = random_wide(rng)
        pi = linalg.span_projector(x)
        expected = x.T @ np.linalg.inv(x @ x.T) @ x
        np.testing.assert_allclose(pi, expected, atol=1e-10)

    def test_idempotent_and_symmetric(self):
        rng = np.random.default_rng(1)
        pi = linalg.span_projector(random_wide(rng))
        np.testing.assert_allclose(pi @ pi, pi, atol=1e-12)
        np.testing.assert_allclose(pi, pi.T, atol=1e-14)

    def test_fixes_rows_and_kills_null_directions(self):
        rng = np.random.default_rng(5)
        x = random_wide(rng, n=4, d=9)
        pi = linalg.span_projector(x)
        np.testing.assert_allclose(pi @ x[2], x[2], atol=1e-10)
        nb = linalg.null_basis(x)
        np.testing.assert_allclose(pi @ nb[0], 0.0, atol=1e-10)

    def test_duplicate_rows_raise(self):
        rng = np.random.default_rng(3)
        x = random_wide(rng, n=4, d=9)
        x[3] = x[0]
        with pytest.raises(SingularGramError):
            linalg.span_projector(x)


def test_span_basis_orthonormal_and_rank_tolerant():
    rng = np.random.default_rng(42)
    x = random_wide(rng, n=5, d=12)
    b = linalg.span_basis(x)
    assert b.shape == (5, 12)
    np.testing.assert_allclose(b @ b.T, np.eye(5), atol=1e-12)
    # duplicated row: rank drops but the basis still spans row(X)
    x2 = np.vstack([x, x[0]])
    b2 = linalg.span_basis(x2)
    assert b2.shape[0] == 5
    np.testing.assert_allclose(b2.T @ (b2 @ x[3]), x[3], atol=1e-10)
    # under-parameterized full-column-rank X: basis of all of R^d
    tall = rng.standard_normal((30, 4))
    bt = linalg.span_basis(tall)
    np.testing.assert_allclose(bt.T @ bt, np.eye(4), atol=1e-12)


def test_null_basis_complements_span():
    rng = np.random.default_rng(7)
    x = random_wide(rng, n=6, d=14)
    nb = linalg.null_basis(x)
    assert nb.shape == (8, 14)
    np.testing.assert_allclose(x @ nb.T, 0.0, atol=1e-12)
    np.testing.assert_allclose(nb @ nb.T, np.eye(8), atol=1e-12)


class TestPsd:
    def test_psd_check(self):
        rng = np.random.default_rng(42)
        b = rng.standard_normal((5, 5))
        assert linalg.psd_check(b @ b.T)
        assert not linalg.psd_check(b @ b.T - 3.0 * np.eye(5))
        assert not linalg.psd_check(b)  # asymmetric

    def test_sqrt_invsqrt_roundtrip(self):
        rng = np.random.default_rng(8)
        b = rng.standard_normal((6, 6))
        m = b @ b.T + 0.5 * np.eye(6)
        root = linalg.sqrt_psd(m)
        np.testing.assert_allclose(root @ root, m, atol=1e-10)
        inv_root = linalg.invsqrt_psd(m)
        np.testing.assert_allclose(root @ inv_root, np.eye(6), atol=1e-8)

    def test_quad_norm_values_and_guard(self):
        m = np.diag([4.0, 9.0])
        assert linalg.quad_norm(np.array([1.0, 0.0]), m) == pytest.approx(2.0)
        assert linalg.quad_norm(np.array([0.0, 1.0]), m) == pytest.approx(3.0)
        with pytest.raises(NotPositiveDefiniteError):
            linalg.quad_norm(np.ones(2), np.diag([1.0, -1.0]))


class TestObliqueProjector:
    """P X^T (X P X^T)^(-1) X: projection onto span(P X^T) that preserves
    the fitted values X w."""

    def test_idempotent(self):
        rng = np.random.default_rng(42)
        x = random_wide(rng)
        b = rng.standard_normal((15, 15))
        p = b @ b.T + 0.1 * np.eye(15)
        proj = linalg.p_span_projector(p, x)
        np.testing.assert_allclose(proj @ proj, proj, atol=1e-9)

    def test_preserves_fits(self):
        rng = np.random.default_rng(9)
        x = random_wide(rng, n=5, d=11)
        b = rng.standard_normal((11, 11))
        p = b @ b.T + 0.2 * np.eye(11)
        proj = linalg.p_span_projector(p, x)
        w = rng.standard_normal(11)
        np.testing.assert_allclose(x @ (proj @ w), x @ w, atol=1e-9)

    def test_identity_p_reduces_to_orthogonal_projector(self):
        rng = np.random.default_rng(10)
        x = random_wide(rng)
        proj = linalg.p_span_projector(np.eye(15), x)
        np.testing.assert_allclose(proj, linalg.span_projector(x), atol=1e-10)

    def test_rejects_indefinite_p(self):
        rng = np.random.default_rng(11)
        x = random_wide(rng, n=3, d=6)
        with pytest.raises(NotPositiveDefiniteError):
            linalg.p_span_projector(np.diag([1.0, -1.0, 1, 1, 1, 1]), x)
