"""Dense linear-algebra helpers shared across the package.

Everything operates on float64 numpy arrays.  Gram matrices are never
inverted directly: inverses go through SVD-based pseudo-inverses with a
relative singular-value cutoff, and symmetry is restored explicitly after
products that should be symmetric.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    FactorizationError,
    NotPositiveDefiniteError,
    SingularGramError,
)

# Relative cutoff used for every pseudo-inverse / rank decision in the package.
DEFAULT_RTOL = 1e-12


def as_matrix(m, name="matrix"):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    return m


def as_vector(v, name="vector"):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    return v


def sym(m):
    """Symmetrize: 0.5 * (M + M^T)."""
    m = as_matrix(m)
    return 0.5 * (m + m.T)


def svd(m):
    """Thin SVD with singular values sorted in descending order.

    Returns (U, S, Vt) with U @ diag(S) @ Vt == m up to float error.
    Raises FactorizationError if the underlying factorization does not
    converge (rare, but numpy can raise on pathological inputs).
    """
    m = as_matrix(m)
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"SVD did not converge: {exc}") from exc


def pinv(m, rtol=DEFAULT_RTOL):
    """Moore-Penrose pseudo-inverse with a relative singular-value cutoff.

    Singular values below rtol * s_max are treated as exact zeros.
    """
    m = as_matrix(m)
    u, s, vt = svd(m)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((m.shape[1], m.shape[0]))
    keep = s > rtol * s[0]
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (vt.T * inv_s) @ u.T


def matrix_rank(m, rtol=DEFAULT_RTOL):
    _, s, _ = svd(m)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def psd_check(m, tol=1e-10):
    """True iff M is symmetric within tol and its minimum eigenvalue >= -tol."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > tol * scale:
        return False
    try:
        w = np.linalg.eigvalsh(sym(m))
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"eigendecomposition failed: {exc}") from exc
    return bool(w.min() >= -tol * scale)


def eigh_psd(m, clip=True):
    """Eigendecomposition of a symmetric matrix, optionally clipping
    small negative eigenvalues (float noise) to zero."""
    m = sym(m)
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"eigendecomposition failed: {exc}") from exc
    if clip:
        w = np.clip(w, 0.0, None)
    return w, v


def sqrt_psd(m):
    """Symmetric PSD square root via eigendecomposition (negatives clipped)."""
    w, v = eigh_psd(m)
    return (v * np.sqrt(w)) @ v.T


def invsqrt_psd(m, eps=0.0, rtol=DEFAULT_RTOL):
    """(M + eps I)^(-1/2) for symmetric PSD M.

    With eps > 0 every direction is kept (the ridge makes the matrix PD).
    With eps == 0, directions with eigenvalue below rtol * max eigenvalue
    are dropped (pseudo-inverse square root).
    """
    w, v = eigh_psd(m)
    if eps > 0.0:
        return (v / np.sqrt(w + eps)) @ v.T
    if w.size and w.max() > 0:
        keep = w > rtol * w.max()
    else:
        keep = np.zeros_like(w, dtype=bool)
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / np.sqrt(w[keep])
    return (v * inv) @ v.T


def quad_norm(w, m, tol=1e-8):
    """sqrt(w^T M w) for symmetric positive semi-definite M.

    Raises NotPositiveDefiniteError if M fails the (tolerant) PSD check.
    Tiny negative quadratic values from float noise are clipped to zero.
    """
    w = as_vector(w, "w")
    m = as_matrix(m, "M")
    if not psd_check(m, tol=tol):
        raise NotPositiveDefiniteError(
            "quad_norm requires a symmetric positive semi-definite matrix"
        )
    val = float(w @ sym(m) @ w)
    return float(np.sqrt(max(val, 0.0)))


def span_projector(x, rtol=DEFAULT_RTOL):
    """Orthogonal projector onto the row span of X.

    Equals X^T (X X^T)^(-1) X for full-row-rank X, computed from the SVD of
    X directly so the result is symmetric and idempotent to float precision.
    Raises SingularGramError when X is row-rank deficient (the Gram matrix
    X X^T would be singular).
    """
    x = as_matrix(x, "X")
    n = x.shape[0]
    _, s, vt = svd(x)
    if s.size == 0 or s[0] == 0.0 or np.sum(s > rtol * s[0]) < n:
        rank = 0 if (s.size == 0 or s[0] == 0.0) else int(np.sum(s > rtol * s[0]))
        raise SingularGramError(
            f"gram matrix X X^T is singular: X has row rank {rank} < {n} rows"
        )
    vr = vt[:n]
    return sym(vr.T @ vr)


def span_basis(x, rtol=DEFAULT_RTOL):
    """Orthonormal basis (rows) of the row span of X; applying the span
    projector is then w -> B^T (B w), which is cheaper than forming the
    full d x d projector for wide feature matrices.  Unlike span_projector
    this tolerates rank deficiency and returns a rank-many-row basis (for
    full-column-rank X that is the whole of R^d)."""
    x = as_matrix(x, "X")
    _, s, vt = svd(x)
    rank = 0 if s.size == 0 else int(np.sum(s > rtol * s[0]))
    return vt[:rank]


def null_basis(x, rtol=DEFAULT_RTOL):
    """Orthonormal basis (rows) of the orthogonal complement of the row span
    of X; the (d - n) x d matrix X_perp with X @ X_perp^T == 0."""
    x = as_matrix(x, "X")
    n, d = x.shape
    u, s, vt = np.linalg.svd(x, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(s > rtol * s[0]))
    return vt[rank:]


def p_span_projector(p, x, rtol=DEFAULT_RTOL, psd_tol=1e-8):
    """Oblique projector pi_P = P X^T (X P X^T)^(-1) X.

    For an interpolating w (X w = y), pi_P @ w is the minimum
    ||.||_{P^-1}-norm interpolating solution; interpolants of that form are
    fixed points.  Requires P symmetric PSD and X P X^T invertible.
    """
    p = as_matrix(p, "P")
    x = as_matrix(x, "X")
    if not psd_check(p, tol=psd_tol):
        raise NotPositiveDefiniteError(
            "p_span_projector requires a symmetric PSD preconditioner P"
        )
    gram = sym(x @ p @ x.T)
    if matrix_rank(gram, rtol=rtol) < gram.shape[0]:
        raise SingularGramError(
            "gram matrix X P X^T is singular; P vanishes on part of the row span"
        )
    return p @ x.T @ pinv(gram, rtol=rtol) @ x
