"""Dataset generators and CSV ingestion, with seeded reproducibility.

Classification convention used package-wide: labels are absorbed into the
features (``x_i <- y_i x_i``) before optimization, so a separating direction
satisfies ``<w, x_i> > 0`` on every absorbed row.  ``Dataset.absorbed()``
produces that view.

Every generator is a pure function of its arguments: the seed is split into
named substreams (ground truth, covariance noise, features, label noise) so
a fresh sample can reuse the same ground truth when needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import csv

import numpy as np

from .errors import CsvFormatError, NonSeparableError

# Gaussian-mixture parameters for the 2-D relative-margin classification
# problem: strongly correlated classes on opposite sides of the origin.
REL_MARGIN_MU_POS = -0.4 * np.array([19.0, 13.0])
REL_MARGIN_SIGMA = 0.25 * np.array([[17.0, 16.9], [16.9, 17.0]])


@dataclass
class Dataset:
    """A fixed design matrix with targets and optional ground truth.

    ``sigma`` is the true feature covariance when known (synthetic data)
    and ``noise_var`` the label-noise variance sigma^2.
    """

    x: np.ndarray
    y: np.ndarray
    kind: str  # "regression" | "classification"
    w_star: np.ndarray | None = None
    sigma: np.ndarray | None = None
    noise_var: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {self.x.shape}")
        if self.y.shape != (self.x.shape[0],):
            raise ValueError(
                f"y must have shape ({self.x.shape[0]},), got {self.y.shape}"
            )
        if self.x.shape[0] == 0 or self.x.shape[1] == 0:
            raise ValueError("dataset must have at least one row and one column")
        if not np.all(np.isfinite(self.x)) or not np.all(np.isfinite(self.y)):
            raise ValueError("dataset entries must be finite")
        if self.kind not in ("regression", "classification"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if self.kind == "classification" and not np.all(np.abs(self.y) == 1.0):
            raise ValueError("classification labels must be in {-1, +1}")
        if self.w_star is not None:
            self.w_star = np.asarray(self.w_star, dtype=float)
            if self.w_star.shape != (self.x.shape[1],):
                raise ValueError("w_star must have length d")

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def d(self):
        return self.x.shape[1]

    def absorbed(self):
        """Label-absorbed feature rows y_i * x_i (classification only)."""
        if self.kind != "classification":
            raise ValueError("absorbed() is only defined for classification data")
        return self.y[:, None] * self.x


@dataclass
class SplitDataset:
    train: Dataset
    test: Dataset

    def __post_init__(self):
        if self.train.d != self.test.d:
            raise ValueError("train/test feature dimensions differ")
        if self.train.kind != self.test.kind:
            raise ValueError("train/test dataset kinds differ")


def _streams(seed, n):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def gen_regression(n, d, zeta_sq=10.0, noise_var=0.0, seed=0, sample_seed=None):
    """Synthetic linear regression with a perturbed-identity covariance.

    Sigma = I + Diag(delta^2) with delta ~ N(0, zeta_sq I); w* is a random
    unit vector; targets are y = X w* + eps with eps ~ N(0, noise_var).
    ``sample_seed`` optionally redraws features/noise while keeping the
    (w*, Sigma) model substreams tied to ``seed``.
    """
    if n <= 0 or d <= 0:
        raise ValueError("n and d must be positive")
    if zeta_sq < 0 or noise_var < 0:
        raise ValueError("variances must be non-negative")
    rng_w, rng_delta, rng_x, rng_eps = _streams(seed, 4)
    if sample_seed is not None:
        rng_x, rng_eps = _streams(sample_seed, 2)

    v = rng_w.standard_normal(d)
    w_star = v / np.linalg.norm(v)
    delta = np.sqrt(zeta_sq) * rng_delta.standard_normal(d)
    cov_diag = 1.0 + delta**2
    x = rng_x.standard_normal((n, d)) * np.sqrt(cov_diag)
    eps = (
        np.sqrt(noise_var) * rng_eps.standard_normal(n)
        if noise_var > 0
        else np.zeros(n)
    )
    y = x @ w_star + eps
    return Dataset(
        x=x,
        y=y,
        kind="regression",
        w_star=w_star,
        sigma=np.diag(cov_diag),
        noise_var=float(noise_var),
        meta={"zeta_sq": float(zeta_sq), "seed": seed},
    )


def _sample_mixture(rng, n):
    """Draw a balanced two-class sample from the 2-D Gaussian mixture."""
    n_pos = n - n // 2
    n_neg = n // 2
    chol = np.linalg.cholesky(REL_MARGIN_SIGMA)
    x_pos = REL_MARGIN_MU_POS + rng.standard_normal((n_pos, 2)) @ chol.T
    x_neg = -REL_MARGIN_MU_POS + rng.standard_normal((n_neg, 2)) @ chol.T
    x = np.vstack([x_pos, x_neg])
    y = np.concatenate([np.ones(n_pos), -np.ones(n_neg)])
    order = rng.permutation(n)
    return x[order], y[order]


def gen_relative_margin(n_train, n_test, seed=0, max_attempts=20):
    """Two-class 2-D Gaussian mixture for the relative-margin experiments.

    Redraws (up to ``max_attempts`` times) until the training sample is
    linearly separable by a homogeneous classifier, checked with the
    hard-margin oracle.
    """
    if n_train <= 0 or n_test <= 0:
        raise ValueError("split sizes must be positive")
    from .analysis import max_margin  # local import: analysis depends on us

    attempts = np.random.SeedSequence(seed).spawn(max_attempts)
    last_error = None
    for attempt_seq in attempts:
        rng_train, rng_test = [np.random.default_rng(s) for s in attempt_seq.spawn(2)]
        x_tr, y_tr = _sample_mixture(rng_train, n_train)
        x_te, y_te = _sample_mixture(rng_test, n_test)
        common = dict(
            kind="classification",
            sigma=REL_MARGIN_SIGMA.copy(),
            noise_var=0.0,
            meta={"mu_pos": REL_MARGIN_MU_POS.copy(), "seed": seed},
        )
        train = Dataset(x=x_tr, y=y_tr, **common)
        test = Dataset(x=x_te, y=y_te, **common)
        try:
            max_margin(train)
        except NonSeparableError as exc:
            last_error = exc
            continue
        return SplitDataset(train=train, test=test)
    raise NonSeparableError(
        f"no separable training draw in {max_attempts} attempts: {last_error}"
    )


def gen_two_point(a):
    """Two-point 2-D classification problem with a closed-form max-margin
    direction w* = (1, b/(1+a)), b = sqrt(1-a^2); both margins equal one."""
    a = float(a)
    if not 0.0 < a < 1.0:
        raise ValueError(f"a must lie strictly inside (0, 1), got {a}")
    b = np.sqrt(1.0 - a * a)
    x = np.array([[-1.0, 0.0], [a, b]])
    y = np.array([-1.0, 1.0])
    w_star = np.array([1.0, b / (1.0 + a)])
    return Dataset(
        x=x,
        y=y,
        kind="classification",
        w_star=w_star,
        meta={"a": a, "b": b, "margin": 1.0 / float(np.linalg.norm(w_star))},
    )


def gen_random_features(n_train, n_test, d, noise_var=0.0, seed=0, zeta_sq=10.0):
    """Over-parameterized classification: the regression generator's features
    with targets binarized by the sign of the latent regression response."""
    if n_train <= 0 or n_test <= 0 or d <= 0:
        raise ValueError("sizes must be positive")
    n = n_train + n_test
    base = gen_regression(
        n, d, zeta_sq=zeta_sq, noise_var=noise_var, seed=seed
    )
    labels = np.where(base.y >= 0.0, 1.0, -1.0)

    def _part(sl):
        return Dataset(
            x=base.x[sl],
            y=labels[sl],
            kind="classification",
            w_star=base.w_star,
            sigma=base.sigma,
            noise_var=float(noise_var),
            meta={"zeta_sq": float(zeta_sq), "seed": seed},
        )

    return SplitDataset(train=_part(slice(0, n_train)), test=_part(slice(n_train, n)))


def _read_numeric_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CsvFormatError(
                    f"{path}: line {line_no} has {len(row)} fields, expected {len(header)}"
                )
            parsed = []
            for name, cell in zip(header, row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise CsvFormatError(
                        f"{path}: line {line_no}, column {name!r}: "
                        f"non-numeric value {cell.strip()!r}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    return header, np.array(rows, dtype=float)


def load_csv(
    path,
    target_column,
    subset_n=None,
    seed=0,
    test_path=None,
    classification=False,
):
    """Load a numeric CSV into a standardized train/test split.

    With ``subset_n`` given, a seeded random subset of that size becomes the
    training set and (absent ``test_path``) the remaining rows become the
    test set.  Feature standardization (zero mean, unit variance; constant
    columns to zero) is fitted on the training rows only.  With
    ``classification=True``, targets are binarized by the sign of the
    median-centered training target.
    """
    header, table = _read_numeric_csv(path)
    if target_column not in header:
        raise CsvFormatError(
            f"{path}: target column {target_column!r} not found; "
            f"available: {header}"
        )
    t_idx = header.index(target_column)
    feat_idx = [j for j in range(len(header)) if j != t_idx]
    if not feat_idx:
        raise CsvFormatError(f"{path}: no feature columns besides the target")

    x_all, y_all = table[:, feat_idx], table[:, t_idx]
    n = x_all.shape[0]

    if subset_n is not None:
        if not 0 < subset_n <= n:
            raise ValueError(f"subset_n must be in [1, {n}], got {subset_n}")
        rng = np.random.default_rng(seed)
        chosen = np.sort(rng.permutation(n)[:subset_n])
        train_x, train_y = x_all[chosen], y_all[chosen]
        if test_path is None:
            if subset_n == n:
                raise ValueError(
                    "subset_n equals the row count and no test_path was given; "
                    "nothing is left for the test split"
                )
            rest = np.setdiff1d(np.arange(n), chosen)
            test_x, test_y = x_all[rest], y_all[rest]
    else:
        if test_path is None:
            raise ValueError("need subset_n or test_path to form a test split")
        train_x, train_y = x_all, y_all

    if test_path is not None:
        t_header, t_table = _read_numeric_csv(test_path)
        if t_header != header:
            raise CsvFormatError(
                f"{test_path}: header differs from {path}"
            )
        test_x, test_y = t_table[:, feat_idx], t_table[:, t_idx]

    mean = train_x.mean(axis=0)
    std = train_x.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    train_x = (train_x - mean) / scale
    test_x = (test_x - mean) / scale

    kind = "regression"
    if classification:
        med = float(np.median(train_y))
        train_y = np.where(train_y > med, 1.0, -1.0)
        test_y = np.where(test_y > med, 1.0, -1.0)
        kind = "classification"

    meta = {"source": str(path), "target": target_column, "seed": seed}
    return SplitDataset(
        train=Dataset(x=train_x, y=train_y, kind=kind, meta=dict(meta)),
        test=Dataset(x=test_x, y=test_y, kind=kind, meta=dict(meta)),
    )
