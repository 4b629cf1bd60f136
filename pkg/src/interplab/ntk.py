"""Tangent-kernel feature maps for one-hidden-layer scalar networks.

The network is f(x) = (1/sqrt(h)) * sum_j v_j * phi(a_j) with
pre-activations a_j = (1/sqrt(d)) <u_j, x>, sigmoid phi, standard-normal
weights, and no bias terms (homogeneous form).  The feature map is the
Jacobian of f with respect to all parameters theta = (U, v) at the sampled
initialization, used as a fixed linear featurization; the network itself is
never trained.

Feature column order: all of U flattened row-major (unit index varies
slowest), then v.  Total p = hidden * input_dim + hidden columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import Dataset, SplitDataset, _streams


@dataclass(frozen=True)
class NtkConfig:
    input_dim: int
    hidden_units: int
    activation: str = "sigmoid"
    seed: int = 0

    def __post_init__(self):
        if self.hidden_units <= 0:
            raise ValueError("hidden_units must be positive")
        if self.input_dim <= 0:
            raise ValueError("input_dim must be positive")
        if self.activation != "sigmoid":
            raise ValueError(
                f"unsupported activation {self.activation!r}; only 'sigmoid'"
            )


def param_count(cfg):
    return cfg.hidden_units * cfg.input_dim + cfg.hidden_units


def sample_weights(cfg):
    """Standard-normal initialization (U, v), deterministic in cfg.seed."""
    rng = np.random.default_rng(cfg.seed)
    u = rng.standard_normal((cfg.hidden_units, cfg.input_dim))
    v = rng.standard_normal(cfg.hidden_units)
    return u, v


def network_output(x, cfg, weights=None):
    """Scalar network output per row; used by the finite-difference tests."""
    u, v = weights if weights is not None else sample_weights(cfg)
    a = (x @ u.T) / np.sqrt(cfg.input_dim)
    return (_sigmoid(a) @ v) / np.sqrt(cfg.hidden_units)


def _sigmoid(a):
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


def ntk_features(x, cfg):
    """Jacobian features d f(x_i) / d theta, one row per sample.

    Inputs are expected to be standardized beforehand; the map itself does
    not rescale.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != cfg.input_dim:
        raise ValueError(
            f"X must be (n, {cfg.input_dim}), got {x.shape}"
        )
    u, v = sample_weights(cfg)
    h, d = cfg.hidden_units, cfg.input_dim
    a = (x @ u.T) / np.sqrt(d)  # (n, h)
    s = _sigmoid(a)
    s_prime = s * (1.0 - s)
    # d f / d U[j, k] = v_j phi'(a_j) x_k / sqrt(h d)
    coef = (v * s_prime) / np.sqrt(h * d)  # (n, h)
    du = coef[:, :, None] * x[:, None, :]  # (n, h, d)
    dv = s / np.sqrt(h)  # (n, h)
    return np.concatenate([du.reshape(x.shape[0], h * d), dv], axis=1)


def gen_ntk_regression(
    n_train,
    n_test,
    input_dim=20,
    hidden_units=50,
    zeta_sq=10.0,
    noise_var=0.0,
    seed=0,
):
    """Regression on tangent-kernel features of Gaussian inputs.

    Raw inputs are drawn from N(0, I + Diag(delta^2)), standardized with
    training statistics, and mapped through the Jacobian features; targets
    are realizable by construction (y = Phi theta for a random unit theta),
    plus optional label noise.
    """
    if n_train <= 0 or n_test <= 0:
        raise ValueError("split sizes must be positive")
    rng_delta, rng_x, rng_theta, rng_eps, rng_wseed = _streams(seed, 5)

    n = n_train + n_test
    delta = np.sqrt(zeta_sq) * rng_delta.standard_normal(input_dim)
    raw = rng_x.standard_normal((n, input_dim)) * np.sqrt(1.0 + delta**2)

    mean = raw[:n_train].mean(axis=0)
    std = raw[:n_train].std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    std_raw = (raw - mean) / scale

    cfg = NtkConfig(
        input_dim=input_dim,
        hidden_units=hidden_units,
        seed=int(rng_wseed.integers(2**31)),
    )
    phi = ntk_features(std_raw, cfg)

    theta = rng_theta.standard_normal(phi.shape[1])
    theta /= np.linalg.norm(theta)
    y = phi @ theta
    if noise_var > 0:
        y = y + np.sqrt(noise_var) * rng_eps.standard_normal(n)

    meta = {
        "input_dim": input_dim,
        "hidden_units": hidden_units,
        "zeta_sq": float(zeta_sq),
        "seed": seed,
        "ntk_seed": cfg.seed,
    }

    def _part(sl):
        return Dataset(
            x=phi[sl],
            y=y[sl],
            kind="regression",
            w_star=theta,
            sigma=None,
            noise_var=float(noise_var),
            meta=dict(meta),
        )

    return SplitDataset(
        train=_part(slice(0, n_train)), test=_part(slice(n_train, n))
    )
