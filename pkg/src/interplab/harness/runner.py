"""Run execution: datasets from config, sweeps over (optimizer, step, seed),
fixed-schema CSV trajectories plus a JSON sidecar per run.

Files are named ``{config_hash}_{optimizer}_eta{step}_seed{seed}.csv`` so
different configs never collide in a shared output directory.  A diverging
run still produces its partial trajectory and a sidecar with
``status: "diverged"``; sibling runs are unaffected.
"""

from __future__ import annotations

import csv
import json
import os
import re
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .. import datasets, ntk, precond
from ..errors import DivergenceError, InterplabError
from ..optimizers import (
    BallProject,
    OptimizerSpec,
    SpanProjectAtEnd,
    SpanProjectEachStep,
    SwitchToGd,
    record_schedule,
    run,
)
from . import config as config_mod
from . import metrics


def build_dataset(dcfg, seed):
    """Materialize the configured dataset for one run seed.

    Synthetic regression keeps the ground-truth substreams tied to the
    config-level seed and resamples only the observations per run seed,
    matching the repeat protocol of the experiments.
    """
    gen = dcfg["generator"]
    zeta = float(dcfg.get("zeta_sq", 10.0))
    noise = float(dcfg.get("noise_var", 0.0))
    if gen == "regression":
        return datasets.gen_regression(
            dcfg["n"],
            dcfg["d"],
            zeta_sq=zeta,
            noise_var=noise,
            seed=int(dcfg.get("seed", 0)),
            sample_seed=seed,
        )
    if gen == "relative_margin":
        return datasets.gen_relative_margin(
            dcfg["n_train"], dcfg["n_test"], seed=seed
        )
    if gen == "two_point":
        return datasets.gen_two_point(float(dcfg["a"]))
    if gen == "random_features":
        return datasets.gen_random_features(
            dcfg["n_train"],
            dcfg["n_test"],
            dcfg["d"],
            noise_var=noise,
            seed=seed,
            zeta_sq=zeta,
        )
    if gen == "ntk_regression":
        return ntk.gen_ntk_regression(
            dcfg["n_train"],
            dcfg["n_test"],
            input_dim=int(dcfg.get("input_dim", 20)),
            hidden_units=int(dcfg.get("hidden_units", 50)),
            zeta_sq=zeta,
            noise_var=noise,
            seed=seed,
        )
    if gen == "csv":
        return datasets.load_csv(
            dcfg["path"],
            dcfg["target_column"],
            subset_n=dcfg.get("subset_n"),
            seed=seed,
            test_path=dcfg.get("test_path"),
            classification=bool(dcfg.get("classification", False)),
        )
    raise ValueError(f"unhandled generator {gen!r}")


def build_preconditioner(name, train):
    if name is None:
        return None
    if name == "inverse_covariance_empirical":
        return precond.inverse_covariance(train, mode="empirical").matrix
    mat = precond.inverse_covariance(train, mode="true").matrix
    if name == "inverse_covariance_true_normalized":
        mat = mat / np.linalg.eigvalsh(mat)[-1]
    return mat


def build_wrappers(entries):
    out = []
    for entry in entries:
        kind = entry["kind"]
        if kind == "span_each":
            out.append(SpanProjectEachStep())
        elif kind == "span_end":
            out.append(SpanProjectAtEnd())
        elif kind == "switch_gd":
            out.append(
                SwitchToGd(
                    fraction=float(entry.get("fraction", 0.75)),
                    gd_step=float(entry.get("gd_step", 10.0)),
                )
            )
        elif kind == "ball":
            out.append(BallProject(radius=float(entry["radius"])))
        else:
            raise ValueError(f"unhandled wrapper {kind!r}")
    return tuple(out)


def _slug(text):
    return re.sub(r"[^A-Za-z0-9_.-]+", "-", str(text))


def run_stem(cfg, opt, eta, seed):
    return f"{cfg.config_hash}_{_slug(opt.id)}_eta{eta:g}_seed{seed}"


def _format_cell(value):
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def _write_rows(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(metrics.COLUMNS)
        for row in rows:
            writer.writerow([_format_cell(row[c]) for c in metrics.COLUMNS])


def run_one(cfg, opt_index, eta, seed, out_dir):
    """Execute a single configured run and write its CSV + sidecar.

    Returns a small summary dict; never raises for divergence — that is a
    reportable outcome, not an error.
    """
    opt = cfg.optimizers[opt_index]
    data = build_dataset(cfg.dataset, seed)
    train = data.train if isinstance(data, datasets.SplitDataset) else data
    p_matrix = build_preconditioner(opt.preconditioner, train)
    ctx = metrics.make_context(data, cfg.loss, p_matrix=p_matrix)
    spec = OptimizerSpec(
        method=opt.method,
        step_size=eta,
        preconditioner=p_matrix,
        batch_size=opt.batch_size,
        lm_lambda=opt.lm_lambda,
        eps=opt.eps,
    )
    wrappers = build_wrappers(opt.wrappers)
    schedule = record_schedule(cfg.iters, cap=cfg.record_cap, ratio=cfg.record_ratio)

    status, error, traj = "ok", None, None
    try:
        traj = run(
            spec,
            train,
            kind=cfg.loss,
            iters=cfg.iters,
            seed=seed,
            wrappers=wrappers,
            record_iters=schedule,
        )
    except DivergenceError as exc:
        status, error, traj = "diverged", str(exc), exc.trajectory
    except InterplabError as exc:
        status, error = "error", str(exc)

    rows = []
    final_w = None
    final_iter = -1
    if traj is not None:
        for it, w in zip(traj.iterations, traj.snapshots):
            rows.append(metrics.row(ctx, it, w))
        final_w = traj.final_w
        final_iter = traj.final_iter

    stem = run_stem(cfg, opt, eta, seed)
    csv_path = os.path.join(out_dir, stem + ".csv")
    _write_rows(csv_path, rows)
    sidecar = {
        "config_hash": cfg.config_hash,
        "optimizer": opt.id,
        "method": opt.method,
        "eta": eta,
        "seed": seed,
        "status": status,
        "error": error,
        "final_iter": final_iter,
        "final_w": None if final_w is None else [float(v) for v in final_w],
    }
    with open(os.path.join(out_dir, stem + ".json"), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=1, sort_keys=True)
    return {
        "optimizer": opt.id,
        "eta": eta,
        "seed": seed,
        "status": status,
        "error": error,
        "rows": len(rows),
        "csv": csv_path,
    }


def _worker(payload):
    raw, opt_index, eta, seed, out_dir = payload
    cfg = config_mod.validate(raw)
    return run_one(cfg, opt_index, eta, seed, out_dir)


def execute(cfg, out_dir, seeds=None, jobs=1):
    """Run the full (optimizer x step-size x seed) grid of a config."""
    os.makedirs(out_dir, exist_ok=True)
    seeds = list(cfg.seeds if seeds is None else seeds)
    tasks = [
        (cfg.raw, i, eta, seed, out_dir)
        for i, opt in enumerate(cfg.optimizers)
        for eta in opt.step_sizes
        for seed in seeds
    ]
    if jobs <= 1 or len(tasks) <= 1:
        return [_worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_worker, tasks))


def write_dataset_files(cfg, out_dir, seed=None):
    """``generate``: serialize the configured dataset to CSV + metadata."""
    os.makedirs(out_dir, exist_ok=True)
    seed = cfg.seeds[0] if seed is None else seed
    data = build_dataset(cfg.dataset, seed)
    if isinstance(data, datasets.SplitDataset):
        parts = {"train": data.train, "test": data.test}
    else:
        parts = {"train": data}
    paths = []
    for name, part in parts.items():
        path = os.path.join(out_dir, f"{cfg.config_hash}_{name}.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x{j}" for j in range(part.d)] + ["y"])
            for i in range(part.n):
                writer.writerow(
                    [repr(float(v)) for v in part.x[i]] + [repr(float(part.y[i]))]
                )
        paths.append(path)
    train = parts["train"]
    meta = {
        "config_hash": cfg.config_hash,
        "generator": cfg.dataset["generator"],
        "seed": seed,
        "params": {k: v for k, v in cfg.dataset.items() if k != "generator"},
        "kind": train.kind,
        "n": {name: part.n for name, part in parts.items()},
        "d": train.d,
    }
    if train.w_star is not None:
        meta["w_star"] = [float(v) for v in train.w_star]
    if train.sigma is not None:
        sigma = np.asarray(train.sigma)
        if sigma.ndim == 2 and np.allclose(sigma, np.diag(np.diag(sigma))):
            meta["sigma_diag"] = [float(v) for v in np.diag(sigma)]
        else:
            meta["sigma"] = [[float(v) for v in row] for row in np.atleast_2d(sigma)]
        meta["noise_var"] = float(train.noise_var)
    meta_path = os.path.join(out_dir, f"{cfg.config_hash}_data_meta.json")
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
    return paths + [meta_path]
