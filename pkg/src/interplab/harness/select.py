"""Step-size selection over completed runs.

A candidate step size is admissible only if every seed's run finished
without divergence, never blew the training loss up past 10x its starting
value, and ended no higher than it started.  Among admissible candidates
the winner minimizes the average of the training loss halfway through and
at the end of training, averaged over seeds.
"""

from __future__ import annotations

import csv
import glob
import json
import os

import numpy as np

from . import metrics

BLOWUP_FACTOR = 10.0


def _load_runs(out_dir, config_hash):
    runs = []
    for path in sorted(glob.glob(os.path.join(out_dir, f"{config_hash}_*.json"))):
        if path.endswith("_data_meta.json"):
            continue
        with open(path, encoding="utf-8") as fh:
            side = json.load(fh)
        if "optimizer" not in side:
            continue
        csv_path = path[: -len(".json")] + ".csv"
        iters, losses = [], []
        if os.path.exists(csv_path):
            with open(csv_path, newline="", encoding="utf-8") as fh:
                for row in csv.DictReader(fh):
                    iters.append(int(row["iter"]))
                    losses.append(float(row["train_loss"]))
        runs.append(
            {
                "optimizer": side["optimizer"],
                "eta": float(side["eta"]),
                "seed": int(side["seed"]),
                "status": side["status"],
                "iters": np.array(iters, dtype=int),
                "losses": np.array(losses, dtype=float),
            }
        )
    return runs


def _run_verdict(run):
    """Return (admissible, reason, score) for one run."""
    if run["status"] != "ok":
        return False, run["status"], np.nan
    losses = run["losses"]
    if losses.size == 0 or not np.all(np.isfinite(losses)):
        return False, "empty_or_nonfinite", np.nan
    first, last = losses[0], losses[-1]
    if losses.max() > BLOWUP_FACTOR * max(first, 1e-300):
        return False, "loss_blowup", np.nan
    if last > first:
        return False, "final_above_initial", np.nan
    half_target = run["iters"][-1] / 2.0
    half_idx = int(np.argmin(np.abs(run["iters"] - half_target)))
    return True, "ok", 0.5 * (losses[half_idx] + last)


def select_stepsizes(out_dir, config_hash):
    """Pick one step size per optimizer; write a selection report CSV.

    Returns (choices, rows) where choices maps optimizer id to the chosen
    step size (None when every candidate was rejected).
    """
    runs = _load_runs(out_dir, config_hash)
    groups: dict = {}
    for run in runs:
        groups.setdefault(run["optimizer"], {}).setdefault(run["eta"], []).append(run)

    rows = []
    choices = {}
    for opt in sorted(groups):
        candidates = []
        for eta in sorted(groups[opt]):
            seed_runs = groups[opt][eta]
            verdicts = [_run_verdict(r) for r in seed_runs]
            bad = [v for v in verdicts if not v[0]]
            if bad:
                rows.append(
                    {
                        "optimizer": opt,
                        "eta": eta,
                        "admissible": 0,
                        "reason": bad[0][1],
                        "n_runs": len(seed_runs),
                        "score": "",
                        "selected": 0,
                    }
                )
                continue
            score = float(np.mean([v[2] for v in verdicts]))
            candidates.append((score, eta))
            rows.append(
                {
                    "optimizer": opt,
                    "eta": eta,
                    "admissible": 1,
                    "reason": "ok",
                    "n_runs": len(seed_runs),
                    "score": repr(score),
                    "selected": 0,
                }
            )
        if candidates:
            _, best_eta = min(candidates)
            choices[opt] = best_eta
            for row in rows:
                if row["optimizer"] == opt and row["eta"] == best_eta:
                    row["selected"] = 1
        else:
            choices[opt] = None

    report = os.path.join(out_dir, f"{config_hash}_selection.csv")
    with open(report, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=[
                "optimizer",
                "eta",
                "admissible",
                "reason",
                "n_runs",
                "score",
                "selected",
            ],
        )
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return choices, rows


def schema_columns():
    """The fixed trajectory-CSV schema, for downstream consumers."""
    return metrics.COLUMNS
