"""Harness tests: config validation, metric rows, run artifacts on disk,
step-size selection, the built-in verify suites, and the CLI entry point."""

import csv
import json
import os

import numpy as np
import pytest

from interplab import analysis, datasets, linalg
from interplab.errors import ConfigError
from interplab.harness import cli, metrics, runner, select, verify
from interplab.harness import config as config_mod


def valid_doc():
    """A minimal document that passes validation; tests mutate copies."""
    return {
        "dataset": {"generator": "regression", "n": 6, "d": 15, "zeta_sq": 4.0},
        "loss": {"kind": "squared"},
        "run": {"iters": 40, "seeds": [0, 1]},
        "optimizers": [{"id": "gd", "method": "gd", "step_sizes": [0.05, 0.01]}],
    }


CONFIG_TOML = """\
[dataset]
generator = "regression"
n = 6
d = 15
zeta_sq = 4.0

[loss]
kind = "squared"

[run]
iters = 40
seeds = [0]

[[optimizers]]
id = "gd"
method = "gd"
step_sizes = [0.002, 0.0005]
"""

DIVERGING_TOML = CONFIG_TOML.replace("step_sizes = [0.002, 0.0005]", "step_sizes = [50.0]")


class TestConfigValidation:
    def test_valid_doc_round_trip(self):
        cfg = config_mod.validate(valid_doc())
        assert cfg.loss == "squared"
        assert cfg.iters == 40
        assert cfg.seeds == [0, 1]
        assert cfg.out == "results"
        assert cfg.record_cap == 500
        assert cfg.record_ratio == pytest.approx(1.3)
        (opt,) = cfg.optimizers
        assert opt.id == "gd"
        assert opt.step_sizes == [0.05, 0.01]
        assert all(isinstance(s, float) for s in opt.step_sizes)
        assert opt.batch_size is None

    @pytest.mark.parametrize(
        "mutate, message",
        [
            (lambda d: d.pop("dataset"), r"config\.dataset: missing"),
            (lambda d: d["loss"].pop("kind"), r"loss\.kind: missing"),
            (lambda d: d["loss"].update(kind="huber"), r"loss\.kind: 'huber' not one of"),
            (lambda d: d["run"].update(iters=0), r"run\.iters: must be positive"),
            (lambda d: d["run"].update(seeds=[]), r"run\.seeds: need a non-empty"),
            (lambda d: d["run"].update(seeds=[0, "x"]), r"run\.seeds"),
            (lambda d: d["run"].update(record_cap=0), r"cap > 0, ratio > 1"),
            (lambda d: d["run"].update(record_ratio=1.0), r"cap > 0, ratio > 1"),
            (lambda d: d.update(optimizers=[]), r"optimizers: need at least one"),
            (
                lambda d: d["dataset"].update(generator="mystery"),
                r"dataset\.generator: 'mystery' not one of",
            ),
            (
                lambda d: d["optimizers"][0].update(method="annealing"),
                r"optimizers\[0\]\.method",
            ),
            (
                lambda d: d["optimizers"][0].update(step_sizes=[]),
                r"step_sizes: need a non-empty list of numbers",
            ),
            (
                lambda d: d["optimizers"][0].update(step_sizes=[0.1, "big"]),
                r"step_sizes",
            ),
            (
                lambda d: d["optimizers"][0].update(preconditioner="whitening"),
                r"preconditioner: 'whitening' not one of",
            ),
            (
                lambda d: d["optimizers"][0].update(wrappers=["mirror"]),
                r"unknown wrapper 'mirror'",
            ),
            (
                lambda d: d["optimizers"][0].update(wrappers=[{"kind": "ball"}]),
                r"ball wrapper needs a radius",
            ),
            (
                lambda d: d["dataset"].update(zeta_sq=-1.0),
                r"dataset\.zeta_sq: must be non-negative",
            ),
        ],
    )
    def test_key_path_errors(self, mutate, message):
        doc = valid_doc()
        mutate(doc)
        with pytest.raises(ConfigError, match=message):
            config_mod.validate(doc)

    def test_duplicate_optimizer_ids_rejected(self):
        doc = valid_doc()
        doc["optimizers"].append(
            {"id": "gd", "method": "nesterov_gd", "step_sizes": [0.1]}
        )
        with pytest.raises(ConfigError, match="duplicate id"):
            config_mod.validate(doc)

    def test_optimizer_id_defaults_to_method(self):
        doc = valid_doc()
        del doc["optimizers"][0]["id"]
        cfg = config_mod.validate(doc)
        assert cfg.optimizers[0].id == "gd"

    def test_two_point_a_must_be_interior(self):
        doc = valid_doc()
        doc["dataset"] = {"generator": "two_point", "a": 1.5}
        with pytest.raises(ConfigError, match=r"must lie in \(0, 1\)"):
            config_mod.validate(doc)
        doc["dataset"]["a"] = 0.4
        assert config_mod.validate(doc).dataset["a"] == 0.4

    def test_csv_generator_needs_path_and_target(self):
        doc = valid_doc()
        doc["dataset"] = {"generator": "csv", "path": "x.csv"}
        with pytest.raises(ConfigError, match=r"dataset\.target_column: missing"):
            config_mod.validate(doc)

    def test_sgd_batch_defaults_depend_on_data_source(self):
        doc = valid_doc()
        doc["optimizers"] = [{"method": "sgd", "step_sizes": [0.1]}]
        assert config_mod.validate(doc).optimizers[0].batch_size == 5

        doc["dataset"] = {"generator": "csv", "path": "x.csv", "target_column": "y"}
        assert config_mod.validate(doc).optimizers[0].batch_size == 2

        doc["optimizers"][0]["batch_size"] = 7
        assert config_mod.validate(doc).optimizers[0].batch_size == 7

    def test_wrapper_string_and_table_forms(self):
        doc = valid_doc()
        doc["optimizers"][0]["wrappers"] = [
            "span_each",
            {"kind": "ball", "radius": 0.5},
        ]
        wrappers = config_mod.validate(doc).optimizers[0].wrappers
        assert wrappers[0] == {"kind": "span_each"}
        assert wrappers[1] == {"kind": "ball", "radius": 0.5}

    def test_config_hash_is_stable_and_content_sensitive(self):
        first = config_mod.validate(valid_doc()).config_hash
        again = config_mod.validate(valid_doc()).config_hash
        assert first == again
        assert len(first) == 12
        assert set(first) <= set("0123456789abcdef")

        doc = valid_doc()
        doc["run"]["iters"] = 41
        assert config_mod.validate(doc).config_hash != first


class TestConfigLoad:
    def test_load_parses_toml_file(self, tmp_path):
        path = tmp_path / "exp.toml"
        path.write_text(CONFIG_TOML, encoding="utf-8")
        cfg = config_mod.load(str(path))
        assert cfg.dataset["generator"] == "regression"
        assert cfg.optimizers[0].step_sizes == [0.002, 0.0005]
        # the hash is taken over the parsed document, so loading the same
        # file twice agrees with validating the same dict twice
        assert cfg.config_hash == config_mod.load(str(path)).config_hash

    def test_missing_file_is_a_config_error(self, tmp_path):
        with pytest.raises(ConfigError, match="config file not found"):
            config_mod.load(str(tmp_path / "nope.toml"))

    def test_malformed_toml_is_a_config_error(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("[dataset\ngenerator =", encoding="utf-8")
        with pytest.raises(ConfigError):
            config_mod.load(str(path))


class TestMetricRows:
    def test_column_schema_is_fixed(self):
        assert metrics.COLUMNS == (
            "iter",
            "train_loss",
            "train_acc",
            "test_loss_or_risk",
            "test_acc",
            "l2_norm",
            "p_norm",
            "emp_margin",
            "angle_to_mm",
            "span_residual",
        )
        assert select.schema_columns() == metrics.COLUMNS

    def test_regression_row_reports_excess_risk_and_nan_accuracy(self):
        data = datasets.gen_regression(8, 20, zeta_sq=4.0, noise_var=0.0, seed=0)
        ctx = metrics.make_context(data, "squared")
        w = analysis.min_norm(data.x, data.y).w
        row = metrics.row(ctx, 3, w)
        assert row["iter"] == 3
        assert row["train_loss"] == pytest.approx(0.0, abs=1e-18)
        assert np.isnan(row["train_acc"])
        assert np.isnan(row["test_acc"])
        assert np.isnan(row["emp_margin"])
        assert row["test_loss_or_risk"] == pytest.approx(
            analysis.excess_risk(w, data), rel=1e-12
        )
        assert row["l2_norm"] == pytest.approx(np.linalg.norm(w))
        # the min-norm solution lies in the row span and is the reference
        assert row["span_residual"] < 1e-10
        assert row["angle_to_mm"] < 1e-8

    def test_span_residual_measures_null_space_fraction(self):
        data = datasets.gen_regression(8, 20, seed=1)
        ctx = metrics.make_context(data, "squared")
        off = linalg.null_basis(data.x)[0]
        row = metrics.row(ctx, 0, off)
        assert row["span_residual"] == pytest.approx(1.0, abs=1e-10)

    def test_classification_split_rows(self):
        split = datasets.gen_relative_margin(30, 20, seed=2)
        ctx = metrics.make_context(split, "exponential")
        w = analysis.max_margin(split.train).w
        row = metrics.row(ctx, 10, w)
        assert 0.0 <= row["train_acc"] <= 1.0
        assert 0.0 <= row["test_acc"] <= 1.0
        assert row["train_acc"] == pytest.approx(1.0)  # separable by construction
        assert row["emp_margin"] == pytest.approx(
            analysis.empirical_margin(w, split.train), rel=1e-12
        )
        assert row["angle_to_mm"] < 1e-6
        assert np.isfinite(row["test_loss_or_risk"])

    def test_regression_split_uses_mean_squared_test_residual(self):
        split = datasets.gen_random_features(20, 10, 40, seed=3)
        # random features are classification; build a regression split by hand
        train = datasets.gen_regression(10, 25, seed=4)
        test = datasets.gen_regression(8, 25, seed=5)
        split = datasets.SplitDataset(train=train, test=test)
        ctx = metrics.make_context(split, "squared")
        rng = np.random.default_rng(6)
        w = rng.standard_normal(25)
        row = metrics.row(ctx, 0, w)
        expected = float(np.mean((test.x @ w - test.y) ** 2))
        assert row["test_loss_or_risk"] == pytest.approx(expected, rel=1e-12)

    def test_p_norm_needs_a_preconditioner(self):
        data = datasets.gen_regression(8, 20, seed=7)
        rng = np.random.default_rng(8)
        a = rng.standard_normal((20, 20))
        p = a @ a.T + 0.5 * np.eye(20)
        w = rng.standard_normal(20)

        plain = metrics.row(metrics.make_context(data, "squared"), 0, w)
        assert np.isnan(plain["p_norm"])

        ctx = metrics.make_context(data, "squared", p_matrix=p)
        row = metrics.row(ctx, 0, w)
        assert row["p_norm"] == pytest.approx(
            linalg.quad_norm(w, np.linalg.inv(p)), rel=1e-9
        )

    def test_zero_weight_row_is_well_defined(self):
        data = datasets.gen_regression(8, 20, seed=9)
        ctx = metrics.make_context(data, "squared", p_matrix=np.eye(20))
        row = metrics.row(ctx, 0, np.zeros(20))
        assert row["l2_norm"] == 0.0
        assert row["span_residual"] == 0.0
        assert np.isnan(row["p_norm"])
        assert np.isnan(row["angle_to_mm"])

    def test_duplicate_rows_do_not_break_the_context(self):
        data = datasets.gen_regression(6, 15, seed=10)
        x = np.vstack([data.x, data.x[0]])
        y = np.concatenate([data.y, data.y[:1]])
        stacked = datasets.Dataset(x=x, y=y, kind="regression")
        ctx = metrics.make_context(stacked, "squared")
        pi = ctx.projector
        np.testing.assert_allclose(pi @ pi, pi, atol=1e-10)
        np.testing.assert_allclose(x @ pi, x, atol=1e-10)


class TestRunArtifacts:
    def test_run_stem_slugs_the_optimizer_id(self):
        doc = valid_doc()
        doc["optimizers"][0]["id"] = "my opt/v2"
        cfg = config_mod.validate(doc)
        stem = runner.run_stem(cfg, cfg.optimizers[0], 0.05, 3)
        assert stem == f"{cfg.config_hash}_my-opt-v2_eta0.05_seed3"

    def test_run_one_writes_csv_and_sidecar(self, tmp_path):
        cfg = config_mod.validate(valid_doc())
        res = runner.run_one(cfg, 0, 0.002, 0, str(tmp_path))
        assert res["status"] == "ok"
        assert res["error"] is None

        stem = runner.run_stem(cfg, cfg.optimizers[0], 0.002, 0)
        with open(tmp_path / f"{stem}.csv", newline="") as fh:
            reader = csv.DictReader(fh)
            assert tuple(reader.fieldnames) == metrics.COLUMNS
            rows = list(reader)
        assert len(rows) == res["rows"]
        assert int(rows[0]["iter"]) == 0
        assert int(rows[-1]["iter"]) == cfg.iters
        losses = [float(r["train_loss"]) for r in rows]
        assert losses[-1] < losses[0]

        side = json.loads((tmp_path / f"{stem}.json").read_text())
        assert side["status"] == "ok"
        assert side["config_hash"] == cfg.config_hash
        assert side["optimizer"] == "gd"
        assert side["eta"] == 0.002
        assert side["final_iter"] == cfg.iters
        final_w = np.array(side["final_w"])
        assert final_w.shape == (15,)
        # the sidecar iterate is the one behind the last CSV row
        assert float(rows[-1]["l2_norm"]) == np.linalg.norm(final_w)

    def test_execute_covers_the_grid_and_is_hermetic(self, tmp_path):
        cfg = config_mod.validate(valid_doc())
        dir_a, dir_b = tmp_path / "a", tmp_path / "b"
        results = runner.execute(cfg, str(dir_a))
        assert len(results) == 2 * 2  # two step sizes x two seeds
        runner.execute(cfg, str(dir_b))
        names = sorted(os.listdir(dir_a))
        assert names == sorted(os.listdir(dir_b))
        for name in names:
            assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes()

    def test_seed_override_restricts_the_grid(self, tmp_path):
        cfg = config_mod.validate(valid_doc())
        results = runner.execute(cfg, str(tmp_path), seeds=[5])
        assert {r["seed"] for r in results} == {5}
        assert all(name.endswith(("seed5.csv", "seed5.json")) for name in os.listdir(tmp_path))

    def test_parallel_execution_matches_serial(self, tmp_path):
        cfg = config_mod.validate(valid_doc())
        serial_dir, par_dir = tmp_path / "s", tmp_path / "p"
        runner.execute(cfg, str(serial_dir), jobs=1)
        runner.execute(cfg, str(par_dir), jobs=2)
        for name in sorted(os.listdir(serial_dir)):
            assert (serial_dir / name).read_bytes() == (par_dir / name).read_bytes()

    def test_diverging_run_is_isolated(self, tmp_path):
        doc = valid_doc()
        doc["optimizers"] = [
            {"id": "stable", "method": "gd", "step_sizes": [0.002]},
            {"id": "wild", "method": "gd", "step_sizes": [50.0]},
        ]
        cfg = config_mod.validate(doc)
        results = runner.execute(cfg, str(tmp_path), seeds=[0])
        by_id = {r["optimizer"]: r for r in results}
        assert by_id["stable"]["status"] == "ok"
        assert by_id["wild"]["status"] == "diverged"
        assert by_id["wild"]["error"]

        stem = runner.run_stem(cfg, cfg.optimizers[1], 50.0, 0)
        side = json.loads((tmp_path / f"{stem}.json").read_text())
        assert side["status"] == "diverged"
        assert np.all(np.isfinite(side["final_w"]))
        # the partial trajectory is still written out
        with open(tmp_path / f"{stem}.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert rows
        assert all(np.isfinite(float(r["train_loss"])) for r in rows)

    def test_generate_writes_dataset_and_metadata(self, tmp_path):
        cfg = config_mod.validate(valid_doc())
        paths = runner.write_dataset_files(cfg, str(tmp_path))
        assert all(os.path.exists(p) for p in paths)

        with open(tmp_path / f"{cfg.config_hash}_train.csv", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            data_rows = list(reader)
        assert header == [f"x{j}" for j in range(15)] + ["y"]
        assert len(data_rows) == 6

        meta = json.loads((tmp_path / f"{cfg.config_hash}_data_meta.json").read_text())
        assert meta["generator"] == "regression"
        assert meta["n"] == {"train": 6}
        assert meta["d"] == 15
        assert len(meta["w_star"]) == 15
        assert len(meta["sigma_diag"]) == 15
        # the serialized rows reproduce the generator output exactly
        data = runner.build_dataset(cfg.dataset, cfg.seeds[0])
        parsed = np.array([[float(v) for v in row] for row in data_rows])
        np.testing.assert_array_equal(parsed[:, :-1], data.x)
        np.testing.assert_array_equal(parsed[:, -1], data.y)

    def test_generate_split_dataset_writes_both_parts(self, tmp_path):
        doc = valid_doc()
        doc["dataset"] = {
            "generator": "random_features",
            "n_train": 12,
            "n_test": 8,
            "d": 30,
        }
        doc["loss"] = {"kind": "logistic"}
        cfg = config_mod.validate(doc)
        runner.write_dataset_files(cfg, str(tmp_path))
        meta = json.loads((tmp_path / f"{cfg.config_hash}_data_meta.json").read_text())
        assert meta["n"] == {"train": 12, "test": 8}
        assert meta["kind"] == "classification"
        for part in ("train", "test"):
            assert (tmp_path / f"{cfg.config_hash}_{part}.csv").exists()


def write_run(out_dir, config_hash, opt, eta, seed, iters, losses, status="ok"):
    """Drop a minimal run CSV + sidecar pair for selection tests."""
    stem = f"{config_hash}_{opt}_eta{eta:g}_seed{seed}"
    with open(os.path.join(out_dir, stem + ".json"), "w") as fh:
        json.dump({"optimizer": opt, "eta": eta, "seed": seed, "status": status}, fh)
    with open(os.path.join(out_dir, stem + ".csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "train_loss"])
        for it, loss in zip(iters, losses):
            writer.writerow([it, repr(float(loss))])


class TestStepsizeSelection:
    HASH = "abc123abc123"

    def test_lowest_mean_score_wins(self, tmp_path):
        # score = 0.5 * (loss at the recorded iter nearest T/2 + final loss)
        write_run(tmp_path, self.HASH, "gd", 0.1, 0, [0, 5, 10], [1.0, 0.6, 0.2])
        write_run(tmp_path, self.HASH, "gd", 0.2, 0, [0, 5, 10], [1.0, 0.9, 0.8])
        choices, rows = select.select_stepsizes(str(tmp_path), self.HASH)
        assert choices == {"gd": 0.1}
        by_eta = {r["eta"]: r for r in rows}
        assert by_eta[0.1]["selected"] == 1
        assert float(by_eta[0.1]["score"]) == pytest.approx(0.5 * (0.6 + 0.2))
        assert by_eta[0.2]["selected"] == 0
        assert float(by_eta[0.2]["score"]) == pytest.approx(0.5 * (0.9 + 0.8))

    def test_scores_average_over_seeds(self, tmp_path):
        write_run(tmp_path, self.HASH, "gd", 0.1, 0, [0, 10], [1.0, 0.4])
        write_run(tmp_path, self.HASH, "gd", 0.1, 1, [0, 10], [1.0, 0.8])
        choices, rows = select.select_stepsizes(str(tmp_path), self.HASH)
        (row,) = rows
        assert row["n_runs"] == 2
        # iters [0, 10]: nearest to half is iter 0 for seed losses starting at 1.0
        assert float(row["score"]) == pytest.approx(
            np.mean([0.5 * (1.0 + 0.4), 0.5 * (1.0 + 0.8)])
        )

    @pytest.mark.parametrize(
        "status, iters, losses, reason",
        [
            ("diverged", [0, 5, 10], [1.0, 0.5, 0.2], "diverged"),
            ("error", [], [], "error"),
            ("ok", [], [], "empty_or_nonfinite"),
            ("ok", [0, 5, 10], [1.0, np.nan, 0.2], "empty_or_nonfinite"),
            ("ok", [0, 5, 10], [1.0, 20.0, 0.5], "loss_blowup"),
            ("ok", [0, 5, 10], [1.0, 1.0, 1.5], "final_above_initial"),
        ],
    )
    def test_rejection_reasons(self, tmp_path, status, iters, losses, reason):
        write_run(
            tmp_path, self.HASH, "gd", 0.1, 0, iters, losses, status=status
        )
        choices, rows = select.select_stepsizes(str(tmp_path), self.HASH)
        (row,) = rows
        assert row["admissible"] == 0
        assert row["reason"] == reason
        assert choices == {"gd": None}

    def test_one_bad_seed_rejects_the_whole_candidate(self, tmp_path):
        write_run(tmp_path, self.HASH, "gd", 0.1, 0, [0, 10], [1.0, 0.1])
        write_run(
            tmp_path, self.HASH, "gd", 0.1, 1, [0, 10], [1.0, 0.1], status="diverged"
        )
        write_run(tmp_path, self.HASH, "gd", 0.2, 0, [0, 10], [1.0, 0.9])
        write_run(tmp_path, self.HASH, "gd", 0.2, 1, [0, 10], [1.0, 0.9])
        choices, _ = select.select_stepsizes(str(tmp_path), self.HASH)
        # the better-looking 0.1 loses because one of its seeds diverged
        assert choices == {"gd": 0.2}

    def test_report_csv_matches_returned_rows(self, tmp_path):
        write_run(tmp_path, self.HASH, "gd", 0.1, 0, [0, 10], [1.0, 0.2])
        write_run(tmp_path, self.HASH, "adam", 0.01, 0, [0, 10], [2.0, 1.0])
        _, rows = select.select_stepsizes(str(tmp_path), self.HASH)
        report = tmp_path / f"{self.HASH}_selection.csv"
        with open(report, newline="") as fh:
            reader = csv.DictReader(fh)
            assert reader.fieldnames == [
                "optimizer",
                "eta",
                "admissible",
                "reason",
                "n_runs",
                "score",
                "selected",
            ]
            parsed = list(reader)
        assert len(parsed) == len(rows) == 2
        assert sorted(r["optimizer"] for r in parsed) == ["adam", "gd"]
        assert all(r["selected"] == "1" for r in parsed)  # one candidate each

    def test_other_hashes_and_meta_files_are_ignored(self, tmp_path):
        write_run(tmp_path, self.HASH, "gd", 0.1, 0, [0, 10], [1.0, 0.2])
        write_run(tmp_path, "feedfeedfeed", "gd", 0.9, 0, [0, 10], [9.0, 9.0])
        (tmp_path / f"{self.HASH}_data_meta.json").write_text('{"generator": "x"}')
        choices, rows = select.select_stepsizes(str(tmp_path), self.HASH)
        assert choices == {"gd": 0.1}
        assert len(rows) == 1


class TestVerifySuites:
    def test_unknown_suite_lists_available_names(self):
        with pytest.raises(ConfigError, match="unknown suite"):
            verify.run_suites(["margin-preconditioner", "warp-drive"])

    def test_single_suite_rows_have_the_report_shape(self):
        rows, failed = verify.run_suites(["two-point-limits"])
        assert failed == 0
        assert len(rows) == 6  # margin + direction checks at three geometries
        for row in rows:
            assert row["suite"] == "two-point-limits"
            assert set(row) == {"suite", "check", "observed", "threshold", "passed"}
            assert row["observed"] <= row["threshold"]

    def test_all_suites_pass(self):
        rows, failed = verify.run_suites()
        assert failed == 0
        assert len(rows) == 18
        assert {row["suite"] for row in rows} == set(verify.SUITES)


class TestCli:
    def test_verify_subcommand(self, capsys):
        assert cli.main(["verify", "projection-identity"]) == 0
        out = capsys.readouterr().out
        assert "projection-identity/oblique_projection_maps_between_interpolants" in out
        assert "PASS" in out
        assert "1/1 checks passed" in out

    def test_verify_writes_a_report(self, tmp_path, capsys):
        report = tmp_path / "report.csv"
        assert cli.main(["verify", "risk-bound-chain", "--out", str(report)]) == 0
        capsys.readouterr()
        with open(report, newline="") as fh:
            (row,) = list(csv.DictReader(fh))
        assert row["suite"] == "risk-bound-chain"
        assert row["passed"] == "True"

    def test_verify_unknown_suite_exits_one(self, capsys):
        assert cli.main(["verify", "warp-drive"]) == 1
        assert "config error" in capsys.readouterr().err

    def test_run_subcommand_executes_the_sweep(self, tmp_path, capsys):
        config_path = tmp_path / "exp.toml"
        config_path.write_text(CONFIG_TOML, encoding="utf-8")
        out_dir = tmp_path / "results"
        code = cli.main(
            ["run", "--config", str(config_path), "--out", str(out_dir)]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert "2/2 runs ok" in out
        assert len(list(out_dir.glob("*.csv"))) == 2

    def test_run_reports_divergence_with_exit_two(self, tmp_path, capsys):
        config_path = tmp_path / "exp.toml"
        config_path.write_text(DIVERGING_TOML, encoding="utf-8")
        code = cli.main(
            ["run", "--config", str(config_path), "--out", str(tmp_path / "r")]
        )
        out = capsys.readouterr().out
        assert code == 2
        assert "diverged" in out
        assert "0/1 runs ok" in out

    def test_missing_config_exits_one(self, tmp_path, capsys):
        code = cli.main(
            ["run", "--config", str(tmp_path / "nope.toml"), "--out", str(tmp_path)]
        )
        assert code == 1
        assert "config error: config file not found" in capsys.readouterr().err

    def test_bad_seed_override_exits_one(self, tmp_path, capsys):
        config_path = tmp_path / "exp.toml"
        config_path.write_text(CONFIG_TOML, encoding="utf-8")
        code = cli.main(
            [
                "run",
                "--config",
                str(config_path),
                "--out",
                str(tmp_path / "r"),
                "--seeds",
                "zero",
            ]
        )
        assert code == 1
        assert "--seeds must be a list of integers" in capsys.readouterr().err

    def test_generate_prints_written_paths(self, tmp_path, capsys):
        config_path = tmp_path / "exp.toml"
        config_path.write_text(CONFIG_TOML, encoding="utf-8")
        assert cli.main(
            ["generate", "--config", str(config_path), "--out", str(tmp_path / "d")]
        ) == 0
        printed = capsys.readouterr().out.strip().splitlines()
        assert len(printed) == 2  # train CSV + metadata
        assert all(os.path.exists(p) for p in printed)

    def test_select_stepsize_after_a_sweep(self, tmp_path, capsys):
        config_path = tmp_path / "exp.toml"
        config_path.write_text(CONFIG_TOML, encoding="utf-8")
        out_dir = str(tmp_path / "r")
        cli.main(["run", "--config", str(config_path), "--out", out_dir])
        capsys.readouterr()
        code = cli.main(
            ["select-stepsize", "--config", str(config_path), "--out", out_dir]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert "selected" in out
        cfg = config_mod.load(str(config_path))
        report = os.path.join(out_dir, f"{cfg.config_hash}_selection.csv")
        with open(report, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert sum(int(r["selected"]) for r in rows) == 1
        # the larger stable step makes faster progress on this quadratic
        chosen = [r for r in rows if r["selected"] == "1"]
        assert float(chosen[0]["eta"]) == 0.002

    def test_select_stepsize_exits_two_when_everything_diverges(
        self, tmp_path, capsys
    ):
        config_path = tmp_path / "exp.toml"
        config_path.write_text(DIVERGING_TOML, encoding="utf-8")
        out_dir = str(tmp_path / "r")
        cli.main(["run", "--config", str(config_path), "--out", out_dir])
        capsys.readouterr()
        code = cli.main(
            ["select-stepsize", "--config", str(config_path), "--out", out_dir]
        )
        out = capsys.readouterr().out
        assert code == 2
        assert "selection failed for gd" in out
