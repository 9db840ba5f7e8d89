import json
import shutil
import subprocess

import numpy as np
import pytest

from imcc import load_csv, load_model, predict_scores, save_csv, save_model, synthetic_blobs
from imcc.cli import main
from imcc.datasets import NormStats
from imcc.solver import KernelModel, KernelSpec
from tests.test_model_io import validate_against


def run_cli(args):
    try:
        return main([str(a) for a in args])
    except SystemExit as exc:
        return exc.code


@pytest.fixture
def blob_csv(tmp_path):
    data = synthetic_blobs(n=60, d=4, q=3, blobs=4, seed=3)
    path = tmp_path / "blobs.csv"
    save_csv(data, path)
    return path, data


class TestHelpAndUsage:
    def test_help_exits_zero(self, capsys):
        assert run_cli(["--help"]) == 0
        for command in ("train", "predict", "evaluate", "benchmark", "stats",
                        "gen-synthetic"):
            assert run_cli([command, "--help"]) == 0
            out = capsys.readouterr().out
            assert "--seed" in out

    def test_unknown_flag_exits_one(self, capsys):
        assert run_cli(["train", "--no-such-flag"]) == 1

    def test_unknown_command_exits_one(self, capsys):
        assert run_cli(["frobnicate"]) == 1


class TestTrain:
    def test_round_trip_predictions(self, tmp_path, blob_csv, capsys):
        path, data = blob_csv
        model_path = tmp_path / "model.json"
        code = run_cli(
            ["train", "--data", path, "--labels", 3, "--model-out", model_path]
        )
        assert code == 0
        lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
        events = {l["event"] for l in lines}
        assert {"train_start", "kernel", "clusters", "trained", "saved"} <= events
        model = load_model(model_path)
        scores_a = predict_scores(model, data.features)
        scores_b = predict_scores(load_model(model_path), data.features)
        np.testing.assert_array_equal(scores_a, scores_b)

    def test_train_log_lines_match_schema(self, tmp_path, blob_csv, capsys):
        path, _ = blob_csv
        run_cli(["train", "--data", path, "--labels", 3,
                 "--model-out", tmp_path / "m.json"])
        for line in capsys.readouterr().out.splitlines():
            validate_against("train_log_line.schema.json", json.loads(line))

    def test_clusters_above_n_exits_one(self, tmp_path, blob_csv, capsys):
        path, _ = blob_csv
        code = run_cli(
            ["train", "--data", path, "--labels", 3, "--clusters", 100,
             "--model-out", tmp_path / "m.json"]
        )
        assert code == 1
        assert "cluster" in capsys.readouterr().err

    def test_linear_kernel_ridge_objective(self, tmp_path, blob_csv, capsys):
        path, data = blob_csv
        code = run_cli(
            ["train", "--data", path, "--labels", 3, "--kernel", "linear",
             "--alpha", 0, "--gamma", 0, "--beta", 2.0,
             "--model-out", tmp_path / "m.json"]
        )
        assert code == 0
        lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
        logged = next(l["objective"] for l in lines if l["event"] == "trained")

        # independent primal ridge on hand-normalized features
        X = np.asarray(data.features)
        mu, sd = X.mean(axis=0), X.std(axis=0)
        sd[sd == 0] = 1.0
        Xn = (X - mu) / sd
        Y = data.labels.astype(float)
        xbar, ybar = Xn.mean(axis=0), Y.mean(axis=0)
        Xc = Xn - xbar
        W = np.linalg.solve(Xc.T @ Xc + 2.0 * np.eye(4), Xc.T @ (Y - ybar))
        b = ybar - W.T @ xbar
        want = 0.5 * ((Xn @ W + b - Y) ** 2).sum() + 1.0 * (W**2).sum()
        assert logged == pytest.approx(want, rel=1e-8)

    def test_missing_required_flag_exits_one(self, blob_csv):
        path, _ = blob_csv
        assert run_cli(["train", "--data", path, "--labels", 3]) == 1

    def test_model_file_bytes_deterministic(self, tmp_path, blob_csv, capsys):
        path, _ = blob_csv
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            assert run_cli(
                ["train", "--data", path, "--labels", 3, "--model-out", out,
                 "--seed", 7]
            ) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_numerical_failure_exits_three(self, tmp_path, capsys):
        # exactly collinear wide-scale features with a tiny ridge weight
        rng = np.random.default_rng(0)
        col = rng.normal(size=(20, 1)) * 1e6
        rows = np.hstack([col, col, rng.choice((-1, 1), size=(20, 2))])
        path = tmp_path / "collinear.csv"
        path.write_text(
            "\n".join(",".join(f"{v:.17g}" for v in row) for row in rows) + "\n"
        )
        code = run_cli(
            ["train", "--data", path, "--labels", 2, "--solver", "linear",
             "--alpha", 0, "--gamma", 0, "--beta", 1e-9, "--clusters", 1,
             "--normalize", "none", "--model-out", tmp_path / "m.json"]
        )
        assert code == 3
        assert "beta" in capsys.readouterr().err


class TestPredict:
    def fit_model(self, tmp_path, blob_csv):
        path, data = blob_csv
        model_path = tmp_path / "model.json"
        assert run_cli(
            ["train", "--data", path, "--labels", 3, "--model-out", model_path]
        ) == 0
        return model_path, path, data

    def test_separable_training_data_fits_well(self, tmp_path, capsys):
        data = synthetic_blobs(n=60, d=4, q=3, blobs=4, flip_prob=0.0, seed=3)
        data_path = tmp_path / "clean.csv"
        save_csv(data, data_path)
        model_path = tmp_path / "model.json"
        assert run_cli(
            ["train", "--data", data_path, "--labels", 3, "--model-out", model_path]
        ) == 0
        out_path = tmp_path / "preds.csv"
        code = run_cli(
            ["predict", "--model", model_path, "--data", data_path,
             "--labels", 3, "--out", out_path]
        )
        assert code == 0
        matrix, names = _read_predictions(out_path)
        assert names[:3] == ["score_0", "score_1", "score_2"]
        preds = matrix[:, 3:]
        hamming = (preds != data.labels).mean()
        assert hamming < 0.05

    def test_dimension_mismatch_exits_two(self, tmp_path, blob_csv, capsys):
        model_path, _, _ = self.fit_model(tmp_path, blob_csv)
        other = tmp_path / "narrow.csv"
        save_csv(synthetic_blobs(n=10, d=3, q=2, blobs=2, seed=0), other)
        code = run_cli(
            ["predict", "--model", model_path, "--data", other, "--labels", 2,
             "--out", tmp_path / "p.csv"]
        )
        assert code == 2

    def test_zero_scores_predict_positive(self, tmp_path, capsys):
        model = KernelModel(
            np.zeros((5, 2)),
            np.zeros(2),
            KernelSpec("gaussian", 1.0),
            np.random.default_rng(0).normal(size=(5, 3)),
            NormStats.identity(3),
        )
        model_path = tmp_path / "zero.json"
        save_model(model, model_path)
        feats = tmp_path / "x.csv"
        feats.write_text("0.1,0.2,0.3\n1.0,1.0,1.0\n")
        out_path = tmp_path / "p.csv"
        assert run_cli(
            ["predict", "--model", model_path, "--data", feats, "--out", out_path]
        ) == 0
        matrix, _ = _read_predictions(out_path)
        assert np.all(matrix[:, 2:] == 1)


def _read_predictions(path):
    lines = path.read_text().splitlines()
    names = lines[0].split(",")
    matrix = np.array([[float(c) for c in line.split(",")] for line in lines[1:]])
    return matrix, names


class TestEvaluate:
    def make_files(self, tmp_path, scores, truth):
        data_path = tmp_path / "truth.csv"
        q = truth.shape[1]
        rows = [
            ",".join(["0.0"] + [str(int(v)) for v in row]) for row in truth
        ]
        data_path.write_text("\n".join(rows) + "\n")
        pred_path = tmp_path / "preds.csv"
        pred_path.write_text(
            "\n".join(",".join(f"{v:.17g}" for v in row) for row in scores) + "\n"
        )
        return pred_path, data_path, q

    def test_perfect_predictions(self, tmp_path, capsys):
        truth = np.array([[1, -1, 1], [-1, 1, 1], [1, 1, -1]])
        pred_path, data_path, q = self.make_files(tmp_path, truth.astype(float), truth)
        code = run_cli(
            ["evaluate", "--predictions", pred_path, "--data", data_path,
             "--labels", q]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        validate_against("metric_report.schema.json", report)
        assert report["one_error"] == 0.0
        assert report["hamming_loss"] == 0.0
        assert report["ranking_loss"] == 0.0
        assert report["average_precision"] == 1.0

    def test_inverted_predictions_hamming_one(self, tmp_path, capsys):
        truth = np.array([[1, -1], [-1, 1]])
        pred_path, data_path, q = self.make_files(
            tmp_path, -truth.astype(float), truth
        )
        assert run_cli(
            ["evaluate", "--predictions", pred_path, "--data", data_path,
             "--labels", q]
        ) == 0
        captured = capsys.readouterr()
        report = json.loads(captured.out)
        assert report["hamming_loss"] == 1.0
        # stderr carries the fixed-order table
        table_rows = [line.split()[0] for line in captured.err.splitlines()]
        assert table_rows == [
            "one_error", "hamming_loss", "ranking_loss", "coverage",
            "average_precision", "skipped_instances",
        ]

    def test_matches_library_calls(self, tmp_path, capsys):
        rng = np.random.default_rng(5)
        truth = rng.choice((-1, 1), size=(20, 4))
        truth[:, 0] = 1
        truth[:, 1] = -1
        scores = rng.normal(size=(20, 4))
        pred_path, data_path, q = self.make_files(tmp_path, scores, truth)
        assert run_cli(
            ["evaluate", "--predictions", pred_path, "--data", data_path,
             "--labels", q]
        ) == 0
        report = json.loads(capsys.readouterr().out)
        from imcc import evaluate_all

        want = evaluate_all(scores, truth).to_dict()
        for key, value in want.items():
            assert report[key] == pytest.approx(value, abs=1e-15)

    def test_row_count_mismatch_exits_two(self, tmp_path, capsys):
        truth = np.array([[1, -1], [-1, 1]])
        pred_path, data_path, q = self.make_files(tmp_path, truth.astype(float), truth)
        pred_path.write_text("0.1,0.2\n")
        assert run_cli(
            ["evaluate", "--predictions", pred_path, "--data", data_path,
             "--labels", q]
        ) == 2


class TestBenchmark:
    def args(self, data_path, report_path, **extra):
        base = [
            "benchmark", "--data", data_path, "--labels", 3,
            "--alphas", "0.5", "--betas", "1", "--gammas", "0.1",
            "--cluster-grid", "4", "--repeats", 1, "--folds", 3,
            "--report", report_path,
        ]
        for key, value in extra.items():
            base += [f"--{key.replace('_', '-')}", value]
        return base

    def test_single_trial_report(self, tmp_path, blob_csv, capsys):
        path, _ = blob_csv
        report_path = tmp_path / "report.json"
        assert run_cli(self.args(path, report_path)) == 0
        report = json.loads(report_path.read_text())
        validate_against("run_report.schema.json", report)
        assert len(report["trials"]) == 1
        stats = report["config"]["dataset_stats"]
        assert set(stats) == {
            "num_examples", "num_features", "num_labels", "label_cardinality",
            "label_density", "distinct_label_sets", "proportion_distinct",
        }
        out = capsys.readouterr().out
        assert "average_precision" in out

    def test_deterministic_reports_excluding_timing(self, tmp_path, blob_csv):
        path, _ = blob_csv
        a_path, b_path = tmp_path / "a.json", tmp_path / "b.json"
        assert run_cli(self.args(path, a_path)) == 0
        assert run_cli(self.args(path, b_path)) == 0

        def canonical(p):
            doc = json.loads(p.read_text())
            for trial in doc["trials"]:
                del trial["timing"]
            return json.dumps(doc, sort_keys=True).encode()

        assert canonical(a_path) == canonical(b_path)

    def test_surface_csv_written(self, tmp_path, blob_csv):
        path, _ = blob_csv
        report_path = tmp_path / "r.json"
        surface_path = tmp_path / "surface.csv"
        code = run_cli(
            self.args(path, report_path) + ["--surface-csv", surface_path]
        )
        assert code == 0
        lines = surface_path.read_text().splitlines()
        assert lines[0] == "alpha,beta,gamma,clusters,fold,metric,value"
        assert len(lines) == 1 + 3  # one point, three folds

    def test_config_overrides_flags(self, tmp_path, blob_csv):
        path, _ = blob_csv
        cfg = tmp_path / "run.cfg"
        cfg.write_text("repeats = 2\nbetas = 0.5\n")
        report_path = tmp_path / "r.json"
        assert run_cli(self.args(path, report_path) + ["--config", cfg]) == 0
        report = json.loads(report_path.read_text())
        assert len(report["trials"]) == 2
        assert report["config"]["grid"]["beta_values"] == [0.5]

    def test_unknown_config_key_exits_one(self, tmp_path, blob_csv, capsys):
        path, _ = blob_csv
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("nonsense = 1\n")
        assert run_cli(
            self.args(path, tmp_path / "r.json") + ["--config", cfg]
        ) == 1


class TestStats:
    def test_published_cd_value(self, tmp_path, capsys):
        rng = np.random.default_rng(6)
        values = rng.normal(size=(15, 7))
        path = tmp_path / "ranks.csv"
        header = ",".join(f"alg{i}" for i in range(7))
        body = "\n".join(",".join(f"{v:.6f}" for v in row) for row in values)
        path.write_text(header + "\n" + body + "\n")
        code = run_cli(["stats", "--ranks", path, "--q-alpha", 2.949])
        assert code == 0
        captured = capsys.readouterr()
        doc = json.loads(captured.out)
        validate_against("stats_output.schema.json", doc)
        assert doc["critical_difference"] == pytest.approx(2.3261, abs=1e-3)
        assert "average rank" in captured.err

    def test_all_equal_values_chi_zero(self, tmp_path, capsys):
        path = tmp_path / "ranks.csv"
        path.write_text("a,b,c\n" + "\n".join(["1.0,1.0,1.0"] * 4) + "\n")
        assert run_cli(["stats", "--ranks", path, "--q-alpha", 2.0]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["chi_squared"] == 0.0
        assert doc["f_statistic"] == 0.0

    def test_malformed_table_exits_two(self, tmp_path, capsys):
        path = tmp_path / "ranks.csv"
        path.write_text("a,b\n1.0,2.0,3.0\n")
        assert run_cli(["stats", "--ranks", path, "--q-alpha", 2.0]) == 2

    def test_degenerate_statistic_exits_three(self, tmp_path, capsys):
        path = tmp_path / "ranks.csv"
        path.write_text("a,b,c\n" + "\n".join(["0.1,0.2,0.3"] * 3) + "\n")
        assert run_cli(["stats", "--ranks", path, "--q-alpha", 2.0]) == 3
        assert "consistent" in capsys.readouterr().err


class TestGenSynthetic:
    def test_writes_loadable_deterministic_csv(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["gen-synthetic", "--n", 30, "--d", 3, "--q", 3, "--blobs", 3,
                "--seed", 11]
        assert run_cli(args + ["--out", a]) == 0
        assert run_cli(args + ["--out", b]) == 0
        assert a.read_bytes() == b.read_bytes()
        data = load_csv(a, 3)
        assert data.num_examples == 30


def test_console_script_installed():
    exe = shutil.which("imcc")
    if exe is None:
        pytest.skip("console script not on PATH")
    proc = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "benchmark" in proc.stdout
