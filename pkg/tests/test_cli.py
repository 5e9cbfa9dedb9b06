import json

import numpy as np
import pytest

from walkrank.cli import main
from walkrank.dataset import gen_synthetic, save_dataset
from walkrank.experiment import RunConfig, run_experiment


@pytest.fixture
def dataset_path(tmp_path):
    ds = gen_synthetic(num_queries=4, p=10, s=2, m1=2, m2=2, judgment_count=3, seed=21)
    path = tmp_path / "ds.json"
    save_dataset(ds, path)
    return path


def run_cli(*args):
    return main([str(a) for a in args])


class TestExitCodes:
    def test_usage_error(self, capsys):
        assert run_cli("train") == 1
        assert "error" in capsys.readouterr().err

    def test_unknown_command(self):
        assert run_cli("frobnicate") == 1

    def test_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        assert run_cli("validate", bad) == 2

    def test_missing_file_is_runtime_failure(self):
        assert run_cli("loss", "/nonexistent/ds.json") == 3

    def test_seed_required_for_stochastic_commands(self, dataset_path, tmp_path):
        assert run_cli("train", dataset_path, "--method", "gbp", "--out-dir", tmp_path) == 1
        assert (
            run_cli(
                "gen-synthetic", "--out", tmp_path / "x.json", "--num-queries", 1,
                "--p", 3, "--s", 1, "--m1", 1, "--m2", 1, "--judgments", 1,
            )
            == 1
        )


class TestCommands:
    def test_validate(self, dataset_path, capsys):
        assert run_cli("validate", dataset_path) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["feasible"] is True
        assert out["queries"] == 4

    def test_gen_and_reload(self, tmp_path, capsys):
        out = tmp_path / "gen.json"
        code = run_cli(
            "gen-synthetic", "--out", out, "--num-queries", 2, "--p", 6, "--s", 2,
            "--m1", 1, "--m2", 2, "--judgments", 2, "--seed", 9,
        )
        assert code == 0 and out.exists()
        assert run_cli("validate", out) == 0

    def test_loss_and_grad(self, dataset_path, capsys):
        assert run_cli("loss", dataset_path) == 0
        loss_out = json.loads(capsys.readouterr().out)
        assert loss_out["accuracy"] == 0.0
        assert run_cli("loss", dataset_path, "--delta1", "1e-4") == 0
        inexact = json.loads(capsys.readouterr().out)
        assert abs(inexact["value"] - loss_out["value"]) <= 1e-4
        assert run_cli("grad", dataset_path, "--delta2", "1e-3") == 0
        grad_out = json.loads(capsys.readouterr().out)
        assert len(grad_out["vector"]) == 4

    def test_rank(self, dataset_path, tmp_path, capsys):
        out = tmp_path / "rank.csv"
        assert run_cli("rank", dataset_path, "--method", "exact", "--out", out) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "query_id,node,score"
        assert len(lines) == 1 + 4 * 10

    def test_evaluate(self, dataset_path, capsys):
        assert run_cli("evaluate", dataset_path, "--split", "all") == 0
        out = json.loads(capsys.readouterr().out)
        assert "train_loss" in out and "test_loss" in out

    def test_compare_stationary(self, dataset_path, tmp_path, capsys):
        out = tmp_path / "cmp.csv"
        assert run_cli("compare-stationary", dataset_path, "--max-N", 10, "--out", out) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "N,series_err,power_err,series_loss,power_loss,series_bound,power_bound"
        assert len(lines) == 12

    def test_train_gbp_writes_outputs(self, dataset_path, tmp_path, capsys):
        out_dir = tmp_path / "run"
        code = run_cli(
            "train", dataset_path, "--method", "gbp", "--out-dir", out_dir, "--seed", 0,
            "--N1", 30, "--N2", 30, "--gbp-max-iters", 10,
        )
        assert code == 0
        assert (out_dir / "gbp_trace.csv").exists()
        summary = json.loads((out_dir / "gbp_summary.json").read_text())
        assert summary["method"] == "gbp"
        assert summary["final_train_loss"] is not None


class TestDeterminism:
    def test_gfn_trace_bytes_identical(self, dataset_path, tmp_path):
        outs = []
        for name in ("r1", "r2"):
            out_dir = tmp_path / name
            code = run_cli(
                "train", dataset_path, "--method", "gfn", "--out-dir", out_dir,
                "--seed", 77, "--L", 0.01, "--epsilon", 1e-4, "--max-iters-override", 30,
            )
            assert code == 0
            outs.append((out_dir / "gfn_trace.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_compare_stationary_bytes_identical(self, dataset_path, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli("compare-stationary", dataset_path, "--max-N", 15, "--out", a)
        run_cli("compare-stationary", dataset_path, "--max-N", 15, "--out", b)
        assert a.read_bytes() == b.read_bytes()

    def test_gen_synthetic_bytes_identical(self, tmp_path):
        pa, pb = tmp_path / "a.json", tmp_path / "b.json"
        for target in (pa, pb):
            run_cli(
                "gen-synthetic", "--out", target, "--num-queries", 2, "--p", 6,
                "--s", 2, "--m1", 1, "--m2", 2, "--judgments", 2, "--seed", 13,
            )
        assert pa.read_bytes() == pb.read_bytes()


class TestTraceFormatting:
    def test_seventeen_digit_round_trip(self):
        from walkrank.experiment import format_number

        rng = np.random.default_rng(1)
        for v in rng.standard_normal(200) * 10.0 ** rng.integers(-12, 12, size=200):
            assert float(format_number(float(v))) == float(v)
        assert format_number(7) == "7"
        assert format_number(True) == "1"


class TestRunExperiment:
    def test_agm_summary_reports_z_or_flag(self, tmp_path):
        ds = gen_synthetic(num_queries=4, p=10, s=2, m1=2, m2=2, judgment_count=3, seed=21)
        cfg = RunConfig(
            method="agm", seed=0, out_dir=str(tmp_path), epsilon=1e-5, L0=1e-3,
            max_outer_iters=15,
        )
        summary = run_experiment(ds, cfg)
        assert summary["converged"] in (True, False)
        assert "z" in summary["settings"]
        if summary["converged"]:
            assert summary["settings"]["z"] <= 1e-5

    def test_gfn_trace_row_cap(self, tmp_path):
        ds = gen_synthetic(num_queries=4, p=10, s=2, m1=2, m2=2, judgment_count=3, seed=21)
        cfg = RunConfig(
            method="gfn", seed=5, out_dir=str(tmp_path), epsilon=1e-4, L=0.01,
            max_iters_override=20,
        )
        run_experiment(ds, cfg)
        lines = (tmp_path / "gfn_trace.csv").read_text().strip().splitlines()
        assert len(lines) <= 1 + 21

    def test_untrained_loss_reported(self, tmp_path):
        ds = gen_synthetic(num_queries=4, p=10, s=2, m1=2, m2=2, judgment_count=3, seed=21)
        cfg = RunConfig(method="gbp", seed=0, out_dir=str(tmp_path), gbp_max_iters=5)
        summary = run_experiment(ds, cfg)
        assert summary["untrained_train_loss"] > 0
        assert summary["iterations"] >= 1
