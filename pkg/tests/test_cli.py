import csv
import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from cbal.cli import DEFAULTS, load_config, main, normalize_config
from cbal.errors import ConfigParse
from cbal.simulator.io import write_features_csv, write_probability_csv
from cbal.core import validate_probability_matrix

SMALL = {
    "dataset": {"n_classes": 3, "samples_per_class": 60, "feature_dim": 3, "test_per_class": 10},
    "loop": {"initial_size": 6, "budget_per_cycle": 6, "total_budget": 18, "learner": {"epochs": 20}},
    "methods": ["entropy"],
    "imbalance_factors": [0.5],
    "seeds": [0],
    "sweep": {"lambdas": [0, 0.5, 1, 2, 3]},
}


def write_cfg(tmp_path, **over):
    cfg = json.loads(json.dumps(SMALL))
    cfg.update(over)
    cfg.setdefault("out_dir", str(tmp_path / "out"))
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(cfg))
    return path


class TestConfig:
    def test_defaults_fill_in(self):
        cfg = normalize_config({})
        assert cfg["loop"]["total_budget"] == DEFAULTS["loop"]["total_budget"]

    def test_unknown_key_named(self):
        with pytest.raises(ConfigParse, match="dataset.colour"):
            normalize_config({"dataset": {"colour": 1}})

    def test_invalid_method_named(self):
        with pytest.raises(ConfigParse, match=r"methods\[1\].*'nope'"):
            normalize_config({"methods": ["entropy", "nope"]})

    def test_range_errors_surface_as_config_errors(self):
        with pytest.raises(ConfigParse, match="loop"):
            normalize_config({"loop": {"initial_size": 10, "budget_per_cycle": 3, "total_budget": 20}})

    def test_round_trip_through_manifest(self, tmp_path):
        path = write_cfg(tmp_path)
        assert main(["run", str(path)]) == 0
        manifest = tmp_path / "out" / "entropy_if0.5_seed0" / "manifest.json"
        original = load_config(path)
        echoed = load_config(manifest)
        assert echoed == normalize_config({**original, "lambda": 1.0})


class TestRun:
    def test_minimal_outputs(self, tmp_path):
        path = write_cfg(tmp_path)
        assert main(["run", str(path)]) == 0
        runs = [p for p in (tmp_path / "out").iterdir() if p.is_dir()]
        assert len(runs) == 1
        assert sorted(f.name for f in runs[0].iterdir()) == ["manifest.json", "metrics.csv"]
        with open(tmp_path / "out" / "summary.csv") as fh:
            assert len(list(csv.DictReader(fh))) == 2

    def test_grid_product(self, tmp_path):
        path = write_cfg(tmp_path, methods=["random", "entropy", "kcenter_cb"], imbalance_factors=[0.5, 1.0],
                         seeds=[0, 1, 2])
        assert main(["run", str(path)]) == 0
        runs = [p for p in (tmp_path / "out").iterdir() if p.is_dir()]
        assert len(runs) == 18

    def test_rerun_from_manifest_is_byte_identical(self, tmp_path):
        path = write_cfg(tmp_path, methods=["entropy_cb"])
        assert main(["run", str(path)]) == 0
        run = tmp_path / "out" / "entropy_cb_if0.5_seed0"
        assert main(["run", str(run / "manifest.json"), "--out-dir", str(tmp_path / "again")]) == 0
        again = tmp_path / "again" / "entropy_cb_if0.5_seed0" / "metrics.csv"
        assert again.read_bytes() == (run / "metrics.csv").read_bytes()

    def test_flag_overrides(self, tmp_path):
        path = write_cfg(tmp_path)
        code = main(["run", str(path), "--method", "bald", "--seed", "4", "--imbalance-factor", "1.0",
                     "--lambda", "0.3", "--initial-size", "9", "--budget-per-cycle", "3", "--budget", "15"])
        assert code == 0
        doc = json.loads((tmp_path / "out" / "bald_if1_seed4" / "manifest.json").read_text())
        assert doc["config"]["loop"]["initial_size"] == 9
        assert doc["config"]["lambda"] == 0.3
        rows = list(csv.DictReader(open(tmp_path / "out" / "bald_if1_seed4" / "metrics.csv")))
        assert [int(r["labeled_size"]) for r in rows] == [12, 15]

    def test_invalid_method_exit_code(self, tmp_path, capsys):
        path = write_cfg(tmp_path, methods=["entropy", "psychic"])
        assert main(["run", str(path)]) == 1
        assert "methods[1]" in capsys.readouterr().err
        assert main(["run", str(write_cfg(tmp_path)), "--method", "psychic"]) == 1

    def test_missing_config_file(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.yaml")]) == 1

    def test_run_failure_exit_code(self, tmp_path):
        # a budget beyond the pool fails the run itself, not the config
        path = write_cfg(tmp_path, loop={"initial_size": 6, "budget_per_cycle": 6, "total_budget": 6000})
        assert main(["run", str(path)]) == 2

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["run", str(write_cfg(tmp_path)), "--out-dir", str(blocker / "sub")]) == 2

    def test_ingested_csv_dataset(self, tmp_path):
        rng = np.random.default_rng(0)
        y = np.repeat([0, 1, 2], 20)
        write_features_csv(tmp_path / "train.csv", rng.normal(size=(60, 2)) + y[:, None], y)
        write_features_csv(tmp_path / "test.csv", rng.normal(size=(15, 2)), np.repeat([0, 1, 2], 5))
        path = write_cfg(tmp_path, dataset={"train_csv": str(tmp_path / "train.csv"),
                                            "test_csv": str(tmp_path / "test.csv")})
        assert main(["run", str(path)]) == 0


class TestSweep:
    def test_sweep_csv_and_recommendation(self, tmp_path, capsys):
        path = write_cfg(tmp_path, loop={"initial_size": 6, "budget_per_cycle": 3, "total_budget": 9})
        code = main(["sweep-lambda", str(path)])
        out = tmp_path / "out" / "sweep_if0.5_seed0.csv"
        rows = list(csv.DictReader(open(out)))
        assert len(rows) == 5
        assert list(rows[0]) == ["lambda", "entropy_loss", "l1_loss", "l1_score", "proof"]
        l1 = [float(r["l1_loss"]) for r in rows]
        assert all(b <= a + 1e-9 for a, b in zip(l1, l1[1:]))
        rec = json.loads(out.with_suffix(".json").read_text())
        from cbal.simulator.sweep import SweepRow, select_lambda

        table = [SweepRow(float(r["lambda"]), float(r["entropy_loss"]), float(r["l1_loss"]),
                          float(r["l1_score"]), r["proof"]) for r in rows]
        try:
            expected = select_lambda(table, 0.02)
        except Exception:
            expected = None
        assert rec["recommended_lambda"] == expected
        assert code == (0 if expected is not None else 2)


class TestVerifyAndSelect:
    def test_verify_passes(self, capsys):
        assert main(["verify"]) == 0
        report = capsys.readouterr().out
        assert report.count("PASS") >= 4

    def test_fault_injection_fails(self, capsys):
        assert main(["verify", "--inject-fault", "bnb_vs_enumeration"]) == 3
        assert "FAIL" in capsys.readouterr().out

    def test_select_from_probability_csv(self, tmp_path, capsys):
        p = validate_probability_matrix(np.random.default_rng(0).dirichlet(np.ones(3), size=10))
        write_probability_csv(tmp_path / "p.csv", p)
        assert main(["select", str(tmp_path / "p.csv"), "--budget", "3", "--lambda", "1"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert len(doc["indices"]) == 3
        assert doc["proof"] == "optimal"

    def test_select_bad_probabilities(self, tmp_path):
        (tmp_path / "p.csv").write_text("0.7,0.7\n")
        assert main(["select", str(tmp_path / "p.csv"), "--budget", "1"]) == 1

    def test_select_infeasible_budget(self, tmp_path):
        (tmp_path / "p.csv").write_text("0.5,0.5\n")
        assert main(["select", str(tmp_path / "p.csv"), "--budget", "2"]) == 2


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "cbal.cli", "verify"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "bnb_vs_enumeration" in out.stdout
