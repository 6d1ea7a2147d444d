import json

import numpy as np
import pytest

from cbal.core import validate_probability_matrix
from cbal.errors import RowNotStochastic, ValidationError
from cbal.simulator.data import DatasetSpec, make_longtail_dataset
from cbal.simulator.io import (
    metrics_header,
    read_features_csv,
    read_manifest,
    read_metrics_csv,
    read_probability_csv,
    write_features_csv,
    write_manifest,
    write_metrics_csv,
    write_probability_csv,
)
from cbal.simulator.learner import LearnerConfig
from cbal.simulator.loop import LoopConfig, run_al_loop


class TestFeaturesCsv:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        X, y = rng.normal(size=(5, 3)), np.array([0, 2, 1, 1, 0])
        path = tmp_path / "f.csv"
        write_features_csv(path, X, y)
        text = path.read_bytes()
        assert text.startswith(b"f0,f1,f2,label\n")
        assert b"\r\n" not in text
        X2, y2 = read_features_csv(path)
        np.testing.assert_array_equal(X, X2)
        np.testing.assert_array_equal(y, y2)

    @pytest.mark.parametrize(
        "content", ["a,b,label\n1,2,0\n", "f0,label\n", "f0,label\nx,0\n", "f0,label\n1.0,-1\n", ""]
    )
    def test_malformed(self, tmp_path, content):
        path = tmp_path / "bad.csv"
        path.write_text(content)
        with pytest.raises(ValidationError):
            read_features_csv(path)


class TestProbabilityCsv:
    def test_round_trip_with_header(self, tmp_path):
        p = validate_probability_matrix(np.random.default_rng(1).dirichlet(np.ones(3), size=4))
        path = tmp_path / "p.csv"
        write_probability_csv(path, p)
        np.testing.assert_array_equal(read_probability_csv(path).values, p.values)

    def test_headerless(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("0.25,0.75\n1,0\n")
        np.testing.assert_array_equal(read_probability_csv(path).values, [[0.25, 0.75], [1, 0]])

    def test_validated(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("0.6,0.6\n")
        with pytest.raises(RowNotStochastic):
            read_probability_csv(path)


@pytest.fixture(scope="module")
def record():
    ds = make_longtail_dataset(DatasetSpec(3, 60, 2, imbalance_factor=0.5, seed=0, test_per_class=10))
    return run_al_loop(ds, "entropy_cb", LoopConfig(12, 6, 24, learner=LearnerConfig(epochs=20)))


class TestOutputs:
    def test_metrics_columns(self, tmp_path, record):
        path = tmp_path / "m.csv"
        write_metrics_csv(path, record)
        rows = read_metrics_csv(path)
        assert list(rows[0].keys()) == metrics_header(3)
        assert metrics_header(3) == ["cycle", "labeled_size", "test_accuracy", "l1_score", "solver_time_s", "h0", "h1", "h2"]
        assert [int(r["cycle"]) for r in rows] == [1, 2]
        assert all(r["solver_time_s"] == "" for r in rows)
        assert float(rows[0]["l1_score"]) == record.cycles[0].l1_score

    def test_timing_column_optional(self, tmp_path, record):
        path = tmp_path / "m.csv"
        write_metrics_csv(path, record, record_timing=True)
        assert all(float(r["solver_time_s"]) >= 0 for r in read_metrics_csv(path))

    def test_manifest(self, tmp_path, record):
        path = tmp_path / "run" / "manifest.json"
        write_manifest(path, {"seeds": [0]}, record)
        doc = read_manifest(path)
        assert doc["config"] == {"seeds": [0]}
        assert doc["seed"] == 0
        assert set(doc["versions"]) >= {"cbal", "numpy", "scipy", "python"}
        assert len(doc["diagnostics"]["solver_time_s"]) == 2
        json.dumps(doc)
