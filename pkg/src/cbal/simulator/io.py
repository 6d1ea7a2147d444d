"""File formats: feature and probability CSVs, metrics CSVs and run manifests.

All text files are UTF-8 with LF line endings. Floats are written with
``repr`` so that values survive a round trip exactly.
"""

from __future__ import annotations

import csv
import json
import os
import platform
from pathlib import Path

import numpy as np

from ..core import ProbabilityMatrix, validate_probability_matrix
from ..errors import OutputUnwritable, ValidationError
from .loop import ExperimentRecord


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _open_for_write(path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OutputUnwritable(f"cannot write {path}: {exc}") from exc


# features --------------------------------------------------------------------


def write_features_csv(path, features, labels) -> None:
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    with _open_for_write(path) as fh:
        w = _writer(fh)
        w.writerow([f"f{k}" for k in range(X.shape[1])] + ["label"])
        for row, lab in zip(X, y):
            w.writerow([repr(float(v)) for v in row] + [int(lab)])


def read_features_csv(path):
    """Return ``(features, labels)`` from a ``f0..f{d-1},label`` CSV."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValidationError(f"{path}: empty file")
    header = rows[0]
    d = len(header) - 1
    if d < 1 or header != [f"f{k}" for k in range(d)] + ["label"]:
        raise ValidationError(f"{path}: header must be f0..f{{d-1}},label, got {header}")
    if len(rows) < 2:
        raise ValidationError(f"{path}: no data rows")
    try:
        X = np.array([[float(v) for v in r[:d]] for r in rows[1:]])
        y = np.array([int(r[d]) for r in rows[1:]], dtype=np.int64)
    except (ValueError, IndexError) as exc:
        raise ValidationError(f"{path}: malformed row ({exc})") from exc
    if not np.all(np.isfinite(X)):
        raise ValidationError(f"{path}: non-finite feature value")
    if y.min() < 0:
        raise ValidationError(f"{path}: negative class id")
    return X, y


# probabilities ---------------------------------------------------------------


def write_probability_csv(path, p: ProbabilityMatrix) -> None:
    with _open_for_write(path) as fh:
        w = _writer(fh)
        w.writerow([f"p{k}" for k in range(p.c_classes)])
        for row in p.values:
            w.writerow([repr(float(v)) for v in row])


def read_probability_csv(path) -> ProbabilityMatrix:
    """N x C probabilities, one sample per row; a non-numeric first row is a header."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows:
        try:
            [float(v) for v in rows[0]]
        except ValueError:
            rows = rows[1:]
    if not rows:
        raise ValidationError(f"{path}: no probability rows")
    try:
        values = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric entry ({exc})") from exc
    return validate_probability_matrix(values)


# run outputs -----------------------------------------------------------------


def metrics_header(n_classes: int) -> list[str]:
    return ["cycle", "labeled_size", "test_accuracy", "l1_score", "solver_time_s"] + [
        f"h{k}" for k in range(n_classes)
    ]


def write_metrics_csv(path, record: ExperimentRecord, record_timing: bool = False) -> None:
    """One row per cycle.

    Solver times vary between runs, so the column is left blank unless
    ``record_timing`` is set; that keeps reruns byte-identical. Times are
    always kept in the manifest diagnostics.
    """
    with _open_for_write(path) as fh:
        w = _writer(fh)
        w.writerow(metrics_header(record.n_classes))
        for c in record.cycles:
            t = repr(float(c.solver_time)) if record_timing else ""
            w.writerow(
                [c.cycle, c.labeled_size, repr(float(c.test_accuracy)), repr(float(c.l1_score)), t]
                + list(c.histogram)
            )


def read_metrics_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def software_versions() -> dict:
    import scipy

    from .. import __version__

    return {
        "cbal": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def write_manifest(path, config: dict, record: ExperimentRecord, extra: dict | None = None) -> None:
    """JSON manifest: the resolved run config, seed, versions and diagnostics."""
    doc = {
        "config": config,
        "seed": record.seed,
        "method": record.method,
        "versions": software_versions(),
        "diagnostics": {
            "initial_accuracy": record.initial_accuracy,
            "solver_time_s": [c.solver_time for c in record.cycles],
            "proof": [c.proof for c in record.cycles],
            "class_counts": [list(c.class_counts) for c in record.cycles],
            **(extra or {}),
        },
    }
    with _open_for_write(path) as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def ensure_writable_dir(path) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputUnwritable(f"cannot create {path}: {exc}") from exc
    if not os.access(path, os.W_OK):
        raise OutputUnwritable(f"{path} is not writable")
    return path
