"""Run reports and bulk-data serialization.

Every CLI command emits a RunReport JSON next to its data outputs.  CSV is
the bulk-data format with fixed columns (replica, index, re, im); JSON is
the report format.  Numbers are serialized with 17 significant digits so
re-running with identical parameters reproduces the files bit for bit.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .stats import EstimateWithError, TestVerdict

SCHEMA_VERSION = 1


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


@dataclass
class RunReport:
    command: str
    params: dict
    started: str = ""
    finished: str = ""
    estimates: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    artifact_paths: list = field(default_factory=list)

    def start(self) -> "RunReport":
        self.started = datetime.now(timezone.utc).isoformat()
        return self

    def finish(self) -> "RunReport":
        self.finished = datetime.now(timezone.utc).isoformat()
        return self

    def add_estimate(self, name: str, est: EstimateWithError) -> None:
        self.estimates[name] = est

    def add_verdict(self, name: str, verdict: TestVerdict) -> None:
        self.verdicts[name] = verdict

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts.values())

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "params": self.params,
            "started": self.started,
            "finished": self.finished,
            "estimates": {
                k: {"value": v.value, "se": v.se, "n_samples": v.n_samples}
                for k, v in self.estimates.items()
            },
            "verdicts": {
                k: {
                    "statistic": v.statistic,
                    "p_value": v.p_value,
                    "pass": v.passed,
                    "threshold": v.threshold,
                }
                for k, v in self.verdicts.items()
            },
            "artifact_paths": [str(p) for p in self.artifact_paths],
        }

    def write(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")
        self.artifact_paths.append(str(path))


def write_coefficients_csv(path, matrix: np.ndarray, indices) -> None:
    """Per-replica complex values: one row per (replica, index) pair."""
    matrix = np.atleast_2d(matrix)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["replica", "index", "re", "im"])
        for r in range(matrix.shape[0]):
            for j, idx in enumerate(indices):
                z = matrix[r, j]
                writer.writerow([r, idx, _fmt(z.real), _fmt(z.imag)])


def write_coefficients_json(path, matrix: np.ndarray, indices) -> None:
    matrix = np.atleast_2d(matrix)
    rows = [
        {"replica": r, "index": int(idx), "re": float(matrix[r, j].real), "im": float(matrix[r, j].imag)}
        for r in range(matrix.shape[0])
        for j, idx in enumerate(indices)
    ]
    with open(path, "w") as fh:
        json.dump(rows, fh)
        fh.write("\n")


def write_table_csv(path, columns: dict) -> None:
    """Write named columns of equal length as CSV with 17 significant digits."""
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(len(arrays[0])):
            writer.writerow([_fmt(a[i]) if np.issubdtype(a.dtype, np.floating) else a[i] for a in arrays])
