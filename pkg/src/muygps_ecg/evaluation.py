"""Accuracy, confusion matrices and tau-sweep uncertainty reports."""

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .uq import DEFAULT_GRID

CSV_COLUMNS = ("tau", "confidence", "n_ambiguous", "n_total", "accuracy_all",
               "accuracy_non_ambiguous")

FLOOR_NOTE = ("variance floor triggered for {n} prediction(s); intervals assume a Gaussian "
              "latent, a Chebyshev bound (k = 1/sqrt(1 - confidence)) is the distribution-free "
              "fallback")


def accuracy(preds, truth):
    preds = np.asarray(preds)
    truth = np.asarray(truth)
    if preds.shape != truth.shape:
        raise ValueError(f"length mismatch: {preds.shape} vs {truth.shape}")
    if preds.size == 0:
        raise ValueError("accuracy of an empty set")
    return float(np.mean(preds == truth))


def confusion_matrix(truth, preds, n_classes):
    """Counts with rows indexed by true class and columns by predicted class."""
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(truth, dtype=np.int64), np.asarray(preds, dtype=np.int64)), 1)
    return cm


@dataclass
class TauRow:
    tau: float
    confidence: float
    n_ambiguous: int
    n_total: int
    accuracy_all: float
    accuracy_non_ambiguous: float = None
    confusion: list = field(default_factory=list)


@dataclass
class UqReport:
    rows: list
    metadata: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {"rows": [asdict(r) for r in self.rows], "metadata": self.metadata,
                "notes": list(self.notes)}

    @classmethod
    def from_dict(cls, d):
        return cls([TauRow(**r) for r in d["rows"]], d.get("metadata", {}), d.get("notes", []))

    def taus(self):
        return [r.tau for r in self.rows]

    def check_invariants(self):
        """Raise AssertionError if the report is internally inconsistent."""
        amb = [r.n_ambiguous for r in self.rows]
        assert all(a <= b for a, b in zip(amb, amb[1:])), "n_ambiguous decreases with tau"
        assert len({r.accuracy_all for r in self.rows}) <= 1, "accuracy_all varies with tau"
        for r in self.rows:
            assert 0 <= r.accuracy_all <= 1
            kept = r.n_total - r.n_ambiguous
            assert int(np.sum(r.confusion)) == kept, "confusion total != non-ambiguous count"
            if r.accuracy_non_ambiguous is None:
                assert kept == 0
            else:
                assert 0 <= r.accuracy_non_ambiguous <= 1


def tau_sweep(preds, truth, grid=DEFAULT_GRID, n_classes=None, metadata=None):
    """Partition predictions by ambiguity at each tau and score the confident part.

    ``preds`` is any prediction set exposing ``labels`` and ``ambiguous(tau)``
    (latent, one-versus-all, or probability predictions).
    """
    truth = np.asarray(truth, dtype=np.int64)
    labels = np.asarray(preds.labels, dtype=np.int64)
    if labels.shape != truth.shape:
        raise ValueError(f"length mismatch: {labels.shape} vs {truth.shape}")
    n = len(truth)
    if n_classes is None:
        n_classes = int(max(truth.max(initial=0), labels.max(initial=0))) + 1
    acc_all = accuracy(labels, truth) if n else None
    rows = []
    for tau, conf in grid:
        amb = np.asarray(preds.ambiguous(tau), dtype=bool)
        keep = ~amb
        kept = int(keep.sum())
        rows.append(TauRow(
            tau=float(tau), confidence=float(conf), n_ambiguous=int(amb.sum()), n_total=n,
            accuracy_all=acc_all,
            accuracy_non_ambiguous=accuracy(labels[keep], truth[keep]) if kept else None,
            confusion=confusion_matrix(truth[keep], labels[keep], n_classes).tolist()))
    notes = []
    n_floored = getattr(preds, "n_floored", 0)
    if n_floored:
        notes.append(FLOOR_NOTE.format(n=n_floored))
    return UqReport(rows, dict(metadata or {}), notes)


def report_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow([repr(r.tau), repr(r.confidence), r.n_ambiguous, r.n_total,
                    repr(r.accuracy_all),
                    "" if r.accuracy_non_ambiguous is None else repr(r.accuracy_non_ambiguous)])
    return buf.getvalue()


def report_json(report):
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def emit_report(report, path, format="json"):
    if format == "json":
        text = report_json(report)
    elif format == "csv":
        text = report_csv(report)
    else:
        raise ValueError(f"unknown report format {format!r}")
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def load_report(path):
    with open(path) as fh:
        return UqReport.from_dict(json.load(fh))


def read_report_csv(path):
    """Rows of a CSV report as dicts of floats (``None`` for empty cells)."""
    with open(path, newline="") as fh:
        return [{k: (None if v == "" else float(v)) for k, v in row.items()}
                for row in csv.DictReader(fh)]
