"""ECG heartbeat datasets: CSV ingestion, truncation, splitting, SMOTE.

Files follow the public preprocessed heartbeat layout: one beat per line,
comma separated amplitudes in [0, 1], integer class label in the last column.
"""

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

PTB_CLASS_NAMES = ("normal", "abnormal")
MITBIH_CLASS_NAMES = ("N", "S", "V", "F", "Q")

PTB_FILES = ("ptbdb_normal.csv", "ptbdb_abnormal.csv")
MITBIH_FILES = ("mitbih_train.csv", "mitbih_test.csv")


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class EcgDataset:
    """Feature matrix with integer class labels. Arrays are read-only."""

    features: np.ndarray
    labels: np.ndarray
    class_names: tuple = field(default=None)
    source: str = ""

    def __post_init__(self):
        X = np.array(self.features, dtype=float, copy=True)
        y = np.array(self.labels, copy=True)
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
            raise DataError(f"features must be a non-empty 2-D matrix, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DataError("labels must have one entry per row")
        if y.dtype.kind not in "iu":
            if not np.all(np.isfinite(y)) or np.any(y != np.round(y)):
                raise DataError("labels must be integers")
        y = y.astype(np.int64)
        names = self.class_names
        if names is None:
            names = tuple(str(c) for c in range(int(y.max()) + 1))
        names = tuple(names)
        if y.min() < 0 or y.max() >= len(names):
            raise DataError(f"labels must lie in [0, {len(names) - 1}]")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "class_names", names)

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def n_classes(self):
        return len(self.class_names)

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.n_classes)

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return EcgDataset(self.features[idx], self.labels[idx], self.class_names, self.source)

    def __len__(self):
        return self.n_samples


def signed_labels(labels, positive_class):
    """Map class ids to +1 (``positive_class``) / -1 (everything else)."""
    return np.where(np.asarray(labels) == positive_class, 1.0, -1.0)


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def _scan_rows(path, skip):
    """Slow validating pass; raises DataError naming the offending row."""
    width = None
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if lineno <= skip or not row or all(not c.strip() for c in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataError(f"{path}: row {lineno} has {len(row)} columns, expected {width}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                bad = next(c for c in row if not _is_number(c))
                raise DataError(f"{path}: row {lineno} has non-numeric cell {bad!r}") from None
    return np.array(rows, dtype=float).reshape(len(rows), width or 0)


def load_csv(path, label_column=-1, class_names=None):
    """Read a heartbeat CSV into an :class:`EcgDataset`.

    A non-numeric first row is treated as a header. ``label_column`` is the
    column index of the label (default: last). When ``class_names`` is given,
    labels must fall in ``range(len(class_names))``.
    """
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, newline="") as fh:
        first = next(csv.reader(fh), None)
    if first is None or not any(c.strip() for c in first):
        raise DataError(f"{path}: no samples")
    skip = 0 if all(_is_number(c) for c in first) else 1
    try:
        M = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2, dtype=float)
    except ValueError:
        M = _scan_rows(path, skip)
    if M.shape[0] == 0:
        raise DataError(f"{path}: no samples")
    if M.shape[1] < 2:
        raise DataError(f"{path}: need at least one feature column and a label column")
    lc = label_column % M.shape[1]
    raw = M[:, lc]
    X = np.delete(M, lc, axis=1)
    bad = np.flatnonzero(~np.isfinite(raw) | (raw != np.round(raw)) | (raw < 0))
    if bad.size:
        raise DataError(f"{path}: row {bad[0] + 1 + skip} has invalid label {raw[bad[0]]!r}")
    y = raw.astype(np.int64)
    if class_names is not None:
        out = np.flatnonzero(y >= len(class_names))
        if out.size:
            raise DataError(f"{path}: row {out[0] + 1 + skip} label {y[out[0]]} outside "
                            f"[0, {len(class_names) - 1}]")
    return EcgDataset(X, y, class_names, source=path)


def save_csv(ds, path):
    """Write ``ds`` back in the input layout (label last, no header)."""
    M = np.column_stack([ds.features, ds.labels.astype(float)])
    fmt = ["%.18e"] * ds.n_features + ["%d"]
    with open(path, "w", newline="") as fh:
        if len(M):
            np.savetxt(fh, M, delimiter=",", fmt=fmt)


def concat(datasets, class_names=None):
    datasets = list(datasets)
    names = class_names or max((d.class_names for d in datasets), key=len)
    return EcgDataset(np.vstack([d.features for d in datasets]),
                      np.concatenate([d.labels for d in datasets]), names,
                      source="+".join(d.source for d in datasets))


def load_ptb(directory):
    """Both PTB files concatenated: normal beats (label 0) then abnormal (label 1)."""
    parts = [load_csv(os.path.join(directory, f), class_names=PTB_CLASS_NAMES) for f in PTB_FILES]
    return concat(parts, PTB_CLASS_NAMES)


def load_mitbih(directory):
    """The published MIT-BIH ``(train, test)`` pair."""
    return tuple(load_csv(os.path.join(directory, f), class_names=MITBIH_CLASS_NAMES)
                 for f in MITBIH_FILES)


def truncate(ds, width):
    """Keep the first ``width`` feature columns."""
    if not 1 <= width <= ds.n_features:
        raise DataError(f"truncate width {width} outside [1, {ds.n_features}]")
    return EcgDataset(ds.features[:, :width], ds.labels, ds.class_names, ds.source)


def stratified_indices(ds, test_fraction=0.2, seed=42):
    """Row indices ``(train_idx, test_idx)`` of a per-class shuffled split.

    Each class contributes ``round(count * test_fraction)`` test rows, clamped
    so both sides keep at least one row of that class. Both index arrays are
    sorted, so rows keep their original relative order.
    """
    if not 0 < test_fraction < 1:
        raise DataError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    test_idx = []
    for c in range(ds.n_classes):
        members = np.flatnonzero(ds.labels == c)
        if members.size == 0:
            continue
        if members.size < 2:
            raise DataError(f"class {c} has fewer than 2 samples")
        n_test = min(max(int(round(members.size * test_fraction)), 1), members.size - 1)
        test_idx.append(rng.permutation(members)[:n_test])
    test_mask = np.zeros(ds.n_samples, dtype=bool)
    test_mask[np.concatenate(test_idx)] = True
    return np.flatnonzero(~test_mask), np.flatnonzero(test_mask)


def stratified_split(ds, test_fraction=0.2, seed=42):
    """Stratified ``(train, test)`` datasets; see :func:`stratified_indices`."""
    train_idx, test_idx = stratified_indices(ds, test_fraction, seed)
    return ds.subset(train_idx), ds.subset(test_idx)


def stratified_subsample(ds, n, seed=0):
    """Class-proportional subsample of ``n`` rows (``n >= n_samples`` returns ``ds``)."""
    if n >= ds.n_samples:
        return ds
    _, part = stratified_split(ds, n / ds.n_samples, seed)
    return part


def sample_batch(n_train, batch_size, seed=0):
    """``batch_size`` distinct indices drawn uniformly from ``range(n_train)``."""
    if not 1 <= batch_size <= n_train:
        raise DataError(f"batch_size {batch_size} outside [1, {n_train}]")
    return np.random.default_rng(seed).choice(n_train, size=batch_size, replace=False)


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    ratio: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise DataError("k_neighbors must be >= 1")
        if not 0 < self.ratio <= 1:
            raise DataError("ratio must be in (0, 1]")


@dataclass(frozen=True)
class SmoteProvenance:
    """Row-aligned record of how each synthetic sample was made.

    ``source`` and ``neighbor`` index rows of the input dataset.
    """

    source: np.ndarray
    neighbor: np.ndarray
    r: np.ndarray
    label: np.ndarray

    def __len__(self):
        return len(self.source)

    def write_jsonl(self, path):
        with open(path, "w") as fh:
            for s, nb, r, c in zip(self.source, self.neighbor, self.r, self.label):
                fh.write(json.dumps({"source": int(s), "neighbor": int(nb),
                                     "r": float(r), "label": int(c)}) + "\n")

    @classmethod
    def read_jsonl(cls, path):
        recs = []
        with open(path) as fh:
            recs = [json.loads(line) for line in fh if line.strip()]
        return cls(np.array([r["source"] for r in recs], dtype=np.int64),
                   np.array([r["neighbor"] for r in recs], dtype=np.int64),
                   np.array([r["r"] for r in recs], dtype=float),
                   np.array([r["label"] for r in recs], dtype=np.int64))


def smote_oversample(ds, cfg=SmoteConfig(), return_provenance=False, gaps=None):
    """Grow every minority class to at least ``ratio`` times the majority count.

    New samples sit at ``x + r * (x_nb - x)`` where ``x`` is a minority sample
    drawn uniformly with replacement, ``x_nb`` one of its ``k_neighbors``
    nearest same-class neighbors, and ``r ~ U[0, 1]``. Originals are kept as
    the output prefix. ``gaps`` overrides the random ``r`` draws (testing aid).
    """
    from .nn_index import NnIndex

    counts = ds.class_counts()
    present = np.flatnonzero(counts)
    if present.size < 2:
        raise DataError("SMOTE needs at least two classes")
    majority = counts.max()
    target = int(math.ceil(cfg.ratio * majority - 1e-9))
    rng = np.random.default_rng(cfg.seed)
    new_X, prov = [], []
    for c in present:
        need = target - counts[c]
        if need <= 0:
            continue
        members = np.flatnonzero(ds.labels == c)
        if members.size <= cfg.k_neighbors:
            raise DataError(f"class {c} has {members.size} samples; SMOTE with "
                            f"k_neighbors={cfg.k_neighbors} needs more")
        Xc = ds.features[members]
        nbrs, _ = NnIndex(Xc).query_batch(Xc, cfg.k_neighbors,
                                          exclude=np.arange(members.size), threads=1)
        src = rng.integers(0, members.size, size=need)
        pick = rng.integers(0, cfg.k_neighbors, size=need)
        r = rng.random(need) if gaps is None else np.broadcast_to(
            np.asarray(gaps, dtype=float), (need,)).copy()
        nb = nbrs[src, pick]
        new_X.append(Xc[src] + r[:, None] * (Xc[nb] - Xc[src]))
        prov.append((members[src], members[nb], r, np.full(need, c, dtype=np.int64)))
    if not new_X:
        out = ds
        provenance = SmoteProvenance(*(np.empty(0, dtype=t) for t in (np.int64, np.int64, float, np.int64)))
    else:
        synth_labels = np.concatenate([p[3] for p in prov])
        out = EcgDataset(np.vstack([ds.features] + new_X),
                         np.concatenate([ds.labels, synth_labels]), ds.class_names, ds.source)
        provenance = SmoteProvenance(*(np.concatenate([p[i] for p in prov]) for i in range(4)))
    return (out, provenance) if return_provenance else out
