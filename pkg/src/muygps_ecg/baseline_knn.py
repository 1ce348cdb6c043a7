"""k-nearest-neighbor vote classifier and its bootstrap spread estimate."""

from dataclasses import dataclass

import numpy as np

from .nn_index import NnIndex
from .uq import ProbabilityPredictions


@dataclass
class KnnModel:
    k: int
    index: NnIndex
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if not 1 <= self.k <= self.index.n:
            raise ValueError(f"k={self.k} out of range [1, {self.index.n}]")


def knn_fit(features, labels, k=3, n_classes=None):
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = int(labels.max()) + 1 if n_classes is None else n_classes
    return KnnModel(k, NnIndex(features), labels, n_classes)


def vote_fractions(model, X, threads=None):
    """Per-class vote shares among the ``k`` nearest training rows, ``(m, C)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        return np.empty((0, model.n_classes))
    idx, _ = model.index.query_batch(X, model.k, threads=threads)
    votes = model.labels[idx]
    counts = np.zeros((len(X), model.n_classes))
    for c in range(model.n_classes):
        counts[:, c] = np.sum(votes == c, axis=1)
    return counts / model.k


def knn_predict_batch(model, X, threads=None):
    """Labels (ties to the smallest class id) and vote fractions."""
    frac = vote_fractions(model, X, threads)
    return np.argmax(frac, axis=1).astype(np.int64), frac


def knn_predict(model, x):
    labels, frac = knn_predict_batch(model, np.asarray(x, dtype=float).reshape(1, -1), threads=1)
    return int(labels[0]), frac[0]


def knn_run_matrix(features, labels, test, k=3, runs=30, seed=0, positive_class=1,
                   n_classes=None, threads=None):
    """``(runs, m)`` positive-class vote fractions, one bootstrap refit per run.

    Run ``r`` resamples the training rows with ``default_rng([seed, r])``.
    """
    if runs < 2:
        raise ValueError("need at least 2 runs")
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = int(labels.max()) + 1 if n_classes is None else n_classes
    n = len(labels)
    probs = np.empty((runs, len(np.atleast_2d(test))))
    for r in range(runs):
        boot = np.sort(np.random.default_rng([seed, r]).integers(0, n, size=n))
        model = KnnModel(k, NnIndex(features[boot]), labels[boot], n_classes)
        probs[r] = vote_fractions(model, test, threads)[:, positive_class]
    return probs


def knn_repeated_runs(features, labels, test, k=3, runs=30, seed=0, positive_class=1,
                      n_classes=None, threads=None):
    """Mean and unbiased variance of the positive-class vote share across bootstrap runs."""
    probs = knn_run_matrix(features, labels, test, k, runs, seed, positive_class, n_classes, threads)
    return probs.mean(axis=0), probs.var(axis=0, ddof=1)


def knn_probability_predictions(features, labels, test, k=3, runs=30, seed=0, positive_class=1,
                                threads=None):
    """Binary :class:`ProbabilityPredictions` for the 0.5-boundary interval rule."""
    mean, var = knn_repeated_runs(features, labels, test, k, runs, seed, positive_class, 2, threads)
    other = 1 - positive_class
    return ProbabilityPredictions(mean, var, np.where(mean > 0.5, positive_class, other))
