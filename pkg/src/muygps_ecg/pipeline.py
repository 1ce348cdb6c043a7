"""End-to-end runs: fit, calibrate, sweep tau, report."""

import numpy as np

from .baseline_knn import knn_fit, knn_predict_batch, knn_probability_predictions
from .evaluation import accuracy, tau_sweep
from .gp_exact import GpClassifier
from .kernel import KernelParams
from .muygps import MuyGpsClassifier, TrainConfig
from .uq import DEFAULT_GRID

PTB_NN = 50
MITBIH_NN = 35


def default_nn_count(n_classes):
    return PTB_NN if n_classes == 2 else MITBIH_NN


def fit_muygps(train, nn_count=None, params=KernelParams(), train_config=TrainConfig(),
               positive_class=0, optimize=True, threads=None):
    nn_count = default_nn_count(train.n_classes) if nn_count is None else nn_count
    clf = MuyGpsClassifier(nn_count, params, train_config, positive_class, threads)
    return clf.fit(train, optimize_params=optimize)


def fit_gp(train, params=KernelParams(), positive_class=0):
    return GpClassifier(params, positive_class).fit(train)


def uq_report(clf, test, grid=DEFAULT_GRID, calib_fraction=0.1, calib_seed=0, calib_tau=1.96,
              metadata=None):
    """Calibrate ``clf`` in place, predict ``test`` and sweep ``grid``.

    Returns ``(report, calibration_results)``.
    """
    calib = clf.calibrate(calib_fraction, calib_seed, calib_tau)
    preds = clf.predict_latent(test.features)
    meta = dict(metadata or {})
    meta.update({
        "calibration": [{"sigma2": c.sigma2, "alpha": c.alpha,
                         "one_minus_beta": c.one_minus_beta, "objective": c.objective}
                        for c in calib],
        "calibration_fraction": calib_fraction, "calibration_seed": calib_seed,
        "calibration_tau": calib_tau,
        "union_semantics": "binary" if clf.is_binary else "one-versus-all union",
        "taus": list(grid.taus),
    })
    report = tau_sweep(preds, test.labels, grid, n_classes=test.n_classes, metadata=meta)
    return report, calib


def knn_accuracy(train, test, k=3, threads=None):
    model = knn_fit(train.features, train.labels, k, train.n_classes)
    labels, _ = knn_predict_batch(model, test.features, threads)
    return accuracy(labels, test.labels), labels


def knn_uq_report(train, test, k=3, runs=30, seed=0, positive_class=1, grid=DEFAULT_GRID,
                  metadata=None, threads=None):
    """Tau sweep over bootstrap-repeated KNN vote shares (binary data only)."""
    if train.n_classes != 2:
        raise ValueError("KNN interval report is defined for binary data")
    preds = knn_probability_predictions(train.features, train.labels, test.features, k, runs,
                                        seed, positive_class, threads)
    meta = dict(metadata or {})
    meta.update({"model": "knn", "k": k, "runs": runs, "seed": seed,
                 "randomness": "bootstrap resampling of training rows",
                 "taus": list(grid.taus)})
    return tau_sweep(preds, test.labels, grid, n_classes=2, metadata=meta)


def removed_fraction(report):
    return [r.n_ambiguous / r.n_total if r.n_total else float("nan") for r in report.rows]


def summarize(report):
    return "\n".join(
        f"tau={r.tau:<6} conf={r.confidence:.2f} ambiguous={r.n_ambiguous:>5}/{r.n_total} "
        f"acc_all={r.accuracy_all:.4f} acc_confident="
        + ("n/a" if r.accuracy_non_ambiguous is None else f"{r.accuracy_non_ambiguous:.4f}")
        for r in report.rows)


def class_balance(ds):
    counts = ds.class_counts()
    return {name: int(c) for name, c in zip(ds.class_names, counts)}


def minority_ratio(ds):
    counts = ds.class_counts()
    counts = counts[counts > 0]
    return float(np.min(counts) / np.max(counts))
