"""Prediction intervals, ambiguity flags and variance-scale calibration.

A prediction is *ambiguous* at level ``tau`` when its interval
``mean +/- tau * sqrt(variance)`` contains the decision boundary (0 for
latent GP outputs, 0.5 for vote/probability outputs). Intervals are closed.
"""

import warnings
from dataclasses import dataclass

import numpy as np

TAUS = (0.994, 1.28, 1.64, 1.96, 2.58)
CONFIDENCES = (0.68, 0.80, 0.90, 0.95, 0.99)


@dataclass(frozen=True)
class TauGrid:
    taus: tuple = TAUS
    confidences: tuple = CONFIDENCES

    def __post_init__(self):
        taus = tuple(float(t) for t in self.taus)
        if self.confidences is None:
            from scipy.stats import norm
            confs = tuple(float(2 * norm.cdf(t) - 1) for t in taus)
        else:
            confs = tuple(float(c) for c in self.confidences)
        if len(taus) != len(confs):
            raise ValueError("taus and confidences must pair one-to-one")
        if any(t <= 0 for t in taus) or any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError("taus must be positive and strictly increasing")
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "confidences", confs)

    def __iter__(self):
        return iter(zip(self.taus, self.confidences))

    def __len__(self):
        return len(self.taus)


DEFAULT_GRID = TauGrid()


@dataclass(frozen=True)
class LatentPrediction:
    mean: float
    variance: float
    label: int

    def ambiguous_at(self, tau, boundary=0.0):
        return bool(flag_ambiguous(self.mean, self.variance, tau, boundary))


@dataclass(frozen=True)
class LatentPredictions:
    """Column store of per-point latent predictions.

    ``labels`` holds the class decision for each point; ``n_floored`` counts
    variances that hit the numerical floor.
    """

    mean: np.ndarray
    variance: np.ndarray
    labels: np.ndarray
    n_floored: int = 0
    boundary: float = 0.0

    def __len__(self):
        return len(self.mean)

    def __getitem__(self, i):
        return LatentPrediction(float(self.mean[i]), float(self.variance[i]), int(self.labels[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def ambiguous(self, tau):
        return flag_ambiguous(self.mean, self.variance, tau, self.boundary)

    def rescaled(self, factor):
        """Same predictions with variance multiplied by ``factor``."""
        return LatentPredictions(self.mean, self.variance * factor, self.labels,
                                 self.n_floored, self.boundary)


@dataclass(frozen=True)
class OvaPredictions:
    """One binary prediction set per class plus the combined class decision."""

    per_class: tuple
    labels: np.ndarray

    def __post_init__(self):
        n = {len(p) for p in self.per_class}
        if len(n) > 1 or (n and n.pop() != len(self.labels)):
            raise ValueError("per-class predictions must be aligned with labels")

    def __len__(self):
        return len(self.labels)

    @property
    def n_floored(self):
        return sum(p.n_floored for p in self.per_class)

    def ambiguous(self, tau):
        return ova_uncertain_union(self.per_class, tau)


@dataclass(frozen=True)
class ProbabilityPredictions:
    """Repeated-run probability estimates; ambiguous when 0.5 is inside the interval."""

    mean: np.ndarray
    variance: np.ndarray
    labels: np.ndarray
    n_floored: int = 0

    def __len__(self):
        return len(self.mean)

    def ambiguous(self, tau):
        return probabilistic_ambiguity(self.mean, self.variance, tau)


@dataclass(frozen=True)
class CalibrationResult:
    sigma2: float
    alpha: float
    one_minus_beta: float
    objective: float
    scales: tuple = ()
    objectives: tuple = ()


def flag_ambiguous(mean, variance, tau, boundary=0.0):
    """True where ``boundary`` lies in ``[mean - tau*sd, mean + tau*sd]``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    mean = np.asarray(mean, dtype=float)
    sd = np.sqrt(np.maximum(np.asarray(variance, dtype=float), 0.0))
    out = np.abs(mean - boundary) <= tau * sd
    return bool(out) if out.ndim == 0 else out


def probabilistic_ambiguity(mean_prob, var_prob, tau):
    return flag_ambiguous(mean_prob, var_prob, tau, 0.5)


def ova_uncertain_union(per_class_preds, tau):
    """A point is uncertain if any per-class prediction is ambiguous at ``tau``."""
    per_class_preds = list(per_class_preds)
    if not per_class_preds:
        raise ValueError("need at least one class")
    lengths = {len(p) for p in per_class_preds}
    if len(lengths) != 1:
        raise ValueError(f"per-class prediction lengths differ: {sorted(lengths)}")
    out = np.zeros(lengths.pop(), dtype=bool)
    for p in per_class_preds:
        if hasattr(p, "ambiguous"):
            out |= p.ambiguous(tau)
        else:
            out |= np.array([q.ambiguous_at(tau) for q in p], dtype=bool)
    return out


def error_rates(mean, variance, truth_signed, tau):
    """``(alpha, one_minus_beta)`` of a latent prediction set at level ``tau``.

    alpha counts confident-but-wrong points, one_minus_beta ambiguous-but-right
    points, both as fractions of all points.
    """
    mean = np.asarray(mean, dtype=float)
    correct = np.where(mean > 0, 1.0, -1.0) == np.asarray(truth_signed, dtype=float)
    amb = flag_ambiguous(mean, variance, tau, 0.0)
    n = len(mean)
    return float(np.sum(~correct & ~amb)) / n, float(np.sum(correct & amb)) / n


def calibration_grid(base_scale, n=25, lo=1e-2, hi=1e2):
    return tuple(float(base_scale) * np.logspace(np.log10(lo), np.log10(hi), n))


def calibrate_sigma2(model, features, truth_signed, tau=1.96, scale_grid=None, exclude=None,
                     threads=None):
    """Pick the variance scale minimizing ``alpha + (1 - beta)`` over a grid.

    ``model`` must provide ``unit_predict(features, exclude=None)`` returning
    unit-scale means and variances plus a ``sigma2_estimate`` base scale.
    ``exclude`` gives training-row indices to leave out when ``features`` are
    themselves training rows. Ties go to the smallest scale.
    """
    truth_signed = np.asarray(truth_signed, dtype=float)
    if len(truth_signed) == 0:
        raise ValueError("empty calibration set")
    if len(truth_signed) < 10:
        warnings.warn("calibrating on fewer than 10 samples", stacklevel=2)
    mean, unit_var, base = model.unit_predict(features, exclude=exclude, threads=threads)
    if scale_grid is None:
        scale_grid = calibration_grid(base)
    scales = tuple(sorted(float(s) for s in scale_grid))
    if not scales:
        raise ValueError("empty scale grid")
    if scales[0] <= 0:
        raise ValueError("scales must be positive")
    best = None
    objectives = []
    for s in scales:
        a, b = error_rates(mean, s * unit_var, truth_signed, tau)
        objectives.append(a + b)
        if best is None or a + b < best.objective:
            best = CalibrationResult(s, a, b, a + b)
    return CalibrationResult(best.sigma2, best.alpha, best.one_minus_beta, best.objective,
                             scales, tuple(objectives))
