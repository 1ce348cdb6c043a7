"""Full Gaussian-process classification by regression on +/-1 labels."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .data import EcgDataset, stratified_indices
from .kernel import KernelParams, cross_covariance, train_covariance
from .uq import LatentPredictions, OvaPredictions, calibrate_sigma2

MAX_TRAIN = 20_000
VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class GpPosterior:
    mean: np.ndarray
    variance: np.ndarray
    n_floored: int = 0

    def __len__(self):
        return len(self.mean)


def posterior_from_factor(L, k_cross, targets, sigma2=1.0):
    """Mean and variance from a lower Cholesky factor of the noised Gram matrix.

    ``k_cross`` is (m, n) unit-amplitude cross-covariance to the test points,
    whose prior variance is 1.
    """
    V = solve_triangular(L, k_cross.T, lower=True, check_finite=False)
    w = solve_triangular(L, targets, lower=True, check_finite=False)
    mean = V.T @ w
    var = 1.0 - np.einsum("ij,ij->j", V, V)
    floored = var < VARIANCE_FLOOR
    var = np.where(floored, VARIANCE_FLOOR, var)
    return mean, sigma2 * var, int(floored.sum())


def gp_fit_predict(train_features, targets, test_features, params=KernelParams()):
    """Exact posterior at ``test_features`` given responses ``targets``.

    ``targets`` is normally the signed label vector. The kernel is evaluated
    at unit amplitude; ``params.sigma2`` scales the returned variance.
    """
    X = np.atleast_2d(np.asarray(train_features, dtype=float))
    T = np.atleast_2d(np.asarray(test_features, dtype=float))
    z = np.asarray(targets, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("no training points")
    if X.shape[0] > MAX_TRAIN:
        raise ValueError(f"exact GP limited to {MAX_TRAIN} training points, got {X.shape[0]}")
    if z.shape != (X.shape[0],):
        raise ValueError("targets must have one entry per training row")
    if T.shape[1] != X.shape[1]:
        raise ValueError(f"test dimension {T.shape[1]} != train dimension {X.shape[1]}")
    unit = params.unit()
    cov = train_covariance(X, unit)
    if T.shape[0] == 0:
        return GpPosterior(np.empty(0), np.empty(0))
    Ks = cross_covariance(T, X, unit)
    mean, var, nf = posterior_from_factor(cov.cholesky, Ks, z, params.sigma2)
    return GpPosterior(mean, var, nf)


def classify(post):
    """Sign rule; an exactly-zero latent maps to -1."""
    mean = post.mean if isinstance(post, GpPosterior) else np.asarray(post, dtype=float)
    return np.where(mean > 0, 1, -1)


class _HeldOutGp:
    """Unit-scale predictor over a fixed training subset, for calibration."""

    def __init__(self, X, z, params):
        self.X, self.z, self.params = X, z, params.unit()

    def unit_predict(self, features, exclude=None, threads=None):
        post = gp_fit_predict(self.X, self.z, features, self.params)
        cov = train_covariance(self.X, self.params)
        w = solve_triangular(cov.cholesky, self.z, lower=True, check_finite=False)
        return post.mean, post.variance, float(w @ w / len(self.z))


class GpClassifier:
    """Exact-GP counterpart of :class:`~muygps_ecg.muygps.MuyGpsClassifier`.

    Binary data use one latent with ``positive_class`` as +1; otherwise one
    latent per class and an argmax decision. All outputs share one Cholesky
    factorization.
    """

    def __init__(self, params=KernelParams(), positive_class=0):
        self.params_list = [params]
        self.positive_class = positive_class

    def fit(self, ds):
        if ds.n_samples > MAX_TRAIN:
            raise ValueError(f"exact GP limited to {MAX_TRAIN} training points, got {ds.n_samples}")
        self.features = ds.features
        self.labels = ds.labels
        self.class_names = ds.class_names
        self.params_list = [self.params_list[0]] * len(self._outputs())
        return self

    @property
    def is_binary(self):
        return len(self.class_names) == 2

    def _outputs(self):
        return [self.positive_class] if self.is_binary else list(range(len(self.class_names)))

    def _targets(self, c, labels=None):
        labels = self.labels if labels is None else labels
        return np.where(labels == c, 1.0, -1.0)

    def predict_latent(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.features.shape[1]:
            raise ValueError(f"feature width {X.shape[1]} != model width {self.features.shape[1]}")
        unit = self.params_list[0].unit()
        cov = train_covariance(self.features, unit)
        Ks = cross_covariance(X, self.features, unit) if len(X) else np.empty((0, len(self.labels)))
        outs = []
        for p, c in zip(self.params_list, self._outputs()):
            if len(X):
                mean, var, nf = posterior_from_factor(cov.cholesky, Ks, self._targets(c), p.sigma2)
            else:
                mean, var, nf = np.empty(0), np.empty(0), 0
            outs.append((mean, var, nf))
        if self.is_binary:
            mean, var, nf = outs[0]
            labels = np.where(mean > 0, self.positive_class, 1 - self.positive_class)
            return LatentPredictions(mean, var, labels.astype(np.int64), nf)
        per_class = tuple(LatentPredictions(m, v, np.where(m > 0, 1, -1), nf) for m, v, nf in outs)
        means = np.column_stack([o[0] for o in outs]) if len(X) else np.empty((0, len(outs)))
        return OvaPredictions(per_class, np.argmax(means, axis=1).astype(np.int64))

    def predict(self, X):
        return self.predict_latent(X).labels

    def calibrate(self, n_fraction=0.1, seed=0, tau=1.96, scale_grid=None):
        """Calibrate on a stratified slice predicted by a GP fit to the remaining rows."""
        ds = EcgDataset(self.features, self.labels, self.class_names)
        fit_idx, held_idx = stratified_indices(ds, n_fraction, seed)
        results = []
        for i, c in enumerate(self._outputs()):
            held = _HeldOutGp(self.features[fit_idx], self._targets(c, self.labels[fit_idx]),
                              self.params_list[i])
            res = calibrate_sigma2(held, self.features[held_idx],
                                   self._targets(c, self.labels[held_idx]), tau, scale_grid)
            self.params_list[i] = self.params_list[i].with_(sigma2=res.sigma2)
            results.append(res)
        return results

    def kernel_params(self):
        return list(self.params_list)
