"""Nearest-neighbor Gaussian process classification (MuyGPs).

Each prediction conditions only on the ``k`` nearest training points, so a
query costs one ``k x k`` Cholesky solve. Hyperparameters are fit by
minimizing a leave-one-out cross-entropy over a fixed training batch.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.special import expit

from ._parallel import chunked_map, concat
from .data import EcgDataset, sample_batch, signed_labels, stratified_indices
from .kernel import KernelParams, cholesky_with_jitter, matern
from .nn_index import NnIndex
from .uq import LatentPredictions, OvaPredictions, calibrate_sigma2

log = logging.getLogger(__name__)

PROB_CLAMP = 1e-12
VARIANCE_FLOOR = 1e-12


def softmax_pair(a):
    """``(e^a, e^-a) / (e^a + e^-a)``, evaluated without overflow."""
    a = np.asarray(a, dtype=float)
    p0 = expit(2.0 * a)
    p1 = expit(-2.0 * a)
    if p0.ndim == 0:
        return float(p0), float(p1)
    return p0, p1


def cross_entropy(latents, z):
    """Summed log loss of latent predictions against +/-1 labels.

    The first softmax component is the probability of label +1.
    """
    p0, p1 = softmax_pair(np.asarray(latents, dtype=float))
    p0 = np.clip(p0, PROB_CLAMP, 1 - PROB_CLAMP)
    p1 = np.clip(p1, PROB_CLAMP, 1 - PROB_CLAMP)
    w = (np.asarray(z, dtype=float) + 1.0) / 2.0
    return float(-np.sum(w * np.log(p0) + (1.0 - w) * np.log(p1)))


def local_distances(train, sq_norms, nbr_idx):
    """Pairwise distances within each neighborhood, shape ``(m, k, k)``."""
    XN = train[nbr_idx]
    nrm = sq_norms[nbr_idx]
    D2 = nrm[:, :, None] + nrm[:, None, :] - 2.0 * (XN @ XN.transpose(0, 2, 1))
    D2 = 0.5 * (D2 + D2.transpose(0, 2, 1))
    np.maximum(D2, 0.0, out=D2)
    k = nbr_idx.shape[1]
    D2[:, np.arange(k), np.arange(k)] = 0.0
    return np.sqrt(D2)


def _batched_cholesky(K):
    try:
        return np.linalg.cholesky(K), 0
    except np.linalg.LinAlgError:
        pass
    L = np.empty_like(K)
    n_jitter = 0
    for i in range(K.shape[0]):
        L[i], jitter = cholesky_with_jitter(K[i])
        n_jitter += jitter > 0
    return L, n_jitter


def solve_local(D, dx, zN, params):
    """Kriging over a stack of neighborhoods.

    ``D`` (m, k, k) neighbor distances, ``dx`` (m, k) query-to-neighbor
    distances, ``zN`` (m, k) neighbor responses. Returns unit-amplitude
    ``(mean, variance, quad)`` where ``quad`` is ``z_N' K^-1 z_N`` per point.
    """
    unit = params.unit()
    K = matern(D, unit)
    k = K.shape[-1]
    K[:, np.arange(k), np.arange(k)] += params.noise
    kx = matern(dx, unit)
    L, _ = _batched_cholesky(K)
    Y = np.linalg.solve(L, np.stack([kx, zN], axis=-1))
    mean = np.einsum("ij,ij->i", Y[..., 0], Y[..., 1])
    var = 1.0 - np.einsum("ij,ij->i", Y[..., 0], Y[..., 0])
    quad = np.einsum("ij,ij->i", Y[..., 1], Y[..., 1])
    return mean, var, quad


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 500
    seed: int = 0
    length_scale_bounds: tuple = (1e-2, 1e2)
    noise_bounds: tuple = None
    max_evals: int = 60

    def __post_init__(self):
        for b in (self.length_scale_bounds, self.noise_bounds):
            if b is not None and not (0 < b[0] < b[1]):
                raise ValueError(f"bounds must satisfy 0 < lower < upper, got {b}")
        if self.batch_size < 1 or self.max_evals < 1:
            raise ValueError("batch_size and max_evals must be positive")


@dataclass
class MuyGpsModel:
    """Trained binary MuyGPs predictor over a shared neighbor index."""

    params: KernelParams
    nn_count: int
    index: NnIndex
    targets: np.ndarray
    train_info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.targets = np.asarray(self.targets, dtype=float)
        if self.targets.shape != (self.index.n,):
            raise ValueError("targets must have one entry per training row")
        if not 1 <= self.nn_count <= self.index.n:
            raise ValueError(f"nn_count must be in [1, {self.index.n}]")

    @property
    def train_features(self):
        return self.index.train

    @property
    def sigma2(self):
        return self.params.sigma2

    def _neighbors(self, X, exclude, threads):
        return self.index.query_batch(X, self.nn_count, exclude=exclude, threads=threads)

    def unit_predict(self, X, exclude=None, threads=None):
        """Unit-scale means and variances plus the mean local scale estimate."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        idx, dist = self._neighbors(X, exclude, threads)
        train, norms = self.index.train, self.index.sq_norms

        def run(sl):
            D = local_distances(train, norms, idx[sl])
            return solve_local(D, dist[sl], self.targets[idx[sl]], self.params)

        mean, var, quad = concat(chunked_map(run, len(X), threads=threads))
        base = float(np.mean(quad) / self.nn_count) if len(quad) else 1.0
        return mean, np.maximum(var, VARIANCE_FLOOR), base

    def predict(self, X, threads=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[0] == 0:
            return LatentPredictions(np.empty(0), np.empty(0), np.empty(0, dtype=np.int64))
        if X.shape[1] != self.index.dim:
            raise ValueError(f"feature width {X.shape[1]} != model width {self.index.dim}")
        idx, dist = self._neighbors(X, None, threads)
        mean, var, nf = _predict_from_neighbors(self.index, [self], idx, dist, threads)[0]
        return LatentPredictions(mean, var, np.where(mean > 0, 1, -1), nf)


def _predict_from_neighbors(index, models, idx, dist, threads):
    train, norms = index.train, index.sq_norms

    def run(sl):
        D = local_distances(train, norms, idx[sl])
        out = []
        for m in models:
            mean, var, _ = solve_local(D, dist[sl], m.targets[idx[sl]], m.params)
            out.append((mean, var))
        return out

    chunks = chunked_map(run, len(idx), threads=threads)
    results = []
    for j, m in enumerate(models):
        mean = np.concatenate([c[j][0] for c in chunks])
        var = np.concatenate([c[j][1] for c in chunks])
        floored = var < VARIANCE_FLOOR
        results.append((mean, m.params.sigma2 * np.where(floored, VARIANCE_FLOOR, var),
                        int(floored.sum())))
    return results


def local_mean(model, x, exclude_self=None):
    X = np.asarray(x, dtype=float).reshape(1, -1)
    excl = None if exclude_self is None else np.array([exclude_self])
    mean, _, _ = model.unit_predict(X, exclude=excl, threads=1)
    return float(mean[0])


def local_variance(model, x, exclude_self=None):
    X = np.asarray(x, dtype=float).reshape(1, -1)
    excl = None if exclude_self is None else np.array([exclude_self])
    _, var, _ = model.unit_predict(X, exclude=excl, threads=1)
    return float(model.sigma2 * var[0])


def predict(model, X, threads=None):
    return model.predict(X, threads=threads)


class _BatchObjective:
    """Leave-one-out loss over a fixed batch; neighborhoods computed once."""

    def __init__(self, index, targets, batch, nn_count, threads=None):
        self.batch = np.asarray(batch, dtype=np.int64)
        idx, dist = index.query_batch(index.train[self.batch], nn_count, exclude=self.batch,
                                      threads=threads)
        self.D = local_distances(index.train, index.sq_norms, idx)
        self.dx = dist
        self.zN = targets[idx]
        self.z = targets[self.batch]
        self.n_evals = 0
        self.history = []

    def latents(self, params):
        return solve_local(self.D, self.dx, self.zN, params)[0]

    def __call__(self, params):
        self.n_evals += 1
        loss = cross_entropy(self.latents(params), self.z)
        self.history.append((params, loss))
        return loss


def cross_entropy_loss(model, batch):
    """Leave-one-out cross-entropy of ``model`` over training rows ``batch``."""
    batch = np.asarray(batch, dtype=np.int64)
    if batch.size == 0 or batch.min() < 0 or batch.max() >= model.index.n:
        raise ValueError("invalid batch index")
    return _BatchObjective(model.index, model.targets, batch, model.nn_count, threads=1)(model.params)


def optimize(train, z, cfg=TrainConfig(), init=KernelParams(), nn_count=50, index=None,
             threads=None):
    """Fit the length scale (and optionally the noise) by batched LOO cross-entropy.

    ``train`` is a feature matrix or :class:`EcgDataset`; ``z`` the +/-1 labels.
    Returns a :class:`MuyGpsModel` whose ``train_info`` records the initial and
    final loss and the number of objective evaluations.
    """
    X = train.features if isinstance(train, EcgDataset) else np.asarray(train, dtype=float)
    index = index if index is not None else NnIndex(X)
    z = np.asarray(z, dtype=float)
    n = index.n
    if n <= nn_count:
        raise ValueError(f"need more than nn_count={nn_count} training rows, got {n}")
    batch = np.sort(sample_batch(n, min(cfg.batch_size, n), cfg.seed))
    if np.unique(z[batch]).size < 2:
        warnings.warn("training batch contains a single class", stacklevel=2)
    lo, hi = cfg.length_scale_bounds
    if not lo <= init.length_scale <= hi:
        raise ValueError(f"initial length_scale {init.length_scale} outside bounds {cfg.length_scale_bounds}")
    if cfg.noise_bounds is not None and not cfg.noise_bounds[0] <= init.noise <= cfg.noise_bounds[1]:
        raise ValueError(f"initial noise {init.noise} outside bounds {cfg.noise_bounds}")

    obj = _BatchObjective(index, z, batch, nn_count, threads)
    init_loss = obj(init)
    budget = cfg.max_evals - 1
    if budget > 0 and cfg.noise_bounds is None:
        minimize_scalar(lambda t: obj(init.with_(length_scale=float(np.exp(t)))),
                        bounds=(np.log(lo), np.log(hi)), method="bounded",
                        options={"maxiter": budget, "xatol": 1e-3})
    elif budget > 0:
        nlo, nhi = cfg.noise_bounds
        x0 = [np.log(init.length_scale), np.log(max(init.noise, nlo))]
        minimize(lambda t: obj(init.with_(length_scale=float(np.exp(t[0])), noise=float(np.exp(t[1])))),
                 x0, method="Nelder-Mead",
                 bounds=[(np.log(lo), np.log(hi)), (np.log(nlo), np.log(nhi))],
                 options={"maxfev": budget, "xatol": 1e-3, "fatol": 1e-6})
    best_params, best_loss = min(obj.history, key=lambda h: h[1])
    log.info("optimized length_scale=%.6g loss %.6g -> %.6g in %d evaluations",
             best_params.length_scale, init_loss, best_loss, obj.n_evals)
    info = {"initial_loss": init_loss, "final_loss": best_loss, "n_evals": obj.n_evals,
            "batch_size": int(batch.size)}
    return MuyGpsModel(best_params, nn_count, index, z, info)


class MuyGpsClassifier:
    """Binary or one-versus-all MuyGPs classifier on an :class:`EcgDataset`.

    Binary problems use one latent with ``positive_class`` mapped to +1. With
    more than two classes each class gets its own model (own length scale),
    all sharing one neighbor index, and the decision is the argmax latent.
    """

    def __init__(self, nn_count=50, params=KernelParams(), train_config=TrainConfig(),
                 positive_class=0, threads=None):
        self.nn_count = nn_count
        self.init_params = params
        self.train_config = train_config
        self.positive_class = positive_class
        self.threads = threads
        self.models = []
        self.class_names = ()
        self.index = None

    @property
    def is_binary(self):
        return len(self.class_names) == 2

    def _outputs(self):
        if self.is_binary:
            return [self.positive_class]
        return list(range(len(self.class_names)))

    def fit(self, ds, optimize_params=True):
        self.class_names = ds.class_names
        self.index = NnIndex(ds.features)
        self.labels = ds.labels
        self.models = []
        for c in self._outputs():
            z = signed_labels(ds.labels, c)
            if optimize_params:
                m = optimize(self.index.train, z, self.train_config, self.init_params,
                             self.nn_count, index=self.index, threads=self.threads)
            else:
                m = MuyGpsModel(self.init_params, self.nn_count, self.index, z)
            self.models.append(m)
        return self

    @classmethod
    def from_parts(cls, index, labels, class_names, params_list, nn_count, positive_class=0,
                   threads=None):
        self = cls(nn_count=nn_count, positive_class=positive_class, threads=threads)
        self.class_names = tuple(class_names)
        self.index = index
        self.labels = np.asarray(labels, dtype=np.int64)
        self.models = [MuyGpsModel(p, nn_count, index, signed_labels(self.labels, c))
                       for p, c in zip(params_list, self._outputs())]
        return self

    def _other_class(self):
        return 1 - self.positive_class

    def predict_latent(self, X):
        """:class:`LatentPredictions` (binary) or :class:`OvaPredictions`."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.index.dim:
            raise ValueError(f"feature width {X.shape[1]} != model width {self.index.dim}")
        if X.shape[0] == 0:
            results = [(np.empty(0), np.empty(0), 0)] * len(self.models)
        else:
            idx, dist = self.index.query_batch(X, self.nn_count, threads=self.threads)
            results = _predict_from_neighbors(self.index, self.models, idx, dist, self.threads)
        if self.is_binary:
            mean, var, nf = results[0]
            labels = np.where(mean > 0, self.positive_class, self._other_class())
            return LatentPredictions(mean, var, labels.astype(np.int64), nf)
        per_class = tuple(LatentPredictions(m, v, np.where(m > 0, 1, -1), nf)
                          for m, v, nf in results)
        means = np.column_stack([r[0] for r in results]) if len(X) else np.empty((0, len(results)))
        return OvaPredictions(per_class, np.argmax(means, axis=1).astype(np.int64))

    def predict(self, X):
        return self.predict_latent(X).labels

    def calibrate(self, n_fraction=0.1, seed=0, tau=1.96, scale_grid=None):
        """Calibrate every model's variance scale on a stratified training slice.

        Slice points are predicted leave-one-out so they never see themselves.
        """
        ds = EcgDataset(self.index.train, self.labels, self.class_names)
        _, held_idx = stratified_indices(ds, n_fraction, seed)
        results = []
        for m, c in zip(self.models, self._outputs()):
            res = calibrate_sigma2(m, self.index.train[held_idx], m.targets[held_idx], tau,
                                   scale_grid, exclude=held_idx, threads=self.threads)
            m.params = m.params.with_(sigma2=res.sigma2)
            results.append(res)
        return results

    def kernel_params(self):
        return [m.params for m in self.models]

