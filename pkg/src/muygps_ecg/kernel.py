"""Isotropic Matérn covariance and noised Gram-matrix assembly."""

from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import cdist

SUPPORTED_NU = (0.5, 1.5, 2.5)

JITTER_START = 1e-8
JITTER_MAX = 1e-4


class KernelError(ValueError):
    pass


class FactorizationError(np.linalg.LinAlgError):
    """Cholesky failed even after the largest allowed diagonal jitter."""


@dataclass(frozen=True)
class KernelParams:
    """Matérn hyperparameters.

    ``sigma2`` scales the kernel amplitude. The GP and MuyGPs predictors
    evaluate a unit-amplitude kernel and apply ``sigma2`` to the posterior
    variance only, so the posterior mean does not depend on it.
    """

    nu: float = 1.5
    length_scale: float = 1.0
    noise: float = 1e-5
    sigma2: float = 1.0

    def __post_init__(self):
        if not self.nu > 0:
            raise KernelError(f"nu must be positive, got {self.nu}")
        if not self.length_scale > 0:
            raise KernelError(f"length_scale must be positive, got {self.length_scale}")
        if not self.noise >= 0:
            raise KernelError(f"noise must be non-negative, got {self.noise}")
        if not self.sigma2 > 0:
            raise KernelError(f"sigma2 must be positive, got {self.sigma2}")

    def unit(self):
        return replace(self, sigma2=1.0)

    def with_(self, **kw):
        return replace(self, **kw)

    def to_dict(self):
        return {"nu": self.nu, "length_scale": self.length_scale,
                "noise": self.noise, "sigma2": self.sigma2}


@dataclass(frozen=True)
class CovarianceMatrix:
    values: np.ndarray
    cholesky: np.ndarray
    jitter_applied: float = 0.0


def matern(d, p=KernelParams()):
    """Matérn covariance at Euclidean distance ``d`` (scalar or array).

    Only the closed half-integer forms nu in {0.5, 1.5, 2.5} are available.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise KernelError("distances must be non-negative")
    r = d / p.length_scale
    if p.nu == 0.5:
        k = np.exp(-r)
    elif p.nu == 1.5:
        s = np.sqrt(3.0) * r
        k = (1.0 + s) * np.exp(-s)
    elif p.nu == 2.5:
        s = np.sqrt(5.0) * r
        k = (1.0 + s + s * s / 3.0) * np.exp(-s)
    else:
        raise KernelError(f"unsupported nu={p.nu}; choose one of {SUPPORTED_NU}")
    k = p.sigma2 * k
    return float(k) if k.ndim == 0 else k


def pairwise_distances(A, B):
    """Euclidean distances between rows of A (m, d) and B (n, d)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise KernelError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    return cdist(A, B)


def cross_covariance(A, B, p=KernelParams()):
    return matern(pairwise_distances(A, B), p)


def cholesky_with_jitter(K, scale=1.0):
    """Cholesky factor of ``K``, adding escalating diagonal jitter on failure.

    Returns ``(L, jitter)``. Jitter starts at ``1e-8 * scale`` and grows by
    10x up to ``1e-4 * scale``.
    """
    try:
        return np.linalg.cholesky(K), 0.0
    except np.linalg.LinAlgError:
        pass
    n = K.shape[-1]
    eye = np.eye(n)
    jitter = JITTER_START * scale
    while jitter <= JITTER_MAX * scale * (1 + 1e-9):
        try:
            return np.linalg.cholesky(K + jitter * eye), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise FactorizationError(
        f"covariance not positive definite after jitter {JITTER_MAX * scale:g}")


def train_covariance(X, p=KernelParams()):
    """Noised Gram matrix ``K(X, X) + noise * I`` with its Cholesky factor."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise KernelError("empty point set")
    K = cross_covariance(X, X, p)
    K = 0.5 * (K + K.T)
    K[np.diag_indices_from(K)] += p.noise
    L, jitter = cholesky_with_jitter(K, p.sigma2)
    if jitter:
        K = K + jitter * np.eye(K.shape[0])
    return CovarianceMatrix(values=K, cholesky=L, jitter_applied=jitter)
