"""Latent functions drawn from a Matérn GP prior, for oracle tests."""

from dataclasses import dataclass, field

import numpy as np

from .data import EcgDataset, save_csv
from .kernel import KernelParams, cross_covariance

SAMPLING_JITTER = 1e-10


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    dim: int = 2
    params: KernelParams = field(default_factory=KernelParams)
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.dim < 1:
            raise ValueError("need n >= 1 and dim >= 1")


@dataclass(frozen=True)
class SyntheticDraw:
    points: np.ndarray
    latent: np.ndarray
    labels: np.ndarray

    def to_dataset(self, positive_class=0):
        """Class ``positive_class`` where the latent is positive, the other class elsewhere."""
        classes = np.where(self.labels > 0, positive_class, 1 - positive_class)
        return EcgDataset(self.points, classes, ("0", "1"), source="synthetic")


def prior_sample(points, params, rng):
    """One draw of ``f ~ N(0, K(points, points))``."""
    K = cross_covariance(points, points, params)
    K[np.diag_indices_from(K)] += SAMPLING_JITTER * params.sigma2
    L = np.linalg.cholesky(K)
    return L @ rng.standard_normal(len(points))


def draw_gp(spec):
    """Uniform points in ``[0, 1]^dim``, a prior latent draw and its sign labels."""
    rng = np.random.default_rng(spec.seed)
    X = rng.random((spec.n, spec.dim))
    f = prior_sample(X, spec.params, rng)
    return SyntheticDraw(X, f, np.where(f > 0, 1, -1))


def write_csv(draw, path, positive_class=0):
    save_csv(draw.to_dataset(positive_class), path)
