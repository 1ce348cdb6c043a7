"""Matérn covariance and exact GP classification on a toy latent function."""

import numpy as np

from muygps_ecg.gp_exact import classify, gp_fit_predict
from muygps_ecg.kernel import KernelParams, matern, train_covariance
from muygps_ecg.synthetic import SyntheticSpec, draw_gp

# the three closed-form smoothness levels at a few distances
d = np.array([0.0, 0.5, 1.0, 2.0])
for nu in (0.5, 1.5, 2.5):
    print(f"nu={nu}:", np.round(matern(d, KernelParams(nu=nu)), 5))

# draw a latent function from the prior and keep only its sign as labels
draw = draw_gp(SyntheticSpec(400, dim=2, params=KernelParams(length_scale=0.3), seed=1))
X, z = draw.points, draw.labels.astype(float)
train, test = slice(0, 300), slice(300, 400)

# noised Gram matrix; jitter is only added if the factorization fails
cov = train_covariance(X[train], KernelParams(length_scale=0.3))
print("jitter applied:", cov.jitter_applied)

post = gp_fit_predict(X[train], z[train], X[test], KernelParams(length_scale=0.3))
acc = np.mean(classify(post) == z[test])
print(f"exact GP sign accuracy on held-out points: {acc:.3f}")
print("posterior variance range:", post.variance.min(), post.variance.max())
