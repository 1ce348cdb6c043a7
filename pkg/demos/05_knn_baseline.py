"""KNN vote baseline and its bootstrap interval rule around 0.5."""

import numpy as np

from muygps_ecg.baseline_knn import knn_fit, knn_predict_batch, knn_probability_predictions
from muygps_ecg.evaluation import tau_sweep
from muygps_ecg.pipeline import summarize

rng = np.random.default_rng(5)
X = rng.random((1200, 3))
y = (X[:, 0] + 0.1 * rng.standard_normal(1200) > 0.5).astype(int)
Xtr, ytr, Xte, yte = X[:1000], y[:1000], X[1000:], y[1000:]

labels, frac = knn_predict_batch(knn_fit(Xtr, ytr, k=3), Xte)
print("k=3 accuracy:", np.mean(labels == yte))

# 30 bootstrap refits give a mean and variance of the class-1 vote share
preds = knn_probability_predictions(Xtr, ytr, Xte, k=3, runs=30, seed=0)
print(summarize(tau_sweep(preds, yte, n_classes=2)))
