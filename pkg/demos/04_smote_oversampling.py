"""Oversample a minority class with SMOTE and check every synthetic point."""

import numpy as np

from muygps_ecg import data as D

rng = np.random.default_rng(3)
X = np.vstack([rng.normal(0.3, 0.05, (40, 5)), rng.normal(0.7, 0.05, (200, 5))])
ds = D.EcgDataset(X, np.repeat([0, 1], [40, 200]), ("minority", "majority"))
print("before:", ds.class_counts())

out, prov = D.smote_oversample(ds, D.SmoteConfig(k_neighbors=5, ratio=0.8, seed=0),
                               return_provenance=True)
print("after: ", out.class_counts())

# each new row sits on the segment between its source and a same-class neighbor
x, y = ds.features[prov.source], ds.features[prov.neighbor]
new = out.features[ds.n_samples:]
print("max segment residual:", np.abs(new - (x + prov.r[:, None] * (y - x))).max())
print("originals untouched:", np.array_equal(out.features[:ds.n_samples], ds.features))
