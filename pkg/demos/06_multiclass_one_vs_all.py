"""Five-class one-versus-all MuyGPs with union-of-uncertain flags."""

import numpy as np

from muygps_ecg.data import MITBIH_CLASS_NAMES, EcgDataset, stratified_split
from muygps_ecg.muygps import MuyGpsClassifier, TrainConfig
from muygps_ecg.pipeline import summarize, uq_report

rng = np.random.default_rng(11)
centers = rng.random((5, 10))
counts = (1500, 150, 300, 60, 300)
X = np.vstack([c + 0.35 * rng.standard_normal((n, 10)) for c, n in zip(centers, counts)])
ds = EcgDataset(X, np.repeat(np.arange(5), counts), MITBIH_CLASS_NAMES)
train, test = stratified_split(ds, 0.2, seed=42)

clf = MuyGpsClassifier(nn_count=35, train_config=TrainConfig(batch_size=300)).fit(train)
print("per-class length scales:", [round(p.length_scale, 3) for p in clf.kernel_params()])
preds = clf.predict_latent(test.features)
print("accuracy (argmax of latents):", np.mean(preds.labels == test.labels))

# a point counts as uncertain if any of the five binary intervals contains 0
report, _ = uq_report(clf, test)
print(summarize(report))
