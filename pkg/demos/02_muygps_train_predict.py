"""Train MuyGPs by leave-one-out cross-entropy and compare it with the exact GP."""

import numpy as np

from muygps_ecg.gp_exact import gp_fit_predict
from muygps_ecg.kernel import KernelParams
from muygps_ecg.muygps import MuyGpsModel, TrainConfig, cross_entropy_loss, optimize
from muygps_ecg.nn_index import NnIndex
from muygps_ecg.synthetic import SyntheticSpec, draw_gp

draw = draw_gp(SyntheticSpec(3000, dim=2, params=KernelParams(length_scale=0.5), seed=7))
X, z = draw.points, draw.labels.astype(float)
Xtr, ztr, Xte, zte = X[:2500], z[:2500], X[2500:], z[2500:]

# length scale starts at 1 and is searched in log space over [0.01, 100]
model = optimize(Xtr, ztr, TrainConfig(batch_size=500, seed=0), KernelParams(), nn_count=50)
print("trained length scale:", round(model.params.length_scale, 4))
print("loss: %.3f -> %.3f in %d evaluations" % (
    model.train_info["initial_loss"], model.train_info["final_loss"], model.train_info["n_evals"]))

preds = model.predict(Xte)
print("MuyGPs accuracy:", np.mean(preds.labels == zte))

# with every training point as a neighbor the local model is the exact GP
small = NnIndex(Xtr[:200])
full = MuyGpsModel(model.params, 200, small, ztr[:200]).predict(Xte[:20])
exact = gp_fit_predict(Xtr[:200], ztr[:200], Xte[:20], model.params)
print("max |mean difference| at k = n:", np.max(np.abs(full.mean - exact.mean)))

# the loss is defined on any batch; compare the trained model to a poor length scale
batch = np.arange(0, 2500, 5)
worse = MuyGpsModel(model.params.with_(length_scale=5.0), 50, model.index, ztr)
print("loss trained vs l=5:", cross_entropy_loss(model, batch), cross_entropy_loss(worse, batch))
