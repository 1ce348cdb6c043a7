"""Calibrate the variance scale, flag ambiguous predictions and sweep tau.

Uses the PTB files when MUYGPS_ECG_DATA points at them, otherwise a
synthetic beat set with the same class balance.
"""

import os

import numpy as np

from muygps_ecg import data as D
from muygps_ecg.evaluation import report_csv
from muygps_ecg.pipeline import fit_muygps, summarize, uq_report

root = os.environ.get("MUYGPS_ECG_DATA")
if root and all(os.path.exists(os.path.join(root, f)) for f in D.PTB_FILES):
    ds = D.truncate(D.load_ptb(root), 80)
else:
    rng = np.random.default_rng(0)
    t = np.linspace(0, 1, 80)
    beats = []
    for c, n in enumerate((1100, 2900)):
        shape = np.exp(-((t - 0.25 - 0.01 * c) / 0.05) ** 2)
        beats.append(np.clip(shape + 0.3 * rng.standard_normal((n, 80)), 0, 1))
    ds = D.EcgDataset(np.vstack(beats), np.repeat([0, 1], [1100, 2900]), D.PTB_CLASS_NAMES)

train, test = D.stratified_split(ds, 0.2, seed=42)
clf = fit_muygps(train, nn_count=50)

# sigma2 is chosen on a 10% slice of the training data, never on test rows
report, calib = uq_report(clf, test)
c = calib[0]
print(f"sigma2={c.sigma2:.4g}  alpha={c.alpha:.4f}  1-beta={c.one_minus_beta:.4f}")
print(summarize(report))
report.check_invariants()
print(report_csv(report))
