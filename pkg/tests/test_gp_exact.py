import numpy as np
import pytest

from muygps_ecg.data import EcgDataset
from muygps_ecg.gp_exact import GpClassifier, classify, gp_fit_predict
from muygps_ecg.kernel import KernelParams
from muygps_ecg.synthetic import SyntheticSpec, draw_gp
from oracles import gp_posterior_mp


def test_matches_extended_precision_oracle():
    spec = SyntheticSpec(220, dim=5, params=KernelParams(length_scale=0.7), seed=21)
    draw = draw_gp(spec)
    X, T = draw.points[:200], draw.points[200:]
    z = draw.labels[:200].astype(float)
    p = KernelParams(length_scale=0.7)
    post = gp_fit_predict(X, z, T, p)
    mean, var = gp_posterior_mp(X, z, T, 1.5, 0.7, 1e-5)
    np.testing.assert_allclose(post.mean, mean, rtol=1e-8, atol=1e-12)
    np.testing.assert_allclose(post.variance, var, rtol=1e-8, atol=1e-14)


def test_single_point_algebra():
    post = gp_fit_predict([[0.3, 0.3]], [1.0], [[0.3, 0.3]], KernelParams(sigma2=2.0))
    assert post.mean[0] == pytest.approx(1 / (1 + 1e-5), rel=1e-12)
    assert post.variance[0] == pytest.approx(2.0 * (1 - 1 / (1 + 1e-5)), rel=1e-6)


def test_prior_reversion_far_away():
    X = np.random.default_rng(0).random((20, 2))
    z = np.where(X[:, 0] > 0.5, 1.0, -1.0)
    post = gp_fit_predict(X, z, [[1e3, 1e3]], KernelParams(sigma2=3.0))
    assert abs(post.mean[0]) < 1e-12
    assert post.variance[0] == pytest.approx(3.0)


def test_mean_independent_of_sigma2_and_variance_bounded():
    rng = np.random.default_rng(1)
    X, T = rng.random((60, 3)), rng.random((30, 3))
    z = np.sign(rng.standard_normal(60))
    a = gp_fit_predict(X, z, T, KernelParams(sigma2=1.0))
    b = gp_fit_predict(X, z, T, KernelParams(sigma2=7.0))
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_allclose(b.variance, 7.0 * a.variance, rtol=1e-14)
    assert np.all(b.variance <= 7.0) and np.all(b.variance >= 0)


def test_duplicate_training_point_is_stable():
    rng = np.random.default_rng(2)
    X, T = rng.random((40, 2)), rng.random((25, 2))
    z = np.where(X.sum(1) > 1, 1.0, -1.0)
    a = gp_fit_predict(X, z, T)
    b = gp_fit_predict(np.vstack([X, X[5]]), np.append(z, z[5]), T)
    assert np.max(np.abs(a.mean - b.mean)) < 1e-3


def test_interpolation_with_tiny_noise():
    X = np.random.default_rng(3).random((30, 2))
    z = np.where(X[:, 1] > 0.4, 1.0, -1.0)
    post = gp_fit_predict(X, z, X, KernelParams(noise=1e-8))
    np.testing.assert_allclose(post.mean, z, atol=1e-3)


def test_classify_tie_rule():
    assert classify(np.array([0.3, -0.7, 0.0])).tolist() == [1, -1, -1]


def test_empty_test_and_errors():
    post = gp_fit_predict([[0.0]], [1.0], np.empty((0, 1)))
    assert len(post) == 0
    with pytest.raises(ValueError):
        gp_fit_predict([[0.0]], [1.0, 2.0], [[0.0]])
    with pytest.raises(ValueError):
        gp_fit_predict([[0.0]], [1.0], [[0.0, 1.0]])


def test_classifier_binary_and_multiclass(beats):
    clf = GpClassifier(KernelParams(length_scale=1.0)).fit(beats)
    assert np.mean(clf.predict(beats.features) == beats.labels) > 0.95
    preds = clf.predict_latent(beats.features[:5])
    assert preds.labels.tolist() == np.where(preds.mean > 0, 0, 1).tolist()
    X = np.random.default_rng(0).random((90, 2))
    y = np.digitize(X[:, 0], [1 / 3, 2 / 3])
    multi = GpClassifier(KernelParams(length_scale=0.3)).fit(EcgDataset(X, y))
    out = multi.predict_latent(X)
    assert len(out.per_class) == 3
    means = np.column_stack([p.mean for p in out.per_class])
    np.testing.assert_array_equal(out.labels, np.argmax(means, axis=1))


def test_classifier_calibration_changes_only_variance(beats):
    clf = GpClassifier().fit(beats)
    before = clf.predict_latent(beats.features[:20])
    res = clf.calibrate(0.1, seed=0)
    after = clf.predict_latent(beats.features[:20])
    np.testing.assert_array_equal(before.mean, after.mean)
    np.testing.assert_allclose(after.variance, before.variance * res[0].sigma2, rtol=1e-12)
