import numpy as np
import pytest

from flowguard.errors import ContractError
from flowguard.models import Autoencoder, DenseClassifier, predict, train_ae, train_classifier


def blobs(n=400, seed=0):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    x = rng.normal(scale=0.3, size=(n, 2)) + np.where(y[:, None] == 1, 2.0, -2.0)
    return x, y


def test_separable_blobs_reach_high_accuracy():
    x, y = blobs()
    clf = train_classifier(x, y, n_iter=300)
    assert clf.train_accuracy_ >= 0.99
    assert len(clf.accuracy_trace_) == 300


def test_zero_iterations_near_chance():
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=(2000, 2)), rng.integers(0, 2, 2000)
    clf = DenseClassifier(n_iter=0, random_state=3).fit(x, y)
    assert abs(clf.train_accuracy_ - 0.5) <= 0.05
    assert clf.loss_trace_ == []


def test_label_out_of_range():
    x, _ = blobs(10)
    with pytest.raises(ContractError, match="index 3"):
        DenseClassifier(n_classes=2, n_iter=1).fit(x, np.array([0, 1, 0, 2, 0, 1, 0, 1, 0, 1]))


def test_fixed_seed_bitwise_weights():
    x, y = blobs(200)
    a = DenseClassifier(n_iter=50, random_state=7).fit(x, y)
    b = DenseClassifier(n_iter=50, random_state=7).fit(x, y)
    assert all(a.params_[k].tobytes() == b.params_[k].tobytes() for k in a.params_)


def test_predict_and_softmax():
    clf = DenseClassifier(hidden=(), n_iter=0)
    clf._init(3, 3)
    clf.params_ = {"w0": np.eye(3), "b0": np.zeros(3)}
    labels, proba = predict(clf, np.array([[3.0, 1.0, 1.0], [0.0, 0.0, 5.0]]))
    assert list(labels) == [0, 2]
    assert np.allclose(proba.sum(axis=1), 1.0, atol=1e-12) and np.all(proba >= 0)
    clf2 = DenseClassifier(hidden=(), n_iter=0)
    clf2._init(2, 2)
    clf2.params_ = {"w0": np.zeros((2, 2)), "b0": np.zeros(2)}
    assert np.allclose(predict(clf2, np.ones((1, 2)))[1], [[0.5, 0.5]])
    assert clf.predict(np.array([[3.0, 1.0, 1.0]]) + 10.0)[0] == 0


def test_softmax_normalization(ring_classifier, ring_test):
    p = ring_classifier.predict_proba(ring_test.samples)
    assert np.all(p >= 0) and np.max(np.abs(p.sum(axis=1) - 1)) <= 1e-12


def test_input_gradient_matches_finite_differences(ring_classifier, ring_test):
    x = ring_test.samples[:5]
    coef = np.array([[1.0, -1.0]] * 5)
    grad = ring_classifier.input_gradient(x, coef)
    h = 1e-5
    fd = np.zeros_like(x)
    for j in range(x.shape[1]):
        e = np.zeros(x.shape[1])
        e[j] = h
        up = (ring_classifier.decision_function(x + e) * coef).sum(axis=1)
        dn = (ring_classifier.decision_function(x - e) * coef).sum(axis=1)
        fd[:, j] = (up - dn) / (2 * h)
    assert np.linalg.norm(grad - fd) / np.linalg.norm(fd) <= 1e-4


def test_classifier_checkpoint(tmp_path, ring_classifier, ring_test):
    ring_classifier.save(tmp_path / "c.fgw")
    back = DenseClassifier.load(tmp_path / "c.fgw")
    x = ring_test.samples[:20]
    assert back.decision_function(x).tobytes() == ring_classifier.decision_function(x).tobytes()
    assert back.get_params() == ring_classifier.get_params()


def test_linear_ae_with_full_bottleneck_reaches_identity():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(512, 4)) @ rng.normal(size=(4, 4)) * 0.3
    x -= x.mean(axis=0)
    ae = train_ae(x, bottleneck=4, hidden=(), activation="linear", n_iter=3000,
                  learning_rate=1e-2, random_state=1)
    assert ae.reconstruction_mse(x) <= 1e-4


def test_ae_zero_iterations_matches_initialization():
    x = np.random.default_rng(1).uniform(size=(64, 6))
    a = Autoencoder(bottleneck=2, n_iter=0, random_state=5).fit(x)
    b = Autoencoder(bottleneck=2, n_iter=0, random_state=5)
    b._init(6)
    assert a.reconstruction_mse(x) == b.reconstruction_mse(x)


def test_ae_held_out_error_close_to_train(ring_train, ring_test):
    ae = Autoencoder(bottleneck=2, n_iter=800, random_state=2).fit(ring_train.samples)
    assert ae.reconstruction_mse(ring_test.samples) <= 2 * ae.reconstruction_mse(ring_train.samples)
    assert ae.transform(ring_test.samples).shape == (512, 2)


def test_ae_bottleneck_validation():
    with pytest.raises(ContractError):
        Autoencoder(bottleneck=5, n_iter=0).fit(np.zeros((4, 3)))


def test_ae_checkpoint(tmp_path):
    x = np.random.default_rng(2).uniform(size=(32, 5))
    ae = Autoencoder(bottleneck=2, n_iter=20).fit(x)
    ae.save(tmp_path / "a.fgw")
    assert Autoencoder.load(tmp_path / "a.fgw").reconstruct(x).tobytes() == ae.reconstruct(x).tobytes()
