import numpy as np
import pytest
from sklearn.base import clone

from flowguard import CouplingFlow, FlowOODDetector
from flowguard.data import gen_ood
from flowguard.errors import ConfigError, DimensionError
from flowguard.models import Autoencoder, DenseClassifier


@pytest.fixture(scope="module")
def fitted_flow(ring_train):
    return CouplingFlow(n_blocks=4, hidden_width=32, iterations=300, random_state=1).fit(ring_train)


def test_get_set_params_and_clone():
    est = CouplingFlow(n_blocks=3, scaling="additive")
    params = est.get_params()
    assert params["n_blocks"] == 3 and params["scaling"] == "additive"
    twin = clone(est)
    assert twin.get_params() == params and twin is not est
    est.set_params(iterations=5)
    assert est.iterations == 5
    for cls in (FlowOODDetector, DenseClassifier, Autoencoder):
        assert clone(cls()).get_params() == cls().get_params()


def test_unfitted_raises():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        CouplingFlow().transform(np.zeros((2, 2)))
    with pytest.raises(NotFittedError):
        FlowOODDetector().predict(np.zeros((2, 2)))


def test_flow_transform_round_trip(fitted_flow, ring_test):
    z = fitted_flow.transform(ring_test)
    assert z.shape == (512, 16)
    assert np.max(np.abs(fitted_flow.inverse_transform(z) - ring_test.samples)) <= 1e-9
    assert fitted_flow.score(ring_test) == pytest.approx(np.mean(fitted_flow.score_samples(ring_test)))
    assert len(fitted_flow.loss_trace_) == 300


def test_input_validation(fitted_flow):
    with pytest.raises(DimensionError):
        fitted_flow.transform(np.zeros((3, 5)))
    with pytest.raises(ValueError):
        fitted_flow.transform(np.full((2, 16), np.nan))


def test_ood_detector(fitted_flow, ring_train, ring_test):
    det = FlowOODDetector(method="pre", flow=fitted_flow).fit(ring_train)
    ood = gen_ood("uniform", 512, 16, seed=2)
    pred_in, pred_ood = det.predict(ring_test), det.predict(ood)
    assert set(np.unique(pred_in)) <= {-1, 1}
    assert np.mean(pred_in == 1) > 0.8 and np.mean(pred_ood == -1) > 0.8
    assert np.array_equal(det.score_samples(ood), -det.ood_score(ood))
    assert np.array_equal(det.decision_function(ood) < 0, pred_ood == -1)


def test_ood_detector_unknown_method(ring_train):
    with pytest.raises(ConfigError, match="pre"):
        FlowOODDetector(method="waic").fit(ring_train)
