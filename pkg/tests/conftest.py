import numpy as np
import pytest

from flowguard.data import gen_indist
from flowguard.flow import TrainConfig, build_flow, train_flow
from flowguard.models import DenseClassifier

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ring_train():
    return gen_indist("ring", 2048, 16, seed=1)


@pytest.fixture(scope="session")
def ring_test():
    return gen_indist("ring", 512, 16, seed=2)


@pytest.fixture(scope="session")
def ring_flow(ring_train):
    model = build_flow(16, seed=3, init_data=ring_train.samples)
    cfg = TrainConfig(iterations=1500, lr_switch=1000, seed=3)
    return train_flow(model, ring_train, cfg)[0]


@pytest.fixture(scope="session")
def ring_classifier(ring_train):
    return DenseClassifier(n_iter=400, random_state=4).fit(ring_train.samples, ring_train.labels)


@pytest.fixture(scope="session")
def gauss2d():
    return np.random.default_rng(5).normal(size=(4096, 2))


@pytest.fixture(scope="session")
def gauss2d_flow(gauss2d):
    model = build_flow(2, n_blocks=4, hidden_width=32, seed=6, init_data=gauss2d)
    model, trace = train_flow(model, gauss2d, TrainConfig(iterations=1000, lr_switch=700, seed=6))
    return model, trace
