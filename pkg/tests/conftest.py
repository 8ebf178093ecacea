import pytest

from mdidecoy.channel import STANDARD_CHANNEL
from mdidecoy.fock_source import build_ensemble

PROBS = {"v": 0.1, "x": 0.15, "w": 0.1, "y": 0.15, "z": 0.5}
MU = {"v": 1e-4, "x": 0.03, "w": 1e-4, "y": 0.03, "z": 0.4}


def ensemble(mu=None, deltas=(0.0, 0.0), kmax=12, probs=None, **overrides):
    m = dict(MU if mu is None else mu)
    m.update(overrides)
    return build_ensemble(m, deltas, probs or PROBS, kmax)


@pytest.fixture
def std_channel():
    return STANDARD_CHANNEL


@pytest.fixture
def fluctuating_pair():
    A = ensemble(deltas=(0.05, 0.05), kmax=6)
    return A, A
