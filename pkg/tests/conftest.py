import numpy as np
import pytest

from motorfault import faultgen, neuralnet
from motorfault.neuralnet import Layer, Network, NetworkConfig


@pytest.fixture(scope="session")
def paper_run():
    """Paper-scale data for seed 1 and the 6-10-7 network trained on it."""
    train, test = faultgen.generate_paper_scale(1)
    net, report = neuralnet.train(NetworkConfig(seed=1), train)
    return train, test, net, report


def make_net(layers, hidden=None):
    """Network from ``[(W, b), ...]`` with a matching config."""
    ws = [np.asarray(w, dtype=float) for w, _ in layers]
    sizes = [ws[0].shape[1]] + [w.shape[0] for w in ws]
    cfg = NetworkConfig(hidden_layers=tuple(sizes[1:-1]), input_dim=sizes[0], output_dim=sizes[-1])
    return Network([Layer(w, np.asarray(b, dtype=float)) for w, (_, b) in zip(ws, layers)], cfg)


class StubNet:
    """Stands in for a trained network; ``fn`` maps an input vector to 7 outputs."""

    def __init__(self, fn):
        self.fn = fn
        self.config = NetworkConfig(input_dim=6, output_dim=7)

    def predict(self, x):
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)
