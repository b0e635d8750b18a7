import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lsmrs import (
    BERNOULLI_LOGIT,
    POISSON_LOG,
    LatentState,
    NetworkTensor,
    PriorSpec,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


@pytest.fixture
def small_poisson_net(rng):
    """Dense-ish 5-node Poisson network with random weights."""
    weights = {}
    for i in range(5):
        for j in range(i + 1, 5):
            y = int(rng.poisson(2.0))
            if y:
                weights[(i, j, 0, 0)] = float(y)
    return NetworkTensor(n_nodes=5, n_layers=1, n_times=1,
                         families=(POISSON_LOG,), weights=weights)


@pytest.fixture
def multilayer_net(rng):
    """4 nodes, 2 layers (poisson + bernoulli), 3 times."""
    weights = {}
    for t in range(3):
        for i in range(4):
            for j in range(i + 1, 4):
                y = int(rng.poisson(1.5))
                if y:
                    weights[(i, j, 0, t)] = float(y)
                if rng.random() < 0.5:
                    weights[(i, j, 1, t)] = 1.0
    return NetworkTensor(n_nodes=4, n_layers=2, n_times=3,
                         families=(POISSON_LOG, BERNOULLI_LOGIT), weights=weights)


@pytest.fixture
def multilayer_state(rng, multilayer_net):
    return LatentState(rng.standard_normal((2, 4, 3)), rng.standard_normal((2, 3)))


@pytest.fixture
def default_prior():
    return PriorSpec()
