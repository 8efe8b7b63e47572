import math

import numpy as np
import pytest

from entropy_lab import Bernoulli, Potential, full_shift, golden_mean, rpf_equilibrium

GOLDEN_H = math.log((1 + math.sqrt(5)) / 2)


@pytest.fixture
def golden():
    return golden_mean()


@pytest.fixture
def full2():
    return full_shift(2)


@pytest.fixture
def parry(golden):
    return rpf_equilibrium(Potential.constant(0.0), golden)


@pytest.fixture
def uniform2():
    return Bernoulli([0.5, 0.5])


def random_stochastic(rng, M):
    """Random row-stochastic matrix supported exactly on the 1-entries of ``M``."""
    W = rng.uniform(0.05, 1.0, size=M.shape) * M
    return W / W.sum(axis=1, keepdims=True)


def random_primitive(rng, m):
    from entropy_lab import Alphabet, TransitionStructure, check_primitive

    while True:
        M = (rng.random((m, m)) < 0.6).astype(int)
        if (M.sum(axis=1) == 0).any():
            continue
        trans = TransitionStructure(
            Alphabet("finite", m),
            successors={a: tuple(np.flatnonzero(M[a]).tolist()) for a in range(m)})
        if check_primitive(trans).primitive:
            return trans
