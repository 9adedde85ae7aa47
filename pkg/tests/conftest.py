import itertools

import numpy as np
import pytest

from pad_rbm.model import ModelParams


def brute_energy(v, h, W, a, b):
    """Plain-loop energy, independent of the vectorized code path."""
    total = 0.0
    for i in range(len(v)):
        for j in range(len(h)):
            total += v[i] * W[i][j] * h[j]
    total += sum(a[i] * v[i] for i in range(len(v)))
    total += sum(b[j] * h[j] for j in range(len(h)))
    return -total


def bit_tuples(k):
    return list(itertools.product((0, 1), repeat=k))


def brute_joint(p):
    """{(v, h): exp(-E)} over every joint state."""
    return {
        (v, h): np.exp(-brute_energy(v, h, p.W, p.a, p.b))
        for v in bit_tuples(p.n)
        for h in bit_tuples(p.m)
    }


def brute_visible_marginal(p):
    joint = brute_joint(p)
    z = sum(joint.values())
    out = {}
    for (v, _), w in joint.items():
        out[v] = out.get(v, 0.0) + w / z
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def random_model(rng):
    def make(n, m, scale=1.0):
        return ModelParams.random(n, m, rng, scale)

    return make


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
