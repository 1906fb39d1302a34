import itertools
import math

import numpy as np
import pytest

from ebm.model import BmParams, RbmParams, rng_stream


def random_rbm(rng, d, p, scale=1.0):
    return RbmParams(rng.normal(0, scale, (d, p)), rng.normal(0, scale, d), rng.normal(0, scale, p))


def random_bm(rng, d, p, scale=1.0, lateral=0.5):
    L = rng.normal(0, lateral, (d, d))
    L = np.triu(L, 1)
    J = np.triu(rng.normal(0, lateral, (p, p)), 1)
    return BmParams(random_rbm(rng, d, p, scale), L + L.T, J + J.T)


def loop_energy(params, v, h):
    """Scalar double loop over -b.v - c.h - v.W.h."""
    total = 0.0
    for i in range(params.d):
        total -= params.b[i] * v[i]
        for j in range(params.p):
            total -= v[i] * params.W[i, j] * h[j]
    for j in range(params.p):
        total -= params.c[j] * h[j]
    return total


def loop_bm_energy(params, v, h):
    total = loop_energy(params.base, v, h)
    for i in range(params.d):
        for k in range(params.d):
            total -= v[i] * params.L[i, k] * v[k]
    for j in range(params.p):
        for k in range(params.p):
            total -= h[j] * params.J[j, k] * h[k]
    return total


def loop_joint(params, energy_fn=loop_energy):
    """Dict {(v, h): P(v, h)} by itertools enumeration and plain floats."""
    d, p = params.d, params.p
    weights = {}
    for v in itertools.product((0.0, 1.0), repeat=d):
        for h in itertools.product((0.0, 1.0), repeat=p):
            weights[(v, h)] = math.exp(-energy_fn(params, np.array(v), np.array(h)))
    Z = sum(weights.values())
    return {k: w / Z for k, w in weights.items()}


def tv_distance(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def two_cluster(seed, n=200, flip=0.05):
    """8-dim binary rows near 11110000 or 00001111 with independent bit flips."""
    rng = rng_stream(seed, 100)
    protos = np.array([[1, 1, 1, 1, 0, 0, 0, 0], [0, 0, 0, 0, 1, 1, 1, 1]], dtype=float)
    rows = protos[rng.integers(0, 2, n)]
    flips = rng.random(rows.shape) < flip
    return np.where(flips, 1.0 - rows, rows)
