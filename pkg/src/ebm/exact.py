"""Brute-force enumeration: partition functions, exact probabilities,
log-likelihoods and gradients, plus Boltzmann thermodynamics and Ising
energies.

Everything here sums over the full discrete state space in log space. It
is deliberately written without the factorised conditionals from
:mod:`ebm.units` so it can serve as ground truth for them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import CapacityError, DimensionError, InvariantError, UnsupportedFamilyError
from .model import BmParams, UnitFamily, _check_vector

DEFAULT_CAP = 24
_CHUNK_CELLS = 1 << 20


def binary_configs(n: int) -> np.ndarray:
    """All ``2**n`` binary vectors of length ``n``, first coordinate most significant."""
    if n == 0:
        return np.zeros((1, 0))
    codes = np.arange(1 << n)[:, None]
    shifts = np.arange(n - 1, -1, -1)[None, :]
    return ((codes >> shifts) & 1).astype(np.float64)


def config_index(x) -> np.ndarray:
    """Row index into :func:`binary_configs` for each binary row of ``x``."""
    x = np.atleast_2d(np.asarray(x))
    n = x.shape[1]
    weights = 1 << np.arange(n - 1, -1, -1)
    return (x.astype(np.int64) * weights).sum(axis=1)


def _base(params):
    return params.base if isinstance(params, BmParams) else params


def _check_enumerable(params, cap):
    base = _base(params)
    if base.visible_family is not UnitFamily.BINARY or base.hidden_family is not UnitFamily.BINARY:
        raise UnsupportedFamilyError("exact enumeration is only defined for binary units")
    bits = base.d + base.p
    if bits > cap:
        raise CapacityError(f"model has {bits} binary units; enumeration cap is {cap}")


def _neg_energy_grid(params, V, H):
    """``-E(v, h)`` for every pair of rows of ``V`` and ``H`` (shape len(V) x len(H))."""
    base = _base(params)
    out = (V @ base.b)[:, None] + (H @ base.c)[None, :] + V @ base.W @ H.T
    if isinstance(params, BmParams):
        out += np.einsum("ni,ij,nj->n", V, params.L, V)[:, None]
        out += np.einsum("ni,ij,nj->n", H, params.J, H)[None, :]
    return out


def _visible_chunks(params):
    base = _base(params)
    H = binary_configs(base.p)
    rows = max(1, _CHUNK_CELLS // H.shape[0])
    total = 1 << base.d
    for start in range(0, total, rows):
        codes = np.arange(start, min(total, start + rows))[:, None]
        shifts = np.arange(base.d - 1, -1, -1)[None, :]
        V = ((codes >> shifts) & 1).astype(np.float64)
        yield V, H, _neg_energy_grid(params, V, H)


def log_partition(params, cap=DEFAULT_CAP) -> float:
    """``log Z`` by summing ``exp(-E)`` over all ``2**(d+p)`` configurations."""
    _check_enumerable(params, cap)
    parts = [logsumexp(grid) for _, _, grid in _visible_chunks(params)]
    return float(logsumexp(parts))


def rbm_partition(params, cap=DEFAULT_CAP) -> float:
    return math.exp(log_partition(params, cap))


def joint_table(params, cap=DEFAULT_CAP) -> np.ndarray:
    """``P(v, h)`` as a ``2**d x 2**p`` array indexed like :func:`binary_configs`."""
    _check_enumerable(params, cap)
    base = _base(params)
    grid = _neg_energy_grid(params, binary_configs(base.d), binary_configs(base.p))
    return np.exp(grid - logsumexp(grid))


def marginal_visible_table(params, cap=DEFAULT_CAP) -> np.ndarray:
    return joint_table(params, cap).sum(axis=1)


def _log_unnorm_marginal(params, v):
    """``log sum_h exp(-E(v, h))`` for each row of ``v``."""
    base = _base(params)
    grid = _neg_energy_grid(params, np.atleast_2d(v), binary_configs(base.p))
    return logsumexp(grid, axis=1)


def exact_joint(params, v, h, cap=DEFAULT_CAP) -> float:
    _check_enumerable(params, cap)
    base = _base(params)
    v = _check_vector(v, base.d, "v")
    h = _check_vector(h, base.p, "h")
    log_w = _neg_energy_grid(params, v[None, :], h[None, :])[0, 0]
    return float(math.exp(log_w - log_partition(params, cap)))


def exact_marginal_visible(params, v, cap=DEFAULT_CAP) -> float:
    _check_enumerable(params, cap)
    v = _check_vector(v, _base(params).d, "v")
    return float(math.exp(_log_unnorm_marginal(params, v)[0] - log_partition(params, cap)))


def exact_cond_hidden(params, v, cap=DEFAULT_CAP) -> np.ndarray:
    """``P(h | v)`` for every ``h`` in :func:`binary_configs` order."""
    _check_enumerable(params, cap)
    base = _base(params)
    v = _check_vector(v, base.d, "v")
    grid = _neg_energy_grid(params, v[None, :], binary_configs(base.p))[0]
    return np.exp(grid - logsumexp(grid))


def _weights(data, weights):
    rows = np.atleast_2d(np.asarray(getattr(data, "rows", data), dtype=np.float64))
    if weights is None:
        weights = np.ones(rows.shape[0])
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (rows.shape[0],):
        raise DimensionError("weights must hold one entry per data row")
    return rows, weights


def exact_loglik(params, data, weights=None, cap=DEFAULT_CAP) -> float:
    """``sum_i w_i log sum_h exp(-E(v_i, h)) - (sum_i w_i) log Z``."""
    _check_enumerable(params, cap)
    rows, weights = _weights(data, weights)
    if rows.shape[0] == 0:
        return 0.0
    _check_vector(rows, _base(params).d, "data")
    return float(weights @ _log_unnorm_marginal(params, rows) - weights.sum() * log_partition(params, cap))


@dataclass
class ExactGradient:
    dW: np.ndarray
    db: np.ndarray
    dc: np.ndarray
    dL: np.ndarray | None = None
    dJ: np.ndarray | None = None


def model_expectations(params, cap=DEFAULT_CAP) -> dict:
    """Moments of the joint: ``vh`` (d x p), ``v``, ``h`` and, for BMs, ``vv``, ``hh``."""
    _check_enumerable(params, cap)
    log_z = log_partition(params, cap)
    base = _base(params)
    out = {"vh": np.zeros((base.d, base.p)), "v": np.zeros(base.d), "h": np.zeros(base.p)}
    bm = isinstance(params, BmParams)
    if bm:
        out["vv"] = np.zeros((base.d, base.d))
        out["hh"] = np.zeros((base.p, base.p))
    for V, H, grid in _visible_chunks(params):
        P = np.exp(grid - log_z)
        pv = P.sum(axis=1)
        ph = P.sum(axis=0)
        out["vh"] += V.T @ P @ H
        out["v"] += pv @ V
        out["h"] += ph @ H
        if bm:
            out["vv"] += (V * pv[:, None]).T @ V
            out["hh"] += (H * ph[:, None]).T @ H
    return out


def exact_loglik_grad(params, data, weights=None, cap=DEFAULT_CAP) -> ExactGradient:
    """Exact gradient of :func:`exact_loglik` (data term minus model term)."""
    _check_enumerable(params, cap)
    base = _base(params)
    rows, weights = _weights(data, weights)
    n = weights.sum()
    H = binary_configs(base.p)
    if rows.shape[0]:
        _check_vector(rows, base.d, "data")
        grid = _neg_energy_grid(params, rows, H)
        post = np.exp(grid - logsumexp(grid, axis=1, keepdims=True))
        h_hat = post @ H
    else:
        post = np.zeros((0, H.shape[0]))
        h_hat = np.zeros((0, base.p))
    wrows = rows * weights[:, None]
    model = model_expectations(params, cap)
    grad = ExactGradient(
        dW=wrows.T @ h_hat - n * model["vh"],
        db=wrows.sum(axis=0) - n * model["v"],
        dc=weights @ h_hat - n * model["h"],
    )
    if isinstance(params, BmParams):
        grad.dL = wrows.T @ rows - n * model["vv"]
        hh_data = np.einsum("n,nk,ki,kj->ij", weights, post, H, H)
        grad.dJ = hh_data - n * model["hh"]
    return grad


# ---------------------------------------------------------------------------
# Boltzmann thermodynamics and Ising models


@dataclass
class ThermoReport:
    beta: float
    Z: float
    log_Z: float
    F: float | None
    U: float
    H: float


def boltzmann_quantities(energies, beta) -> ThermoReport:
    """Partition function, free/internal energy and entropy of a finite system.

    ``F`` is ``None`` at ``beta == 0`` where ``-log(Z)/beta`` is undefined.
    """
    E = np.asarray(energies, dtype=np.float64).ravel()
    if E.size == 0:
        raise DimensionError("at least one state is required")
    if not np.all(np.isfinite(E)):
        raise InvariantError("energies must be finite")
    if not beta >= 0:
        raise InvariantError("beta must be non-negative")
    log_w = -beta * E
    log_z = float(logsumexp(log_w))
    log_p = log_w - log_z
    P = np.exp(log_p)
    U = float(P @ E)
    H = float(-(P @ log_p))
    F = None if beta == 0 else -log_z / beta
    return ThermoReport(beta=float(beta), Z=float(np.exp(log_z)) if log_z < 709.0 else math.inf, log_Z=log_z, F=F, U=U, H=H)


@dataclass
class IsingModel:
    """Pairwise spin system with energy ``-sum J_ij x_i x_j`` over listed pairs."""

    num_sites: int
    couplings: list

    def __post_init__(self):
        seen = set()
        clean = []
        for i, j, Jij in self.couplings:
            i, j = int(i), int(j)
            if i == j:
                raise InvariantError(f"self-coupling on site {i}")
            if not (0 <= i < self.num_sites and 0 <= j < self.num_sites):
                raise DimensionError(f"coupling ({i}, {j}) outside {self.num_sites} sites")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise InvariantError(f"pair {key} listed twice")
            seen.add(key)
            clean.append((i, j, float(Jij)))
        self.couplings = clean

    @classmethod
    def homogeneous_chain(cls, num_sites, J=1.0, closed=False):
        pairs = [(i, i + 1, J) for i in range(num_sites - 1)]
        if closed and num_sites > 2:
            pairs.append((num_sites - 1, 0, J))
        return cls(num_sites, pairs)


def ising_energy(model: IsingModel, spins) -> float:
    x = np.asarray(spins, dtype=np.float64)
    if x.shape != (model.num_sites,):
        raise DimensionError(f"expected {model.num_sites} spins, got shape {x.shape}")
    if not np.all(np.abs(x) == 1):
        raise InvariantError("spins must be -1 or +1")
    return float(-sum(J * x[i] * x[j] for i, j, J in model.couplings))


def ising_states(num_sites: int) -> np.ndarray:
    return 2.0 * binary_configs(num_sites) - 1.0


def ising_energy_table(model: IsingModel, cap=DEFAULT_CAP) -> np.ndarray:
    """Energy of every spin configuration in :func:`ising_states` order."""
    if model.num_sites > cap:
        raise CapacityError(f"{model.num_sites} sites exceeds enumeration cap {cap}")
    X = ising_states(model.num_sites)
    E = np.zeros(X.shape[0])
    for i, j, J in model.couplings:
        E -= J * X[:, i] * X[:, j]
    return E
