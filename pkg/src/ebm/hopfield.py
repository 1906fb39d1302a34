"""Hopfield associative memory with Hebbian weights and threshold recall.

States use either +/-1 spins or 0/1 bits. In the 0/1 convention each
state is mapped through ``2x - 1`` before computing local fields and
energies, so both conventions share one set of dynamics.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DataValidationError, DimensionError, InvariantError

PLUS_MINUS_ONE = "plus_minus_one"
ZERO_ONE = "zero_one"
_CONVENTIONS = (PLUS_MINUS_ONE, ZERO_ONE)


@dataclass
class HopfieldNet:
    weights: np.ndarray
    threshold: float = 0.0
    convention: str = PLUS_MINUS_ONE

    def __post_init__(self):
        W = np.array(self.weights, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise DimensionError(f"weights must be square, got shape {W.shape}")
        if not np.array_equal(W, W.T):
            raise InvariantError("Hopfield weights must be symmetric")
        if np.any(np.diag(W) != 0):
            raise InvariantError("Hopfield weights must have a zero diagonal")
        if self.convention not in _CONVENTIONS:
            raise InvariantError(f"convention must be one of {_CONVENTIONS}")
        self.weights = W

    @property
    def d(self) -> int:
        return self.weights.shape[0]


def _to_spins(state, convention):
    x = np.asarray(state, dtype=np.float64)
    if convention == ZERO_ONE:
        if not np.all((x == 0) | (x == 1)):
            raise DataValidationError("0/1 convention requires states in {0, 1}")
        return 2.0 * x - 1.0
    if not np.all(np.abs(x) == 1):
        raise DataValidationError("+/-1 convention requires states in {-1, +1}")
    return x


def _from_spins(spins, convention):
    return (spins + 1.0) / 2.0 if convention == ZERO_ONE else spins


def hebbian_train(patterns, convention=PLUS_MINUS_ONE, threshold=0.0) -> HopfieldNet:
    """Sum of ``x x^T`` over stored patterns with the diagonal zeroed."""
    X = np.atleast_2d(np.asarray(patterns, dtype=np.float64))
    S = _to_spins(X, convention)
    W = S.T @ S
    np.fill_diagonal(W, 0.0)
    return HopfieldNet(W, threshold, convention)


def local_field(net: HopfieldNet, state, i) -> float:
    s = _to_spins(state, net.convention)
    return float(net.weights[i] @ s)


def update_unit(net: HopfieldNet, state, i):
    """Set unit ``i`` high when its field reaches the threshold (ties go high)."""
    s = _to_spins(state, net.convention).copy()
    s[i] = 1.0 if net.weights[i] @ s >= net.threshold else -1.0
    return _from_spins(s, net.convention)


def hopfield_energy(net: HopfieldNet, state) -> float:
    """``-sum_{i<j} w_ij s_i s_j`` on the spin representation of ``state``."""
    s = _to_spins(state, net.convention)
    return float(-0.5 * s @ net.weights @ s)


def recall(net: HopfieldNet, probe, max_sweeps=100, return_sweeps=False):
    """Asynchronous ascending-order updates until a sweep changes nothing."""
    s = _to_spins(probe, net.convention).copy()
    if s.shape != (net.d,):
        raise DimensionError(f"probe has shape {s.shape}, expected ({net.d},)")
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        sweeps += 1
        changed = False
        for i in range(net.d):
            new = 1.0 if net.weights[i] @ s >= net.threshold else -1.0
            if new != s[i]:
                s[i] = new
                changed = True
        if not changed:
            converged = True
            break
    out = _from_spins(s, net.convention)
    if return_sweeps:
        return out, sweeps, converged
    return out


def is_fixed_point(net: HopfieldNet, state) -> bool:
    s = _to_spins(state, net.convention)
    new = np.where(net.weights @ s >= net.threshold, 1.0, -1.0)
    return bool(np.array_equal(new, s))
