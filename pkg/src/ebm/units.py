"""Conditional distributions of binary, Gaussian and Poisson units.

Every function accepts a single vector or a batch of row vectors. Bias
arguments may themselves be batched (one bias row per data row), which is
how the conditional RBM feeds its history-dependent biases through the
same code path.
"""
import numpy as np

from .model import RbmParams, UnitFamily, _check_vector
from .errors import DataValidationError

_TINY_RATE = 1e-300


def hidden_pre_activation(params: RbmParams, v, c=None):
    """``c + W^T v`` for each row of ``v``."""
    v = _check_vector(v, params.d, "v")
    return v @ params.W + (params.c if c is None else c)


def visible_pre_activation(params: RbmParams, h, b=None):
    """``b + W h`` for each row of ``h``."""
    h = _check_vector(h, params.p, "h")
    return h @ params.W.T + (params.b if b is None else b)


def sigmoid(x):
    """Logistic function, evaluated as exp(-|x|) so nothing overflows."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DataValidationError("non-finite pre-activation")
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def binary_cond_prob(pre_activation):
    return sigmoid(pre_activation)


def gaussian_cond(pre_activation):
    """Mean of the unit-variance normal conditional (the pre-activation itself)."""
    mean = np.array(pre_activation, dtype=np.float64)
    if not np.all(np.isfinite(mean)):
        raise DataValidationError("non-finite pre-activation")
    return mean


def softmax_rates(pre_activation, total=1.0):
    """Softmax over the last axis, scaled by ``total``."""
    x = np.asarray(pre_activation, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DataValidationError("non-finite pre-activation")
    z = np.exp(x - x.max(axis=-1, keepdims=True))
    return total * z / z.sum(axis=-1, keepdims=True)


def poisson_cond_visible(params: RbmParams, h, b=None):
    return softmax_rates(visible_pre_activation(params, h, b), params.poisson_total)


def poisson_cond_hidden(params: RbmParams, v, c=None):
    return softmax_rates(hidden_pre_activation(params, v, c), params.poisson_total)


def cond_mean(family, pre_activation, poisson_total=1.0):
    """Conditional expectation of a layer given its pre-activation."""
    family = UnitFamily.coerce(family)
    if family is UnitFamily.BINARY:
        return sigmoid(pre_activation)
    if family is UnitFamily.GAUSSIAN:
        return gaussian_cond(pre_activation)
    return softmax_rates(pre_activation, poisson_total)


def cond_mean_hidden(params: RbmParams, v, c=None):
    return cond_mean(params.hidden_family, hidden_pre_activation(params, v, c), params.poisson_total)


def cond_mean_visible(params: RbmParams, h, b=None):
    return cond_mean(params.visible_family, visible_pre_activation(params, h, b), params.poisson_total)


def sample_units(family, cond_params, rng):
    """Draw one value per unit from its conditional.

    ``cond_params`` is the conditional mean: a probability for binary
    units, the mean for Gaussian units and the rate for Poisson units.
    Binary units are 1 exactly when a uniform draw is ``<=`` the
    probability.
    """
    family = UnitFamily.coerce(family)
    cond_params = np.asarray(cond_params, dtype=np.float64)
    if family is UnitFamily.BINARY:
        u = rng.random(cond_params.shape)
        return (u <= cond_params).astype(np.float64)
    if family is UnitFamily.GAUSSIAN:
        return cond_params + rng.standard_normal(cond_params.shape)
    rates = np.where(cond_params < _TINY_RATE, 0.0, cond_params)
    return rng.poisson(rates).astype(np.float64)


def sample_hidden(params: RbmParams, v, rng, c=None):
    mean = cond_mean_hidden(params, v, c)
    return sample_units(params.hidden_family, mean, rng), mean


def sample_visible(params: RbmParams, h, rng, b=None):
    mean = cond_mean_visible(params, h, b)
    return sample_units(params.visible_family, mean, rng), mean
