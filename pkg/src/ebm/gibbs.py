"""Block Gibbs sampling for RBMs and single-site Gibbs sampling for BMs."""
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UnsupportedFamilyError
from .model import BmParams, Dataset, RbmParams, UnitFamily, _check_vector
from .units import sample_hidden, sample_visible, sigmoid


@dataclass
class ChainState:
    v: np.ndarray
    h: np.ndarray
    sweep_index: int = 0


def gibbs_sweep_rbm(params: RbmParams, v, rng, b=None, c=None):
    """One sweep of block Gibbs: every hidden unit, then every visible unit.

    Returns ``(h, v_next)`` with ``h ~ P(h | v)`` and ``v_next ~ P(v | h)``.
    ``b`` and ``c`` override the stored biases (per row if batched).
    """
    v = _check_vector(v, params.d, "v")
    h, _ = sample_hidden(params, v, rng, c)
    v_next, _ = sample_visible(params, h, rng, b)
    return h, v_next


def gibbs_chain(params: RbmParams, v0, k_sweeps, rng, b=None, c=None) -> ChainState:
    """Run ``k_sweeps`` block sweeps from ``v0``.

    The returned hidden state is the one drawn in the last sweep, paired
    with the visible state that sweep produced.
    """
    if k_sweeps < 1:
        raise ConfigError("k_sweeps must be at least 1")
    v = _check_vector(v0, params.d, "v0")
    h = None
    for _ in range(k_sweeps):
        h, v = gibbs_sweep_rbm(params, v, rng, b, c)
    return ChainState(v=v, h=h, sweep_index=k_sweeps)


def _require_binary(params: BmParams):
    base = params.base
    if base.visible_family is not UnitFamily.BINARY or base.hidden_family is not UnitFamily.BINARY:
        raise UnsupportedFamilyError("Boltzmann machine sampling is only defined for binary units")


def bm_visible_pass(params: BmParams, v, h, rng):
    """Resample visible units one at a time, ascending, given everything else."""
    base = params.base
    v = np.array(v, dtype=np.float64)
    drive = h @ base.W.T + base.b
    u = rng.random(v.shape)
    for i in range(base.d):
        prob = sigmoid(drive + 2.0 * (v @ params.L))
        v[..., i] = (u[..., i] <= prob[..., i]).astype(np.float64)
    return v


def bm_hidden_pass(params: BmParams, v, h, rng):
    """Resample hidden units one at a time, ascending, given everything else."""
    base = params.base
    h = np.array(h, dtype=np.float64)
    drive = v @ base.W + base.c
    u = rng.random(h.shape)
    for j in range(base.p):
        prob = sigmoid(drive + 2.0 * (h @ params.J))
        h[..., j] = (u[..., j] <= prob[..., j]).astype(np.float64)
    return h


def gibbs_sweep_bm(params: BmParams, v, h, rng):
    """Sequential scan over all visible units, then all hidden units."""
    _require_binary(params)
    v = _check_vector(v, params.d, "v")
    h = _check_vector(h, params.p, "h")
    v = bm_visible_pass(params, v, h, rng)
    h = bm_hidden_pass(params, v, h, rng)
    return v, h


def bm_chain(params: BmParams, v0, k_sweeps, rng, h0=None) -> ChainState:
    """Contrastive-divergence chain for a BM started at the data.

    Each of the ``k_sweeps`` iterations updates the hidden layer and then the
    visible layer, mirroring the block order used for RBMs. With ``L = J = 0``
    it consumes random numbers exactly like :func:`gibbs_chain`.
    """
    _require_binary(params)
    if k_sweeps < 1:
        raise ConfigError("k_sweeps must be at least 1")
    v = _check_vector(v0, params.d, "v0")
    h = np.zeros(v.shape[:-1] + (params.p,)) if h0 is None else _check_vector(h0, params.p, "h0")
    for _ in range(k_sweeps):
        h = bm_hidden_pass(params, v, h, rng)
        v = bm_visible_pass(params, v, h, rng)
    return ChainState(v=v, h=h, sweep_index=k_sweeps)


def bm_clamped_hidden_moments(params: BmParams, v, n_sweeps, rng):
    """Estimate ``E[h | v]`` and ``E[h h^T | v]`` per row with ``v`` clamped.

    When ``J`` is identically zero the hidden units are conditionally
    independent and the moments are returned in closed form without
    touching ``rng``.
    """
    _require_binary(params)
    v = np.atleast_2d(_check_vector(v, params.d, "v"))
    base = params.base
    if not np.any(params.J):
        mean = sigmoid(v @ base.W + base.c)
        second = mean[:, :, None] * mean[:, None, :]
        idx = np.arange(base.p)
        second[:, idx, idx] = mean
        return mean, second
    h = bm_hidden_pass(params, v, np.zeros((v.shape[0], base.p)), rng)
    mean = np.zeros_like(h)
    second = np.zeros((v.shape[0], base.p, base.p))
    for _ in range(n_sweeps):
        h = bm_hidden_pass(params, v, h, rng)
        mean += h
        second += h[:, :, None] * h[:, None, :]
    return mean / n_sweeps, second / n_sweeps


def _initial_visible(params: RbmParams, rng):
    if params.visible_family is UnitFamily.BINARY:
        return (rng.random(params.d) < 0.5).astype(np.float64)
    if params.visible_family is UnitFamily.GAUSSIAN:
        return rng.standard_normal(params.d)
    return np.zeros(params.d)


def generate(params, n_samples, burn_in=100, thin=1, rng=None) -> Dataset:
    """Emit visible states from one persistent chain.

    ``burn_in`` sweeps are discarded, then every ``thin``-th state is kept.
    Accepts :class:`RbmParams` or :class:`BmParams`.
    """
    if n_samples < 0 or burn_in < 0 or thin < 1:
        raise ConfigError("need n_samples >= 0, burn_in >= 0 and thin >= 1")
    if rng is None:
        rng = np.random.default_rng()
    base = params.base if isinstance(params, BmParams) else params
    out = np.zeros((n_samples, base.d))
    if n_samples == 0:
        return Dataset(out, base.visible_family)
    v = _initial_visible(base, rng)
    if isinstance(params, BmParams):
        _require_binary(params)
        h = np.zeros(base.p)

        def sweep(v):
            nonlocal h
            v, h = gibbs_sweep_bm(params, v, h, rng)
            return v
    else:
        def sweep(v):
            return gibbs_sweep_rbm(params, v, rng)[1]

    for _ in range(burn_in):
        v = sweep(v)
    for i in range(n_samples):
        for _ in range(thin):
            v = sweep(v)
        out[i] = v
    return Dataset(out, base.visible_family)
