"""Conditional RBM: past visible frames act as dynamic biases.

A history is an array of shape ``(T, d)`` whose row ``tau - 1`` holds
``v(t - tau)``; batches of histories have shape ``(m, T, d)``.
"""
import numpy as np

from .errors import ConfigError, DataValidationError, DimensionError
from .gibbs import gibbs_chain
from .model import CrbmParams, RbmParams, TrainConfig, UnitFamily, init_params, rng_stream
from .trainer import (
    STREAM_INIT, GradientSet, _apply_rbm, _recon_sq, _stats, cd_gradients, run_epochs,
)
from .units import cond_mean_hidden


def _check_history(params: CrbmParams, history):
    history = np.asarray(history, dtype=np.float64)
    if history.shape[-2:] != (params.T, params.d):
        raise DimensionError(f"history has shape {history.shape}, expected (..., {params.T}, {params.d})")
    return history


def effective_biases(params: CrbmParams, history):
    """``b + sum_tau G_tau^T v(t - tau)`` and ``c + sum_tau Q_tau^T v(t - tau)``."""
    history = _check_history(params, history)
    shift_b = np.zeros(history.shape[:-2] + (params.d,))
    shift_c = np.zeros(history.shape[:-2] + (params.p,))
    for tau in range(params.T):
        frame = history[..., tau, :]
        shift_b = shift_b + frame @ params.G[tau]
        shift_c = shift_c + frame @ params.Q[tau]
    return params.base.b + shift_b, params.base.c + shift_c


def build_windows(sequences, T):
    """Slide a length-``T`` history over every sequence.

    Returns ``(histories, targets)`` with shapes ``(N, T, d)`` and ``(N, d)``.
    """
    if T < 1:
        raise ConfigError("history length T must be positive")
    histories, targets = [], []
    d = None
    for s, seq in enumerate(sequences):
        seq = np.asarray(seq, dtype=np.float64)
        if seq.ndim != 2:
            raise DimensionError(f"sequence {s} must be 2-D, got shape {seq.shape}")
        if d is None:
            d = seq.shape[1]
        elif seq.shape[1] != d:
            raise DimensionError(f"sequence {s} has dimension {seq.shape[1]}, expected {d}")
        for t in range(T, seq.shape[0]):
            histories.append(seq[t - T:t][::-1])
            targets.append(seq[t])
    if not targets:
        raise DataValidationError(f"no sequence is longer than the history length {T}")
    return np.stack(histories), np.stack(targets)


def crbm_gradients(params: CrbmParams, histories, targets, k, rng) -> GradientSet:
    """CD-``k`` gradients for every parameter group, averaged over windows.

    The lagged gradients are ``v_i(t - tau)`` times the data-minus-
    reconstruction difference of the current visible layer (``G``) or of
    the hidden layer (``Q``). ``extra`` holds ``{"G": ..., "Q": ...}``.
    """
    grads, _ = _crbm_step(params, histories, targets, k, rng)
    return grads


def _crbm_step(params: CrbmParams, histories, targets, k, rng):
    histories = _check_history(params, histories)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1, params.d)
    if histories.shape[0] != targets.shape[0]:
        raise DimensionError("one history is needed per target frame")
    base = params.base
    b_hat, c_hat = effective_biases(params, histories)
    h_hat = cond_mean_hidden(base, targets, c_hat)
    state = gibbs_chain(base, targets, k, rng, b_hat, c_hat)
    grads = cd_gradients(_stats(targets, h_hat), _stats(state.v, state.h))
    m = max(targets.shape[0], 1)
    dv = targets - state.v
    dh = h_hat - state.h
    grads.extra = {
        "G": tuple(histories[:, tau, :].T @ dv / m for tau in range(params.T)),
        "Q": tuple(histories[:, tau, :].T @ dh / m for tau in range(params.T)),
    }
    return grads, _recon_sq(targets, state.v)


def exact_crbm_gradients(params: CrbmParams, histories, targets) -> GradientSet:
    """Exact gradient of ``sum log P(v(t) | history)`` divided by the window count.

    Each window is an RBM with its own effective biases, so its model
    expectations are obtained by enumeration.
    """
    from .exact import model_expectations

    histories = _check_history(params, histories)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1, params.d)
    b_hat, c_hat = effective_biases(params, histories)
    base = params.base
    m = targets.shape[0]
    dW = np.zeros((params.d, params.p))
    db = np.zeros(params.d)
    dc = np.zeros(params.p)
    dG = [np.zeros((params.d, params.d)) for _ in range(params.T)]
    dQ = [np.zeros((params.d, params.p)) for _ in range(params.T)]
    for w in range(m):
        local = RbmParams(base.W, b_hat[w], c_hat[w])
        moments = model_expectations(local)
        h_hat = 1.0 / (1.0 + np.exp(-(c_hat[w] + targets[w] @ base.W)))
        dv = targets[w] - moments["v"]
        dh = h_hat - moments["h"]
        dW += np.outer(targets[w], h_hat) - moments["vh"]
        db += dv
        dc += dh
        for tau in range(params.T):
            dG[tau] += np.outer(histories[w, tau], dv)
            dQ[tau] += np.outer(histories[w, tau], dh)
    grads = GradientSet(dW / m, db / m, dc / m)
    grads.extra = {"G": tuple(g / m for g in dG), "Q": tuple(q / m for q in dQ)}
    return grads


def _apply_crbm(params: CrbmParams, u: GradientSet) -> CrbmParams:
    G = tuple(g + dg for g, dg in zip(params.G, u.extra["G"]))
    Q = tuple(q + dq for q, dq in zip(params.Q, u.extra["Q"]))
    return CrbmParams(_apply_rbm(params.base, u), G, Q)


def train_crbm(config: TrainConfig, sequences, T, n_hidden, hidden_family=UnitFamily.BINARY,
               visible_family=UnitFamily.BINARY, init=None, learn_directed=True):
    """Mini-batch CD training over sliding windows of every sequence.

    The directed links start at zero. With ``learn_directed=False`` they
    stay there and the run matches :func:`ebm.trainer.train_rbm` on the
    window targets, bit for bit.
    """
    histories, targets = build_windows(sequences, T)
    visible_family = UnitFamily.coerce(visible_family)
    bad = ~visible_family.conforms(targets)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise DataValidationError(f"window {r} col {c} = {targets[r, c]!r} is outside the {visible_family.value} domain")
    if init is None:
        base = init_params(targets.shape[1], n_hidden, visible_family, hidden_family, config.init_scale,
                           rng_stream(config.seed, STREAM_INIT))
        params = CrbmParams.from_rbm(base, T)
    else:
        params = init
    k = config.cd_steps

    def step(params, idx, chain_rng, aux_rng):
        grads, err = _crbm_step(params, histories[idx], targets[idx], k, chain_rng)
        if not learn_directed:
            grads.extra = {key: tuple(np.zeros_like(a) for a in value) for key, value in grads.extra.items()}
        return grads, err

    return run_epochs(params, targets.shape[0], config, step, _apply_crbm)


def generate_sequence(params: CrbmParams, seed_history, steps, k=1, rng=None):
    """Autoregressive rollout of ``steps`` frames.

    Each frame is drawn by ``k`` Gibbs sweeps under the current effective
    biases, starting from the most recent frame; the history window then
    shifts by one.
    """
    if steps < 0:
        raise ConfigError("steps must be non-negative")
    if rng is None:
        rng = np.random.default_rng()
    history = _check_history(params, seed_history).copy()
    out = np.zeros((steps, params.d))
    for t in range(steps):
        b_hat, c_hat = effective_biases(params, history)
        v = gibbs_chain(params.base, history[0], k, rng, b_hat, c_hat).v
        out[t] = v
        history = np.concatenate([v[None, :], history[:-1]], axis=0)
    return out
