"""Contrastive-divergence training for RBMs and fully connected BMs.

Gradients follow the log-likelihood upward: every update is
``theta <- theta + learning_rate * grad`` with ``grad`` the data
statistics minus the reconstruction statistics, averaged over the
mini-batch.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataValidationError, DimensionError
from .gibbs import bm_chain, bm_clamped_hidden_moments, gibbs_chain
from .model import BmParams, Dataset, RbmParams, TrainConfig, UnitFamily, init_params, rng_stream
from .units import cond_mean_hidden

STREAM_INIT = 0
STREAM_SHUFFLE = 1
STREAM_CHAIN = 2
STREAM_AUX = 3
STREAMS_PER_MODEL = 8

BM_CLAMPED_SWEEPS = 20
LOGLIK_CAP = 20


@dataclass
class SufficientStats:
    """Sums over a batch: ``vh = sum v h^T``, ``v = sum v``, ``h = sum h``."""

    vh: np.ndarray
    v: np.ndarray
    h: np.ndarray
    n: int


@dataclass
class LateralStats:
    vv: np.ndarray
    hh: np.ndarray
    n: int


@dataclass
class GradientSet:
    dW: np.ndarray
    db: np.ndarray
    dc: np.ndarray
    dL: np.ndarray | None = None
    dJ: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def arrays(self):
        out = [self.dW, self.db, self.dc]
        out += [x for x in (self.dL, self.dJ) if x is not None]
        for value in self.extra.values():
            out += list(value)
        return out

    def norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(a * a)) for a in self.arrays())))

    def map(self, fn) -> "GradientSet":
        return GradientSet(
            fn(self.dW), fn(self.db), fn(self.dc),
            None if self.dL is None else fn(self.dL),
            None if self.dJ is None else fn(self.dJ),
            {k: tuple(fn(a) for a in v) for k, v in self.extra.items()},
        )

    def combine(self, other, fn) -> "GradientSet":
        return GradientSet(
            fn(self.dW, other.dW), fn(self.db, other.db), fn(self.dc, other.dc),
            None if self.dL is None else fn(self.dL, other.dL),
            None if self.dJ is None else fn(self.dJ, other.dJ),
            {k: tuple(fn(a, b) for a, b in zip(v, other.extra[k])) for k, v in self.extra.items()},
        )


@dataclass
class EpochRecord:
    epoch: int
    recon_error: float
    grad_norm: float
    update_norm: float
    seconds: float
    loglik: float | None = None


@dataclass
class TrainReport:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def to_lines(self):
        for r in self.records:
            row = {"epoch": r.epoch, "recon_error": r.recon_error, "grad_norm": r.grad_norm,
                   "update_norm": r.update_norm, "seconds": r.seconds}
            if r.loglik is not None:
                row["loglik"] = r.loglik
            yield json.dumps(row)

    def write(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.to_lines():
                fh.write(line + "\n")


def _stats(v, h) -> SufficientStats:
    v = np.atleast_2d(v)
    h = np.atleast_2d(h)
    return SufficientStats(vh=v.T @ h, v=v.sum(axis=0), h=h.sum(axis=0), n=v.shape[0])


def positive_stats(params: RbmParams, batch, c=None) -> SufficientStats:
    """Data statistics with hidden conditional means in place of samples."""
    batch = np.asarray(getattr(batch, "rows", batch), dtype=np.float64).reshape(-1, params.d)
    if batch.shape[0] == 0:
        return _stats(np.zeros((0, params.d)), np.zeros((0, params.p)))
    return _stats(batch, cond_mean_hidden(params, batch, c))


def negative_stats(params: RbmParams, batch, k, rng, b=None, c=None):
    """Reconstruction statistics from a ``k``-sweep chain started at each row.

    Returns ``(stats, v_tilde)``.
    """
    batch = np.asarray(getattr(batch, "rows", batch), dtype=np.float64).reshape(-1, params.d)
    state = gibbs_chain(params, batch, k, rng, b, c)
    return _stats(state.v, state.h), state.v


def cd_gradients(positive: SufficientStats, negative: SufficientStats) -> GradientSet:
    """Positive minus negative statistics, divided by the batch size."""
    if positive.vh.shape != negative.vh.shape:
        raise DimensionError("positive and negative statistics disagree in shape")
    m = max(positive.n, 1)
    return GradientSet(
        dW=(positive.vh - negative.vh) / m,
        db=(positive.v - negative.v) / m,
        dc=(positive.h - negative.h) / m,
    )


def _symmetric_zero_diag(M):
    M = (M + M.T) / 2.0
    np.fill_diagonal(M, 0.0)
    return M


def bm_gradients(positive: LateralStats, negative: LateralStats):
    """Lateral gradients ``(dL, dJ)``: symmetrised, zero diagonal, per-row average."""
    m = max(positive.n, 1)
    dL = _symmetric_zero_diag((positive.vv - negative.vv) / m)
    dJ = _symmetric_zero_diag((positive.hh - negative.hh) / m)
    return dL, dJ


# ---------------------------------------------------------------------------
# training loop shared by the RBM, BM and CRBM trainers


def _as_rows(dataset, family=None):
    """Validated float rows and their unit family."""
    if isinstance(dataset, Dataset):
        if family is not None and UnitFamily.coerce(family) is not dataset.family:
            raise DataValidationError(
                f"dataset family {dataset.family.value} does not match model family {UnitFamily.coerce(family).value}"
            )
        return np.asarray(dataset.rows), dataset.family
    rows = np.asarray(dataset, dtype=np.float64)
    if rows.ndim != 2:
        raise DimensionError(f"training data must be 2-D, got shape {rows.shape}")
    if not np.all(np.isfinite(rows)):
        raise DataValidationError("training data contains non-finite values")
    return rows, UnitFamily.coerce(family or UnitFamily.BINARY)


def run_epochs(state, n, config: TrainConfig, step, apply, stream_base=0, loglik=None):
    """Mini-batch loop with per-epoch shuffling from a dedicated stream.

    ``step(state, idx, chain_rng, aux_rng)`` returns ``(grads, sq_err_sum)``
    for the rows ``idx``; ``apply(state, update)`` returns the new state.
    """
    if n == 0:
        raise ConfigError("cannot train on an empty dataset")
    if config.batch_size > n:
        raise ConfigError(f"batch_size {config.batch_size} exceeds dataset size {n}")
    shuffle_rng = rng_stream(config.seed, stream_base + STREAM_SHUFFLE)
    chain_rng = rng_stream(config.seed, stream_base + STREAM_CHAIN)
    aux_rng = rng_stream(config.seed, stream_base + STREAM_AUX)
    m = config.batch_size
    report = TrainReport()
    velocity = None
    for epoch in range(1, config.max_epochs + 1):
        t0 = time.perf_counter()
        order = shuffle_rng.permutation(n)
        sq_err = 0.0
        grad_sq = 0.0
        max_update = 0.0
        for start in range(0, n, m):
            idx = order[start:start + m]
            grads, err = step(state, idx, chain_rng, aux_rng)
            sq_err += err
            grad_sq += grads.norm() ** 2
            if config.weight_decay:
                grads = grads.combine(_param_arrays_like(state, grads), lambda g, w: g - config.weight_decay * w)
            if config.momentum:
                velocity = grads if velocity is None else velocity.combine(
                    grads, lambda v, g: config.momentum * v + g)
                grads = velocity
            update = grads.map(lambda g: config.learning_rate * g)
            max_update = max(max_update, update.norm())
            state = apply(state, update)
        record = EpochRecord(
            epoch=epoch,
            recon_error=sq_err / n,
            grad_norm=float(np.sqrt(grad_sq)),
            update_norm=max_update,
            seconds=time.perf_counter() - t0,
        )
        if loglik is not None and config.track_loglik:
            record.loglik = loglik(state)
        report.records.append(record)
        if config.convergence_tol and max_update < config.convergence_tol:
            break
    return state, report


def _param_arrays_like(state, grads):
    """Current parameter values laid out like ``grads`` (for weight decay)."""
    base = getattr(state, "base", state)
    zeros = lambda a: np.zeros_like(a)
    out = GradientSet(base.W, zeros(base.b), zeros(base.c))
    if grads.dL is not None:
        out.dL, out.dJ = state.L, state.J
    out.extra = {k: tuple(getattr(state, k)) for k in grads.extra}
    return out


def _apply_rbm(params: RbmParams, u: GradientSet) -> RbmParams:
    return params.with_arrays(params.W + u.dW, params.b + u.db, params.c + u.dc)


def _recon_sq(batch, v_tilde):
    return float(np.mean((batch - v_tilde) ** 2, axis=1).sum())


def _loglik_fn(rows, family, hidden_family, d, p):
    if family is not UnitFamily.BINARY or hidden_family is not UnitFamily.BINARY or d + p > LOGLIK_CAP:
        return None
    from .exact import exact_loglik

    return lambda state: exact_loglik(state, rows)


def train_rbm(config: TrainConfig, dataset, n_hidden, hidden_family=UnitFamily.BINARY,
              init=None, visible_family=None, stream_base=0, poisson_total=1.0):
    """Train an RBM with CD-``config.cd_steps``.

    ``dataset`` is a :class:`Dataset` (validated against its family) or a
    plain array, which is used as-is; the greedy DBN stages feed
    conditional means this way. ``init`` overrides the random start.
    """
    rows, family = _as_rows(dataset, visible_family)
    hidden_family = UnitFamily.coerce(hidden_family)
    if init is None:
        params = init_params(rows.shape[1], n_hidden, family, hidden_family, config.init_scale,
                             rng_stream(config.seed, stream_base + STREAM_INIT), poisson_total)
    else:
        params = init
        if params.d != rows.shape[1]:
            raise DimensionError(f"model expects {params.d} visible units, data has {rows.shape[1]}")
    k = config.cd_steps

    def step(params, idx, chain_rng, aux_rng):
        batch = rows[idx]
        pos = positive_stats(params, batch)
        neg, v_tilde = negative_stats(params, batch, k, chain_rng)
        return cd_gradients(pos, neg), _recon_sq(batch, v_tilde)

    return run_epochs(params, rows.shape[0], config, step, _apply_rbm, stream_base,
                      _loglik_fn(rows, family, params.hidden_family, params.d, params.p))


def train_bm(config: TrainConfig, dataset, n_hidden, init=None, learn_lateral=True, stream_base=0):
    """Train a binary Boltzmann machine with lateral links.

    The positive phase for ``J`` needs ``E[h h^T | v]``, estimated by
    clamped single-site Gibbs (closed form while ``J`` is zero). With
    ``learn_lateral=False`` the lateral links stay at zero and the run
    reproduces :func:`train_rbm` bit for bit.
    """
    rows, family = _as_rows(dataset, UnitFamily.BINARY)
    if init is None:
        base = init_params(rows.shape[1], n_hidden, family, UnitFamily.BINARY, config.init_scale,
                           rng_stream(config.seed, stream_base + STREAM_INIT))
        params = BmParams.from_rbm(base)
    else:
        params = init
        if params.d != rows.shape[1]:
            raise DimensionError(f"model expects {params.d} visible units, data has {rows.shape[1]}")
    k = config.cd_steps

    def step(params, idx, chain_rng, aux_rng):
        batch = rows[idx]
        h_mean, hh = bm_clamped_hidden_moments(params, batch, BM_CLAMPED_SWEEPS, aux_rng)
        pos = _stats(batch, h_mean)
        state = bm_chain(params, batch, k, chain_rng)
        neg = _stats(state.v, state.h)
        grads = cd_gradients(pos, neg)
        if learn_lateral:
            pos_lat = LateralStats(batch.T @ batch, hh.sum(axis=0), batch.shape[0])
            neg_lat = LateralStats(state.v.T @ state.v, state.h.T @ state.h, batch.shape[0])
            grads.dL, grads.dJ = bm_gradients(pos_lat, neg_lat)
        else:
            grads.dL = np.zeros((params.d, params.d))
            grads.dJ = np.zeros((params.p, params.p))
        return grads, _recon_sq(batch, state.v)

    def apply(params: BmParams, u: GradientSet) -> BmParams:
        L = _symmetric_zero_diag(params.L + u.dL)
        J = _symmetric_zero_diag(params.J + u.dJ)
        return BmParams(_apply_rbm(params.base, u), L, J)

    loglik = None
    if rows.shape[1] + params.p <= LOGLIK_CAP:
        from .exact import exact_loglik

        loglik = lambda state: exact_loglik(state, rows)
    return run_epochs(params, rows.shape[0], config, step, apply, stream_base, loglik)
