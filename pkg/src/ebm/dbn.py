"""Deep belief networks: greedy RBM stacking, autoencoder unrolling and
back-propagation fine-tuning on mean squared reconstruction error."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .model import DbnStack, RbmParams, TrainConfig, UnitFamily, _ArrayContainer, rng_stream
from .trainer import STREAMS_PER_MODEL, EpochRecord, TrainReport, _as_rows, train_rbm
from .units import cond_mean_hidden, sample_units, sigmoid

SIGMOID = "sigmoid"
IDENTITY = "identity"
_STREAM_UPWARD = 5
_STREAM_FINETUNE = 6


@dataclass(frozen=True)
class DbnSpec:
    layer_sizes: tuple
    hidden_families: tuple | None = None

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ConfigError(f"need at least two positive layer sizes, got {list(self.layer_sizes)}")
        families = self.hidden_families
        if families is None:
            families = (UnitFamily.BINARY,) * (len(sizes) - 1)
        families = tuple(UnitFamily.coerce(f) for f in families)
        if len(families) != len(sizes) - 1:
            raise ConfigError("need one hidden family per layer pair")
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "hidden_families", families)


def pretrain(spec: DbnSpec, dataset, config: TrainConfig, sample_upward=False,
             return_reports=False):
    """Train one RBM per adjacent layer pair, bottom up.

    Each stage after the first is trained on the hidden conditional means
    of the stage below, or on one hidden sample per row when
    ``sample_upward`` is set. Stage ``l`` draws from its own block of RNG
    streams, so the first stage is exactly ``train_rbm`` with the same seed.
    """
    rows, family = _as_rows(dataset)
    if rows.shape[1] != spec.layer_sizes[0]:
        raise DimensionError(f"data has {rows.shape[1]} columns but the first layer has {spec.layer_sizes[0]} units")
    layers, reports = [], []
    current = dataset
    visible_family = family
    for l, (p, hidden_family) in enumerate(zip(spec.layer_sizes[1:], spec.hidden_families)):
        base = l * STREAMS_PER_MODEL
        rbm, report = train_rbm(config, current, p, hidden_family, visible_family=visible_family,
                                stream_base=base)
        layers.append(rbm)
        reports.append(report)
        data = np.asarray(getattr(current, "rows", current))
        mean = cond_mean_hidden(rbm, data)
        if sample_upward:
            mean = sample_units(rbm.hidden_family, mean, rng_stream(config.seed, base + _STREAM_UPWARD))
        current = mean
        visible_family = hidden_family
    stack = DbnStack(tuple(layers))
    return (stack, reports) if return_reports else stack


@dataclass(frozen=True, eq=False)
class Mlp(_ArrayContainer):
    """Feed-forward network; layer ``i`` computes ``act_i(x @ W_i + bias_i)``."""

    weights: tuple
    biases: tuple
    activations: tuple

    def __post_init__(self):
        weights = tuple(np.array(w, dtype=np.float64) for w in self.weights)
        biases = tuple(np.array(b, dtype=np.float64) for b in self.biases)
        activations = tuple(self.activations)
        if not weights or not (len(weights) == len(biases) == len(activations)):
            raise DimensionError("weights, biases and activations must be non-empty and equally long")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise DimensionError(f"layer {i}: weight {w.shape} and bias {b.shape} disagree")
            if i and weights[i - 1].shape[1] != w.shape[0]:
                raise DimensionError(f"layer {i} input {w.shape[0]} != previous output {weights[i - 1].shape[1]}")
        for a in activations:
            if a not in (SIGMOID, IDENTITY):
                raise ConfigError(f"unknown activation {a!r}")
        for arr in weights + biases:
            arr.flags.writeable = False
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)
        object.__setattr__(self, "activations", activations)

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def code_layer(self) -> int:
        """Index of the narrowest layer (the code of an autoencoder)."""
        sizes = self.layer_sizes
        return int(np.argmin(sizes[1:-1])) + 1 if len(sizes) > 2 else 1


def _activation_for(family):
    return IDENTITY if UnitFamily.coerce(family) is UnitFamily.GAUSSIAN else SIGMOID


def unroll_autoencoder(stack: DbnStack) -> Mlp:
    """Encoder from the stack in order, decoder from transposed weights in reverse.

    Encoder layers use the hidden biases, decoder layers reuse the
    visible biases of the same RBM.
    """
    if isinstance(stack, RbmParams):
        stack = DbnStack((stack,))
    weights, biases, acts = [], [], []
    for rbm in stack.layers:
        weights.append(rbm.W.copy())
        biases.append(rbm.c.copy())
        acts.append(_activation_for(rbm.hidden_family))
    for rbm in reversed(stack.layers):
        weights.append(rbm.W.T.copy())
        biases.append(rbm.b.copy())
        acts.append(_activation_for(rbm.visible_family))
    return Mlp(tuple(weights), tuple(biases), tuple(acts))


def random_autoencoder(layer_sizes, init_scale=0.01, rng=None, output_activation=SIGMOID) -> Mlp:
    """Mirror-shaped autoencoder with Gaussian weights and zero biases."""
    if rng is None:
        rng = np.random.default_rng()
    sizes = list(layer_sizes) + list(layer_sizes[-2::-1])
    weights = tuple(init_scale * rng.standard_normal((a, b)) for a, b in zip(sizes, sizes[1:]))
    biases = tuple(np.zeros(b) for b in sizes[1:])
    acts = (SIGMOID,) * (len(weights) - 1) + (output_activation,)
    return Mlp(weights, biases, acts)


def _act(name, z):
    return sigmoid(z) if name == SIGMOID else z


def forward(mlp: Mlp, x):
    """All layer outputs, input first."""
    a = np.asarray(x, dtype=np.float64)
    if a.shape[-1] != mlp.layer_sizes[0]:
        raise DimensionError(f"input has {a.shape[-1]} features, network expects {mlp.layer_sizes[0]}")
    outs = [a]
    for W, b, act in zip(mlp.weights, mlp.biases, mlp.activations):
        a = _act(act, a @ W + b)
        outs.append(a)
    return outs


def mse_loss(mlp: Mlp, x) -> float:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return float(np.mean((forward(mlp, x)[-1] - x) ** 2))


def mse_gradients(mlp: Mlp, x):
    """Loss and reverse-mode gradients of the mean squared reconstruction error.

    The loss averages over rows and output coordinates. Returns
    ``(loss, weight_grads, bias_grads)``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    outs = forward(mlp, x)
    err = outs[-1] - x
    loss = float(np.mean(err ** 2))
    delta = 2.0 * err / err.size
    gW, gb = [None] * len(mlp.weights), [None] * len(mlp.weights)
    for i in range(len(mlp.weights) - 1, -1, -1):
        if mlp.activations[i] == SIGMOID:
            delta = delta * outs[i + 1] * (1.0 - outs[i + 1])
        gW[i] = outs[i].T @ delta
        gb[i] = delta.sum(axis=0)
        delta = delta @ mlp.weights[i].T
    return loss, gW, gb


def finetune(mlp: Mlp, dataset, config: TrainConfig):
    """Mini-batch gradient descent on the reconstruction MSE.

    Uses ``learning_rate``, ``batch_size``, ``max_epochs``, ``momentum``
    and ``seed`` from ``config``; the per-epoch record holds the training
    MSE after the epoch.
    """
    rows, _ = _as_rows(dataset)
    if rows.shape[1] != mlp.layer_sizes[0]:
        raise DimensionError(f"data has {rows.shape[1]} columns, network expects {mlp.layer_sizes[0]}")
    n = rows.shape[0]
    if n == 0:
        raise ConfigError("cannot fine-tune on an empty dataset")
    m = min(config.batch_size, n)
    rng = rng_stream(config.seed, _STREAM_FINETUNE)
    weights = [w.copy() for w in mlp.weights]
    biases = [b.copy() for b in mlp.biases]
    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]
    report = TrainReport()
    current = mlp
    for epoch in range(1, config.max_epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(n)
        grad_sq = 0.0
        max_update = 0.0
        for start in range(0, n, m):
            batch = rows[order[start:start + m]]
            _, gW, gb = mse_gradients(current, batch)
            step_sq = 0.0
            for i in range(len(weights)):
                grad_sq += float(np.sum(gW[i] ** 2) + np.sum(gb[i] ** 2))
                vel_w[i] = config.momentum * vel_w[i] + gW[i] if config.momentum else gW[i]
                vel_b[i] = config.momentum * vel_b[i] + gb[i] if config.momentum else gb[i]
                weights[i] = weights[i] - config.learning_rate * vel_w[i]
                biases[i] = biases[i] - config.learning_rate * vel_b[i]
                step_sq += config.learning_rate ** 2 * float(np.sum(vel_w[i] ** 2) + np.sum(vel_b[i] ** 2))
            max_update = max(max_update, float(np.sqrt(step_sq)))
            current = Mlp(tuple(weights), tuple(biases), mlp.activations)
        report.records.append(EpochRecord(
            epoch=epoch,
            recon_error=mse_loss(current, rows),
            grad_norm=float(np.sqrt(grad_sq)),
            update_norm=max_update,
            seconds=time.perf_counter() - t0,
        ))
        if config.convergence_tol and max_update < config.convergence_tol:
            break
    return current, report


def encode(mlp: Mlp, x):
    """Deterministic code-layer activations."""
    return forward(mlp, x)[mlp.code_layer]


def reconstruct(mlp: Mlp, x):
    return forward(mlp, x)[-1]
