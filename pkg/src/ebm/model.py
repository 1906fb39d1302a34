"""Parameter containers, unit families, datasets, RNG streams and energies.

All arrays are stored as read-only float64 copies so a constructed
container can be shared freely; trainers build updated copies instead of
mutating in place.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import DimensionError, InvariantError, DataValidationError, ConfigError


class UnitFamily(str, enum.Enum):
    BINARY = "binary"
    GAUSSIAN = "gaussian"
    POISSON = "poisson"

    @classmethod
    def coerce(cls, value) -> "UnitFamily":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(f.value for f in cls)
            raise ConfigError(f"unknown unit family {value!r} (expected one of {names})") from None

    def conforms(self, x: np.ndarray) -> np.ndarray:
        """Elementwise mask of values inside this family's domain."""
        x = np.asarray(x, dtype=np.float64)
        finite = np.isfinite(x)
        if self is UnitFamily.BINARY:
            return finite & ((x == 0.0) | (x == 1.0))
        if self is UnitFamily.POISSON:
            return finite & (x >= 0) & (x == np.floor(x))
        return finite


def _frozen_array(value, name, ndim=None) -> np.ndarray:
    arr = np.array(value, dtype=np.float64, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvariantError(f"{name} contains non-finite entries")
    arr.flags.writeable = False
    return arr


def _arrays_equal(a, b) -> bool:
    return a.shape == b.shape and np.array_equal(a, b)


class _ArrayContainer:
    """Field-wise equality for frozen dataclasses holding numpy arrays."""

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        for f in fields(self):
            x, y = getattr(self, f.name), getattr(other, f.name)
            if isinstance(x, np.ndarray):
                if not _arrays_equal(x, y):
                    return False
            elif isinstance(x, (list, tuple)):
                if len(x) != len(y):
                    return False
                for xi, yi in zip(x, y):
                    same = _arrays_equal(xi, yi) if isinstance(xi, np.ndarray) else xi == yi
                    if not same:
                        return False
            elif x != y:
                return False
        return True

    __hash__ = None


@dataclass(frozen=True, eq=False)
class RbmParams(_ArrayContainer):
    """Weights ``W`` (d x p), visible biases ``b`` and hidden biases ``c``.

    ``poisson_total`` multiplies the softmax rates of Poisson units; it is
    ignored by the other families.
    """

    W: np.ndarray
    b: np.ndarray
    c: np.ndarray
    visible_family: UnitFamily = UnitFamily.BINARY
    hidden_family: UnitFamily = UnitFamily.BINARY
    poisson_total: float = 1.0

    def __post_init__(self):
        W = _frozen_array(self.W, "W", ndim=2)
        b = _frozen_array(self.b, "b", ndim=1)
        c = _frozen_array(self.c, "c", ndim=1)
        if W.shape[0] < 1 or W.shape[1] < 1:
            raise DimensionError(f"W must have positive dimensions, got {W.shape}")
        if b.shape != (W.shape[0],):
            raise DimensionError(f"b has shape {b.shape}, expected ({W.shape[0]},)")
        if c.shape != (W.shape[1],):
            raise DimensionError(f"c has shape {c.shape}, expected ({W.shape[1]},)")
        if not (np.isfinite(self.poisson_total) and self.poisson_total > 0):
            raise InvariantError("poisson_total must be a positive finite number")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "visible_family", UnitFamily.coerce(self.visible_family))
        object.__setattr__(self, "hidden_family", UnitFamily.coerce(self.hidden_family))
        object.__setattr__(self, "poisson_total", float(self.poisson_total))

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def p(self) -> int:
        return self.W.shape[1]

    def with_arrays(self, W=None, b=None, c=None) -> "RbmParams":
        return replace(
            self,
            W=self.W if W is None else W,
            b=self.b if b is None else b,
            c=self.c if c is None else c,
        )


def _check_lateral(M, n, name):
    if M.shape != (n, n):
        raise DimensionError(f"{name} has shape {M.shape}, expected ({n}, {n})")
    if not np.array_equal(M, M.T):
        raise InvariantError(f"{name} must be symmetric")
    if np.any(np.diag(M) != 0):
        raise InvariantError(f"{name} must have a zero diagonal")


@dataclass(frozen=True, eq=False)
class BmParams(_ArrayContainer):
    """An RBM plus symmetric, zero-diagonal lateral couplings ``L`` and ``J``."""

    base: RbmParams
    L: np.ndarray
    J: np.ndarray

    def __post_init__(self):
        L = _frozen_array(self.L, "L", ndim=2)
        J = _frozen_array(self.J, "J", ndim=2)
        _check_lateral(L, self.base.d, "L")
        _check_lateral(J, self.base.p, "J")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "J", J)

    @classmethod
    def from_rbm(cls, base: RbmParams) -> "BmParams":
        return cls(base, np.zeros((base.d, base.d)), np.zeros((base.p, base.p)))

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def p(self) -> int:
        return self.base.p


@dataclass(frozen=True, eq=False)
class CrbmParams(_ArrayContainer):
    """An RBM plus per-lag directed links from past visible frames.

    ``G[tau - 1]`` (d x d) feeds ``v(t - tau)`` into the current visible
    layer and ``Q[tau - 1]`` (d x p) into the current hidden layer.
    """

    base: RbmParams
    G: tuple
    Q: tuple

    def __post_init__(self):
        G = tuple(_frozen_array(g, f"G[{i}]", ndim=2) for i, g in enumerate(self.G))
        Q = tuple(_frozen_array(q, f"Q[{i}]", ndim=2) for i, q in enumerate(self.Q))
        if len(G) < 1 or len(G) != len(Q):
            raise DimensionError(f"G and Q must both hold T >= 1 matrices, got {len(G)} and {len(Q)}")
        d, p = self.base.d, self.base.p
        for i, (g, q) in enumerate(zip(G, Q)):
            if g.shape != (d, d):
                raise DimensionError(f"G[{i}] has shape {g.shape}, expected ({d}, {d})")
            if q.shape != (d, p):
                raise DimensionError(f"Q[{i}] has shape {q.shape}, expected ({d}, {p})")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "Q", Q)

    @classmethod
    def from_rbm(cls, base: RbmParams, T: int) -> "CrbmParams":
        if T < 1:
            raise DimensionError("history length T must be positive")
        d, p = base.d, base.p
        return cls(base, tuple(np.zeros((d, d)) for _ in range(T)), tuple(np.zeros((d, p)) for _ in range(T)))

    @property
    def T(self) -> int:
        return len(self.G)

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def p(self) -> int:
        return self.base.p


@dataclass(frozen=True, eq=False)
class DbnStack(_ArrayContainer):
    """Greedily trained RBMs for successive layer pairs, bottom first."""

    layers: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise DimensionError("a DBN stack needs at least one RBM")
        for lower, upper in zip(layers, layers[1:]):
            if lower.p != upper.d:
                raise DimensionError(
                    f"layer shapes do not chain: {lower.d}x{lower.p} followed by {upper.d}x{upper.p}"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def layer_sizes(self) -> list:
        return [self.layers[0].d] + [r.p for r in self.layers]


@dataclass(frozen=True, eq=False)
class Dataset(_ArrayContainer):
    """``n`` visible vectors of dimension ``d`` drawn from one unit family."""

    rows: np.ndarray
    family: UnitFamily = UnitFamily.BINARY

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64, copy=True)
        if rows.ndim == 1 and rows.size == 0:
            rows = rows.reshape(0, 0)
        if rows.ndim != 2:
            raise DimensionError(f"dataset rows must form a 2-D array, got shape {rows.shape}")
        family = UnitFamily.coerce(self.family)
        bad = ~family.conforms(rows)
        if bad.any():
            where = np.argwhere(bad)[:5]
            listed = ", ".join(f"row {r} col {c} = {rows[r, c]!r}" for r, c in where)
            raise DataValidationError(f"values outside the {family.value} domain: {listed}")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "family", family)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    """Hyper-parameters shared by all contrastive-divergence trainers.

    ``momentum`` and ``weight_decay`` default to zero, which gives the
    plain update ``theta <- theta + learning_rate * grad``.
    """

    learning_rate: float = 0.1
    batch_size: int = 10
    cd_steps: int = 1
    max_epochs: int = 100
    init_scale: float = 0.01
    seed: int = 0
    convergence_tol: float = 0.0
    momentum: float = 0.0
    weight_decay: float = 0.0
    track_loglik: bool = False

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ConfigError("learning_rate must be non-negative")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be a positive integer")
        if self.cd_steps < 1:
            raise ConfigError("cd_steps must be a positive integer")
        if self.max_epochs < 0:
            raise ConfigError("max_epochs must be non-negative")
        if not self.init_scale >= 0:
            raise ConfigError("init_scale must be non-negative")
        if not self.convergence_tol >= 0:
            raise ConfigError("convergence_tol must be non-negative")
        if not 0 <= self.momentum < 1:
            raise ConfigError("momentum must lie in [0, 1)")


def rng_stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Independent, reproducible generator for the pair ``(seed, stream_id)``."""
    seq = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.PCG64(seq))


def init_params(d, p, visible_family=UnitFamily.BINARY, hidden_family=UnitFamily.BINARY,
                init_scale=0.01, rng=None, poisson_total=1.0) -> RbmParams:
    """Gaussian(0, init_scale**2) weights with zero biases."""
    if int(d) < 1 or int(p) < 1:
        raise DimensionError(f"dimensions must be positive, got d={d}, p={p}")
    if not init_scale >= 0:
        raise ConfigError("init_scale must be non-negative")
    if rng is None:
        rng = np.random.default_rng()
    W = init_scale * rng.standard_normal((int(d), int(p)))
    return RbmParams(W, np.zeros(int(d)), np.zeros(int(p)), visible_family, hidden_family, poisson_total)


def _check_vector(x, n, name):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (n,):
        raise DimensionError(f"{name} has shape {x.shape}, expected trailing dimension {n}")
    return x


def energy(params: RbmParams, v, h):
    """``-b.v - c.h - v.W.h``; rows of ``v`` and ``h`` are paired when batched."""
    v = _check_vector(v, params.d, "v")
    h = _check_vector(h, params.p, "h")
    return -(v @ params.b) - (h @ params.c) - np.einsum("...i,ij,...j->...", v, params.W, h)


def bm_energy(params: BmParams, v, h):
    """RBM energy minus ``v.L.v + h.J.h`` (no factor one half)."""
    v = _check_vector(v, params.d, "v")
    h = _check_vector(h, params.p, "h")
    lateral = np.einsum("...i,ij,...j->...", v, params.L, v) + np.einsum("...i,ij,...j->...", h, params.J, h)
    return energy(params.base, v, h) - lateral
