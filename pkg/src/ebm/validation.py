"""Input validation helpers for estimator and command-line entry points."""
import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .errors import ConfigError, DataValidationError
from .model import UnitFamily


def check_family(X, family, name="X", allow_empty=False):
    """Float64 2-D copy of ``X`` whose every entry lies in ``family``'s domain.

    The error message lists up to five offending entries.
    """
    family = UnitFamily.coerce(family)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1) if X.size else X.reshape(0, 0)
    if X.ndim != 2:
        raise DataValidationError(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] == 0:
        if allow_empty:
            return X
        raise DataValidationError(f"{name} has no rows")
    bad = ~family.conforms(X)
    if bad.any():
        where = np.argwhere(bad)[:5]
        listed = ", ".join(f"[{r}, {c}] = {X[r, c]!r}" for r, c in where)
        raise DataValidationError(f"{name} has {int(bad.sum())} value(s) outside the {family.value} domain: {listed}")
    return check_array(X, dtype=np.float64, ensure_all_finite=True, copy=True)


def check_layer_sizes(sizes, n_features=None):
    """Parse ``"8,4,2"`` or a sequence into a list of positive ints."""
    if isinstance(sizes, str):
        try:
            sizes = [int(s) for s in sizes.split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"cannot parse layer list {sizes!r}") from None
    sizes = [int(s) for s in sizes]
    if len(sizes) < 2 or min(sizes) < 1:
        raise ConfigError(f"need at least two positive layer sizes, got {sizes}")
    if n_features is not None and sizes[0] != n_features:
        raise DataValidationError(f"first layer has {sizes[0]} units but data has {n_features} columns")
    return sizes


def seed_from(random_state):
    """Integer seed for :func:`ebm.model.rng_stream` from a sklearn-style ``random_state``."""
    if random_state is None:
        return int(np.random.SeedSequence().entropy % (1 << 63))
    if isinstance(random_state, numbers.Integral):
        return int(random_state)
    if isinstance(random_state, np.random.RandomState):
        return int(random_state.randint(0, 2**31 - 1))
    if isinstance(random_state, np.random.Generator):
        return int(random_state.integers(0, 2**63 - 1))
    raise ConfigError(f"unsupported random_state {random_state!r}")
