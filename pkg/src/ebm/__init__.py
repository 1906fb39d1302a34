"""Energy-based models: Boltzmann machines, restricted and conditional
RBMs, deep belief networks and Hopfield networks, with a brute-force
enumeration oracle for small instances."""

__version__ = "0.1.0"

from .errors import (
    CapacityError, ConfigError, DataValidationError, DimensionError, EbmError, InvariantError,
    ModelFormatError, ModelVersionError, UnsupportedFamilyError,
)
from .model import (
    BmParams, CrbmParams, Dataset, DbnStack, RbmParams, TrainConfig, UnitFamily, bm_energy, energy,
    init_params, rng_stream,
)
from .io import load_model, save_model
from .estimators import RBM, BoltzmannMachine, ConditionalRBM, DBNAutoencoder, HopfieldNetwork

__all__ = [
    "BmParams", "BoltzmannMachine", "CapacityError", "ConditionalRBM", "ConfigError", "CrbmParams",
    "DBNAutoencoder", "DataValidationError", "Dataset", "DbnStack", "DimensionError", "EbmError",
    "HopfieldNetwork", "InvariantError", "ModelFormatError", "ModelVersionError", "RBM", "RbmParams",
    "TrainConfig", "UnitFamily", "UnsupportedFamilyError", "bm_energy", "energy", "init_params",
    "load_model", "rng_stream", "save_model",
]
