"""Volume growth and Bowen entropy of smooth maps of tori."""

from .errors import (ArgumentError, ConfigError, ConvergenceError, NumericalError,
                     VolgrowError)
from .systems import (SystemSpec, cat_map, identity_map, linear_toral, perturbed_cat,
                      skew_product)

__version__ = "0.1.0"

__all__ = [
    "ArgumentError", "ConfigError", "ConvergenceError", "NumericalError", "VolgrowError",
    "SystemSpec", "cat_map", "identity_map", "linear_toral", "perturbed_cat", "skew_product",
]
