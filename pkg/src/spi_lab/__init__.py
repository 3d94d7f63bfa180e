"""Submodular prophet inequality laboratory."""

from . import (
           bounds,
           constraints,
           continuous_greedy,
           errors,
           lemmas,
           ocrs,
           spi,
           submodular,
)
from .errors import SpiLabError

__version__ = "0.1.0"

__all__ = [
           "SpiLabError",
           "bounds",
           "constraints",
           "continuous_greedy",
           "errors",
           "lemmas",
           "ocrs",
           "spi",
           "submodular",
]
