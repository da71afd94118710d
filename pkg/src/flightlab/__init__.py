"""Brownian flights off fractal boundaries: boundary generators, exact
distance queries, Whitney decompositions, flight engines and tail statistics."""
import os

import numba

# the bundled TBB is often too old; prefer OpenMP, then the portable workqueue
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

from .errors import (ConfigError, DomainError, FlightLabError, InsufficientDataError,  # noqa: E402
                     RangeError, SizeError, UnsupportedOperationError, UsageError)
from .geometry import Boundary, Side, build_index, distance, side_of  # noqa: E402

__version__ = "0.1.0"

__all__ = ["Boundary", "Side", "build_index", "distance", "side_of", "ConfigError",
           "DomainError", "FlightLabError", "InsufficientDataError", "RangeError",
           "SizeError", "UnsupportedOperationError", "UsageError"]
