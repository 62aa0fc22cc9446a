"""Counting points on quadrics: local densities, exponential sums, the
Selberg sieve and experiment runners."""
from .errors import QslabError, ResourceLimit
from .quadform import EXAMPLE_FORM, QuadraticForm

__version__ = "0.1.0"
__all__ = ["EXAMPLE_FORM", "QuadraticForm", "QslabError", "ResourceLimit", "__version__"]
