"""Random-set uncertainty calculus: belief functions, credal sets, and evaluation tooling."""

from .config import MeasureConfig
from .frame import Budget, FocalSet, Frame, make_frame, encode_set, enumerate_subsets

__version__ = "0.1.0"

__all__ = [
    "Budget",
    "FocalSet",
    "Frame",
    "MeasureConfig",
    "__version__",
    "encode_set",
    "enumerate_subsets",
    "make_frame",
]
