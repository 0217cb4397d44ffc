"""Numerical lab for entangled ergodic averages of Dunford-Schwartz operators."""
from ._kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
