"""Desk-scale computations for two-parameter ultradifferentiable regularity."""

from .params import ClassParams

__version__ = "0.1.0"

__all__ = ["ClassParams", "__version__"]
