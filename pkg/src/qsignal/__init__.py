"""Finite-dimensional model of the Alice-field-Bob signaling gedankenexperiment."""

from .config import DEFAULT, Tolerances

__version__ = "0.1.0"

__all__ = ["DEFAULT", "Tolerances", "__version__"]
