"""Numerical tolerances shared by every module."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """Comparison thresholds.

    Attributes
    ----------
    invariance : float
        Bound for no-signaling and other invariance checks.
    unitarity : float
        Max deviation of ``U U^dagger`` from the identity.
    normalization : float
        Max deviation of a state's norm (or trace) from 1.
    hermiticity : float
        Max entrywise deviation of ``A - A^dagger``.
    positivity : float
        Most negative eigenvalue still accepted as PSD.
    completeness : float
        Max deviation of a Kraus completeness sum from the identity.
    schmidt : float
        Second Schmidt coefficient below which a state is a product.
    max_dim : int
        Cap on the total Hilbert-space dimension of dense objects.
    """

    invariance: float = 1e-10
    unitarity: float = 1e-12
    normalization: float = 1e-10
    hermiticity: float = 1e-10
    positivity: float = 1e-9
    completeness: float = 1e-10
    schmidt: float = 1e-8
    max_dim: int = 4096


DEFAULT = Tolerances()
