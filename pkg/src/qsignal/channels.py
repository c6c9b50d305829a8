"""Kraus channels on a designated sector of a tensor-product space.

Operators are stored in the standard convention

    rho -> sum_i K_i rho K_i^dagger,      sum_i K_i^dagger K_i = I.

The other common way of writing a general operation, ``sum_i A_i^dagger rho
A_i`` with ``sum_i A_i A_i^dagger = I``, describes the same map with
``A_i = K_i^dagger``; :meth:`KrausChannel.adjoint_operators` returns that form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import DEFAULT, Tolerances
from .qcore import DensityMatrix, DimensionError, check_sector, lift, unitarity_deviation


class ChannelError(ValueError):
    """Kraus operators that do not define a valid quantum channel."""


class ChannelKind(enum.Enum):
    UNITARY = "unitary"
    MEASUREMENT = "nonselective-measurement"
    GENERAL = "general"


@dataclass(frozen=True)
class ValidityReport:
    deviation: float
    tolerance: float

    @property
    def valid(self) -> bool:
        return self.deviation < self.tolerance


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Kraus operators acting on ``sector`` (factor positions, ascending).

    ``sector_dims`` are the dimensions of those factors; the product must
    equal the operator size.
    """

    operators: tuple[np.ndarray, ...]
    sector: tuple[int, ...]
    sector_dims: tuple[int, ...]
    kind: ChannelKind = ChannelKind.GENERAL

    def __post_init__(self):
        ops = []
        for k in self.operators:
            k = np.array(k, dtype=complex)
            k.setflags(write=False)
            ops.append(k)
        object.__setattr__(self, "operators", tuple(ops))
        object.__setattr__(self, "sector", tuple(int(i) for i in self.sector))
        object.__setattr__(self, "sector_dims", tuple(int(d) for d in self.sector_dims))
        if list(self.sector) != sorted(set(self.sector)):
            raise DimensionError(f"sector must be distinct ascending indices, got {self.sector}")
        if len(self.sector) != len(self.sector_dims):
            raise DimensionError("sector and sector_dims differ in length")

    @property
    def dim(self) -> int:
        return math.prod(self.sector_dims)

    def adjoint_operators(self) -> tuple[np.ndarray, ...]:
        """Operators in the ``sum A^dagger rho A`` convention."""
        return tuple(k.conj().T for k in self.operators)


def _completeness_deviation(ops: Sequence[np.ndarray]) -> float:
    d = ops[0].shape[0]
    total = sum(k.conj().T @ k for k in ops)
    return float(np.max(np.abs(total - np.eye(d))))


def validate(ch: KrausChannel, tol: Tolerances = DEFAULT) -> ValidityReport:
    """Max entrywise deviation of ``sum K^dagger K`` from the identity.

    Raises for an empty operator list or inconsistent shapes; an incomplete
    set is reported, not raised.
    """
    if not ch.operators:
        raise ChannelError("channel has no Kraus operators")
    shape = ch.operators[0].shape
    for k in ch.operators:
        if k.ndim != 2 or k.shape != shape or shape[0] != shape[1]:
            raise ChannelError(f"Kraus operators must share one square shape, got {k.shape}")
    if shape[0] != ch.dim:
        raise ChannelError(
            f"operator size {shape[0]} does not match sector dimension {ch.dim}")
    return ValidityReport(_completeness_deviation(ch.operators), tol.completeness)


def make_channel(operators, sector, sector_dims, kind=ChannelKind.GENERAL,
                 tol: Tolerances = DEFAULT) -> KrausChannel:
    """Build a channel and reject it unless it validates."""
    ch = KrausChannel(tuple(operators), tuple(sector), tuple(sector_dims), kind)
    rep = validate(ch, tol)
    if not rep.valid:
        raise ChannelError(f"completeness deviation {rep.deviation:.3g} exceeds {rep.tolerance:g}")
    if kind is ChannelKind.UNITARY:
        if len(ch.operators) != 1 or unitarity_deviation(ch.operators[0]) >= tol.unitarity:
            raise ChannelError("a unitary channel needs exactly one unitary operator")
    return ch


def lifted_operators(ch: KrausChannel, dims: Sequence[int]) -> np.ndarray:
    """Stack of Kraus operators embedded in the full space, shape (k, D, D)."""
    sector = check_sector(ch.sector, dims)
    if tuple(dims[i] for i in sector) != ch.sector_dims:
        raise DimensionError(
            f"channel sector dims {ch.sector_dims} do not match state dims "
            f"{tuple(dims[i] for i in sector)} at {sector}")
    return np.stack([lift(k, sector, dims) for k in ch.operators])


def apply(ch: KrausChannel, rho: DensityMatrix, tol: Tolerances = DEFAULT) -> DensityMatrix:
    """Apply the channel to the matching sector of ``rho``."""
    rep = validate(ch, tol)
    if not rep.valid:
        raise ChannelError(f"invalid channel (completeness deviation {rep.deviation:.3g})")
    ks = lifted_operators(ch, rho.dims)
    out = np.einsum("kij,jl,kml->im", ks, rho.entries, ks.conj(), optimize=True)
    return DensityMatrix(out, rho.dims)


def identity_channel(sector, sector_dims) -> KrausChannel:
    d = math.prod(sector_dims)
    return make_channel([np.eye(d)], sector, sector_dims, ChannelKind.UNITARY)


def from_unitary(u: np.ndarray, sector, sector_dims, tol: Tolerances = DEFAULT) -> KrausChannel:
    u = np.asarray(u, dtype=complex)
    dev = unitarity_deviation(u)
    if dev >= tol.unitarity:
        raise ChannelError(f"operator is not unitary (deviation {dev:.3g})")
    return make_channel([u], sector, sector_dims, ChannelKind.UNITARY, tol)


def nonselective_measurement(projectors: Sequence[np.ndarray], sector, sector_dims,
                             tol: Tolerances = DEFAULT) -> KrausChannel:
    """Outcome-averaged projective measurement.

    The projectors must be Hermitian, idempotent, mutually orthogonal and
    sum to the identity.
    """
    ps = [np.asarray(p, dtype=complex) for p in projectors]
    if not ps:
        raise ChannelError("no projectors given")
    d = ps[0].shape[0]
    for i, p in enumerate(ps):
        if p.shape != (d, d):
            raise ChannelError("projectors must share one square shape")
        if np.max(np.abs(p - p.conj().T)) > tol.completeness:
            raise ChannelError(f"projector {i} is not Hermitian")
        if np.max(np.abs(p @ p - p)) > tol.completeness:
            raise ChannelError(f"projector {i} is not idempotent")
        for j in range(i):
            if np.max(np.abs(ps[j] @ p)) > tol.completeness:
                raise ChannelError(f"projectors {j} and {i} are not orthogonal")
    if np.max(np.abs(sum(ps) - np.eye(d))) > tol.completeness:
        raise ChannelError("projectors do not sum to the identity")
    return make_channel(ps, sector, sector_dims, ChannelKind.MEASUREMENT, tol)


def basis_projectors(u: np.ndarray, groups: Sequence[Sequence[int]] | None = None) -> list[np.ndarray]:
    """Projectors onto spans of columns of unitary ``u``.

    ``groups`` partitions the column indices; by default every column is its
    own rank-one projector.
    """
    u = np.asarray(u, dtype=complex)
    if groups is None:
        groups = [[i] for i in range(u.shape[1])]
    out = []
    for g in groups:
        cols = u[:, list(g)]
        out.append(cols @ cols.conj().T)
    return out


def _phase_fixed_qr(z: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    ph = np.where(np.abs(d) > 0, d / np.abs(d), 1.0)
    return q * ph


def random_unitary(dim: int, seed: int | np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the phase-corrected QR of a Ginibre matrix."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    return _phase_fixed_qr(z)


def random_isometry(dim_in: int, dim_out: int, seed: int | np.random.Generator) -> np.ndarray:
    """Haar-random isometry ``V`` (dim_out x dim_in) with ``V^dagger V = I``."""
    if dim_in < 1 or dim_out < dim_in:
        raise ValueError(f"need 1 <= dim_in <= dim_out, got {dim_in}, {dim_out}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim_out, dim_in))
         + 1j * rng.standard_normal((dim_out, dim_in))) / math.sqrt(2)
    return _phase_fixed_qr(z)


def random_channel(dim: int, kraus_count: int, seed: int | np.random.Generator,
                   sector=(0,), sector_dims=None) -> KrausChannel:
    """Random CPTP map via a Stinespring isometry into system x environment.

    The isometry has ``dim * kraus_count`` rows; block ``i`` of ``dim`` rows
    is the Kraus operator for environment state ``i``.
    """
    if dim < 1 or kraus_count < 1:
        raise ValueError(f"dim and kraus_count must be >= 1, got {dim}, {kraus_count}")
    if sector_dims is None:
        sector_dims = (dim,)
    if math.prod(sector_dims) != dim:
        raise DimensionError(f"sector_dims {sector_dims} do not multiply to {dim}")
    v = random_isometry(dim, dim * kraus_count, seed)
    ops = [v[i * dim:(i + 1) * dim, :] for i in range(kraus_count)]
    kind = ChannelKind.UNITARY if kraus_count == 1 else ChannelKind.GENERAL
    return make_channel(ops, sector, sector_dims, kind)


def random_measurement(dim: int, seed: int | np.random.Generator, sector=(0,),
                       sector_dims=None, outcomes: int | None = None) -> KrausChannel:
    """Non-selective projective measurement in a Haar-random basis.

    With ``outcomes`` smaller than ``dim`` the basis vectors are split into
    that many contiguous groups (higher-rank projectors).
    """
    if sector_dims is None:
        sector_dims = (dim,)
    rng = np.random.default_rng(seed)
    u = random_unitary(dim, rng)
    groups = None
    if outcomes is not None:
        if not 1 <= outcomes <= dim:
            raise ValueError(f"outcomes must lie in [1, {dim}], got {outcomes}")
        groups = [list(g) for g in np.array_split(np.arange(dim), outcomes)]
    return nonselective_measurement(basis_projectors(u, groups), sector, sector_dims)
