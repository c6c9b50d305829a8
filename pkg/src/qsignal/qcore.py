"""Dense states and operators on finite tensor-product Hilbert spaces.

Flattening is row-major with factor 0 the slowest index, i.e. the basis
vector ``|i0 i1 ... ik>`` sits at ``np.ravel_multi_index((i0, ..., ik), dims)``.
This matches ``np.kron`` ordering.

State containers are frozen dataclasses holding read-only arrays; every
operation returns a new object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .config import DEFAULT, Tolerances


class DimensionError(ValueError):
    """Shapes, dims or sector indices do not fit together."""


class StateError(ValueError):
    """An array fails the invariants of a state or density matrix."""


def check_dims(dims: Sequence[int], tol: Tolerances = DEFAULT) -> tuple[int, ...]:
    """Validate a factor-dimension list and return it as a tuple."""
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise DimensionError("dims must contain at least one factor")
    if any(d < 1 for d in dims):
        raise DimensionError(f"every factor dimension must be >= 1, got {dims}")
    if math.prod(dims) > tol.max_dim:
        raise DimensionError(
            f"total dimension {math.prod(dims)} exceeds cap {tol.max_dim}")
    return dims


def check_sector(sector: Sequence[int], dims: Sequence[int]) -> tuple[int, ...]:
    """Validate factor positions against ``dims``; returned sorted."""
    idx = tuple(int(i) for i in sector)
    if len(set(idx)) != len(idx):
        raise DimensionError(f"repeated factor index in {idx}")
    if any(i < 0 or i >= len(dims) for i in idx):
        raise DimensionError(f"factor index out of range for dims {tuple(dims)}: {idx}")
    return tuple(sorted(idx))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = check_dims(self.dims)
        amps = _frozen(self.amplitudes).reshape(-1)
        if amps.size != math.prod(dims):
            raise DimensionError(
                f"{amps.size} amplitudes do not match dims {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0:
            raise StateError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n, self.dims)

    def is_normalized(self, tol: Tolerances = DEFAULT) -> bool:
        return abs(self.norm() - 1.0) < tol.normalization

    def density(self) -> "DensityMatrix":
        """Projector ``|psi><psi|``."""
        a = self.amplitudes
        return DensityMatrix(np.outer(a, a.conj()), self.dims)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = check_dims(self.dims)
        m = _frozen(self.entries)
        n = math.prod(dims)
        if m.shape != (n, n):
            raise DimensionError(f"matrix shape {m.shape} does not match dims {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def purity(self) -> float:
        m = self.entries
        return float(np.real(np.einsum("ij,ji->", m, m)))

    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues of the Hermitian part."""
        m = self.entries
        return np.linalg.eigvalsh((m + m.conj().T) / 2)

    def validate(self, tol: Tolerances = DEFAULT) -> None:
        """Raise ``StateError`` unless Hermitian, unit trace and PSD."""
        m = self.entries
        herm = float(np.max(np.abs(m - m.conj().T)))
        if herm > tol.hermiticity:
            raise StateError(f"not Hermitian (max deviation {herm:.3g})")
        tr = self.trace()
        if abs(tr - 1) > tol.normalization:
            raise StateError(f"trace {tr:.12g} differs from 1")
        lo = float(self.eigenvalues()[0])
        if lo < -tol.positivity:
            raise StateError(f"not positive semidefinite (min eigenvalue {lo:.3g})")

    def is_valid(self, tol: Tolerances = DEFAULT) -> bool:
        try:
            self.validate(tol)
        except StateError:
            return False
        return True


State = Union[StateVector, DensityMatrix]


def basis_state(index: int | Sequence[int], dims: Sequence[int]) -> StateVector:
    """Computational basis vector, by flat index or per-factor digits."""
    dims = check_dims(dims)
    if not isinstance(index, (int, np.integer)):
        index = int(np.ravel_multi_index(tuple(index), dims))
    v = np.zeros(math.prod(dims), dtype=complex)
    v[index] = 1.0
    return StateVector(v, dims)


def random_state(dims: Sequence[int], seed: int | np.random.Generator) -> StateVector:
    """Haar-random pure state (normalized complex Gaussian vector)."""
    dims = check_dims(dims)
    rng = np.random.default_rng(seed)
    n = math.prod(dims)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return StateVector(v / np.linalg.norm(v), dims)


def tensor(a: State, b: State, tol: Tolerances = DEFAULT) -> State:
    """Kronecker product; the result's dims are ``a.dims + b.dims``."""
    dims = check_dims(a.dims + b.dims, tol)
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(np.kron(a.amplitudes, b.amplitudes), dims)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(np.kron(a.entries, b.entries), dims)
    raise TypeError("tensor() needs two StateVectors or two DensityMatrices")


def tensor_all(states: Sequence[State], tol: Tolerances = DEFAULT) -> State:
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s, tol)
    return out


def _as_density(state: State) -> DensityMatrix:
    return state.density() if isinstance(state, StateVector) else state


def partial_trace(rho: State, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on the factors listed in ``keep``.

    Kept factors appear in ascending order. A ``StateVector`` is accepted and
    reduced without forming the full projector.
    """
    dims = rho.dims
    keep = check_sector(keep, dims)
    if not keep:
        raise DimensionError("keep must name at least one factor")
    n = len(dims)
    traced = [i for i in range(n) if i not in keep]
    kdims = tuple(dims[i] for i in keep)
    kd = math.prod(kdims)

    if isinstance(rho, StateVector):
        psi = rho.amplitudes.reshape(dims)
        psi = np.transpose(psi, list(keep) + traced).reshape(kd, -1)
        return DensityMatrix(psi @ psi.conj().T, kdims)

    t = rho.entries.reshape(dims + dims)
    # ket axes 0..n-1, bra axes n..2n-1; contract traced ket/bra pairs
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise DimensionError("too many tensor factors")
    ket = list(letters[:n])
    bra = list(letters[n:2 * n])
    for i in traced:
        bra[i] = ket[i]
    out = "".join(ket[i] for i in keep) + "".join(bra[i] for i in keep)
    red = np.einsum("".join(ket) + "".join(bra) + "->" + out, t)
    return DensityMatrix(red.reshape(kd, kd), kdims)


def lift(op: np.ndarray, target: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Embed ``op`` acting on the ``target`` factors into the full space.

    ``op`` is indexed in the (ascending) order of the target factors; the
    result is identity on every other factor.
    """
    dims = check_dims(dims)
    target = check_sector(target, dims)
    op = np.asarray(op, dtype=complex)
    tdim = math.prod(dims[i] for i in target)
    if op.shape != (tdim, tdim):
        raise DimensionError(
            f"operator shape {op.shape} does not match target dimension {tdim}")
    rest = [i for i in range(len(dims)) if i not in target]
    rdim = math.prod(dims[i] for i in rest)
    perm = list(target) + rest
    if perm == list(range(len(dims))):
        return np.kron(op, np.eye(rdim))
    # build in (target, rest) order, then move axes back
    big = np.kron(op, np.eye(rdim))
    pdims = [dims[i] for i in perm]
    n = len(dims)
    inv = np.argsort(perm)
    big = big.reshape(pdims + pdims)
    big = np.transpose(big, list(inv) + [n + i for i in inv])
    D = math.prod(dims)
    return big.reshape(D, D)


def apply_operator(op: np.ndarray, state: StateVector, target: Sequence[int]) -> StateVector:
    """``lift(op) @ psi`` for a state vector."""
    return StateVector(lift(op, target, state.dims) @ state.amplitudes, state.dims)


def overlap(a: StateVector, b: StateVector) -> complex:
    """Inner product ``<a|b>`` (first argument conjugated)."""
    if a.dims != b.dims:
        raise DimensionError(f"dims differ: {a.dims} vs {b.dims}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def trace_distance(r1: DensityMatrix, r2: DensityMatrix,
                   tol: Tolerances = DEFAULT) -> float:
    """Half the trace norm of ``r1 - r2``, from the Hermitian eigen-solver."""
    if r1.dims != r2.dims:
        raise DimensionError(f"dims differ: {r1.dims} vs {r2.dims}")
    diff = r1.entries - r2.entries
    herm = float(np.max(np.abs(diff - diff.conj().T)))
    if herm > tol.hermiticity:
        raise StateError(f"difference is not Hermitian (deviation {herm:.3g})")
    ev = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return float(min(1.0, 0.5 * np.sum(np.abs(ev))))


def visibility(rho_a: DensityMatrix) -> float:
    """Interference contrast of a path qubit: ``2 |rho_01|``."""
    if rho_a.entries.shape != (2, 2):
        raise DimensionError(f"visibility needs a 2x2 matrix, got {rho_a.entries.shape}")
    return float(2 * abs(rho_a.entries[0, 1]))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Entropy in bits."""
    ev = rho.eigenvalues()
    ev = ev[ev > 1e-15]
    return float(-np.sum(ev * np.log2(ev)))


def schmidt_coefficients(state: StateVector, left: Sequence[int]) -> np.ndarray:
    """Descending Schmidt coefficients across ``left | rest``."""
    dims = state.dims
    left = check_sector(left, dims)
    rest = [i for i in range(len(dims)) if i not in left]
    ld = math.prod(dims[i] for i in left)
    psi = np.transpose(state.amplitudes.reshape(dims), list(left) + rest)
    return np.linalg.svd(psi.reshape(ld, -1), compute_uv=False)


def unitarity_deviation(u: np.ndarray) -> float:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return math.inf
    return float(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))))


def is_unitary(u: np.ndarray, tol: Tolerances = DEFAULT) -> bool:
    return unitarity_deviation(u) < tol.unitarity
