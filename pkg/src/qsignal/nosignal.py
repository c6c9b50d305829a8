"""Alice-field-Bob states and the invariance of Alice's reduced state.

The global space is ordered ``[A, F, B]``: factor 0 is Alice's path qubit
(``|0> = |L>``, ``|1> = |R>``), factor 1 the effective field and factor 2 the
objects Bob controls. Evolution between the two hypersurfaces that both
contain Alice's recombination event is modeled as a single channel on some
part of ``F x B``; Alice's own evolution between them is the identity.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import channels
from .channels import ChannelKind, KrausChannel
from .config import DEFAULT, Tolerances
from .qcore import (
    DensityMatrix,
    DimensionError,
    StateError,
    StateVector,
    overlap,
    partial_trace,
    random_state,
    tensor,
    trace_distance,
    unitarity_deviation,
    visibility,
)

ALICE, FIELD, BOB = 0, 1, 2

SECTORS = {
    "F": (FIELD,),
    "B": (BOB,),
    "FB": (FIELD, BOB),
}


class LocalityError(ValueError):
    """A channel acts on Alice's factor."""


class Hypersurface(enum.Enum):
    SIGMA1 = "Sigma1"  # contains the recombination, before Bob's operation
    SIGMA2 = "Sigma2"  # Bob done, recombination not started; not modeled
    SIGMA3 = "Sigma3"  # contains the recombination, after Bob's operation


@dataclass(frozen=True, eq=False)
class BranchState:
    """``sum_i alpha_i |i>_A |Psi_i>_F |B0>_B`` with normalized branches."""

    alice_amps: tuple[complex, complex]
    field_branches: tuple[StateVector, StateVector]
    bob_state: StateVector

    def __post_init__(self, tol: Tolerances = DEFAULT):
        amps = tuple(complex(a) for a in self.alice_amps)
        if len(amps) != 2 or len(self.field_branches) != 2:
            raise DimensionError("a branch state has exactly two Alice branches")
        object.__setattr__(self, "alice_amps", amps)
        object.__setattr__(self, "field_branches", tuple(self.field_branches))
        f1, f2 = self.field_branches
        if f1.dims != f2.dims:
            raise DimensionError(f"field branches differ in dims: {f1.dims} vs {f2.dims}")
        for s in (f1, f2, self.bob_state):
            if not s.is_normalized(tol):
                raise StateError(f"branch state not normalized (norm {s.norm():.12g})")

    @property
    def dims(self) -> tuple[int, int, int]:
        return (2, self.field_branches[0].dim, self.bob_state.dim)


def assemble(bs: BranchState, tol: Tolerances = DEFAULT) -> StateVector:
    """Global state vector on ``[2, dim_F, dim_B]``.

    Alice's path states are orthogonal, so the global norm is
    ``sqrt(|a1|^2 + |a2|^2)`` whatever the field-branch overlap.
    """
    _, df, db = bs.dims
    psi = np.zeros(2 * df * db, dtype=complex)
    for i, (a, f) in enumerate(zip(bs.alice_amps, bs.field_branches)):
        psi[i * df * db:(i + 1) * df * db] = a * np.kron(f.amplitudes, bs.bob_state.amplitudes)
    norm = np.linalg.norm(psi)
    if abs(norm - 1) > tol.normalization:
        raise StateError(f"assembled state has norm {norm:.12g}")
    return StateVector(psi, bs.dims)


def random_branch_state(dim_f: int, dim_b: int, seed) -> BranchState:
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    a /= np.linalg.norm(a)
    return BranchState(
        (a[0], a[1]),
        (random_state([dim_f], rng), random_state([dim_f], rng)),
        random_state([dim_b], rng),
    )


def alice_state(state: StateVector | DensityMatrix) -> DensityMatrix:
    return partial_trace(state, [ALICE])


def _global_density(state) -> DensityMatrix:
    if isinstance(state, BranchState):
        state = assemble(state)
    if isinstance(state, StateVector):
        state = state.density()
    if len(state.dims) != 3 or state.dims[0] != 2:
        raise DimensionError(f"expected dims [2, dim_F, dim_B], got {state.dims}")
    return state


def evolve(state, ch: KrausChannel, tol: Tolerances = DEFAULT) -> dict[Hypersurface, DensityMatrix]:
    """Global state on Sigma1 and, after applying ``ch``, on Sigma3."""
    if ALICE in ch.sector:
        raise LocalityError(f"channel acts on Alice's factor (sector {ch.sector})")
    rho1 = _global_density(state)
    rho3 = channels.apply(ch, rho1, tol)
    return {Hypersurface.SIGMA1: rho1, Hypersurface.SIGMA3: rho3}


def alice_invariance_check(state, ch: KrausChannel, tol: Tolerances = DEFAULT) -> float:
    """Trace distance between Alice's reduced states on Sigma1 and Sigma3.

    ``state`` may be a ``BranchState`` or any pure/mixed state on
    ``[2, dim_F, dim_B]``.
    """
    ev = evolve(state, ch, tol)
    return trace_distance(alice_state(ev[Hypersurface.SIGMA1]),
                          alice_state(ev[Hypersurface.SIGMA3]), tol)


@dataclass(frozen=True)
class ScanReport:
    trials: int
    max_distance: float
    worst_seed: int

    def passed(self, tol: float = DEFAULT.invariance) -> bool:
        return self.max_distance < tol


ChannelFamily = Callable[[int], KrausChannel]


def signaling_scan(state, family: ChannelFamily, trials: int, seed: int = 0,
                   jobs: int = 1, tol: Tolerances = DEFAULT) -> ScanReport:
    """Worst Alice trace distance over ``trials`` channels from ``family``.

    Trial ``t`` uses channel ``family(seed + t)``; ties keep the lowest seed,
    so the report does not depend on ``jobs``.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    seeds = [seed + t for t in range(trials)]

    def one(s):
        return alice_invariance_check(state, family(s), tol)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            dists = list(ex.map(one, seeds))
    else:
        dists = [one(s) for s in seeds]
    k = int(np.argmax(dists))
    return ScanReport(trials, float(dists[k]), seeds[k])


def channel_family(kind: ChannelKind | str, dims: Sequence[int],
                   sector: str = "FB", kraus_count: int | None = None) -> ChannelFamily:
    """Seeded generator of random channels on a sector of ``[2, dF, dB]``.

    ``kraus_count`` applies to general channels and defaults to the sector
    dimension.
    """
    kind = ChannelKind(kind) if isinstance(kind, str) else kind
    idx = SECTORS[sector]
    sdims = tuple(dims[i] for i in idx)
    d = math.prod(sdims)
    k = d if kraus_count is None else kraus_count

    if kind is ChannelKind.UNITARY:
        def family(s):
            return channels.from_unitary(channels.random_unitary(d, s), idx, sdims)
    elif kind is ChannelKind.MEASUREMENT:
        def family(s):
            rng = np.random.default_rng(s)
            outcomes = int(rng.integers(1, d + 1))
            return channels.random_measurement(d, rng, idx, sdims, outcomes)
    else:
        def family(s):
            return channels.random_channel(d, k, s, idx, sdims)
    return family


def random_tripartite_state(dims: Sequence[int], seed) -> StateVector:
    """Generic (entangled) pure state on ``[2, dF, dB]``."""
    return random_state(dims, seed)


def joint_overlap_conservation(psi1: StateVector, psi2: StateVector, b0: StateVector,
                               u: np.ndarray, tol: Tolerances = DEFAULT) -> tuple[complex, complex]:
    """``<Psi1 B0|Psi2 B0>`` before and after a unitary on ``F x B``."""
    u = np.asarray(u, dtype=complex)
    dev = unitarity_deviation(u)
    if dev >= tol.unitarity:
        raise ValueError(f"operator is not unitary (deviation {dev:.3g})")
    j1, j2 = tensor(psi1, b0), tensor(psi2, b0)
    if u.shape[0] != j1.dim:
        raise DimensionError(f"unitary size {u.shape[0]} does not match {j1.dim}")
    before = overlap(j1, j2)
    after = complex(np.vdot(u @ j1.amplitudes, u @ j2.amplitudes))
    return before, after


@dataclass(frozen=True)
class FactorizationReport:
    """Outcome of the conditional branch-factorization bound.

    ``bound_holds`` is None unless both evolved branches are products.
    """

    factorizes: tuple[bool, bool]
    second_schmidt: tuple[float, float]
    field_overlap_initial: float
    bob_overlap: float | None
    field_overlap_final: float | None
    bound_holds: bool | None


def _split_product(state: StateVector) -> tuple[float, StateVector, StateVector]:
    """Second Schmidt coefficient and the leading factor pair across F|B."""
    df, db = state.dims
    m = state.amplitudes.reshape(df, db)
    u, s, vh = np.linalg.svd(m)
    s2 = float(s[1]) if s.size > 1 else 0.0
    return s2, StateVector(u[:, 0], (df,)), StateVector(vh[0].conj(), (db,))


def factorized_bound_check(psi1: StateVector, psi2: StateVector, b0: StateVector,
                           u: np.ndarray, tol: Tolerances = DEFAULT) -> FactorizationReport:
    """Test ``|<B1|B2>| >= |<Psi1|Psi2>|`` when ``U(Psi_i x B0)`` factorize.

    Each evolved branch is declared a product when its second Schmidt
    coefficient is below ``tol.schmidt``; only then are ``|Psi'_i>`` and
    ``|B_i>`` defined.
    """
    u = np.asarray(u, dtype=complex)
    dev = unitarity_deviation(u)
    if dev >= tol.unitarity:
        raise ValueError(f"operator is not unitary (deviation {dev:.3g})")
    df, db = psi1.dim, b0.dim
    s2s, fs, bs = [], [], []
    for p in (psi1, psi2):
        out = StateVector(u @ tensor(p, b0).amplitudes, (df, db))
        s2, f, b = _split_product(out)
        s2s.append(s2)
        fs.append(f)
        bs.append(b)
    fac = (s2s[0] < tol.schmidt, s2s[1] < tol.schmidt)
    initial = abs(overlap(psi1, psi2))
    if not all(fac):
        return FactorizationReport(fac, tuple(s2s), initial, None, None, None)
    bob = abs(overlap(bs[0], bs[1]))
    final = abs(overlap(fs[0], fs[1]))
    return FactorizationReport(fac, tuple(s2s), initial, bob, final,
                               bob >= initial - tol.invariance)


def decoherence_functional(phi1: StateVector, phi2: StateVector) -> float:
    """``1 - |<phi1|phi2>|``."""
    return float(min(1.0, max(0.0, 1.0 - abs(overlap(phi1, phi2)))))


def alice_visibility(state) -> float:
    return visibility(alice_state(_global_density(state)))


STATE_KINDS = ("branch", "entangled")
CHANNEL_KINDS = (ChannelKind.UNITARY, ChannelKind.MEASUREMENT, ChannelKind.GENERAL)


@dataclass(frozen=True)
class SweepGroup:
    state_kind: str
    channel_kind: ChannelKind
    sector: str
    trials: int
    max_distance: float
    worst_trial: int
    worst_dims: tuple[int, int, int]


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, trial]))


def sweep_trial(seed: int, trial: int, state_kind: str, dim_range=(2, 8),
                tol: Tolerances = DEFAULT) -> tuple[ChannelKind, str, tuple[int, int, int], float]:
    """One (random state, random channel) pair; fully determined by ``(seed, trial)``.

    The channel kind cycles with the trial index and the sector with every
    third trial, so any run of nine consecutive trials covers all
    combinations. Field and Bob dimensions are drawn from ``dim_range``.
    """
    kind = CHANNEL_KINDS[trial % 3]
    sector = tuple(SECTORS)[(trial // 3) % 3]
    rng = _trial_rng(seed, trial)
    lo, hi = dim_range
    dims = (2, int(rng.integers(lo, hi + 1)), int(rng.integers(lo, hi + 1)))
    if state_kind == "branch":
        state = random_branch_state(dims[1], dims[2], rng)
    elif state_kind == "entangled":
        state = random_tripartite_state(dims, rng)
    else:
        raise ValueError(f"unknown state kind {state_kind!r}")
    ch = channel_family(kind, dims, sector)(int(rng.integers(2 ** 63)))
    return kind, sector, dims, alice_invariance_check(state, ch, tol)


def nosignal_sweep(trials: int, seed: int, state_kind: str, dim_range=(2, 8),
                   jobs: int = 1, tol: Tolerances = DEFAULT) -> list[SweepGroup]:
    """Run ``trials`` random pairs and reduce them per (channel kind, sector)."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")

    def one(t):
        return sweep_trial(seed, t, state_kind, dim_range, tol)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            results = list(ex.map(one, range(trials)))
    else:
        results = [one(t) for t in range(trials)]
    groups = []
    for kind in CHANNEL_KINDS:
        for sector in SECTORS:
            hits = [(t, r) for t, r in enumerate(results) if r[0] is kind and r[1] == sector]
            if not hits:
                continue
            t_worst, worst = max(hits, key=lambda h: (h[1][3], -h[0]))
            groups.append(SweepGroup(state_kind, kind, sector, len(hits), worst[3],
                                     t_worst, worst[2]))
    return groups
