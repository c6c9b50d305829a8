"""Scenario physics: causal windows, many-trap decoherence, sphere arrangements.

Units have c = hbar = 1. Alice sits at the origin; her interference
experiment runs over ``0 <= t <= T_A``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .packets import GaussianPacket, entangled_pair_translation_overlap, single_overlap
from .qcore import StateVector, basis_state, partial_trace, tensor_all, visibility

MAX_BRUTE_FORCE_TRAPS = 8


class ScenarioError(ValueError):
    pass


class Regime(enum.Enum):
    EM = "electromagnetic"
    GRAV = "gravitational"


@dataclass(frozen=True)
class Scenario:
    """Gedankenexperiment parameters.

    ``dipole`` is q_A * d and only matters in the electromagnetic regime;
    ``quadrupole`` only in the gravitational one.
    """

    distance: float
    t_a: float
    t_b: float
    dipole: float = 0.0
    quadrupole: float = 0.0
    separation: float = 0.0
    q_b: float = 1.0
    m_b: float = 1.0
    regime: Regime = Regime.EM

    def __post_init__(self):
        for k in ("distance", "t_a", "t_b", "dipole", "quadrupole", "separation", "q_b", "m_b"):
            v = getattr(self, k)
            if not (v >= 0 and math.isfinite(v)):
                raise ScenarioError(f"{k} must be finite and >= 0, got {v}")
        if self.m_b == 0:
            raise ScenarioError("m_b must be positive")
        object.__setattr__(self, "regime", Regime(self.regime))

    @property
    def sigma(self) -> float:
        """Packet width of Bob's particles, q_B / m_B."""
        return self.q_b / self.m_b


# Eq-level predicates work elementwise on arrays so the grid scan can reuse them.

def _alice_ok(strength, t_a, regime: Regime):
    return strength < t_a if regime is Regime.EM else strength < t_a ** 2


def _bob_decoheres(strength, distance, t_b, regime: Regime):
    power = 3 if regime is Regime.EM else 4
    return strength / distance ** power * t_b ** 2 > 1


def _strength(s: Scenario) -> float:
    return s.dipole if s.regime is Regime.EM else s.quadrupole


def alice_coherence_ok(s: Scenario) -> bool:
    """Alice can recombine without radiating: D_A < T_A (em) or Q_A < T_A^2 (grav)."""
    return bool(_alice_ok(_strength(s), s.t_a, s.regime))


def bob_can_decohere(s: Scenario) -> bool:
    """Bob's displacement beats his delocalization: (D_A/D^3) T_B^2 > 1, or (Q_A/D^4) T_B^2 > 1."""
    if s.distance <= 0:
        raise ScenarioError("distance must be positive")
    return bool(_bob_decoheres(_strength(s), s.distance, s.t_b, s.regime))


@dataclass(frozen=True)
class WindowCertificate:
    regime: Regime
    grid: int
    points: int
    counterexamples: int
    first_counterexample: dict | None


def window_grid(n: int) -> dict[str, np.ndarray]:
    """Axes of the normalized scan grid, ``n`` points each.

    Distances span four decades; T_A and T_B are strict fractions of the
    distance in (0, 1); the source strength runs over (0, 2] in units of
    D (em) or D^2 (grav), so both sides of Alice's condition are covered.
    """
    if n < 1:
        raise ValueError("grid size must be >= 1")
    return {
        "distance": np.geomspace(1e-2, 1e2, n),
        "t_a_frac": np.linspace(0.0, 1.0, n + 2)[1:-1],
        "t_b_frac": np.linspace(0.0, 1.0, n + 2)[1:-1],
        "strength_frac": np.linspace(0.0, 2.0, n + 1)[1:],
    }


def no_superluminal_window(n: int = 50, regime: Regime = Regime.EM) -> WindowCertificate:
    """Scan ``n^4`` points for Alice-coherent, in-window, Bob-decoheres cases."""
    regime = Regime(regime)
    ax = window_grid(n)
    D = ax["distance"][:, None, None, None]
    t_a = ax["t_a_frac"][None, :, None, None] * D
    t_b = ax["t_b_frac"][None, None, :, None] * D
    power = 1 if regime is Regime.EM else 2
    strength = ax["strength_frac"][None, None, None, :] * D ** power
    premise = _alice_ok(strength, t_a, regime) & (t_a < D) & (t_b < D)
    bad = premise & _bob_decoheres(strength, D, t_b, regime)
    count = int(np.count_nonzero(bad))
    first = None
    if count:
        i, j, k, m = (int(v[0]) for v in np.nonzero(bad))
        d = float(ax["distance"][i])
        first = {"distance": d, "t_a": float(ax["t_a_frac"][j] * d),
                 "t_b": float(ax["t_b_frac"][k] * d),
                 "strength": float(ax["strength_frac"][m] * d ** power)}
    return WindowCertificate(regime, n, n ** 4, count, first)


def window_implication_holds(s: Scenario) -> bool:
    """Single-point version: premise false, or Bob cannot decohere."""
    premise = alice_coherence_ok(s) and s.t_a < s.distance and s.t_b < s.distance
    return not premise or not bob_can_decohere(s)


# ---------------------------------------------------------------------------
# traps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrapArray:
    count: int
    epsilon: float
    coefficients: tuple[complex, ...] | None = None

    def __post_init__(self):
        if self.count < 1:
            raise ScenarioError(f"trap count must be >= 1, got {self.count}")
        if not 0 <= self.epsilon < 1:
            raise ScenarioError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if self.coefficients is not None:
            c = tuple(complex(x) for x in self.coefficients)
            if abs(sum(abs(x) ** 2 for x in c) - 1) > 1e-10:
                raise ScenarioError("trap coefficients must satisfy sum |a_i|^2 = 1")
            object.__setattr__(self, "coefficients", c)


@dataclass(frozen=True)
class NTrapOverlap:
    exact: float
    linearized: float
    valid: bool


LINEARIZATION_LIMIT = 0.1


def ntrap_overlap(t: TrapArray) -> NTrapOverlap:
    """``(1 - eps)^N`` and its first-order form ``1 - N eps`` (clipped at 0)."""
    ne = t.count * t.epsilon
    # log1p keeps full precision for tiny eps, where repeated products drift by ~N ulp
    exact = math.exp(t.count * math.log1p(-t.epsilon))
    return NTrapOverlap(exact, max(0.0, 1 - ne), ne < LINEARIZATION_LIMIT)


def trap_branch_states(eps: float) -> tuple[StateVector, StateVector]:
    """Two-level trap states with ``<L|R> = 1 - eps`` (real, non-negative)."""
    c = 1 - eps
    left = basis_state(0, [2])
    right = StateVector(np.array([c, math.sqrt(max(0.0, 1 - c * c))]), (2,))
    return left, right


def ntrap_brute_force(n: int, eps: float) -> float:
    """Alice's visibility after ``n`` traps, from the explicit tensor state.

    Builds ``(|L>|L_1>...|L_N> + |R>|R_1>...|R_N>)/sqrt(2)`` on dims
    ``[2] * (n + 1)`` and reduces to Alice.
    """
    if not 1 <= n <= MAX_BRUTE_FORCE_TRAPS:
        raise ScenarioError(f"brute force supports 1..{MAX_BRUTE_FORCE_TRAPS} traps, got {n}")
    if not 0 <= eps < 1:
        raise ScenarioError(f"epsilon must lie in [0, 1), got {eps}")
    left, right = trap_branch_states(eps)
    a_l, a_r = basis_state(0, [2]), basis_state(1, [2])
    psi = (tensor_all([a_l] + [left] * n).amplitudes
           + tensor_all([a_r] + [right] * n).amplitudes) / math.sqrt(2)
    state = StateVector(psi, (2,) * (n + 1))
    return visibility(partial_trace(state, [0]))


@dataclass(frozen=True, eq=False)
class TrapBranchModel:
    """Explicit entangled-trap model.

    ``left[i, k]`` / ``right[i, k]`` is the state of trap ``k`` in separable
    branch ``i`` after interacting with Alice's left / right field.
    """

    coefficients: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.coefficients, dtype=complex)
        lft = np.asarray(self.left, dtype=complex)
        rgt = np.asarray(self.right, dtype=complex)
        if lft.ndim != 3 or lft.shape != rgt.shape or lft.shape[0] != a.size:
            raise ScenarioError("left/right must have shape (branches, traps, local_dim)")
        if abs(np.sum(np.abs(a) ** 2) - 1) > 1e-10:
            raise ScenarioError("coefficients must satisfy sum |a_i|^2 = 1")
        for arr in (lft, rgt):
            if np.max(np.abs(np.linalg.norm(arr, axis=-1) - 1)) > 1e-10:
                raise ScenarioError("per-trap states must be normalized")
        object.__setattr__(self, "coefficients", a)
        object.__setattr__(self, "left", lft)
        object.__setattr__(self, "right", rgt)

    @property
    def branches(self) -> int:
        return self.left.shape[0]

    @property
    def traps(self) -> int:
        return self.left.shape[1]

    def branch_overlaps(self) -> np.ndarray:
        """Matrix ``<psi^i_L | psi^j_R>`` as products of per-trap overlaps."""
        per_trap = np.einsum("ikd,jkd->ijk", self.left.conj(), self.right)
        return np.prod(per_trap, axis=-1)


@dataclass(frozen=True)
class EntangledTrapsOverlap:
    exact: complex
    approx: complex
    cross_bound: float

    @property
    def difference(self) -> float:
        return abs(self.exact - self.approx)

    @property
    def bound_holds(self) -> bool:
        # 1e-14 absorbs roundoff when every cross term vanishes identically
        return self.difference <= self.cross_bound + 1e-14


def entangled_traps_overlap(model: TrapBranchModel) -> EntangledTrapsOverlap:
    """``<Psi_L|Psi_R>`` with and without the cross-branch terms.

    ``exact = sum_ij conj(a_i) a_j <psi^i_L|psi^j_R>``,
    ``approx`` keeps only ``i = j`` and ``cross_bound = sum_{i!=j} |a_i a_j|
    * max_{i!=j} |<psi^i_L|psi^j_R>|`` bounds the difference.
    """
    a = model.coefficients
    m = model.branch_overlaps()
    weights = np.outer(a.conj(), a)
    exact = complex(np.sum(weights * m))
    approx = complex(np.sum(np.diag(weights) * np.diag(m)))
    off = ~np.eye(len(a), dtype=bool)
    if off.any():
        bound = float(np.sum(np.abs(weights[off])) * np.max(np.abs(m[off])))
    else:
        bound = 0.0
    return EntangledTrapsOverlap(exact, approx, bound)


def orthogonal_trap_model(coefficients: Sequence[complex], traps: int, eps: float,
                          leak: float = 0.0, seed=None) -> TrapBranchModel:
    """Branches on disjoint two-level blocks, so cross overlaps vanish.

    Branch ``i`` uses local levels ``2i, 2i+1`` of every trap, with per-trap
    ``<L|R> = 1 - eps``. A positive ``leak`` mixes a random vector (seeded)
    into every right state, switching on cross overlaps.
    """
    a = np.asarray(coefficients, dtype=complex)
    k = a.size
    d = 2 * k
    c = 1 - eps
    s = math.sqrt(max(0.0, 1 - c * c))
    left = np.zeros((k, traps, d), dtype=complex)
    right = np.zeros((k, traps, d), dtype=complex)
    for i in range(k):
        left[i, :, 2 * i] = 1
        right[i, :, 2 * i] = c
        right[i, :, 2 * i + 1] = s
    if leak:
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal(right.shape) + 1j * rng.standard_normal(right.shape)
        noise /= np.linalg.norm(noise, axis=-1, keepdims=True)
        right = right + leak * noise
        right /= np.linalg.norm(right, axis=-1, keepdims=True)
    return TrapBranchModel(a, left, right)


def random_trap_model(branches: int, traps: int, local_dim: int, seed) -> TrapBranchModel:
    """Fully random coefficients and per-trap states."""
    rng = np.random.default_rng(seed)

    def unit(shape):
        v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    a = unit((branches,))
    return TrapBranchModel(a, unit((branches, traps, local_dim)), unit((branches, traps, local_dim)))


@dataclass(frozen=True)
class PlanarPairExample:
    exact: float
    printed_formula: float
    gaussian: float
    squared_linear: float


def planar_pair_example(a: float, delta: float, eps: float) -> PlanarPairExample:
    """Two entangled particles shifted by ``eps``: overlap vs ``(1 - e)^2``.

    ``gaussian`` is ``exp(-eps^2 / (4 delta^2))`` and ``squared_linear`` is
    ``(1 - e)^2`` with ``e = eps^2 / (8 delta^2)``.
    """
    r = entangled_pair_translation_overlap(a, delta, eps)
    e = eps ** 2 / (8 * delta ** 2)
    return PlanarPairExample(r.exact, r.printed_formula,
                             math.exp(-eps ** 2 / (4 * delta ** 2)), (1 - e) ** 2)


# ---------------------------------------------------------------------------
# spheres of traps around Alice
# ---------------------------------------------------------------------------

FULL_SOLID_ANGLE = 4 * math.pi


@dataclass(frozen=True)
class SphereArrangement:
    """Traps at areal density ``density`` on a patch of a sphere around Alice.

    Bob's experiment at this sphere lasts ``T_B = phi * radius``. Physical
    arrangements need ``phi < 1``; ``phi = 1`` is accepted as the light-cone
    limit of the closed forms and reported by :attr:`spacelike`.
    """

    radius: float
    density: float
    phi: float
    solid_angle: float = FULL_SOLID_ANGLE

    def __post_init__(self):
        if not self.radius > 0:
            raise ScenarioError(f"radius must be positive, got {self.radius}")
        if not self.density >= 0:
            raise ScenarioError(f"density must be >= 0, got {self.density}")
        if not 0 < self.phi <= 1:
            raise ScenarioError(f"phi must satisfy phi < 1 (phi = 1 only as a limit), got {self.phi}")
        if not 0 < self.solid_angle <= FULL_SOLID_ANGLE:
            raise ScenarioError(f"solid_angle must lie in (0, 4 pi], got {self.solid_angle}")

    @property
    def spacelike(self) -> bool:
        return self.phi < 1

    @property
    def count(self) -> float:
        return self.density * self.solid_angle * self.radius ** 2

    @property
    def min_pair_distance(self) -> float:
        """Typical nearest-neighbour spacing, ``density^(-1/2)``."""
        return math.inf if self.density == 0 else self.density ** -0.5


def _require_em(s: Scenario):
    if s.regime is not Regime.EM:
        raise NotImplementedError("sphere arrangements are only defined for the electromagnetic regime")


def sphere_displacement(sa: SphereArrangement, s: Scenario) -> float:
    """Lower bound on a released particle's displacement, ``sigma D_A phi^2 / l``."""
    _require_em(s)
    return s.sigma * s.dipole * sa.phi ** 2 / sa.radius


@dataclass(frozen=True)
class SphereOverlap:
    displacement: float
    single: float
    total: float
    count: int
    count_real: float


def sphere_overlap(sa: SphereArrangement, s: Scenario) -> SphereOverlap:
    """Per-particle and whole-sphere ``<L|R>`` bounds.

    ``single`` overlaps two packets of width ``sigma`` separated by the
    displacement bound, i.e. ``exp(-D_A^2 phi^4 / (8 l^2))``. ``total`` is
    ``single ** (rho Omega l^2)`` with the radius cancelled analytically:
    ``exp(-Omega rho D_A^2 phi^4 / 8)``.
    """
    _require_em(s)
    if s.sigma <= 0:
        raise ScenarioError("q_b / m_b must be positive")
    dx = sphere_displacement(sa, s)
    single = single_overlap(GaussianPacket([0.0], s.sigma), GaussianPacket([dx], s.sigma))
    total = math.exp(-sa.solid_angle * sa.density * s.dipole ** 2 * sa.phi ** 4 / 8)
    n = sa.count
    return SphereOverlap(dx, single, total, int(math.floor(n)), n)


@dataclass(frozen=True)
class StackResult:
    totals: tuple[float, ...]
    total: float
    min_pair_distance: float


def multi_sphere_stack(spheres: Sequence[SphereArrangement], s: Scenario) -> StackResult:
    """Combined overlap of concentric spheres and their closest trap spacing."""
    if not spheres:
        raise ScenarioError("need at least one sphere")
    radii = [sp.radius for sp in spheres]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ScenarioError(f"sphere radii must be strictly increasing, got {radii}")
    totals = tuple(sphere_overlap(sp, s).total for sp in spheres)
    gaps = [b - a for a, b in zip(radii, radii[1:])]
    within = [sp.min_pair_distance for sp in spheres]
    return StackResult(totals, math.prod(totals), min(within + gaps))


def build_stack(count: int, spacing: float, inner_radius: float, phi: float,
                density: float | None = None,
                solid_angle: float = FULL_SOLID_ANGLE) -> list[SphereArrangement]:
    """``count`` spheres ``spacing`` apart; default density keeps traps ``spacing`` apart."""
    if density is None:
        density = spacing ** -2
    return [SphereArrangement(inner_radius + k * spacing, density, phi, solid_angle)
            for k in range(count)]


# ---------------------------------------------------------------------------
# spacetime
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpacetimeEvent:
    t: float
    x: tuple[float, float, float]


def spacelike_separated(e1: SpacetimeEvent, e2: SpacetimeEvent) -> bool:
    dx = math.dist(e1.x, e2.x)
    return dx > abs(e1.t - e2.t)


def release_events(spheres: Sequence[SphereArrangement],
                   direction=(1.0, 0.0, 0.0)) -> list[SpacetimeEvent]:
    """Release times set by a light signal sent inward from the outermost sphere at t = 0."""
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    l_max = max(sp.radius for sp in spheres)
    return [SpacetimeEvent(l_max - sp.radius, tuple(sp.radius * n)) for sp in spheres]


def simultaneous_release_events(spheres: Sequence[SphereArrangement],
                                direction=(1.0, 0.0, 0.0)) -> list[SpacetimeEvent]:
    """Every sphere releases at t = 0, decided by pre-shared correlated spins."""
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    return [SpacetimeEvent(0.0, tuple(sp.radius * n)) for sp in spheres]


def completion_events(spheres: Sequence[SphereArrangement],
                      direction=(1.0, 0.0, 0.0)) -> list[SpacetimeEvent]:
    """End of each sphere's experiment, ``T_B = phi * l`` after its release."""
    return [SpacetimeEvent(e.t + sp.phi * sp.radius, e.x)
            for e, sp in zip(release_events(spheres, direction), spheres)]


def alice_worldline(t_a: float, samples: int = 201) -> list[SpacetimeEvent]:
    return [SpacetimeEvent(float(t), (0.0, 0.0, 0.0)) for t in np.linspace(0.0, t_a, samples)]


def spacelike_from_alice(events: Sequence[SpacetimeEvent], t_a: float,
                         samples: int = 201) -> list[bool]:
    """Whether each event is spacelike to every sampled point of Alice's experiment."""
    alice = alice_worldline(t_a, samples)
    return [all(spacelike_separated(e, a) for a in alice) for e in events]


@dataclass(frozen=True)
class NTrapRow:
    n: int
    exact: float
    linearized: float
    valid: bool
    brute_force: float | None
    brute_error: float | None
    linearization_error: float


def ntrap_table(count: int, eps: float) -> list[NTrapRow]:
    """``n = 1..count``: closed form, linearization, and brute force where feasible."""
    rows = []
    for n in range(1, count + 1):
        r = ntrap_overlap(TrapArray(n, eps))
        bf = ntrap_brute_force(n, eps) if n <= MAX_BRUTE_FORCE_TRAPS else None
        rows.append(NTrapRow(n, r.exact, r.linearized, r.valid, bf,
                             None if bf is None else abs(bf - r.exact),
                             abs(r.linearized - r.exact)))
    return rows


def entangled_trap_sweep(models: int, traps: int, branches: int, eps: float,
                         leak: float, seed) -> list[tuple[str, EntangledTrapsOverlap]]:
    """Orthogonal-block models with random coefficients, then fully random models."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(models):
        a = rng.standard_normal(branches) + 1j * rng.standard_normal(branches)
        a /= np.linalg.norm(a)
        m = orthogonal_trap_model(a, traps, eps, leak, rng)
        out.append((f"orthogonal-{i}", entangled_traps_overlap(m)))
    for i in range(models):
        m = random_trap_model(max(2, branches), traps, 2, rng)
        out.append((f"random-{i}", entangled_traps_overlap(m)))
    return out


@dataclass(frozen=True)
class WindowScan:
    certificates: tuple[WindowCertificate, ...]

    @property
    def points(self) -> int:
        return sum(c.points for c in self.certificates)

    @property
    def counterexamples(self) -> int:
        return sum(c.counterexamples for c in self.certificates)


def window_scan(n: int, regimes=(Regime.EM, Regime.GRAV)) -> WindowScan:
    return WindowScan(tuple(no_superluminal_window(n, r) for r in regimes))
