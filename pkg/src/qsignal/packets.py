"""Gaussian wave-packet overlaps in closed form, plus a quadrature oracle.

Packet convention: a packet of width ``delta`` centred at ``c`` in ``n``
real dimensions is

    psi(x) = (2 pi delta^2)^(-n/4) exp(-|x - c|^2 / (4 delta^2)),

so ``delta`` is the position standard deviation of ``|psi|^2``. Two such
packets of equal width overlap as ``exp(-|c1 - c2|^2 / (8 delta^2))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class PacketError(ValueError):
    pass


class QuadratureError(RuntimeError):
    """The adaptive quadrature did not converge."""


@dataclass(frozen=True, eq=False)
class GaussianPacket:
    center: np.ndarray
    width: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float)).copy()
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if not self.width > 0:
            raise PacketError(f"width must be positive, got {self.width}")
        object.__setattr__(self, "width", float(self.width))

    @property
    def ndim(self) -> int:
        return self.center.size

    def shifted(self, v) -> "GaussianPacket":
        return GaussianPacket(self.center + np.asarray(v, dtype=float), self.width)


@dataclass(frozen=True, eq=False)
class PacketProductState:
    """Superposition ``sum_t c_t prod_k packet_{t,k}`` of product states.

    ``terms[t]`` lists one packet per particle. A single-term state with
    coefficient 1 is a plain product state. Coefficients are taken as given;
    use :func:`normalized_state` to fix the norm.
    """

    terms: tuple[tuple[GaussianPacket, ...], ...]
    coefficients: tuple[complex, ...] = field(default=(1.0,))

    def __post_init__(self):
        terms = tuple(tuple(t) for t in self.terms)
        coeffs = tuple(complex(c) for c in self.coefficients)
        if not terms or not terms[0]:
            raise PacketError("a packet state needs at least one term with one particle")
        if len(coeffs) != len(terms):
            raise PacketError(f"{len(coeffs)} coefficients for {len(terms)} terms")
        n, d = len(terms[0]), terms[0][0].ndim
        for t in terms:
            if len(t) != n or any(p.ndim != d for p in t):
                raise PacketError("every term needs the same particle count and dimension")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def particles(self) -> int:
        return len(self.terms[0])

    @property
    def ndim(self) -> int:
        return self.terms[0][0].ndim

    def shifted(self, v) -> "PacketProductState":
        """Translate every particle by the same vector."""
        return PacketProductState(tuple(tuple(p.shifted(v) for p in t) for t in self.terms),
                                  self.coefficients)


def product_state(*packets: GaussianPacket) -> PacketProductState:
    return PacketProductState((tuple(packets),), (1.0,))


def single_overlap(p: GaussianPacket, q: GaussianPacket) -> float:
    """``<p|q>`` for equal-width packets: ``exp(-|dc|^2 / (8 delta^2))``."""
    if p.ndim != q.ndim:
        raise PacketError("packets live in different dimensions")
    if not math.isclose(p.width, q.width, rel_tol=1e-12):
        raise PacketError("closed form requires equal widths; use the quadrature oracle")
    d2 = float(np.sum((p.center - q.center) ** 2))
    return math.exp(-d2 / (8.0 * p.width ** 2))


def product_overlap(s1: PacketProductState, s2: PacketProductState) -> float:
    """Overlap of two single-term product states, particle by particle."""
    if len(s1.terms) != 1 or len(s2.terms) != 1:
        raise PacketError("product_overlap takes single-term states; use state_overlap")
    if s1.particles != s2.particles or s1.ndim != s2.ndim:
        raise PacketError("states differ in particle count or dimension")
    return math.prod(single_overlap(p, q) for p, q in zip(s1.terms[0], s2.terms[0]))


def state_overlap(s1: PacketProductState, s2: PacketProductState) -> complex:
    """``<s1|s2>`` including every cross term between the superposed products."""
    if s1.particles != s2.particles or s1.ndim != s2.ndim:
        raise PacketError("states differ in particle count or dimension")
    total = 0j
    for c1, t1 in zip(s1.coefficients, s1.terms):
        for c2, t2 in zip(s2.coefficients, s2.terms):
            total += c1.conjugate() * c2 * math.prod(
                single_overlap(p, q) for p, q in zip(t1, t2))
    return total


def normalized_state(s: PacketProductState) -> PacketProductState:
    n = math.sqrt(state_overlap(s, s).real)
    return PacketProductState(s.terms, tuple(c / n for c in s.coefficients))


def _check_positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise PacketError(f"{k} must be positive, got {v}")


def planar_pair_state(a: float, delta: float, normalize: bool = True) -> PacketProductState:
    """Two particles on a plane, opposite along x or opposite along y, superposed.

    ``normalize=False`` keeps the bare ``1/sqrt(2)`` prefactor, which ignores
    the small overlap between the two configurations.
    """
    x, y = np.array([a, 0.0]), np.array([0.0, a])
    s = PacketProductState(
        ((GaussianPacket(x, delta), GaussianPacket(-x, delta)),
         (GaussianPacket(y, delta), GaussianPacket(-y, delta))),
        (1 / math.sqrt(2), 1 / math.sqrt(2)))
    return normalized_state(s) if normalize else s


@dataclass(frozen=True)
class TranslationOverlap:
    exact: float
    printed_formula: float
    neglected: float

    @property
    def difference(self) -> float:
        return abs(self.exact - self.printed_formula)

    @property
    def agreement_bound(self) -> float:
        """Ten times the neglected terms, plus room for double roundoff."""
        return 10 * self.neglected + 1e-15

    @property
    def agrees(self) -> bool:
        return self.difference <= self.agreement_bound


def entangled_pair_translation_overlap(a: float, delta: float, eps: float) -> TranslationOverlap:
    """Overlap of the planar entangled pair with its copy shifted by ``eps`` along x.

    ``exact`` uses the renormalized superposition and all four cross terms;
    ``printed_formula`` is ``exp(-(2a^2+eps^2)/(4 delta^2)) + exp(-eps^2/(4 delta^2))``.
    ``neglected`` sizes what the printed form drops: the normalization
    correction ``exp(-a^2/(2 delta^2))`` plus an ``a eps / delta^2`` factor on
    the exponentially small first term.
    """
    _check_positive(a=a, delta=delta)
    if eps < 0:
        raise PacketError(f"eps must be non-negative, got {eps}")
    s = planar_pair_state(a, delta)
    exact = state_overlap(s, s.shifted([eps, 0.0])).real
    printed = (math.exp(-(2 * a * a + eps * eps) / (4 * delta * delta))
               + math.exp(-eps * eps / (4 * delta * delta)))
    d2 = delta * delta
    neglected = (math.exp(-a * a / (2 * d2))
                 + math.exp(-(2 * a * a + eps * eps) / (4 * d2)) * math.expm1(a * eps / (2 * d2)))
    return TranslationOverlap(exact, printed, neglected)


@dataclass(frozen=True)
class ComCounterexample:
    com_mean_1: np.ndarray
    com_mean_2: np.ndarray
    com_spread: float
    full_overlap_exact: float
    printed_value: float

    @property
    def discrepancy(self) -> float:
        return abs(self.full_overlap_exact - self.printed_value)

    @property
    def consistent(self) -> bool:
        return math.isclose(self.full_overlap_exact, self.printed_value, rel_tol=1e-9)

    def almost_vanishes(self, threshold: float = 1e-2) -> bool:
        """Both the computed and the printed overlap fall below ``threshold``."""
        return self.full_overlap_exact < threshold and self.printed_value < threshold


def com_counterexample(a: float, delta: float) -> ComCounterexample:
    """Two configurations with equal centre-of-mass wavefunction but tiny overlap.

    Configuration 1 places the particles at ``(a, 0)`` and ``(-a, 0)``,
    configuration 2 at ``(0, a)`` and ``(0, -a)``. ``com_spread`` is the
    standard deviation of each Cartesian component of ``(x1 + x2) / 2``.
    The printed value ``exp(-a^2 / (4 delta^2))`` is returned next to the
    overlap computed in this module's convention.
    """
    _check_positive(a=a, delta=delta)
    x, y = np.array([a, 0.0]), np.array([0.0, a])
    s1 = product_state(GaussianPacket(x, delta), GaussianPacket(-x, delta))
    s2 = product_state(GaussianPacket(y, delta), GaussianPacket(-y, delta))
    means = []
    for s in (s1, s2):
        means.append(np.mean([p.center for p in s.terms[0]], axis=0))
    # independent particles: var((x1+x2)/2) = (delta^2 + delta^2) / 4
    spread = math.sqrt(2 * delta ** 2) / 2
    return ComCounterexample(means[0], means[1], spread, product_overlap(s2, s1),
                             math.exp(-a * a / (4 * delta * delta)))


# --------------------------------------------------------------------------
# quadrature oracle
# --------------------------------------------------------------------------

def packet_wavefunction(p: GaussianPacket, x: np.ndarray) -> np.ndarray:
    """Evaluate ``psi_p`` at points ``x`` of shape (..., ndim)."""
    n = p.ndim
    r2 = np.sum((x - p.center) ** 2, axis=-1)
    return (2 * math.pi * p.width ** 2) ** (-n / 4) * np.exp(-r2 / (4 * p.width ** 2))


def gauss_hermite_integrate(f: Callable[[np.ndarray], np.ndarray], center: Sequence[float],
                            scale: Sequence[float], *, rtol: float = 1e-12,
                            atol: float = 1e-14, start: int = 8,
                            max_order: int = 160, max_points: int = 4_000_000) -> tuple[float, float]:
    """Integrate ``f`` over R^n on a tensor Gauss-Hermite grid.

    The substitution ``x = center + scale * t`` is followed by the
    Gauss-Hermite rule for ``exp(-|t|^2)``; ``f`` is divided by that weight.
    The order grows by 1.5x until two successive estimates agree to
    ``max(atol, rtol * |I|)``. Returns ``(value, last_difference)``.
    """
    center = np.asarray(center, dtype=float)
    scale = np.asarray(scale, dtype=float)
    n = center.size
    prev = None
    order = start
    while order <= max_order and order ** n <= max_points:
        t, w = np.polynomial.hermite.hermgauss(order)
        # fold the inverse weight in per axis; the n-d product would overflow
        wt = w * np.exp(t ** 2)
        tt = np.stack([g.ravel() for g in np.meshgrid(*([t] * n), indexing="ij")], axis=-1)
        ww = np.ones(len(tt))
        for g in np.meshgrid(*([wt] * n), indexing="ij"):
            ww = ww * g.ravel()
        est = float(np.prod(scale) * np.sum(ww * f(center + scale * tt)))
        if prev is not None:
            diff = abs(est - prev)
            if diff <= max(atol, rtol * abs(est)):
                return est, diff
        prev = est
        order = int(math.ceil(order * 1.5))
    raise QuadratureError(f"no convergence up to order {order} in {n} dimensions")


def quadrature_overlap(s1: PacketProductState | GaussianPacket,
                       s2: PacketProductState | GaussianPacket, **kw) -> float:
    """Real part of ``<s1|s2>`` by direct numerical integration.

    Each pair of product terms is integrated on its own grid in all
    ``particles * ndim`` coordinates (at most 4). Packets may have unequal
    widths. Real-valued wavefunctions only.
    """
    if isinstance(s1, GaussianPacket):
        s1 = product_state(s1)
    if isinstance(s2, GaussianPacket):
        s2 = product_state(s2)
    if s1.particles != s2.particles or s1.ndim != s2.ndim:
        raise PacketError("states differ in particle count or dimension")
    d = s1.ndim
    if s1.particles * d > 4:
        raise PacketError("oracle limited to 4 real dimensions")
    total = 0.0
    for c1, t1 in zip(s1.coefficients, s1.terms):
        for c2, t2 in zip(s2.coefficients, s2.terms):
            def f(x, t1=t1, t2=t2):
                out = np.ones(x.shape[0])
                for k, (p, q) in enumerate(zip(t1, t2)):
                    xk = x[:, k * d:(k + 1) * d]
                    out = out * packet_wavefunction(p, xk) * packet_wavefunction(q, xk)
                return out
            center, scale = [], []
            for p, q in zip(t1, t2):
                center.extend((p.center + q.center) / 2)
                # product of the two amplitudes has variance 1/(1/2dp^2 + 1/2dq^2)
                s = math.sqrt(2.0 / (1 / (2 * p.width ** 2) + 1 / (2 * q.width ** 2)))
                scale.extend([s] * d)
            val, _ = gauss_hermite_integrate(f, center, scale, **kw)
            total += (c1.conjugate() * c2).real * val
    return total


def norm_squared_quadrature(p: GaussianPacket, **kw) -> float:
    return quadrature_overlap(p, p, **kw)


@dataclass(frozen=True)
class OracleComparison:
    displacement: float
    width: float
    closed_form: float
    quadrature: float

    @property
    def rel_error(self) -> float:
        return abs(self.closed_form - self.quadrature) / abs(self.quadrature)


def closed_form_vs_quadrature(pairs: int, seed) -> list[OracleComparison]:
    """Random 1-d (displacement, width) pairs checked against the oracle.

    Widths are drawn from [0.1, 5] and displacements from [0, 6 width].
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(pairs):
        w = float(rng.uniform(0.1, 5.0))
        d = float(rng.uniform(0.0, 6.0) * w)
        p, q = GaussianPacket([0.0], w), GaussianPacket([d], w)
        out.append(OracleComparison(d, w, single_overlap(p, q), quadrature_overlap(p, q)))
    return out
