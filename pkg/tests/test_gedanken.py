import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsignal import gedanken as g
from qsignal.qcore import overlap


def em(**kw):
    base = dict(distance=1.0, t_a=0.5, t_b=0.5, dipole=0.1)
    base.update(kw)
    return g.Scenario(**base)


# --- causal window ----------------------------------------------------------------

def test_scenario_validation():
    with pytest.raises(g.ScenarioError):
        em(distance=-1)
    with pytest.raises(g.ScenarioError):
        em(t_a=math.inf)
    with pytest.raises(g.ScenarioError):
        em(m_b=0)
    assert em(q_b=2, m_b=4).sigma == 0.5
    assert g.Scenario(1, 1, 1, regime="gravitational").regime is g.Regime.GRAV


def test_bob_decoherence_worked_points():
    # D_A T_B^2 / D^3 with D = 1, T_B = 0.9: 2 -> 1.62, 0.5 -> 0.405
    assert g.bob_can_decohere(em(dipole=2.0, t_b=0.9))
    assert not g.bob_can_decohere(em(dipole=0.5, t_b=0.9))
    with pytest.raises(g.ScenarioError):
        g.bob_can_decohere(em(distance=0))


def test_grav_predicates():
    s = g.Scenario(distance=2.0, t_a=1.0, t_b=1.9, quadrupole=0.9, regime=g.Regime.GRAV)
    assert g.alice_coherence_ok(s)
    # 0.9 * 1.9^2 / 16 < 1
    assert not g.bob_can_decohere(s)
    assert g.window_implication_holds(s)


def test_alice_condition_em():
    assert g.alice_coherence_ok(em(dipole=0.4, t_a=0.5))
    assert not g.alice_coherence_ok(em(dipole=0.6, t_a=0.5))


def test_implication_vacuous_outside_window():
    # Bob late enough to decohere, but then T_B >= D
    s = em(dipole=0.9, t_a=0.95, t_b=1.5)
    assert g.bob_can_decohere(s)
    assert g.window_implication_holds(s)


@settings(max_examples=300, deadline=None)
@given(d=st.floats(1e-3, 1e3), fa=st.floats(0, 1, exclude_max=True),
       fb=st.floats(0, 1, exclude_max=True), fs=st.floats(0, 3),
       regime=st.sampled_from(list(g.Regime)))
def test_window_implication_property(d, fa, fb, fs, regime):
    power = 1 if regime is g.Regime.EM else 2
    strength = fs * d ** power
    s = g.Scenario(distance=d, t_a=fa * d, t_b=fb * d, dipole=strength, quadrupole=strength,
                   regime=regime)
    assert g.window_implication_holds(s)


def test_window_grid_axes():
    ax = g.window_grid(50)
    assert all(len(v) == 50 for v in ax.values())
    assert ax["t_a_frac"].min() > 0 and ax["t_a_frac"].max() < 1
    assert ax["strength_frac"].max() == 2.0
    with pytest.raises(ValueError):
        g.window_grid(0)


@pytest.mark.parametrize("regime", list(g.Regime))
def test_vectorized_scan_matches_scalar_loop(regime):
    n = 6
    cert = g.no_superluminal_window(n, regime)
    ax = g.window_grid(n)
    power = 1 if regime is g.Regime.EM else 2
    count = 0
    for d in ax["distance"]:
        for fa in ax["t_a_frac"]:
            for fb in ax["t_b_frac"]:
                for fs in ax["strength_frac"]:
                    st_ = fs * d ** power
                    s = g.Scenario(d, fa * d, fb * d, dipole=st_, quadrupole=st_, regime=regime)
                    count += not g.window_implication_holds(s)
    assert cert.counterexamples == count == 0
    assert cert.points == n ** 4


def test_window_scan_totals():
    scan = g.window_scan(10)
    assert scan.points == 2 * 10 ** 4
    assert scan.counterexamples == 0
    assert {c.regime for c in scan.certificates} == set(g.Regime)


def test_window_predicates_do_fire_on_grid():
    # the scan is not vacuous: both premise and conclusion are hit somewhere
    ax = g.window_grid(20)
    d = ax["distance"][:, None, None]
    t_b = ax["t_b_frac"][None, :, None] * d
    strength = ax["strength_frac"][None, None, :] * d
    assert g._bob_decoheres(strength, d, t_b, g.Regime.EM).any()
    assert g._alice_ok(strength, 0.9 * d, g.Regime.EM).any()


# --- N traps --------------------------------------------------------------------

def test_trap_array_validation():
    with pytest.raises(g.ScenarioError):
        g.TrapArray(0, 0.1)
    with pytest.raises(g.ScenarioError):
        g.TrapArray(3, 1.0)
    with pytest.raises(g.ScenarioError):
        g.TrapArray(2, 0.1, (1, 1))
    assert g.TrapArray(2, 0.1, (1 / math.sqrt(2), 1j / math.sqrt(2))).coefficients[1] == \
        pytest.approx(1j / math.sqrt(2))


@pytest.mark.parametrize("n,eps,expected", [
    (10, 0.001, 0.9900448802097482),
    (100, 0.01, 0.3660323412732292),
    (5, 0.1, 0.59049),
])
def test_ntrap_frozen_values(n, eps, expected):
    assert g.ntrap_overlap(g.TrapArray(n, eps)).exact == pytest.approx(expected, rel=1e-14)


def test_linearization_flag():
    r = g.ntrap_overlap(g.TrapArray(10, 0.001))
    assert r.valid and r.linearized == pytest.approx(0.99)
    assert not g.ntrap_overlap(g.TrapArray(100, 0.01)).valid
    assert g.ntrap_overlap(g.TrapArray(100, 0.5)).linearized == 0


def test_trap_branch_states_overlap():
    for eps in (0, 0.01, 0.5, 0.99):
        lft, rgt = g.trap_branch_states(eps)
        assert overlap(lft, rgt) == pytest.approx(1 - eps, abs=1e-15)
        assert rgt.is_normalized()


@pytest.mark.parametrize("n", range(1, 9))
@pytest.mark.parametrize("eps", [0, 0.01, 0.1, 0.5])
def test_brute_force_matches_power_law(n, eps):
    assert abs(g.ntrap_brute_force(n, eps) - (1 - eps) ** n) < 1e-12


def test_brute_force_limits():
    with pytest.raises(g.ScenarioError):
        g.ntrap_brute_force(9, 0.1)
    with pytest.raises(g.ScenarioError):
        g.ntrap_brute_force(2, 1.5)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 200), eps=st.floats(0, 0.5))
def test_ntrap_monotone_and_bounded(n, eps):
    r = g.ntrap_overlap(g.TrapArray(n, eps))
    assert 0 <= r.exact <= 1
    assert r.exact >= g.ntrap_overlap(g.TrapArray(n + 1, eps)).exact
    assert r.linearized <= r.exact + 1e-15  # Bernoulli
    if r.valid:
        assert r.exact - r.linearized <= 5e-3


def test_ntrap_table():
    rows = g.ntrap_table(12, 0.005)
    assert [r.n for r in rows] == list(range(1, 13))
    assert rows[7].brute_force is not None and rows[8].brute_force is None
    assert max(r.brute_error for r in rows[:8]) < 1e-12


# --- entangled traps ------------------------------------------------------------

def test_branch_overlaps_against_tensor_product():
    m = g.random_trap_model(2, 3, 2, 0)
    mat = m.branch_overlaps()
    for i in range(2):
        for j in range(2):
            li = m.left[i, 0]
            rj = m.right[j, 0]
            for k in range(1, 3):
                li = np.kron(li, m.left[i, k])
                rj = np.kron(rj, m.right[j, k])
            assert mat[i, j] == pytest.approx(np.vdot(li, rj), abs=1e-14)


def test_orthogonal_model_reduces_to_diagonal():
    a = np.array([0.6, 0.8j])
    r = g.entangled_traps_overlap(g.orthogonal_trap_model(a, 5, 0.02))
    assert r.cross_bound == 0
    assert r.exact == pytest.approx(0.98 ** 5, abs=1e-14)
    assert r.difference == 0


def test_single_branch_has_no_cross_terms():
    r = g.entangled_traps_overlap(g.orthogonal_trap_model([1.0], 3, 0.1))
    assert r.cross_bound == 0 and r.exact == pytest.approx(0.9 ** 3)


@settings(max_examples=60, deadline=None)
@given(k=st.integers(1, 4), n=st.integers(1, 6), d=st.integers(2, 4),
       seed=st.integers(0, 2**32 - 1))
def test_cross_bound_property(k, n, d, seed):
    assert g.entangled_traps_overlap(g.random_trap_model(k, n, d, seed)).bound_holds


def test_leaky_models_have_cross_terms():
    r = g.entangled_traps_overlap(g.orthogonal_trap_model([0.6, 0.8], 2, 0.1, leak=0.3, seed=1))
    assert r.cross_bound > 0 and r.bound_holds


def test_trap_model_validation():
    with pytest.raises(g.ScenarioError):
        g.TrapBranchModel([1.0], np.ones((1, 2, 2)), np.ones((1, 2, 2)))
    with pytest.raises(g.ScenarioError):
        g.TrapBranchModel([1.0, 1.0], np.ones((2, 1, 1)), np.ones((2, 1, 1)))


def test_entangled_trap_sweep():
    res = g.entangled_trap_sweep(10, 4, 3, 0.01, 0.05, seed=3)
    assert len(res) == 20
    assert all(r.bound_holds for _, r in res)
    again = g.entangled_trap_sweep(10, 4, 3, 0.01, 0.05, seed=3)
    assert [r.exact for _, r in res] == [r.exact for _, r in again]


def test_planar_pair_example():
    ex = g.planar_pair_example(10.0, 1.0, 0.1)
    assert ex.gaussian == pytest.approx(0.9975031223974601, rel=1e-15)
    assert abs(ex.exact - ex.printed_formula) < 1e-6
    assert ex.squared_linear == pytest.approx((1 - 0.01 / 8) ** 2)
    assert abs(ex.gaussian - ex.squared_linear) < 1e-5


# --- spheres --------------------------------------------------------------------

def test_sphere_validation():
    with pytest.raises(g.ScenarioError):
        g.SphereArrangement(0, 1, 0.5)
    with pytest.raises(g.ScenarioError):
        g.SphereArrangement(1, -1, 0.5)
    with pytest.raises(g.ScenarioError):
        g.SphereArrangement(1, 1, 0)
    with pytest.raises(g.ScenarioError):
        g.SphereArrangement(1, 1, 1.2)
    with pytest.raises(g.ScenarioError):
        g.SphereArrangement(1, 1, 0.5, solid_angle=13)
    assert g.SphereArrangement(1, 1, 0.5).spacelike
    assert not g.SphereArrangement(1, 1, 1.0).spacelike


def test_sphere_displacement_value():
    sa = g.SphereArrangement(10, 1, 0.5)
    assert g.sphere_displacement(sa, em(dipole=1.0)) == pytest.approx(0.025)


def test_sphere_grav_not_implemented():
    s = g.Scenario(1, 0.5, 0.5, quadrupole=0.1, regime=g.Regime.GRAV)
    with pytest.raises(NotImplementedError):
        g.sphere_overlap(g.SphereArrangement(1, 1, 0.5), s)


def test_sphere_worked_point():
    s = em(dipole=1.0)
    r = g.sphere_overlap(g.SphereArrangement(3.0, 8 / math.pi, 1.0), s)
    assert abs(r.total - 0.01831563888873418) < 1e-12
    assert r.single == pytest.approx(math.exp(-1 / 72), rel=1e-14)
    assert r.count_real == pytest.approx(288)


@settings(max_examples=60, deadline=None)
@given(l=st.floats(0.5, 200), rho=st.floats(0.01, 5), phi=st.floats(0.05, 0.99),
       da=st.floats(0.01, 2), omega=st.floats(0.1, 4 * math.pi))
def test_sphere_total_equals_single_power_count(l, rho, phi, da, omega):
    s = em(dipole=da)
    r = g.sphere_overlap(g.SphereArrangement(l, rho, phi, omega), s)
    # independent route: log of single^N with real N
    log_single = -(da * phi ** 2 / l) ** 2 / 8
    assert r.total == pytest.approx(math.exp(r.count_real * log_single), rel=1e-12)
    assert r.total == math.exp(-omega * rho * da ** 2 * phi ** 4 / 8)


def test_sphere_total_bit_identical_across_radius():
    s = em(dipole=0.7)
    totals = {g.sphere_overlap(g.SphereArrangement(l, 0.3, 0.6), s).total for l in (1, 10, 100)}
    assert len(totals) == 1


def test_stack_of_five():
    s = em(dipole=1.0)
    spheres = g.build_stack(5, 1.0, 2.0, 1.0, density=8 / math.pi)
    r = g.multi_sphere_stack(spheres, s)
    assert abs(r.total - 2.061153622438558e-09) < 1e-12
    assert r.min_pair_distance == pytest.approx(math.sqrt(math.pi / 8))
    with pytest.raises(g.ScenarioError):
        g.multi_sphere_stack(spheres[::-1], s)
    with pytest.raises(g.ScenarioError):
        g.multi_sphere_stack([], s)


def test_build_stack_default_density():
    spheres = g.build_stack(3, 0.5, 1.0, 0.5)
    assert [sp.radius for sp in spheres] == [1.0, 1.5, 2.0]
    assert spheres[0].density == pytest.approx(4)
    assert g.multi_sphere_stack(spheres, em()).min_pair_distance == pytest.approx(0.5)


# --- spacetime ------------------------------------------------------------------

def test_spacelike_separation():
    e0 = g.SpacetimeEvent(0, (0, 0, 0))
    assert g.spacelike_separated(e0, g.SpacetimeEvent(1, (2, 0, 0)))
    assert not g.spacelike_separated(e0, g.SpacetimeEvent(2, (1, 0, 0)))
    assert not g.spacelike_separated(e0, g.SpacetimeEvent(1, (1, 0, 0)))  # lightlike


def test_release_events_and_alice():
    spheres = g.build_stack(5, 1.0, 5.0, 0.5)
    ev = g.release_events(spheres)
    assert [e.t for e in ev] == [4.0, 3.0, 2.0, 1.0, 0.0]
    assert all(g.spacelike_from_alice(ev, 0.9))
    # a long enough Alice experiment reaches the inner release events
    assert not all(g.spacelike_from_alice(ev, 10.0))


def test_completion_events_time():
    sp = [g.SphereArrangement(2.0, 1, 0.5), g.SphereArrangement(4.0, 1, 0.25)]
    ce = g.completion_events(sp, direction=(0, 0, 2))
    assert [e.t for e in ce] == [2.0 + 1.0, 0.0 + 1.0]
    assert ce[0].x == (0.0, 0.0, 2.0)
