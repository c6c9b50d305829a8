import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsignal.channels import random_unitary
from qsignal.config import Tolerances
from qsignal.qcore import (
    DensityMatrix,
    DimensionError,
    StateError,
    StateVector,
    basis_state,
    lift,
    overlap,
    partial_trace,
    random_state,
    schmidt_coefficients,
    tensor,
    trace_distance,
    visibility,
)


def ptrace_oracle(rho, dims, keep):
    """Partial trace by explicit summation over basis labels."""
    n = len(dims)
    kdims = [dims[i] for i in keep]
    traced = [i for i in range(n) if i not in keep]
    kd = math.prod(kdims)
    out = np.zeros((kd, kd), dtype=complex)
    for kin in itertools.product(*[range(d) for d in kdims]):
        for kout in itertools.product(*[range(d) for d in kdims]):
            acc = 0
            for t in itertools.product(*[range(dims[i]) for i in traced]):
                a = [0] * n
                b = [0] * n
                for pos, i in enumerate(keep):
                    a[i], b[i] = kin[pos], kout[pos]
                for pos, i in enumerate(traced):
                    a[i] = b[i] = t[pos]
                acc += rho[np.ravel_multi_index(a, dims), np.ravel_multi_index(b, dims)]
            out[np.ravel_multi_index(kin, kdims), np.ravel_multi_index(kout, kdims)] = acc
    return out


def random_density(dims, seed, rank=None):
    rng = np.random.default_rng(seed)
    d = math.prod(dims)
    r = rank or d
    g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m), dims)


# --- tensor -----------------------------------------------------------------

def test_tensor_basis_bookkeeping():
    v = tensor(basis_state(0, [2]), basis_state(1, [2]))
    assert v.dims == (2, 2)
    np.testing.assert_array_equal(v.amplitudes, basis_state(1, [2, 2]).amplitudes)


def test_tensor_uniform_plus_states():
    plus = StateVector(np.array([1, 1]) / math.sqrt(2), [2])
    np.testing.assert_allclose(tensor(plus, plus).amplitudes, np.full(4, 0.5), atol=1e-15)


def test_tensor_norm_of_random_states():
    for seed in range(20):
        a = random_state([3], seed)
        b = random_state([2, 2], seed + 100)
        assert abs(tensor(a, b).norm() - 1) < 1e-12


def test_tensor_density_matches_state_tensor():
    a, b = random_state([2], 1), random_state([3], 2)
    np.testing.assert_allclose(tensor(a.density(), b.density()).entries,
                               tensor(a, b).density().entries, atol=1e-15)


def test_tensor_rejects_mixed_kinds_and_overflow():
    with pytest.raises(TypeError):
        tensor(basis_state(0, [2]), basis_state(0, [2]).density())
    with pytest.raises(DimensionError):
        tensor(basis_state(0, [64]), basis_state(0, [128]))
    small = Tolerances(max_dim=8)
    with pytest.raises(DimensionError):
        tensor(basis_state(0, [4]), basis_state(0, [4]), small)


@pytest.mark.parametrize("dims", [(2, 3), (3, 2, 2), (2, 2, 2, 2)])
def test_row_major_factor_zero_slowest(dims):
    for digits in itertools.product(*[range(d) for d in dims]):
        flat = basis_state(digits, dims)
        idx = int(np.flatnonzero(flat.amplitudes)[0])
        assert np.unravel_index(idx, dims) == digits
        # Kronecker of single-factor basis vectors lands on the same index
        kron = basis_state(digits[0], [dims[0]])
        for d, k in zip(dims[1:], digits[1:]):
            kron = tensor(kron, basis_state(k, [d]))
        np.testing.assert_array_equal(kron.amplitudes, flat.amplitudes)


def test_state_construction_errors():
    with pytest.raises(DimensionError):
        StateVector(np.ones(3), [2, 2])
    with pytest.raises(DimensionError):
        StateVector(np.ones(2), [0, 2])
    with pytest.raises(DimensionError):
        DensityMatrix(np.eye(3), [2])


def test_states_are_immutable():
    v = random_state([2], 0)
    with pytest.raises(ValueError):
        v.amplitudes[0] = 1


# --- partial trace ------------------------------------------------------------

def test_bell_state_reduces_to_maximally_mixed():
    bell = StateVector(np.array([1, 0, 0, 1]) / math.sqrt(2), [2, 2])
    np.testing.assert_allclose(partial_trace(bell, [0]).entries, np.eye(2) / 2, atol=1e-15)
    np.testing.assert_allclose(partial_trace(bell.density(), [1]).entries, np.eye(2) / 2,
                               atol=1e-15)


def test_product_state_reduction():
    plus = StateVector(np.array([1, 1]) / math.sqrt(2), [2])
    psi = tensor(basis_state(0, [2]), plus)
    np.testing.assert_allclose(partial_trace(psi.density(), [0]).entries,
                               np.diag([1, 0]), atol=1e-15)


@pytest.mark.parametrize("dims,keep", [
    ((2, 3), [0]), ((2, 3), [1]), ((2, 3, 2), [0, 2]), ((2, 2, 3), [1]),
    ((3, 2, 2), [2, 0]), ((2, 2, 2, 2), [1, 3]),
])
def test_partial_trace_matches_summation_oracle(dims, keep):
    rho = random_density(dims, seed=sum(dims) + len(keep))
    got = partial_trace(rho, keep)
    np.testing.assert_allclose(got.entries, ptrace_oracle(rho.entries, dims, sorted(keep)),
                               atol=1e-13)
    psi = random_state(dims, 5)
    np.testing.assert_allclose(partial_trace(psi, keep).entries,
                               ptrace_oracle(psi.density().entries, dims, sorted(keep)),
                               atol=1e-13)


def test_schmidt_spectra_of_reductions_coincide():
    for seed in range(10):
        psi = random_state([2, 3], seed)
        ea = np.sort(partial_trace(psi, [0]).eigenvalues())[::-1]
        eb = np.sort(partial_trace(psi, [1]).eigenvalues())[::-1]
        np.testing.assert_allclose(ea, eb[:2], atol=1e-12)
        assert abs(eb[2]) < 1e-12
        # singular-value oracle
        s = np.linalg.svd(psi.amplitudes.reshape(2, 3), compute_uv=False)
        np.testing.assert_allclose(ea, s ** 2, atol=1e-12)
        np.testing.assert_allclose(schmidt_coefficients(psi, [0]), s, atol=1e-12)


def test_partial_trace_rejects_bad_sectors():
    rho = random_density((2, 2), 0)
    for keep in ([2], [0, 0], [-1], []):
        with pytest.raises(DimensionError):
            partial_trace(rho, keep)


dims_strategy = st.lists(st.integers(1, 4), min_size=1, max_size=4).filter(
    lambda d: math.prod(d) <= 256)


@settings(max_examples=60, deadline=None)
@given(dims=dims_strategy, seed=st.integers(0, 2**32 - 1), data=st.data())
def test_partial_trace_preserves_trace_hermiticity_positivity(dims, seed, data):
    keep = data.draw(st.lists(st.integers(0, len(dims) - 1), min_size=1, unique=True))
    rho = random_density(dims, seed, rank=data.draw(st.integers(1, 3)))
    red = partial_trace(rho, keep)
    m = red.entries
    assert abs(np.trace(m) - 1) < 1e-10
    assert np.max(np.abs(m - m.conj().T)) < 1e-10
    assert red.eigenvalues()[0] > -1e-10


@settings(max_examples=40, deadline=None)
@given(d1=st.integers(1, 6), d2=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_schmidt_property(d1, d2, seed):
    psi = random_state([d1, d2], seed)
    ea = np.sort(partial_trace(psi, [0]).eigenvalues())[::-1]
    eb = np.sort(partial_trace(psi, [1]).eigenvalues())[::-1]
    k = min(d1, d2)
    np.testing.assert_allclose(ea[:k], eb[:k], atol=1e-10)
    assert np.all(np.abs(ea[k:]) < 1e-10) and np.all(np.abs(eb[k:]) < 1e-10)


# --- lift ---------------------------------------------------------------------

def test_lift_identity():
    dims = (2, 3, 2)
    np.testing.assert_array_equal(lift(np.eye(6), [1, 2], dims), np.eye(12))


def test_lift_x_on_second_qubit():
    x = np.array([[0, 1], [1, 0]])
    out = lift(x, [1], [2, 2]) @ basis_state(0, [2, 2]).amplitudes
    np.testing.assert_array_equal(out, basis_state((0, 1), [2, 2]).amplitudes)


def test_lift_matches_basis_action_on_noncontiguous_target():
    dims = (2, 3, 2)
    rng = np.random.default_rng(3)
    m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    big = lift(m, [0, 2], dims)
    # oracle: <a b c| big |a' b' c'> = M[(a,c),(a',c')] delta_{b b'}
    for i, j in itertools.product(range(12), repeat=2):
        a, b, c = np.unravel_index(i, dims)
        a2, b2, c2 = np.unravel_index(j, dims)
        want = m[a * 2 + c, a2 * 2 + c2] if b == b2 else 0
        assert big[i, j] == pytest.approx(want)


def test_lift_shape_mismatch():
    with pytest.raises(DimensionError):
        lift(np.eye(3), [1], [2, 2])


def test_partial_trace_cyclicity_for_lifted_operators():
    dims = (2, 3, 2)
    rho = random_density(dims, 11)
    rng = np.random.default_rng(12)
    for _ in range(5):
        m = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        k = lift(m, [1, 2], dims)
        lhs = partial_trace(DensityMatrix(k @ rho.entries @ k.conj().T, dims), [0])
        rhs = partial_trace(DensityMatrix(rho.entries @ k.conj().T @ k, dims), [0])
        np.testing.assert_allclose(lhs.entries, rhs.entries, atol=1e-10)


def _reduce_unchecked(m, dims, keep):
    return ptrace_oracle(m, dims, keep)


@settings(max_examples=30, deadline=None)
@given(df=st.integers(1, 4), db=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_cyclicity_property(df, db, seed):
    dims = (2, df, db)
    rho = random_density(dims, seed)
    rng = np.random.default_rng(seed + 1)
    d = df * db
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    k = lift(m, [1, 2], dims)
    # products below are not states, so reduce with the summation oracle
    lhs = _reduce_unchecked(k.conj().T @ rho.entries @ k, dims, [0])
    rhs = _reduce_unchecked(rho.entries @ k @ k.conj().T, dims, [0])
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


# --- overlap / trace distance / visibility ------------------------------------------

def test_overlap_basics():
    psi = random_state([3], 0)
    assert overlap(psi, psi) == pytest.approx(1)
    assert overlap(basis_state(0, [3]), basis_state(2, [3])) == 0
    a = StateVector(np.array([1j, 0]), [2])
    b = StateVector(np.array([1, 0]), [2])
    assert overlap(a, b) == pytest.approx(-1j)  # first argument conjugated
    with pytest.raises(DimensionError):
        overlap(basis_state(0, [2]), basis_state(0, [3]))


def test_overlap_modulus_unitary_invariance():
    for seed in range(10):
        a, b = random_state([4], seed), random_state([4], seed + 50)
        u = random_unitary(4, seed)
        ua, ub = StateVector(u @ a.amplitudes, [4]), StateVector(u @ b.amplitudes, [4])
        assert abs(overlap(ua, ub)) == pytest.approx(abs(overlap(a, b)), abs=1e-12)


def test_trace_distance_cases():
    rho = random_density((3,), 1)
    assert trace_distance(rho, rho) == 0
    z0, z1 = basis_state(0, [2]).density(), basis_state(1, [2]).density()
    assert trace_distance(z0, z1) == pytest.approx(1)


def test_trace_distance_against_nuclear_norm_and_unitary_invariance():
    for seed in range(10):
        r1, r2 = random_density((4,), seed), random_density((4,), seed + 1)
        oracle = 0.5 * np.linalg.norm(r1.entries - r2.entries, "nuc")
        assert trace_distance(r1, r2) == pytest.approx(oracle, abs=1e-12)
        u = random_unitary(4, seed + 7)
        c1 = DensityMatrix(u @ r1.entries @ u.conj().T, (4,))
        c2 = DensityMatrix(u @ r2.entries @ u.conj().T, (4,))
        assert trace_distance(c1, c2) == pytest.approx(oracle, abs=1e-12)


def test_trace_distance_rejects_non_hermitian():
    bad = DensityMatrix(np.array([[0.5, 1.0], [0.0, 0.5]]), (2,))
    with pytest.raises(StateError):
        trace_distance(bad, basis_state(0, [2]).density())


def _branch(phi_l, phi_r):
    dims = (2, phi_l.dim)
    psi = (np.kron([1, 0], phi_l.amplitudes) + np.kron([0, 1], phi_r.amplitudes)) / math.sqrt(2)
    return StateVector(psi, dims)


def test_visibility_cases():
    phi = random_state([3], 0)
    assert visibility(partial_trace(_branch(phi, phi), [0])) == pytest.approx(1)
    assert visibility(partial_trace(_branch(basis_state(0, [3]), basis_state(1, [3])), [0])) == 0
    # |<L|R>| = 0.9 built explicitly
    right = StateVector(np.array([0.9, math.sqrt(1 - 0.81), 0]), [3])
    assert visibility(partial_trace(_branch(basis_state(0, [3]), right), [0])) == \
        pytest.approx(0.9, abs=1e-15)
    with pytest.raises(DimensionError):
        visibility(random_density((3,), 0))


@settings(max_examples=50, deadline=None)
@given(d=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_visibility_equals_branch_overlap(d, seed):
    a, b = random_state([d], seed), random_state([d], seed ^ 0xFFFF)
    assert visibility(partial_trace(_branch(a, b), [0])) == pytest.approx(
        abs(overlap(a, b)), abs=1e-14)


def test_density_validation():
    assert random_density((2, 2), 0).is_valid()
    assert not DensityMatrix(np.diag([1.5, -0.5]), (2,)).is_valid()
    assert not DensityMatrix(np.eye(2), (2,)).is_valid()
