import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clockbound.errors import (
    BadSubsystemSpecError,
    NotADensityOperatorError,
    NotHermitianError,
    NotPSDError,
)
from clockbound.linalg import (
    DensityOperator,
    bloch_state,
    evolve,
    fidelity,
    hamiltonian_from_energies,
    ket_to_density,
    partial_trace,
    pauli_z,
    permute_subsystems,
    pinch,
    purify,
    random_density,
    random_hermitian,
    random_pure_state,
    spectral_decompose,
    tensor,
    trace_distance,
)


def test_density_validation():
    with pytest.raises(NotHermitianError):
        DensityOperator(np.array([[0.5, 1.0], [0.0, 0.5]]))
    with pytest.raises(NotADensityOperatorError):
        DensityOperator(np.eye(2))
    with pytest.raises(NotPSDError):
        DensityOperator(np.diag([1.5, -0.5]))
    with pytest.raises(BadSubsystemSpecError):
        DensityOperator(np.eye(4) / 4, dims=(2, 3))


def test_roundoff_negative_eigenvalue_is_clamped():
    rho = DensityOperator(np.diag([1.0 + 5e-11, -5e-11]))
    assert rho.eigvalsh().min() >= 0
    assert math.isclose(np.trace(rho.matrix).real, 1.0, abs_tol=1e-15)


def test_degenerate_grouping():
    h = spectral_decompose(np.diag([0.0, 1.0, 1.0 + 1e-13, 2.0]))
    assert h.ranks == (1, 2, 1)
    assert np.allclose(sum(h.projectors), np.eye(4))
    assert np.allclose(h.matrix(), np.diag([0.0, 1.0, 1.0, 2.0]), atol=1e-12)


def test_partial_trace_of_product(rng):
    a = random_density(2, rng)
    b = random_density(3, rng)
    ab = DensityOperator(tensor(a.matrix, b.matrix), (2, 3))
    assert np.allclose(partial_trace(ab, [0]).matrix, a.matrix)
    assert np.allclose(partial_trace(ab, [1]).matrix, b.matrix)
    with pytest.raises(BadSubsystemSpecError):
        partial_trace(ab, [2])


def test_partial_trace_of_bell_is_mixed():
    bell = ket_to_density(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))
    assert np.allclose(partial_trace(bell, [1]).matrix, np.eye(2) / 2)


def test_permute_and_purify(rng):
    rho = random_density(3, rng)
    psi = purify(rho)
    assert psi.is_pure()
    assert np.allclose(partial_trace(psi, [0]).matrix, rho.matrix)
    swapped = permute_subsystems(psi, [1, 0])
    assert np.allclose(partial_trace(swapped, [1]).matrix, rho.matrix)


def test_evolution_and_pinching():
    h = pauli_z()
    plus = bloch_state(math.pi / 2)
    # e^{-i sigma_z pi/2} |+> = |->
    minus = evolve(plus, h, math.pi / 2)
    assert fidelity(plus, minus) < 1e-12
    assert np.allclose(pinch(plus, h).matrix, np.eye(2) / 2)


def test_trace_distance_and_fidelity_orthogonal():
    zero, one = bloch_state(0.0), bloch_state(math.pi)
    assert math.isclose(trace_distance(zero, one), 1.0)
    assert fidelity(zero, one) < 1e-15


def test_hamiltonian_from_energies_orders_levels():
    h = hamiltonian_from_energies([2.0, 0.0, 1.0])
    assert list(h.energies) == [0.0, 1.0, 2.0]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 4), st.integers(1, 3))
def test_partial_trace_is_trace_preserving(seed, da, db):
    rho = random_pure_state((da, db), np.random.default_rng(seed))
    a = partial_trace(rho, [0])
    b = partial_trace(rho, [1])
    assert math.isclose(np.trace(a.matrix).real, 1.0, abs_tol=1e-12)
    # Schmidt: both marginals of a pure state share their nonzero spectrum
    wa = np.sort(a.eigvalsh())[::-1][:min(da, db)]
    wb = np.sort(b.eigvalsh())[::-1][:min(da, db)]
    assert np.allclose(wa, wb, atol=1e-10)


def test_spectral_decompose_random(rng):
    m = random_hermitian(4, rng)
    h = spectral_decompose(m)
    assert np.allclose(h.matrix(), m, atol=1e-12)
