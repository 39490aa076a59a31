import math

import numpy as np
import pytest

from clockbound.asymmetry import (
    check_projective,
    prop1_verify,
    relative_entropy_of_asymmetry,
    renyi_asymmetry,
)
from clockbound.clock import build_omega
from clockbound.entropy import RenyiOrder, conditional_renyi, sandwiched_relative_entropy
from clockbound.errors import NotProjectiveError
from clockbound.linalg import (
    DensityOperator,
    bloch_state,
    hamiltonian_from_energies,
    pauli_z,
    pinch,
    purify,
    random_density,
    random_pure_state,
)


def _binary(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def test_relative_entropy_of_asymmetry_examples():
    h = pauli_z()
    assert abs(relative_entropy_of_asymmetry(bloch_state(0.0), h).value) < 1e-12
    assert math.isclose(relative_entropy_of_asymmetry(bloch_state(math.pi / 2), h).value, 1.0)
    got = relative_entropy_of_asymmetry(bloch_state(math.pi / 4), h).value
    assert math.isclose(got, _binary(math.cos(math.pi / 8) ** 2), abs_tol=1e-12)
    assert math.isclose(got, 0.6009, abs_tol=1e-4)


def test_commuting_state_has_zero_asymmetry():
    h = hamiltonian_from_energies([0.0, 1.0, 2.0])
    rho = DensityOperator(np.diag([0.2, 0.5, 0.3]))
    for alpha in (0.3, 0.5, 2.0, math.inf):
        res = renyi_asymmetry(rho, h, alpha)
        assert res.value == 0.0
        assert np.allclose(res.witness_sigma.matrix, rho.matrix)


def test_renyi_asymmetry_alpha1_matches_closed_form(rng):
    rho = random_density(3, rng)
    h = hamiltonian_from_energies([0.0, 1.0, 1.0])
    a = renyi_asymmetry(rho, h, 1.0).value
    assert math.isclose(a, relative_entropy_of_asymmetry(rho, h).value, abs_tol=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 0.7, 2.0, math.inf])
def test_asymmetry_witness_commutes_and_certifies(alpha, rng):
    rho = random_density(3, rng)
    h = hamiltonian_from_energies([0.0, 0.6, 1.9])
    res = renyi_asymmetry(rho, h, alpha)
    sig = res.witness_sigma.matrix
    assert np.linalg.norm(sig @ h.matrix() - h.matrix() @ sig) < 1e-9
    assert math.isclose(sandwiched_relative_entropy(rho.matrix, sig, alpha), res.value, abs_tol=1e-8)
    # the pinched state is feasible, so it upper-bounds the minimum
    assert res.value <= sandwiched_relative_entropy(rho.matrix, pinch(rho, h).matrix, alpha) + 1e-9


def test_half_order_asymmetry_is_dual_of_min_entropy():
    # pure |+>: the energy min-entropy given a purifying memory is -S_inf dual
    rho = bloch_state(math.pi / 2)
    h = pauli_z()
    lhs = renyi_asymmetry(rho, h, 0.5).value
    omega = build_omega(purify(rho), h)
    rhs = conditional_renyi(omega, math.inf).value
    assert math.isclose(lhs, rhs, abs_tol=1e-7)


def test_asymmetry_equals_memory_entropy_for_pure_states(rng):
    psi = random_pure_state((3,), rng)
    h = hamiltonian_from_energies([0.0, 1.0, 2.2])
    omega = build_omega(purify(psi), h)
    for alpha in (0.5, 2.0, math.inf):
        a = renyi_asymmetry(psi, h, alpha).value
        b = conditional_renyi(omega, RenyiOrder(alpha).beta).value
        assert math.isclose(a, b, abs_tol=1e-6)


def test_check_projective_rejects_bad_sets():
    with pytest.raises(NotProjectiveError):
        check_projective([np.diag([1.0, 0]), np.diag([0.5, 1.0])])
    with pytest.raises(NotProjectiveError):
        check_projective([np.diag([1.0, 0])])


def test_prop1_eigenstate_and_random():
    h = pauli_z()
    psi = np.kron(np.kron([1, 0], [1, 0]), [1, 0]).astype(complex)
    state = DensityOperator(np.outer(psi, psi), (2, 2, 2))
    lhs, rhs = prop1_verify(state, h, 2.0)
    assert abs(lhs) < 1e-9 and abs(rhs) < 1e-9
    rng = np.random.default_rng(3)
    st = random_pure_state((2, 2, 2), rng)
    for alpha in (0.5, 1.0, 2.0, math.inf):
        lhs, rhs = prop1_verify(st, h, alpha)
        assert abs(lhs - rhs) < 1e-6
