import math
import warnings

import numpy as np
import pytest
from scipy.integrate import trapezoid

from clockbound.clock import (
    CqState,
    TimeEnsemble,
    averaged_state,
    build_kappa,
    build_omega,
    time_averaged,
    truncate,
)
from clockbound.entropy import conditional_renyi, shannon_entropy
from clockbound.errors import EmptyTruncationError, FillerOutsideSubspaceError
from clockbound.linalg import (
    DensityOperator,
    bloch_state,
    evolve,
    hamiltonian_from_energies,
    ket_to_density,
    pauli_z,
    pinch,
    random_density,
    random_pure_state,
    spectral_decompose,
)


def test_equally_spaced_times():
    ens = TimeEnsemble.equally_spaced(4, 2.0)
    assert np.allclose(ens.times, [0, 0.5, 1.0, 1.5])
    assert ens.is_uniform


def test_duplicate_times_warn():
    with pytest.warns(UserWarning):
        TimeEnsemble.discrete([0.0, 1.0, 1.0])


def test_omega_weights_for_eigenstate_and_plus():
    h = pauli_z()
    om = build_omega(bloch_state(0.0), h)
    assert sorted(om.weights) == [0.0, 1.0]
    om = build_omega(bloch_state(math.pi / 2), h)
    assert np.allclose(om.weights, [0.5, 0.5])


def test_omega_weights_match_projector_expectations(rng):
    psi = random_pure_state((2, 2), rng)
    h = pauli_z()
    om = build_omega(psi, h)
    lifted = [np.kron(p, np.eye(2)) for p in h.projectors]
    oracle = [np.trace(p @ psi.matrix).real for p in lifted]
    assert np.allclose(om.weights, oracle)


def test_kappa_stationary_is_product():
    h = hamiltonian_from_energies([0.0, 1.0])
    rho = DensityOperator(np.diag([0.3, 0.7]))
    k = build_kappa(rho, h, TimeEnsemble.discrete([0.0, 1.3]))
    assert all(np.allclose(c, rho.matrix) for c in k.conditionals)
    assert math.isclose(conditional_renyi(k, 1.0).value, 1.0, abs_tol=1e-12)


def test_kappa_plus_state_is_perfect_clock():
    k = build_kappa(bloch_state(math.pi / 2), pauli_z(), TimeEnsemble.discrete([0.0, math.pi / 2]))
    minus = ket_to_density(np.array([1, -1]) / np.sqrt(2)).matrix
    assert np.allclose(k.conditionals[1], minus)
    assert abs(conditional_renyi(k, 1.0).value) < 1e-12


def test_kappa_weighted_label_entropy():
    ens = TimeEnsemble.discrete([0.0, 1.0], [0.9, 0.1])
    k = build_kappa(bloch_state(1.0), pauli_z(), ens)
    assert math.isclose(shannon_entropy(k.weights), 0.4690, abs_tol=1e-4)


def test_time_averaged_is_mixture(rng):
    rho = random_density(3, rng)
    h = hamiltonian_from_energies([0.0, 0.4, 1.7])
    ens = TimeEnsemble.discrete([0.0, 0.5, 2.0])
    oracle = sum(evolve(rho, h, t).matrix for t in ens.times) / 3
    assert np.allclose(time_averaged(rho, h, ens).matrix, oracle)


def test_averaged_state_closed_form_vs_quadrature(rng):
    rho = random_density(3, rng)
    h = hamiltonian_from_energies([0.0, 0.8, 2.1])
    tf = 1.7
    ts = np.linspace(0, tf, 10_001)
    stack = np.array([evolve(rho, h, t).matrix for t in ts])
    oracle = trapezoid(stack, ts, axis=0) / tf
    assert np.allclose(averaged_state(rho, h, tf).matrix, oracle, atol=1e-6)


def test_averaged_state_examples():
    plus = bloch_state(math.pi / 2)
    assert np.allclose(averaged_state(plus, pauli_z(), math.pi).matrix, np.eye(2) / 2, atol=1e-12)
    # long horizons approach the pinched state
    h = hamiltonian_from_energies([0.0, 1.0])
    assert np.allclose(averaged_state(plus, h, 1e4).matrix, pinch(plus, h).matrix, atol=1e-3)


def test_cq_state_blocks_and_marginal():
    cq = CqState.from_blocks(("a", "b"), [np.diag([0.25, 0]), np.diag([0, 0.75])])
    assert np.allclose(cq.weights, [0.25, 0.75])
    assert np.allclose(cq.marginal(), np.diag([0.25, 0.75]))
    assert cq.matrix().shape == (4, 4)


def test_truncation_example():
    h = hamiltonian_from_energies([0.0, 1.0, 2.0])
    tr = truncate(h, np.eye(3) / 3, 1.0, filler=np.diag([1.0, 0, 0]))
    assert np.allclose(tr.state.matrix, np.diag([2 / 3, 1 / 3]))
    assert math.isclose(tr.tail_weight, 1 / 3)


def test_truncation_above_max_is_identity(rng):
    h = spectral_decompose(np.diag([0.0, 1.0, 3.0]))
    rho = random_density(3, rng)
    tr = truncate(h, rho, 3.0)
    assert tr.tail_weight < 1e-15
    assert np.allclose(tr.embed(), rho.matrix)


def test_truncation_errors():
    h = hamiltonian_from_energies([0.0, 1.0, 2.0])
    with pytest.raises(EmptyTruncationError):
        truncate(h, np.eye(3) / 3, -1.0)
    with pytest.raises(FillerOutsideSubspaceError):
        truncate(h, np.eye(3) / 3, 1.0, filler=np.diag([0, 0, 1.0]))


def test_geometric_tail_distance_is_twice_the_tail():
    levels = 10
    p = 0.5 ** np.arange(levels)
    p /= p.sum()
    rho = DensityOperator(np.diag(p))
    h = hamiltonian_from_energies(np.arange(levels, dtype=float))
    dists = []
    for c in (2, 4, 6, 8):
        tr = truncate(h, rho, c)
        dists.append(np.abs(np.linalg.eigvalsh(tr.embed() - rho.matrix)).sum())
        assert math.isclose(dists[-1], 2 * p[c + 1:].sum(), rel_tol=1e-10)
    assert all(b < a for a, b in zip(dists, dists[1:]))
