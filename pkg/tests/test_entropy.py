import itertools
import math

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.linalg import expm, logm

from clockbound._solvers import Family, SolverOptions, min_half_divergence
from clockbound.entropy import (
    QuadratureSpec,
    RenyiOrder,
    conditional_renyi,
    conditional_value_at,
    continuous_closed_form,
    differential_conditional_entropy,
    relative_entropy,
    renyi_entropy,
    sandwiched_relative_entropy,
    shannon_entropy,
    von_neumann_entropy,
)
from clockbound.errors import NotADistributionError, QuadratureNotConvergedError
from clockbound.linalg import (
    DensityOperator,
    bloch_state,
    hamiltonian_from_energies,
    ket_to_density,
    partial_trace,
    pauli_z,
    random_density,
    random_pure_state,
    tensor,
)

ALPHAS = [0.5, 0.7, 2.0, 10.0, math.inf]


# -------------------------------------------------------------- orders


def test_conjugate_orders():
    assert RenyiOrder(1.0).beta == 1.0
    assert RenyiOrder(0.5).beta == math.inf
    assert RenyiOrder(math.inf).beta == 0.5
    assert math.isclose(RenyiOrder(2.0).beta, 2 / 3)
    with pytest.raises(ValueError):
        RenyiOrder(0.3).beta
    with pytest.raises(ValueError):
        RenyiOrder(0.0)
    assert str(RenyiOrder.parse("inf")) == "inf"


# ----------------------------------------------------------- classical


@pytest.mark.parametrize("alpha", [0, 0.5, 1, 2, math.inf])
def test_uniform_and_deterministic(alpha):
    assert math.isclose(renyi_entropy([0.25] * 4, alpha), 2.0)
    assert renyi_entropy([1.0, 0.0], alpha) == 0.0


def test_collision_entropy_value():
    assert math.isclose(renyi_entropy([0.75, 0.25], 2), -math.log2(10 / 16), rel_tol=1e-12)
    assert math.isclose(renyi_entropy([0.75, 0.25], 2), 0.6781, abs_tol=1e-4)


def test_renyi_is_nonincreasing_in_alpha(rng):
    p = rng.dirichlet(np.ones(6))
    vals = [renyi_entropy(p, a) for a in (0, 0.3, 0.5, 0.999, 1, 1.001, 2, 10, math.inf)]
    assert all(x >= y - 1e-12 for x, y in zip(vals, vals[1:]))
    assert math.isclose(vals[3], shannon_entropy(p), abs_tol=1e-3)


def test_bad_distribution():
    with pytest.raises(NotADistributionError):
        renyi_entropy([0.5, 0.6], 2)


# ------------------------------------------------------------- divergences


@pytest.mark.parametrize("alpha", [0.5, 0.9, 1.0, 2.0, 5.0, math.inf])
def test_divergence_pure_vs_mixed(alpha):
    assert math.isclose(sandwiched_relative_entropy(np.diag([1.0, 0]), np.eye(2) / 2, alpha), 1.0,
                        abs_tol=1e-12)


def test_divergence_commuting_alpha2():
    val = sandwiched_relative_entropy(np.diag([0.5, 0.5]), np.diag([0.25, 0.75]), 2)
    assert math.isclose(val, math.log2(4 / 3), rel_tol=1e-12)


def test_divergence_support_violation():
    assert sandwiched_relative_entropy(np.eye(2) / 2, np.diag([1.0, 0]), 2) == math.inf
    assert sandwiched_relative_entropy(np.eye(2) / 2, np.diag([1.0, 0]), 1) == math.inf
    # below one the value is finite
    assert math.isfinite(sandwiched_relative_entropy(np.eye(2) / 2, np.diag([1.0, 0]), 0.7))


def test_relative_entropy_matches_logm(rng):
    a, b = random_density(3, rng).matrix, random_density(3, rng).matrix
    oracle = np.trace(a @ (logm(a) - logm(b))).real / math.log(2)
    assert math.isclose(relative_entropy(a, b), oracle, abs_tol=1e-10)


def test_sandwiched_matches_direct_formula(rng):
    a, b = random_density(3, rng).matrix, random_density(3, rng).matrix
    for alpha in (0.6, 1.5, 3.0):
        g = (1 - alpha) / (2 * alpha)
        bg = expm(g * logm(b))
        inner = bg @ a @ bg
        w = np.linalg.eigvalsh(inner)
        oracle = math.log2(np.sum(w ** alpha)) / (alpha - 1)
        assert math.isclose(sandwiched_relative_entropy(a, b, alpha), oracle, abs_tol=1e-10)


def test_divergence_monotone_in_alpha(rng):
    a, b = random_density(3, rng).matrix, random_density(3, rng).matrix
    vals = [sandwiched_relative_entropy(a, b, x) for x in (0.5, 0.8, 1.0, 1.5, 3.0, 20.0, math.inf)]
    assert all(x <= y + 1e-10 for x, y in zip(vals, vals[1:]))


# ------------------------------------------------------- conditional


def test_product_state_conditional(rng):
    ra, rb = random_density(2, rng), random_density(3, rng)
    prod = DensityOperator(tensor(ra.matrix, rb.matrix), (2, 3))
    for alpha in (0.5, 2.0, math.inf):
        got = conditional_renyi(prod, alpha).value
        assert math.isclose(got, renyi_entropy(ra.eigvalsh(), alpha), abs_tol=1e-7)


def test_bell_state_is_minus_one():
    bell = ket_to_density(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))
    for alpha in (0.5, 1.0, 2.0, math.inf):
        assert math.isclose(conditional_renyi(bell, alpha).value, -1.0, abs_tol=1e-7)


def test_correlated_classical_state_against_grid():
    rho = DensityOperator(np.diag([0.5, 0, 0, 0.5]), (2, 2))
    for alpha in (0.7, 2.0, math.inf):
        got = conditional_renyi(rho, alpha).value
        grid = max(conditional_value_at(rho, np.diag([q, 1 - q]), alpha)
                   for q in np.linspace(0.001, 0.999, 999))
        assert got >= grid - 1e-9
        assert math.isclose(got, 0.0, abs_tol=1e-7)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_optimum_beats_random_sigmas(alpha, rng):
    rho = random_density(6, rng).with_dims((2, 3))
    got = conditional_renyi(rho, alpha).value
    for _ in range(20):
        sigma = random_density(3, rng).matrix
        assert got >= conditional_value_at(rho, sigma, alpha) - 1e-9


def test_witness_certifies_value(rng):
    rho = random_density(6, rng).with_dims((3, 2))
    for alpha in (0.5, 2.0, math.inf):
        res = conditional_renyi(rho, alpha)
        assert res.converged
        cert = conditional_value_at(rho, res.witness.matrix, alpha)
        assert math.isclose(cert, res.value, abs_tol=1e-8)


def test_half_order_agrees_with_fidelity_sdp(rng):
    rho = random_density(4, rng).with_dims((2, 2))
    got = conditional_renyi(rho, 0.5).value
    fam = Family("kron", [rho.matrix], [2], outer=2)
    oracle = -min_half_divergence(fam, SolverOptions()).value
    assert math.isclose(got, oracle, abs_tol=1e-6)


def test_duality_on_pure_tripartite(rng):
    for _ in range(3):
        psi = random_pure_state((2, 2, 2), rng)
        rho_ab = partial_trace(psi, [0, 1])
        rho_ac = partial_trace(psi, [0, 2])
        for alpha in (0.5, 0.7, 2.0, math.inf):
            beta = RenyiOrder(alpha).beta
            s = conditional_renyi(rho_ab, alpha).value + conditional_renyi(rho_ac, beta).value
            assert abs(s) < 1e-6


def test_conditioning_on_first_subsystem(rng):
    psi = random_pure_state((2, 3), rng)
    # S(R|A) for a pure state equals -S(A)
    a = partial_trace(psi, [0])
    assert math.isclose(conditional_renyi(psi, 1.0, conditioning=0).value,
                        -von_neumann_entropy(a), abs_tol=1e-10)


# ------------------------------------------------------- continuous time


def test_stationary_continuous_entropy():
    h = hamiltonian_from_energies([0.0, 1.0, 2.5])
    rho = DensityOperator(np.diag([0.5, 0.3, 0.2]))
    for tf in (0.5, 1.0, 2.0, 8.0):
        got = differential_conditional_entropy(rho, h, tf).value
        assert math.isclose(got, math.log2(tf), abs_tol=1e-9)


def test_continuous_entropy_against_dense_trapezoid():
    rho = bloch_state(math.pi / 2)
    h = pauli_z()
    tf = 2.0
    got = differential_conditional_entropy(rho, h, tf).value
    from clockbound.clock import averaged_state
    from clockbound.linalg import evolve

    avg = averaged_state(rho, h, tf).matrix
    ts = np.linspace(0, tf, 10_001)
    vals = [-relative_entropy(evolve(rho, h, t).matrix / tf, avg) for t in ts]
    oracle = trapezoid(vals, ts)
    assert math.isclose(got, oracle, abs_tol=1e-5)
    assert math.isclose(got, continuous_closed_form(rho, h, tf), abs_tol=1e-8)


def test_quadrature_budget_error():
    rho = bloch_state(1.0)
    h = hamiltonian_from_energies([0.0, 400.0])
    with pytest.raises(QuadratureNotConvergedError):
        differential_conditional_entropy(rho, h, 3.0, quad=QuadratureSpec(nodes=9, tol=1e-14, max_nodes=257))
