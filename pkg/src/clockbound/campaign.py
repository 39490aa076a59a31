"""Random audit campaigns.

Instance ``i`` of a campaign with seed ``s`` draws everything from
``numpy.random.default_rng([s, i])`` so that instances are reproducible one by
one and can be evaluated in any order or in parallel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._solvers import SolverOptions
from .clock import TimeEnsemble
from .linalg import DensityOperator, SpectralHamiltonian, random_hermitian, random_pure_state, spectral_decompose
from .relations import AuditReport, audit_main

CAMPAIGN_ALPHAS = ("0.5", "0.7", "1", "2", "10", "inf")


@dataclass
class Instance:
    index: int
    rho_ar: DensityOperator
    hamiltonian: SpectralHamiltonian
    ensemble: TimeEnsemble

    def describe(self) -> str:
        dims = "x".join(str(d) for d in self.rho_ar.dims)
        return f"dims={dims} K={self.ensemble.size}"


def random_instance(seed: int, index: int, max_a: int = 4, max_r: int = 4) -> Instance:
    """d_A in 2..max_a, d_R in 1..max_r, |T| in {2,3,4}, random H and pure rho_AR."""
    rng = np.random.default_rng([seed, index])
    d_a = int(rng.integers(2, max_a + 1))
    d_r = int(rng.integers(1, max_r + 1))
    k = int(rng.integers(2, 5))
    h = spectral_decompose(random_hermitian(d_a, rng))
    dims = (d_a, d_r) if d_r > 1 else (d_a,)
    rho = random_pure_state(dims, rng)
    times = np.sort(rng.uniform(0.0, 2 * math.pi, size=k))
    return Instance(index, rho, h, TimeEnsemble.discrete(times))


def audit_instance(args) -> list[AuditReport]:
    """Worker: (seed, index, alpha labels, solver seed) -> one report per alpha."""
    seed, index, alphas, solver_seed = args
    inst = random_instance(seed, index)
    opts = SolverOptions(seed=solver_seed)
    return [audit_main(inst.rho_ar, inst.hamiltonian, inst.ensemble, a, opts) for a in alphas]
