"""Energy-time entropic uncertainty relations with quantum memory.

Numerical toolkit: sandwiched Renyi conditional entropies, clock states,
asymmetry measures, relation audits and the energy/time guessing game.
"""
from .asymmetry import AsymmetryResult, prop1_verify, relative_entropy_of_asymmetry, renyi_asymmetry
from .clock import (
    CqState,
    TimeEnsemble,
    Truncation,
    averaged_state,
    build_kappa,
    build_omega,
    time_averaged,
    truncate,
)
from .entropy import (
    EntropyResult,
    QuadratureSpec,
    RenyiOrder,
    conditional_renyi,
    continuous_closed_form,
    differential_conditional_entropy,
    relative_entropy,
    renyi_entropy,
    sandwiched_relative_entropy,
    shannon_entropy,
    von_neumann_entropy,
)
from .game import GameConfig, GameResult, helstrom, pretty_good_measurement, simulate
from .linalg import DensityOperator, SpectralHamiltonian, spectral_decompose
from .relations import (
    AuditReport,
    RelationId,
    audit_asymmetry,
    audit_continuous,
    audit_main,
    audit_nonuniform,
    audit_pure,
    audit_split,
    minmax_certify,
    speed_limit_check,
    toeplitz_extract,
)
from ._solvers import SolverOptions

__version__ = "0.1.0"
