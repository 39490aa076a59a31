"""Asymmetry of a state with respect to time translations generated by H.

The infimum of D_alpha(rho || sigma) over states sigma commuting with H is
taken over block-diagonal sigma, one independently parameterized block per
energy eigenspace, so the commutation constraint holds exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._solvers import Family, SolverOptions, minimize_any
from .clock import CqState
from .entropy import as_order, conditional_renyi, von_neumann_entropy
from .errors import DimensionMismatchError, NotProjectiveError, NotPureError
from .linalg import (
    DensityOperator,
    SpectralHamiltonian,
    _trusted,
    as_density,
    commutator_norm,
    partial_trace,
    pinch,
)


@dataclass
class AsymmetryResult:
    value: float
    witness_sigma: DensityOperator
    method: str
    residual: float = 0.0
    converged: bool = True

    def __float__(self) -> float:
        return float(self.value)


def relative_entropy_of_asymmetry(rho, h: SpectralHamiltonian) -> AsymmetryResult:
    """Gamma_H(rho) = S(Delta(rho)) - S(rho), witnessed by Delta(rho)."""
    rho = as_density(rho)
    dephased = pinch(rho, h)
    value = max(0.0, von_neumann_entropy(dephased) - von_neumann_entropy(rho))
    return AsymmetryResult(value, dephased, "closed-form")


def _block_minimum(rho: DensityOperator, bases: Sequence[np.ndarray], alpha: float,
                   opts: SolverOptions):
    """inf D_alpha(rho || sigma) over sigma block diagonal in the given orthonormal bases."""
    u = np.hstack(bases)
    rotated = u.conj().T @ rho.matrix @ u
    fam = Family("blocks", [rotated], [b.shape[1] for b in bases])
    m = minimize_any(fam, alpha, opts)
    sigma = np.zeros_like(rotated)
    k = 0
    for blk in m.sigma_blocks:
        n = blk.shape[0]
        sigma[k:k + n, k:k + n] = blk
        k += n
    witness = _trusted(u @ sigma @ u.conj().T, rho.dims)
    return m, witness


def renyi_asymmetry(rho, h: SpectralHamiltonian, alpha, opts: SolverOptions | None = None
                    ) -> AsymmetryResult:
    """inf over sigma with [H, sigma] = 0 of D_alpha(rho || sigma)."""
    opts = opts or SolverOptions()
    a = as_order(alpha).alpha
    rho = as_density(rho)
    if rho.dim != h.dim:
        raise DimensionMismatchError(f"state has dim {rho.dim}, Hamiltonian has dim {h.dim}")
    if commutator_norm(rho, h) <= 1e-12:
        return AsymmetryResult(0.0, rho, "closed-form")
    if a == 1:
        return relative_entropy_of_asymmetry(rho, h)
    m, witness = _block_minimum(rho, h.bases, a, opts)
    return AsymmetryResult(max(0.0, m.value), witness, "block-optimized", m.residual, m.converged)


def check_projective(projectors: Sequence[np.ndarray], tol: float = 1e-9) -> list[np.ndarray]:
    ps = [np.asarray(p, dtype=complex) for p in projectors]
    d = ps[0].shape[0]
    if any(p.shape != (d, d) for p in ps):
        raise NotProjectiveError("projectors differ in shape")
    if np.linalg.norm(sum(ps) - np.eye(d)) > tol:
        raise NotProjectiveError("projectors do not sum to the identity")
    for i, p in enumerate(ps):
        if np.linalg.norm(p @ p - p) > tol or np.linalg.norm(p - p.conj().T) > tol:
            raise NotProjectiveError(f"element {i} is not an orthogonal projector")
        for q in ps[i + 1:]:
            if np.linalg.norm(p @ q) > tol:
                raise NotProjectiveError("projectors are not mutually orthogonal")
    return ps


def _range_basis(p: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (p + p.conj().T))
    return v[:, w > 0.5]


def prop1_verify(psi_abc, projectors, alpha, opts: SolverOptions | None = None
                 ) -> tuple[float, float]:
    """Both sides of the asymmetry / conditional-entropy duality for a pure psi_ABC.

    lhs = inf_{sigma_AB} D_alpha(psi_AB || sum_j Pi^j sigma_AB Pi^j)
    rhs = S_beta(Z|C) for omega_ZC = sum_j |j><j| (x) Tr_AB[Pi^j psi_ABC]

    ``projectors`` is a list of projectors on A or a SpectralHamiltonian whose
    eigenprojectors are used. Nothing is asserted; callers compare the sides.
    """
    opts = opts or SolverOptions()
    order = as_order(alpha)
    psi = as_density(psi_abc)
    if not psi.is_pure():
        raise NotPureError(f"state purity {psi.purity():.12f} != 1")
    if len(psi.dims) != 3:
        raise DimensionMismatchError(f"need a tripartite state, got dims {psi.dims}")
    d_a, d_b, d_c = psi.dims
    ps = list(projectors.projectors) if isinstance(projectors, SpectralHamiltonian) else list(projectors)
    ps = check_projective(ps)
    if ps[0].shape[0] != d_a:
        raise DimensionMismatchError(f"projectors act on dim {ps[0].shape[0]}, A has dim {d_a}")

    psi_ab = partial_trace(psi, [0, 1])
    big = [np.kron(p, np.eye(d_b)) for p in ps]
    if order.alpha == 1:
        dephased = sum(p @ psi_ab.matrix @ p for p in big)
        lhs = von_neumann_entropy(dephased) - von_neumann_entropy(psi_ab)
    else:
        bases = [_range_basis(p) for p in big]
        bases = [b for b in bases if b.shape[1] > 0]
        lhs = _block_minimum(psi_ab, bases, order.alpha, opts)[0].value

    lifted = [np.kron(p, np.eye(d_b * d_c)) for p in ps]
    blocks = [partial_trace(p @ psi.matrix @ p, [2], psi.dims) for p in lifted]
    omega = CqState.from_blocks(tuple(range(len(ps))), blocks)
    rhs = conditional_renyi(omega, order.beta, opts=opts).value
    return float(lhs), float(rhs)
