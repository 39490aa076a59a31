"""Dense Hermitian linear algebra on small quantum systems.

Density operators carry their tensor-product structure (``dims``) so that
partial traces and subsystem permutations can be checked. Hamiltonians are
stored in grouped spectral form: distinct energies plus orthonormal bases of
the corresponding eigenspaces.

All logarithms elsewhere in the package are base 2 and hbar = 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadSubsystemSpecError,
    DimensionMismatchError,
    NotADensityOperatorError,
    NotHermitianError,
    NotPSDError,
)

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
DEFAULT_GROUPING_TOL = 1e-9


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, DensityOperator):
        return x.matrix
    m = np.asarray(x, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    return m


def check_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if np.max(np.abs(m - m.conj().T), initial=0.0) > tol * scale:
        raise NotHermitianError("matrix is not Hermitian within tolerance")


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Positive semidefinite, unit-trace matrix with a tensor-product structure.

    Eigenvalues in ``[-1e-10, 0)`` are treated as round-off: they are clamped to
    zero and the state is renormalized. Anything more negative is rejected.
    """

    matrix: np.ndarray
    dims: tuple = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise NotADensityOperatorError(f"expected a square matrix, got shape {m.shape}")
        dims = (m.shape[0],) if self.dims is None else tuple(int(d) for d in self.dims)
        if any(d < 1 for d in dims) or int(np.prod(dims)) != m.shape[0]:
            raise BadSubsystemSpecError(f"subsystem dims {dims} do not multiply to {m.shape[0]}")
        check_hermitian(m)
        m = hermitize(m)
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise NotADensityOperatorError(f"trace is {tr!r}, expected 1")
        w, v = np.linalg.eigh(m)
        if w[0] < -PSD_TOL:
            raise NotPSDError(f"smallest eigenvalue {w[0]:.3e} is negative")
        if w[0] < 0:
            w = np.clip(w, 0.0, None)
            m = (v * w) @ v.conj().T
        m = m / np.trace(m).real
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigvalsh(self) -> np.ndarray:
        return np.clip(np.linalg.eigvalsh(self.matrix), 0.0, None)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def is_pure(self, tol: float = 1e-9) -> bool:
        return abs(self.purity() - 1.0) <= tol

    def with_dims(self, dims: Sequence[int]) -> "DensityOperator":
        return _trusted(self.matrix, dims)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


def _trusted(matrix: np.ndarray, dims: Sequence[int] | None = None) -> DensityOperator:
    """Build a DensityOperator from an internally produced matrix, skipping validation."""
    m = np.array(hermitize(np.asarray(matrix, dtype=complex)))
    if dims is None:
        dims = (m.shape[0],)
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != m.shape[0]:
        raise BadSubsystemSpecError(f"subsystem dims {dims} do not multiply to {m.shape[0]}")
    m.setflags(write=False)
    obj = object.__new__(DensityOperator)
    object.__setattr__(obj, "matrix", m)
    object.__setattr__(obj, "dims", dims)
    return obj


def as_density(x, dims: Sequence[int] | None = None) -> DensityOperator:
    if isinstance(x, DensityOperator):
        return x if dims is None else x.with_dims(dims)
    return DensityOperator(np.asarray(x, dtype=complex), dims)


def ket_to_density(psi, dims: Sequence[int] | None = None) -> DensityOperator:
    psi = np.asarray(psi, dtype=complex).ravel()
    n = np.linalg.norm(psi)
    if n == 0:
        raise NotADensityOperatorError("zero vector is not a state")
    psi = psi / n
    return _trusted(np.outer(psi, psi.conj()), dims)


def bloch_state(theta: float, phi: float = 0.0) -> DensityOperator:
    """Pure qubit state cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>."""
    return ket_to_density([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def maximally_mixed(d: int) -> DensityOperator:
    return _trusted(np.eye(d) / d)


@dataclass(frozen=True, eq=False)
class SpectralHamiltonian:
    """Hermitian operator stored as distinct energies and eigenspace bases.

    ``bases[j]`` is a ``dim x r_j`` isometry whose columns span the eigenspace
    of ``energies[j]``; the projector is ``bases[j] @ bases[j].conj().T``.
    """

    energies: np.ndarray
    bases: tuple
    grouping_tol: float = DEFAULT_GROUPING_TOL
    projectors: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        bases = tuple(np.asarray(b, dtype=complex) for b in self.bases)
        if len(bases) != e.size or e.size == 0:
            raise DimensionMismatchError("need one eigenspace basis per energy")
        if np.any(np.diff(e) <= 0):
            raise ValueError("energies must be distinct and ascending")
        e.setflags(write=False)
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "projectors", tuple(b @ b.conj().T for b in bases))

    @property
    def dim(self) -> int:
        return self.bases[0].shape[0]

    @property
    def ranks(self) -> tuple:
        return tuple(b.shape[1] for b in self.bases)

    def matrix(self) -> np.ndarray:
        return sum(e * p for e, p in zip(self.energies, self.projectors))

    def eigenbasis(self) -> tuple[np.ndarray, np.ndarray]:
        """Full unitary of eigenvectors (grouped by energy) and the matching eigenvalue list."""
        u = np.hstack(self.bases)
        ev = np.repeat(self.energies, self.ranks)
        return u, ev

    def unitary(self, t: float) -> np.ndarray:
        return sum(np.exp(-1j * e * t) * p for e, p in zip(self.energies, self.projectors))

    def lift(self, dims: Sequence[int], index: int = 0) -> "SpectralHamiltonian":
        """The same energies acting on subsystem ``index`` of a composite with ``dims``."""
        dims = tuple(dims)
        if dims[index] != self.dim:
            raise DimensionMismatchError(f"subsystem {index} has dim {dims[index]}, H has {self.dim}")
        before = int(np.prod(dims[:index]))
        after = int(np.prod(dims[index + 1:]))
        bases = tuple(np.kron(np.kron(np.eye(before), b), np.eye(after)) for b in self.bases)
        return SpectralHamiltonian(self.energies, bases, self.grouping_tol)


def spectral_decompose(m, grouping_tol: float = DEFAULT_GROUPING_TOL) -> SpectralHamiltonian:
    """Group the spectrum of a Hermitian matrix into (energy, eigenspace) pairs.

    Consecutive eigenvalues closer than ``grouping_tol * max(1, max|eps|)`` are
    merged; the merged energy is their mean.
    """
    if grouping_tol <= 0:
        raise ValueError("grouping_tol must be positive")
    m = _as_matrix(m)
    check_hermitian(m)
    w, v = np.linalg.eigh(hermitize(m))
    scale = grouping_tol * max(1.0, float(np.max(np.abs(w))))
    groups = [[0]]
    for i in range(1, w.size):
        if w[i] - w[groups[-1][-1]] <= scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    energies = np.array([w[g].mean() for g in groups])
    bases = tuple(v[:, g] for g in groups)
    return SpectralHamiltonian(energies, bases, grouping_tol)


def hamiltonian_from_energies(energies: Sequence[float]) -> SpectralHamiltonian:
    """Diagonal Hamiltonian in the computational basis."""
    return spectral_decompose(np.diag(np.asarray(energies, dtype=float)))


def pauli_z(scale: float = 1.0) -> SpectralHamiltonian:
    return hamiltonian_from_energies([scale, -scale])


def _check_same_dim(rho: DensityOperator, h: SpectralHamiltonian) -> None:
    if rho.dim != h.dim:
        raise DimensionMismatchError(f"state has dim {rho.dim}, Hamiltonian has dim {h.dim}")


def evolve(rho, h: SpectralHamiltonian, t: float) -> DensityOperator:
    """exp(-iHt) rho exp(iHt)."""
    rho = as_density(rho)
    _check_same_dim(rho, h)
    u = h.unitary(t)
    return _trusted(u @ rho.matrix @ u.conj().T, rho.dims)


def pinch(rho, h: SpectralHamiltonian) -> DensityOperator:
    """Dephase in the energy eigenbasis: sum over eps of P_eps rho P_eps."""
    rho = as_density(rho)
    _check_same_dim(rho, h)
    out = sum(p @ rho.matrix @ p for p in h.projectors)
    return _trusted(out, rho.dims)


def commutator_norm(a, h: SpectralHamiltonian) -> float:
    a = _as_matrix(a)
    hm = h.matrix()
    return float(np.linalg.norm(a @ hm - hm @ a, 2))


def tensor(*ops):
    """Kronecker product. DensityOperators keep (concatenated) subsystem dims."""
    if all(isinstance(o, DensityOperator) for o in ops):
        m = reduce(np.kron, [o.matrix for o in ops])
        return _trusted(m, sum((o.dims for o in ops), ()))
    return reduce(np.kron, [_as_matrix(o) for o in ops])


def _check_subsystems(dims: tuple, indices: Iterable[int]) -> list[int]:
    idx = sorted(set(int(i) for i in indices))
    if any(i < 0 or i >= len(dims) for i in idx):
        raise BadSubsystemSpecError(f"subsystem indices {idx} out of range for dims {dims}")
    return idx


def partial_trace(rho, keep: Iterable[int], dims: Sequence[int] | None = None):
    """Trace out every subsystem not listed in ``keep``.

    Accepts a DensityOperator (dims taken from it) or a raw matrix plus ``dims``;
    returns the same kind.
    """
    is_state = isinstance(rho, DensityOperator)
    m = rho.matrix if is_state else _as_matrix(rho)
    dims = tuple(rho.dims if is_state and dims is None else dims or (m.shape[0],))
    if int(np.prod(dims)) != m.shape[0]:
        raise BadSubsystemSpecError(f"dims {dims} do not match matrix of size {m.shape[0]}")
    keep = _check_subsystems(dims, keep)
    n = len(dims)
    t = m.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # einsum labels: row indices 0..n-1, column indices n..2n-1; traced pairs share a label
    row = list(range(n))
    col = [i if i in traced else n + i for i in range(n)]
    out_labels = keep + [n + i for i in keep]
    out = np.einsum(t, row + col, out_labels)
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    out = out.reshape(d, d)
    if is_state:
        return _trusted(out, tuple(dims[i] for i in keep) or (1,))
    return out


def permute_subsystems(rho, order: Sequence[int]) -> DensityOperator:
    rho = as_density(rho)
    dims = rho.dims
    order = list(order)
    if sorted(order) != list(range(len(dims))):
        raise BadSubsystemSpecError(f"{order} is not a permutation of subsystems {dims}")
    n = len(dims)
    t = rho.matrix.reshape(dims + dims).transpose(order + [n + i for i in order])
    new_dims = tuple(dims[i] for i in order)
    return _trusted(t.reshape(rho.dim, rho.dim), new_dims)


def purify(rho) -> DensityOperator:
    """Pure state on ``d x d`` whose first marginal is ``rho``.

    Uses the spectral decomposition: sum_i sqrt(lambda_i) |v_i>|i>.
    """
    rho = as_density(rho)
    w, v = np.linalg.eigh(rho.matrix)
    w = np.clip(w, 0.0, None)
    d = rho.dim
    psi = np.zeros(d * d, dtype=complex)
    for i in range(d):
        psi += np.sqrt(w[i]) * np.kron(v[:, i], np.eye(d)[i])
    return ket_to_density(psi, (d, d))


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(hermitize(m))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def fidelity(rho, sigma) -> float:
    """Squared Uhlmann fidelity (Tr|sqrt(rho) sqrt(sigma)|)^2."""
    a, b = _as_matrix(rho), _as_matrix(sigma)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shapes {a.shape} and {b.shape} differ")
    s = np.linalg.svd(psd_sqrt(a) @ psd_sqrt(b), compute_uv=False)
    return float(min(1.0, np.sum(s) ** 2))


def trace_norm(m) -> float:
    m = _as_matrix(m)
    return float(np.sum(np.abs(np.linalg.eigvalsh(hermitize(m)))))


def trace_distance(rho, sigma) -> float:
    a, b = _as_matrix(rho), _as_matrix(sigma)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shapes {a.shape} and {b.shape} differ")
    return 0.5 * trace_norm(a - b)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return hermitize(z)


def random_pure_state(dims: Sequence[int], rng: np.random.Generator) -> DensityOperator:
    d = int(np.prod(dims))
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return ket_to_density(psi, dims)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    m = g @ g.conj().T
    return _trusted(m / np.trace(m).real)
