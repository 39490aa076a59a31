"""Clock and energy-register states.

* ``build_omega``: energy measured on A, labels kept in a classical register E,
  memory R left with the post-measurement conditional states.
* ``build_kappa``: time label t_k in a classical register T, A evolved to t_k.
* ``averaged_state``: the uniform time average over [0, T_F], in closed form.
* ``truncate``: energy cutoff with the discarded weight moved onto a filler state.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyTruncationError,
    FillerOutsideSubspaceError,
    NotADistributionError,
)
from .linalg import (
    DensityOperator,
    SpectralHamiltonian,
    _trusted,
    as_density,
    evolve,
    hermitize,
    partial_trace,
)


@dataclass(frozen=True, eq=False)
class TimeEnsemble:
    """Times t_1 <= ... <= t_K with weights p(k), or the interval [0, T_F]."""

    kind: str
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    t_final: float = 0.0

    def __post_init__(self):
        if self.kind == "continuous":
            if not (self.t_final > 0):
                raise ValueError("continuous ensemble needs T_F > 0")
            return
        if self.kind != "discrete":
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        t = np.asarray(self.times, dtype=float).ravel()
        if t.size < 2:
            raise ValueError("a discrete ensemble needs at least two times")
        if np.any(np.diff(t) < 0):
            raise ValueError("times must be non-decreasing")
        if np.any(np.diff(t) == 0):
            warnings.warn("duplicate times in ensemble; labels stay distinct", stacklevel=3)
        w = np.full(t.size, 1.0 / t.size) if len(self.weights) == 0 else np.asarray(self.weights, float)
        if w.shape != t.shape or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-10:
            raise NotADistributionError("time weights must be a probability vector, one per time")
        t.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "t_final", float(t[-1]))

    @classmethod
    def discrete(cls, times: Sequence[float], weights: Sequence[float] | None = None) -> "TimeEnsemble":
        return cls("discrete", np.asarray(times, float), np.zeros(0) if weights is None else np.asarray(weights, float))

    @classmethod
    def equally_spaced(cls, count: int, horizon: float) -> "TimeEnsemble":
        """``count`` times k * horizon / count for k = 0..count-1 (horizon excluded)."""
        return cls.discrete(np.arange(count) * (horizon / count))

    @classmethod
    def continuous(cls, t_final: float) -> "TimeEnsemble":
        return cls("continuous", t_final=float(t_final))

    @property
    def size(self) -> int:
        return int(self.times.size)

    @property
    def is_uniform(self) -> bool:
        return bool(np.allclose(self.weights, 1.0 / self.size, rtol=0, atol=1e-14))


@dataclass(frozen=True, eq=False)
class CqState:
    """Labelled ensemble {w_j, label_j, rho_j}, equivalently sum_j w_j |j><j| (x) rho_j."""

    labels: tuple
    weights: np.ndarray
    conditionals: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        conds = tuple(np.asarray(c.matrix if isinstance(c, DensityOperator) else c, dtype=complex)
                      for c in self.conditionals)
        if len(conds) != w.size or len(self.labels) != w.size:
            raise DimensionMismatchError("labels, weights and conditionals must align")
        if len({c.shape for c in conds}) != 1:
            raise DimensionMismatchError("all conditional states must share one dimension")
        if np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-10:
            raise NotADistributionError(f"weights {w} are not a distribution")
        w = np.clip(w, 0.0, None)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "conditionals", conds)

    @classmethod
    def from_blocks(cls, labels, blocks) -> "CqState":
        """Build from unnormalized blocks w_j rho_j; zero blocks get a maximally mixed placeholder."""
        blocks = [hermitize(np.asarray(b, dtype=complex)) for b in blocks]
        d = blocks[0].shape[0]
        w = np.array([np.trace(b).real for b in blocks])
        w = np.clip(w, 0.0, None)
        w = w / w.sum()
        conds = [b / np.trace(b).real if wi > 0 else np.eye(d) / d for b, wi in zip(blocks, w)]
        return cls(tuple(labels), w, tuple(conds))

    @property
    def dim(self) -> int:
        return self.conditionals[0].shape[0]

    @property
    def size(self) -> int:
        return len(self.labels)

    def blocks(self) -> list[np.ndarray]:
        return [w * c for w, c in zip(self.weights, self.conditionals)]

    def marginal(self) -> np.ndarray:
        """Quantum marginal sum_j w_j rho_j."""
        return sum(self.blocks())

    def matrix(self) -> np.ndarray:
        n, d = self.size, self.dim
        out = np.zeros((n * d, n * d), dtype=complex)
        for j, b in enumerate(self.blocks()):
            out[j * d:(j + 1) * d, j * d:(j + 1) * d] = b
        return out

    def as_density(self) -> DensityOperator:
        return _trusted(self.matrix(), (self.size, self.dim))


def build_omega(rho_ar, h: SpectralHamiltonian, index: int = 0) -> CqState:
    """Energy register E and memory R: blocks |eps><eps| (x) Tr_A[Pi_eps rho_AR].

    ``index`` selects the subsystem of ``rho_ar`` on which H acts; all other
    subsystems form the memory (trivial memory gives dim 1).
    """
    rho = as_density(rho_ar)
    dims = rho.dims
    if dims[index] != h.dim:
        raise DimensionMismatchError(f"subsystem {index} has dim {dims[index]}, H has {h.dim}")
    lifted = h.lift(dims, index)
    rest = [i for i in range(len(dims)) if i != index]
    blocks = []
    for p in lifted.projectors:
        m = p @ rho.matrix @ p
        blocks.append(partial_trace(m, rest, dims) if rest else np.array([[np.trace(m)]]))
    return CqState.from_blocks(tuple(h.energies), blocks)


def build_kappa(rho, h: SpectralHamiltonian, ensemble: TimeEnsemble, index: int = 0) -> CqState:
    """Time register T: sum_k p(k) |t_k><t_k| (x) e^{-iHt_k} rho e^{iHt_k}.

    H acts on subsystem ``index`` of ``rho``; any other subsystems ride along
    untouched (identity Hamiltonian on them).
    """
    if ensemble.kind != "discrete":
        raise ValueError("build_kappa needs a discrete time ensemble")
    rho = as_density(rho)
    lifted = h if len(rho.dims) == 1 else h.lift(rho.dims, index)
    conds = [evolve(rho, lifted, t).matrix for t in ensemble.times]
    return CqState(tuple(range(ensemble.size)), ensemble.weights, tuple(conds))


def time_averaged(rho, h: SpectralHamiltonian, ensemble: TimeEnsemble) -> DensityOperator:
    """kappa_A = sum_k p(k) rho(t_k)."""
    return _trusted(build_kappa(rho, h, ensemble).marginal(), as_density(rho).dims)


def averaged_state(rho, h: SpectralHamiltonian, t_final: float) -> DensityOperator:
    """(1/T_F) int_0^T_F e^{-iHt} rho e^{iHt} dt.

    Block (eps, eps') is scaled by (e^{-ixT}-1)/(-ixT) with x = eps - eps',
    written as e^{-ixT/2} sinc(xT/2) to stay accurate for small x.
    """
    if not (t_final > 0):
        raise ValueError("T_F must be positive")
    rho = as_density(rho)
    if rho.dim != h.dim:
        raise DimensionMismatchError(f"state has dim {rho.dim}, Hamiltonian has dim {h.dim}")
    u, ev = h.eigenbasis()
    r = u.conj().T @ rho.matrix @ u
    x = (ev[:, None] - ev[None, :]) * t_final
    factor = np.exp(-0.5j * x) * np.sinc(x / (2 * math.pi))
    return _trusted(u @ (r * factor) @ u.conj().T, rho.dims)


@dataclass(frozen=True, eq=False)
class Truncation:
    """Energy-cutoff data: H^E and rho^E on the kept subspace, plus the embedding."""

    hamiltonian: SpectralHamiltonian
    state: DensityOperator
    isometry: np.ndarray
    tail_weight: float

    def embed(self) -> np.ndarray:
        """rho^E as an operator on the original space."""
        v = self.isometry
        return v @ self.state.matrix @ v.conj().T


def truncate(h: SpectralHamiltonian, rho, cutoff: float, filler=None) -> Truncation:
    """Keep energies <= cutoff; the discarded weight Tr[(I - Pi^E) rho] goes onto ``filler``.

    ``filler`` may be given on the full space (it must then live inside the
    kept subspace) or directly on the kept subspace. Default: the lowest-energy
    eigenvector.
    """
    rho = as_density(rho)
    if rho.dim != h.dim:
        raise DimensionMismatchError(f"state has dim {rho.dim}, Hamiltonian has dim {h.dim}")
    tol = 1e-12 * max(1.0, abs(cutoff))
    kept = [j for j, e in enumerate(h.energies) if e <= cutoff + tol]
    if not kept:
        raise EmptyTruncationError(f"no energy at or below cutoff {cutoff}")
    v = np.hstack([h.bases[j] for j in kept])
    m = v.shape[1]
    if filler is None:
        w = np.zeros((m, m), dtype=complex)
        w[0, 0] = 1.0
    else:
        f = as_density(filler).matrix
        if f.shape[0] == h.dim:
            proj = v @ v.conj().T
            if np.linalg.norm(f - proj @ f @ proj) > 1e-9:
                raise FillerOutsideSubspaceError("filler state has weight above the cutoff")
            w = v.conj().T @ f @ v
        elif f.shape[0] == m:
            w = f
        else:
            raise DimensionMismatchError(f"filler has dim {f.shape[0]}, expected {h.dim} or {m}")
    inner = v.conj().T @ rho.matrix @ v
    tail = max(0.0, 1.0 - float(np.trace(inner).real))
    bases = []
    k = 0
    for j in kept:
        r = h.bases[j].shape[1]
        bases.append(np.eye(m, dtype=complex)[:, k:k + r])
        k += r
    h_e = SpectralHamiltonian(h.energies[kept], tuple(bases), h.grouping_tol)
    rho_e = _trusted(inner + tail * w)
    return Truncation(h_e, rho_e, v, tail)
