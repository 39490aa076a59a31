"""Classical and quantum entropies in bits.

Sandwiched Renyi relative entropy
    D_alpha(xi || zeta) = 1/(alpha-1) log2 Tr[(zeta^{(1-alpha)/2alpha} xi zeta^{(1-alpha)/2alpha})^alpha]
and the optimized conditional entropy
    S_alpha(A|B) = -inf_sigma D_alpha(rho_AB || I_A (x) sigma_B).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._solvers import Family, SolverOptions, minimize_any
from .clock import CqState
from .errors import (
    DimensionMismatchError,
    NotADistributionError,
    NotPSDError,
    QuadratureNotConvergedError,
)
from .linalg import (
    DensityOperator,
    SpectralHamiltonian,
    _as_matrix,
    _trusted,
    as_density,
    check_hermitian,
    hermitize,
    partial_trace,
    permute_subsystems,
)

LN2 = math.log(2.0)
SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class RenyiOrder:
    """A Renyi order alpha in (0, inf]; ``beta`` is its conjugate, 1/alpha + 1/beta = 2."""

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not (a > 0):
            raise ValueError(f"Renyi order must lie in (0, inf], got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @classmethod
    def parse(cls, text) -> "RenyiOrder":
        if isinstance(text, RenyiOrder):
            return text
        if isinstance(text, str) and text.strip().lower() in ("inf", "infinity", "oo", "max"):
            return cls(math.inf)
        return cls(float(text))

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.alpha)

    @property
    def beta(self) -> float:
        a = self.alpha
        if math.isinf(a):
            return 0.5
        if a == 0.5:
            return math.inf
        if a < 0.5:
            raise ValueError(f"alpha = {a} < 1/2 has no conjugate order in (0, inf]")
        return a / (2.0 * a - 1.0)

    def conjugate(self) -> "RenyiOrder":
        return RenyiOrder(self.beta)

    def __str__(self) -> str:
        return "inf" if self.is_inf else f"{self.alpha:g}"


def as_order(alpha) -> RenyiOrder:
    return RenyiOrder.parse(alpha)


@dataclass
class EntropyResult:
    value: float
    witness: DensityOperator | None = None
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True
    method: str = "closed-form"

    def __float__(self) -> float:
        return float(self.value)


# ---------------------------------------------------------------- classical


def check_distribution(p, tol: float = 1e-10) -> np.ndarray:
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0 or np.any(p < -tol) or abs(p.sum() - 1.0) > tol:
        raise NotADistributionError(f"not a probability vector: {p}")
    return np.clip(p, 0.0, None)


def renyi_entropy(p, alpha) -> float:
    """Renyi entropy of a probability vector, in bits."""
    p = check_distribution(p)
    a = 0.0 if isinstance(alpha, (int, float)) and alpha == 0 else as_order(alpha).alpha
    q = p[p > 0]
    if a == 0:
        return math.log2(q.size)
    if a == 1:
        return float(-np.sum(q * np.log2(q)))
    if math.isinf(a):
        return float(-math.log2(q.max()))
    logs = a * np.log(q)
    return float(np.logaddexp.reduce(logs) / ((1.0 - a) * LN2))


def shannon_entropy(p) -> float:
    return renyi_entropy(p, 1.0)


# ------------------------------------------------------------------ quantum


def von_neumann_entropy(rho) -> float:
    w = np.linalg.eigvalsh(hermitize(_as_matrix(rho)))
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log2(w)))


def _support_split(m: np.ndarray):
    """Eigen-decomposition with a relative support cutoff."""
    w, v = np.linalg.eigh(hermitize(m))
    scale = max(float(np.max(np.abs(w))), 1e-300)
    if w[0] < -1e-9 * scale:
        raise NotPSDError(f"operator has eigenvalue {w[0]:.3e}")
    keep = w > SUPPORT_TOL * scale
    return w[keep], v[:, keep]


def log2m(m: np.ndarray) -> np.ndarray:
    """Support-restricted matrix log2 (zero on the kernel)."""
    w, v = _support_split(m)
    return (v * np.log2(w)) @ v.conj().T


def sandwiched_relative_entropy(xi, zeta, alpha) -> float:
    """D_alpha(xi || zeta) in bits; +inf when the support condition fails.

    ``zeta`` may be any PSD matrix (not necessarily normalized).
    """
    a = as_order(alpha).alpha
    x = _as_matrix(xi)
    z = _as_matrix(zeta)
    if x.shape != z.shape:
        raise DimensionMismatchError(f"shapes {x.shape} and {z.shape} differ")
    check_hermitian(z, 1e-9)
    xw, xv = _support_split(x)
    zw, zv = _support_split(z)
    r = xv * np.sqrt(xw)  # xi = r r^dag
    # component of xi outside supp(zeta)
    outside = r - zv @ (zv.conj().T @ r)
    leak = float(np.linalg.norm(outside)) ** 2 / max(float(xw.sum()), 1e-300)
    contained = leak <= 1e-10
    if a >= 1 and not contained:
        return math.inf
    if a == 1:
        lz = (zv * np.log2(zw)) @ zv.conj().T
        val = float(np.sum(xw * np.log2(xw))) - float(np.real(np.trace(x @ lz)))
        return val
    rz = zv.conj().T @ r  # xi restricted to supp(zeta)
    if math.isinf(a):
        m = (rz.conj().T * zw ** -1.0) @ rz
        lam = float(np.max(np.linalg.eigvalsh(hermitize(m))))
        return math.log2(lam)
    p = 1.0 / a - 1.0
    m = (rz.conj().T * zw ** p) @ rz
    ev = np.linalg.eigvalsh(hermitize(m))
    ev = ev[ev > 1e-300]
    if ev.size == 0:
        return math.inf
    logq = float(np.logaddexp.reduce(a * np.log(ev)))
    return logq / ((a - 1.0) * LN2)


def relative_entropy(xi, zeta) -> float:
    return sandwiched_relative_entropy(xi, zeta, 1.0)


# ----------------------------------------------------- conditional entropies


def _classical_result(p, a: float) -> EntropyResult:
    return EntropyResult(renyi_entropy(p, a), None, 0, 0.0, True, "classical")


def _wrap_minimum(m, witness: DensityOperator | None) -> EntropyResult:
    return EntropyResult(-m.value, witness, m.iterations, m.residual, m.converged, m.method)


def _cq_conditional(state: CqState, a: float, opts: SolverOptions) -> EntropyResult:
    weights = np.asarray(state.weights, dtype=float)
    if state.dim == 1:
        return _classical_result(weights, a)
    if a == 1:
        avg = state.marginal()
        val = shannon_entropy(weights) + sum(
            w * von_neumann_entropy(c) for w, c in zip(weights, state.conditionals) if w > 0
        ) - von_neumann_entropy(avg)
        return EntropyResult(val, _trusted(avg), 0, 0.0, True, "closed-form")
    blocks = [b for w, b in zip(weights, state.blocks()) if w > 1e-15]
    fam = Family("cq", blocks, [state.dim])
    m = minimize_any(fam, a, opts)
    return _wrap_minimum(m, _trusted(m.sigma_blocks[0]))


def conditional_renyi(state, alpha, conditioning: Sequence[int] | int = (1,),
                      opts: SolverOptions | None = None) -> EntropyResult:
    """S_alpha(A|B) = -inf_sigma D_alpha(rho_AB || I_A (x) sigma_B), in bits.

    ``state`` is a DensityOperator with subsystem dims (``conditioning`` lists
    the B subsystems, the rest form A) or a CqState, in which case the entropy
    of the classical label conditioned on the quantum part is returned.
    """
    opts = opts or SolverOptions()
    a = as_order(alpha).alpha
    if isinstance(state, CqState):
        return _cq_conditional(state, a, opts)
    rho = as_density(state)
    dims = rho.dims
    cond = [conditioning] if isinstance(conditioning, int) else list(conditioning)
    cond = sorted(set(cond))
    rest = [i for i in range(len(dims)) if i not in cond]
    d_b = int(np.prod([dims[i] for i in cond])) if cond else 1
    d_a = rho.dim // d_b
    if d_b == 1:
        return _classical_result(rho.eigvalsh() / rho.eigvalsh().sum(), a)
    ordered = permute_subsystems(rho, rest + cond).with_dims((d_a, d_b))
    if a == 1:
        rb = partial_trace(ordered, [1])
        val = von_neumann_entropy(ordered) - von_neumann_entropy(rb)
        return EntropyResult(val, rb, 0, 0.0, True, "closed-form")
    if d_a == 1:
        return EntropyResult(0.0, _trusted(ordered.matrix), 0, 0.0, True, "trivial")
    fam = Family("kron", [ordered.matrix], [d_b], outer=d_a)
    m = minimize_any(fam, a, opts)
    return _wrap_minimum(m, _trusted(m.sigma_blocks[0]))


def conditional_value_at(state, sigma, alpha, conditioning=(1,)) -> float:
    """-D_alpha(rho_AB || I_A (x) sigma): an explicit bound S_alpha(A|B) >= this value."""
    a = as_order(alpha).alpha
    s = _as_matrix(sigma)
    if isinstance(state, CqState):
        blocks = state.blocks()
        big = np.zeros((len(blocks) * state.dim,) * 2, dtype=complex)
        d = state.dim
        for j, b in enumerate(blocks):
            big[j * d:(j + 1) * d, j * d:(j + 1) * d] = b
        return -sandwiched_relative_entropy(big, np.kron(np.eye(len(blocks)), s), a)
    rho = as_density(state)
    cond = [conditioning] if isinstance(conditioning, int) else sorted(set(conditioning))
    rest = [i for i in range(len(rho.dims)) if i not in cond]
    ordered = permute_subsystems(rho, rest + cond)
    d_a = rho.dim // s.shape[0]
    return -sandwiched_relative_entropy(ordered.matrix, np.kron(np.eye(d_a), s), a)


# ----------------------------------------------------- continuous time


@dataclass
class QuadratureSpec:
    nodes: int = 129
    tol: float = 1e-6
    max_nodes: int = 2 ** 15


@dataclass
class QuadratureResult:
    value: float
    nodes: int
    error_estimate: float
    history: list = field(default_factory=list)


def _trace_curve(rho: np.ndarray, h: SpectralHamiltonian, op: np.ndarray) -> Callable:
    """t -> Tr[e^{-iHt} rho e^{iHt} op], vectorized over t."""
    u, ev = h.eigenbasis()
    r = u.conj().T @ rho @ u
    o = u.conj().T @ op @ u
    coef = (r * o.T).ravel()
    gaps = (ev[:, None] - ev[None, :]).ravel()
    keep = np.abs(coef) > 0

    def f(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.real(np.exp(-1j * np.outer(t, gaps[keep])) @ coef[keep])

    return f


def differential_conditional_entropy(rho, h: SpectralHamiltonian, t_final: float,
                                     rho_avg=None, quad: QuadratureSpec | None = None
                                     ) -> QuadratureResult:
    """s(T|A) = -int_0^T_F dt D(rho(t)/T_F || rho_avg) by refined trapezoid quadrature.

    Uses D(p rho || sigma) = p D(rho || sigma) + p log2 p pointwise. The
    trapezoid estimates on 2^k panels are combined by one Richardson step and
    the node count is doubled until successive estimates agree to ``quad.tol``.
    """
    from .clock import averaged_state

    quad = quad or QuadratureSpec()
    if t_final <= 0:
        raise ValueError("T_F must be positive")
    rho = as_density(rho)
    avg = averaged_state(rho, h, t_final) if rho_avg is None else as_density(rho_avg)
    s_rho = von_neumann_entropy(rho)
    w, v = _support_split(avg.matrix)
    curve = _trace_curve(rho.matrix, h, (v * np.log2(w)) @ v.conj().T)
    p = 1.0 / t_final

    def integrand(t):
        d = -s_rho - curve(t)  # D(rho(t) || rho_avg)
        return p * d + p * math.log2(p)

    n = max(3, quad.nodes)
    panels = n - 1
    ts = np.linspace(0.0, t_final, panels + 1)
    vals = integrand(ts)
    trap = t_final / panels * (vals.sum() - 0.5 * (vals[0] + vals[-1]))
    prev_rich = None
    history = []
    while True:
        mids = ts[:-1] + 0.5 * np.diff(ts)
        mvals = integrand(mids)
        new_ts = np.empty(2 * panels + 1)
        new_ts[0::2] = ts
        new_ts[1::2] = mids
        new_vals = np.empty_like(new_ts)
        new_vals[0::2] = vals
        new_vals[1::2] = mvals
        panels *= 2
        new_trap = t_final / panels * (new_vals.sum() - 0.5 * (new_vals[0] + new_vals[-1]))
        rich = new_trap + (new_trap - trap) / 3.0
        history.append(-rich)
        err = abs(rich - prev_rich) if prev_rich is not None else abs(new_trap - trap)
        if err < quad.tol and prev_rich is not None:
            return QuadratureResult(-rich, panels + 1, err, history)
        if panels + 1 > quad.max_nodes:
            raise QuadratureNotConvergedError(
                f"quadrature did not reach tol {quad.tol} within {quad.max_nodes} nodes (last change {err:.2e})"
            )
        ts, vals, trap, prev_rich = new_ts, new_vals, new_trap, rich


def continuous_closed_form(rho, h: SpectralHamiltonian, t_final: float) -> float:
    """log2 T_F - (S(rho_avg) - S(rho)): the time integral done analytically."""
    from .clock import averaged_state

    avg = averaged_state(rho, h, t_final)
    return math.log2(t_final) - (von_neumann_entropy(avg) - von_neumann_entropy(rho))
