"""Audits of the entropic energy-time uncertainty relations.

Each audit computes the two uncertainty terms independently, compares their
sum with the stated lower bound and reports the slack. Nothing is asserted
here; callers decide what slack counts as a violation (``SLACK_TOL``).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize_scalar

from ._solvers import SolverOptions
from .asymmetry import relative_entropy_of_asymmetry, renyi_asymmetry
from .clock import TimeEnsemble, averaged_state, build_kappa, build_omega
from .entropy import (
    EntropyResult,
    QuadratureSpec,
    as_order,
    conditional_renyi,
    differential_conditional_entropy,
    relative_entropy,
    renyi_entropy,
    shannon_entropy,
)
from .errors import BadLengthError, BadSubsystemSpecError, NotPureError
from .linalg import SpectralHamiltonian, as_density, partial_trace, pinch

SLACK_TOL = 1e-6
IDENTITY_TOL = 1e-8
ORTHOGONAL_FIDELITY = 1e-9


class RelationId(str, enum.Enum):
    PURE = "pure"
    MAIN = "main"
    SPLIT = "split"
    VON_NEUMANN = "von-neumann"
    ASYMMETRY = "asymmetry"
    NONUNIFORM = "nonuniform"
    CONTINUOUS = "continuous"
    SPEED_LIMIT = "speed-limit"
    MINMAX = "minmax"


@dataclass
class AuditReport:
    relation_id: RelationId
    alpha: str
    lhs_terms: dict
    rhs: float
    slack: float
    diagnostics: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def lhs(self) -> float:
        return float(sum(self.lhs_terms.values()))

    def passed(self, tol: float = SLACK_TOL) -> bool:
        return self.slack >= -tol

    def converged(self) -> bool:
        return all(d.get("converged", True) for d in self.diagnostics.values())


def _diag(r: EntropyResult, direction: str) -> dict:
    return {"method": r.method, "residual": r.residual, "converged": r.converged,
            "iterations": r.iterations, "certificate": direction}


def _report(rid, alpha_label, terms: dict, rhs: float, diagnostics=None, witnesses=None,
            extra=None) -> AuditReport:
    lhs = float(sum(terms.values()))
    return AuditReport(rid, alpha_label, {k: float(v) for k, v in terms.items()}, float(rhs),
                       lhs - float(rhs), diagnostics or {}, witnesses or {}, extra or {})


def _uniform_rhs(ensemble: TimeEnsemble) -> float:
    if ensemble.kind != "discrete":
        raise ValueError("audit needs a discrete time ensemble")
    if not ensemble.is_uniform:
        raise ValueError("non-uniform time weights: use audit_nonuniform")
    return math.log2(ensemble.size)


def _energy_index(rho, index: int) -> int:
    if index < 0 or index >= len(rho.dims):
        raise BadSubsystemSpecError(f"index {index} out of range for dims {rho.dims}")
    return index


def audit_main(rho_ar, h: SpectralHamiltonian, ensemble: TimeEnsemble, alpha,
               opts: SolverOptions | None = None, index: int = 0) -> AuditReport:
    """S_alpha(T|A)_kappa + S_beta(E|R)_omega >= log2|T| for alpha in [1/2, inf].

    ``index`` is the position of A inside ``rho_ar``; everything else is R.
    """
    opts = opts or SolverOptions()
    order = as_order(alpha)
    rho = as_density(rho_ar)
    index = _energy_index(rho, index)
    rho_a = partial_trace(rho, [index])
    rhs = _uniform_rhs(ensemble)
    t = conditional_renyi(build_kappa(rho_a, h, ensemble), order.alpha, opts=opts)
    e = conditional_renyi(build_omega(rho, h, index), order.beta, opts=opts)
    rid = RelationId.VON_NEUMANN if order.alpha == 1 else RelationId.MAIN
    return _report(rid, str(order), {"time": t.value, "energy": e.value}, rhs,
                   {"time": _diag(t, "lower"), "energy": _diag(e, "lower")},
                   {"time": t.witness, "energy": e.witness})


def audit_pure(psi_a, h: SpectralHamiltonian, ensemble: TimeEnsemble, alpha,
               opts: SolverOptions | None = None) -> AuditReport:
    """Pure clock state: the energy term is the classical S_beta of p(eps) = <psi|Pi_eps|psi>."""
    opts = opts or SolverOptions()
    order = as_order(alpha)
    psi = as_density(psi_a)
    if not psi.is_pure():
        raise NotPureError(f"state purity {psi.purity():.12f} != 1")
    rhs = _uniform_rhs(ensemble)
    p = np.array([np.trace(pr @ psi.matrix).real for pr in h.projectors])
    p = np.clip(p, 0.0, None)
    energy = renyi_entropy(p / p.sum(), order.beta)
    t = conditional_renyi(build_kappa(psi, h, ensemble), order.alpha, opts=opts)
    return _report(RelationId.PURE, str(order), {"time": t.value, "energy": energy}, rhs,
                   {"time": _diag(t, "lower")}, {"time": t.witness})


def audit_split(rho_ar1r2, h: SpectralHamiltonian, ensemble: TimeEnsemble, alpha,
                opts: SolverOptions | None = None, parts: tuple = (0, 1, 2)) -> AuditReport:
    """S_alpha(T|A R1) + S_beta(E|R2) >= log2|T|, with the clock built on rho_{A R1}.

    ``parts`` gives the subsystem indices of (A, R1, R2).
    """
    opts = opts or SolverOptions()
    order = as_order(alpha)
    rho = as_density(rho_ar1r2)
    a, r1, r2 = parts
    if len(rho.dims) != 3 or sorted(parts) != [0, 1, 2]:
        raise BadSubsystemSpecError(f"need three subsystems (A, R1, R2), got dims {rho.dims}")
    rhs = _uniform_rhs(ensemble)
    rho_ar1 = partial_trace(rho, [a, r1])
    a_in_ar1 = 0 if a < r1 else 1
    kappa = build_kappa(rho_ar1, h, ensemble, index=a_in_ar1)
    t = conditional_renyi(kappa, order.alpha, opts=opts)
    rho_ar2 = partial_trace(rho, [a, r2])
    e = conditional_renyi(build_omega(rho_ar2, h, 0 if a < r2 else 1), order.beta, opts=opts)
    return _report(RelationId.SPLIT, str(order), {"time": t.value, "energy": e.value}, rhs,
                   {"time": _diag(t, "lower"), "energy": _diag(e, "lower")})


def audit_asymmetry(rho_a, h: SpectralHamiltonian, ensemble: TimeEnsemble, alpha,
                    opts: SolverOptions | None = None) -> AuditReport:
    """S_alpha(T|A)_kappa + inf_{[H,sigma]=0} D_alpha(rho || sigma) >= log2|T|, alpha in (0, inf]."""
    opts = opts or SolverOptions()
    order = as_order(alpha)
    rho = as_density(rho_a)
    rhs = _uniform_rhs(ensemble)
    t = conditional_renyi(build_kappa(rho, h, ensemble), order.alpha, opts=opts)
    g = renyi_asymmetry(rho, h, order.alpha, opts)
    return _report(RelationId.ASYMMETRY, str(order), {"time": t.value, "asymmetry": g.value}, rhs,
                   {"time": _diag(t, "lower"),
                    "asymmetry": {"method": g.method, "residual": g.residual,
                                  "converged": g.converged, "certificate": "upper"}},
                   {"time": t.witness, "asymmetry": g.witness_sigma})


def audit_nonuniform(rho_ar, h: SpectralHamiltonian, ensemble: TimeEnsemble,
                     index: int = 0) -> AuditReport:
    """Von Neumann relation with weights p(k) and its exact defect.

    lhs = S(E|R) + S(T|A), rhs = S(T); the identity lhs - rhs = D(kappa_A || Delta(rho_A))
    holds for pure rho_AR, so ``extra["identity_error"]`` should vanish.
    """
    rho = as_density(rho_ar)
    if not rho.is_pure():
        raise NotPureError(f"state purity {rho.purity():.12f} != 1")
    index = _energy_index(rho, index)
    rho_a = partial_trace(rho, [index])
    kappa = build_kappa(rho_a, h, ensemble)
    t = conditional_renyi(kappa, 1.0)
    e = conditional_renyi(build_omega(rho, h, index), 1.0)
    rhs = shannon_entropy(ensemble.weights)
    residual = relative_entropy(kappa.marginal(), pinch(rho_a, h).matrix)
    rep = _report(RelationId.NONUNIFORM, "1", {"time": t.value, "energy": e.value}, rhs,
                  {"time": _diag(t, "exact"), "energy": _diag(e, "exact")})
    err = rep.slack - residual
    rep.extra = {"residual": residual, "identity_error": err,
                 "equality_condition": residual <= IDENTITY_TOL}
    return rep


def audit_continuous(rho_a, h: SpectralHamiltonian, t_final: float,
                     quad: QuadratureSpec | None = None) -> AuditReport:
    """inf_{[H,sigma]=0} D(rho || sigma) + s(T|A) >= log2 T_F over the interval [0, T_F]."""
    rho = as_density(rho_a)
    g = relative_entropy_of_asymmetry(rho, h)
    q = differential_conditional_entropy(rho, h, t_final, averaged_state(rho, h, t_final), quad)
    rhs = math.log2(t_final)
    rep = _report(RelationId.CONTINUOUS, "1", {"asymmetry": g.value, "time": q.value}, rhs,
                  {"time": {"method": "quadrature", "residual": q.error_estimate,
                            "converged": True, "nodes": q.nodes}})
    rep.extra = {"dimensionless_rhs": math.log2(t_final) - q.value}
    return rep


# ------------------------------------------------------------ speed limits


@dataclass
class SpeedLimitReport:
    k: int
    entropy_bits: dict
    min_pairwise_fidelity: float
    orthogonalizing_t: float | None
    contrapositive_holds: bool
    delta_e: float
    mt_bound_tau: float

    @property
    def found(self) -> bool:
        return self.orthogonalizing_t is not None


def default_horizon(h: SpectralHamiltonian, max_den: int = 64) -> float:
    """One common period of all energy gaps if they are commensurate, else 8 * 2pi / (min gap)."""
    e = h.energies
    if e.size < 2:
        return 2 * math.pi
    gaps = np.diff(e)
    base = float(gaps.min())
    den = 1
    for g in gaps:
        fr = Fraction(float(g) / base).limit_denominator(max_den)
        if abs(float(fr) - g / base) > 1e-9 * max(1.0, g / base):
            return 8 * 2 * math.pi / base
        den = den * fr.denominator // math.gcd(den, fr.denominator)
    # every gap is an integer multiple of base/den
    return 2 * math.pi * den / base


def _fidelity_curve(rho: np.ndarray, h: SpectralHamiltonian):
    """t -> F(rho, e^{-iHt} rho e^{iHt}) vectorized over t (squared fidelity)."""
    u, ev = h.eigenbasis()
    r = u.conj().T @ rho @ u
    w, v = np.linalg.eigh(0.5 * (r + r.conj().T))
    s = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T

    def f(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        ph = np.exp(-1j * np.outer(t, ev))
        m = s[None, :, :] * ph[:, None, :] @ s[None, :, :]
        nuc = np.linalg.svd(m, compute_uv=False).sum(axis=-1)
        return np.minimum(1.0, nuc ** 2)

    return f


def speed_limit_check(rho_ar, h: SpectralHamiltonian, k: int = 2, t_grid=None,
                      opts: SolverOptions | None = None, index: int = 0,
                      grid_points: int = 4096) -> SpeedLimitReport:
    """Look for K mutually orthogonal states rho(0), rho(t), ..., rho((K-1)t).

    If such a family exists the time is perfectly readable, so the energy
    uncertainty must reach log2 K for every beta in [1/2, inf]. The report
    states whether that implication held on this instance.
    """
    if k < 2:
        raise ValueError("K must be at least 2")
    opts = opts or SolverOptions()
    rho = as_density(rho_ar)
    rho_a = partial_trace(rho, [index])
    omega = build_omega(rho, h, index)
    ent = {str(as_order(b)): conditional_renyi(omega, b, opts=opts).value for b in (0.5, 1.0, math.inf)}
    if t_grid is None:
        t_grid = np.linspace(0.0, default_horizon(h), grid_points + 1)[1:]
    t_grid = np.asarray(t_grid, dtype=float)
    curve = _fidelity_curve(rho_a.matrix, h)

    def family_fid(t):
        t = np.atleast_1d(t)
        return np.max([curve(m * t) for m in range(1, k)], axis=0)

    vals = family_fid(t_grid)
    best_t, best_f = float(t_grid[np.argmin(vals)]), float(vals.min())
    # refine every local minimum that comes close enough to matter
    step = float(np.min(np.diff(t_grid))) if t_grid.size > 1 else 1e-3
    cand = [i for i in range(t_grid.size)
            if vals[i] <= vals[max(i - 1, 0)] and vals[i] <= vals[min(i + 1, t_grid.size - 1)]
            and vals[i] < 1e-2]
    cand = sorted(cand, key=lambda i: vals[i])[:32]
    found = None
    for i in cand:
        lo, hi = max(t_grid[i] - step, 1e-12), t_grid[i] + step
        res = minimize_scalar(lambda x: float(family_fid(x)[0]), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-13})
        if res.fun < best_f:
            best_t, best_f = float(res.x), float(res.fun)
        if res.fun < ORTHOGONAL_FIDELITY and (found is None or res.x < found):
            found = float(res.x)
    if found is None and best_f < ORTHOGONAL_FIDELITY:
        found = best_t
    holds = True
    if found is not None:
        holds = all(v >= math.log2(k) - SLACK_TOL for v in ent.values())
    hm = h.matrix()
    m1 = np.trace(rho_a.matrix @ hm).real
    m2 = np.trace(rho_a.matrix @ hm @ hm).real
    delta_e = math.sqrt(max(0.0, m2 - m1 * m1))
    tau = math.pi / (2 * delta_e) if delta_e > 0 else math.inf
    return SpeedLimitReport(k, ent, best_f, found, holds, delta_e, tau)


# --------------------------------------------------------- min/max entropy


@dataclass
class MinMaxReport:
    measured: str
    s_max_measured: float
    s_min_bound: float
    s_min_actual: float
    copies: int
    extractable_bits: int


def extractable_length(s_min_bits: float, eps: float) -> int:
    """Leftover-hash output length max(0, floor(s_min - 2 log2(1/eps)))."""
    if not (0 < eps < 1):
        raise ValueError("eps must lie in (0, 1)")
    # a hair of slack so that e.g. 63.99999999997 does not floor to 63
    return max(0, math.floor(s_min_bits - 2 * math.log2(1 / eps) + 1e-9))


def minmax_certify(rho_ar, h: SpectralHamiltonian, ensemble: TimeEnsemble, measured: str = "time",
                   eps: float = 2 ** -10, copies: int = 1, opts: SolverOptions | None = None,
                   index: int = 0) -> MinMaxReport:
    """Bound the min-entropy of one variable by log2|T| minus the max-entropy of the other.

    ``measured`` names the variable whose max-entropy is evaluated; the other
    one is the extraction source. ``copies`` independent uses add up.
    """
    opts = opts or SolverOptions()
    rho = as_density(rho_ar)
    rho_a = partial_trace(rho, [index])
    rhs = _uniform_rhs(ensemble)
    kappa = build_kappa(rho_a, h, ensemble)
    omega = build_omega(rho, h, index)
    if measured == "time":
        s_max = conditional_renyi(kappa, 0.5, opts=opts).value
        s_min = conditional_renyi(omega, math.inf, opts=opts).value
    elif measured == "energy":
        s_max = conditional_renyi(omega, 0.5, opts=opts).value
        s_min = conditional_renyi(kappa, math.inf, opts=opts).value
    else:
        raise ValueError(f"measured must be 'time' or 'energy', got {measured!r}")
    bound = max(0.0, rhs - s_max)
    return MinMaxReport(measured, s_max, bound, s_min, copies,
                        extractable_length(copies * bound, eps))


def toeplitz_extract(raw_bits: str, out_len: int, seed: str) -> str:
    """Multiply ``raw_bits`` by the Toeplitz matrix T[i, j] = seed[i - j + n - 1] over GF(2)."""
    n = len(raw_bits)
    if set(raw_bits) - {"0", "1"} or set(seed) - {"0", "1"}:
        raise BadLengthError("bit strings may only contain 0 and 1")
    if out_len < 0 or out_len > n:
        raise BadLengthError(f"out_len {out_len} must lie in [0, {n}]")
    if out_len == 0:
        return ""
    if len(seed) != n + out_len - 1:
        raise BadLengthError(f"seed must have {n + out_len - 1} bits, got {len(seed)}")
    r = np.frombuffer(raw_bits.encode(), dtype=np.uint8) - ord("0")
    s = np.frombuffer(seed.encode(), dtype=np.uint8) - ord("0")
    full = np.convolve(s.astype(np.int64), r.astype(np.int64))
    out = full[n - 1:n - 1 + out_len] % 2
    return "".join(map(str, out.tolist()))


def with_seed(opts: SolverOptions | None, seed: int) -> SolverOptions:
    return replace(opts or SolverOptions(), seed=seed)
