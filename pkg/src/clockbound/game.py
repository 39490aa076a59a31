"""Monte Carlo simulation of the energy/time guessing game.

Bob prepares rho_AR, hands A to Alice and keeps R. Alice flips a fair coin:
either she measures the energy of A (Bob must guess eps, helped by R), or she
evolves A for a time t_k drawn from the ensemble and returns it (Bob must
guess k from the evolved A). In the alternative ordering Alice draws and
applies the evolution before flipping the coin; the win statistics agree.

Random numbers: trial ``i`` consumes the four 64-bit words
``Philox(key=seed).advance(i).random_raw(4)`` (equivalently words 4i..4i+3 of
the stream keyed by ``seed``), mapped to uniforms as (x >> 11) * 2**-53. Trials
are therefore independent of execution order and of each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .clock import CqState, TimeEnsemble, build_kappa, build_omega
from .errors import DimensionMismatchError, InvalidStrategyError
from .linalg import SpectralHamiltonian, _as_matrix, as_density, hermitize, partial_trace

WORDS_PER_TRIAL = 4


@dataclass
class GameConfig:
    rho_ar: object
    hamiltonian: SpectralHamiltonian
    ensemble: TimeEnsemble
    trials: int = 10_000
    rng_seed: int = 0
    variant: str = "figure1"
    strategy: object = "helstrom"
    index: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.variant not in ("figure1", "appendixA"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if isinstance(self.strategy, str):
            if self.strategy not in ("helstrom", "pgm"):
                raise InvalidStrategyError(f"unknown strategy {self.strategy!r}")
            if self.strategy == "helstrom" and self.ensemble.size != 2:
                raise InvalidStrategyError("helstrom strategy needs exactly two times")


@dataclass
class GameResult:
    time_branch_wins: int
    energy_branch_wins: int
    time_trials: int
    energy_trials: int
    empirical_p_win: float
    predicted_p_win: float
    std_error: float
    predicted_time: float
    predicted_energy: float

    @property
    def time_rate(self) -> float:
        return self.time_branch_wins / self.time_trials if self.time_trials else math.nan

    @property
    def time_std_error(self) -> float:
        n = self.time_trials
        p = self.time_rate
        return math.sqrt(max(p * (1 - p), 1.0 / n) / n) if n else math.nan

    @property
    def energy_rate(self) -> float:
        return self.energy_branch_wins / self.energy_trials if self.energy_trials else math.nan


def helstrom(rho0, rho1, prior: float = 0.5):
    """Optimal two-state discrimination: p = 1/2 + 1/2 ||prior rho0 - (1-prior) rho1||_1."""
    if not (0.0 <= prior <= 1.0):
        raise ValueError("prior must lie in [0, 1]")
    a, b = _as_matrix(rho0), _as_matrix(rho1)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shapes {a.shape} and {b.shape} differ")
    gamma = hermitize(prior * a - (1.0 - prior) * b)
    w, v = np.linalg.eigh(gamma)
    pos = v[:, w > 0]
    m0 = pos @ pos.conj().T
    m1 = np.eye(a.shape[0]) - m0
    p = 0.5 + 0.5 * float(np.sum(np.abs(w)))
    return min(1.0, p), [m0, m1]


def pretty_good_measurement(ensemble: CqState):
    """Square-root measurement rho_avg^{-1/2} w_k rho_k rho_avg^{-1/2}.

    The projector onto the kernel of rho_avg is added to the first element so
    the elements sum to the identity.
    """
    blocks = ensemble.blocks()
    avg = hermitize(ensemble.marginal())
    w, v = np.linalg.eigh(avg)
    keep = w > 1e-12 * max(w.max(), 1e-300)
    inv_sqrt = (v[:, keep] / np.sqrt(w[keep])) @ v[:, keep].conj().T
    povm = [hermitize(inv_sqrt @ b @ inv_sqrt) for b in blocks]
    kernel = v[:, ~keep]
    povm[0] = povm[0] + kernel @ kernel.conj().T
    p = float(sum(np.trace(m @ b).real for m, b in zip(povm, blocks)))
    return min(1.0, p), povm


def _success(povm: Sequence[np.ndarray], states: Sequence[np.ndarray]) -> np.ndarray:
    """Matrix P[true, guess] = Tr[M_guess rho_true], rows clipped and renormalized."""
    p = np.array([[np.trace(m @ s).real for m in povm] for s in states])
    p = np.clip(p, 0.0, None)
    return p / p.sum(axis=1, keepdims=True)


def _time_povm(kappa: CqState, strategy):
    if not isinstance(strategy, str):
        povm = [np.asarray(m, dtype=complex) for m in strategy]
        if len(povm) != kappa.size:
            raise InvalidStrategyError(f"custom POVM needs {kappa.size} elements, got {len(povm)}")
        if np.linalg.norm(sum(povm) - np.eye(kappa.dim)) > 1e-8:
            raise InvalidStrategyError("custom POVM elements do not sum to the identity")
        if any(np.linalg.eigvalsh(hermitize(m))[0] < -1e-10 for m in povm):
            raise InvalidStrategyError("custom POVM has a non-positive element")
        return povm
    if strategy == "helstrom":
        return helstrom(kappa.conditionals[0], kappa.conditionals[1], float(kappa.weights[0]))[1]
    return pretty_good_measurement(kappa)[1]


def _energy_povm(omega: CqState):
    """Bob's guess of eps from R: argmax p(eps) if R is trivial, else Helstrom / PGM."""
    n = omega.size
    if omega.dim == 1:
        best = int(np.argmax(omega.weights))  # argmax keeps the lowest index on ties
        return [np.eye(1) if j == best else np.zeros((1, 1)) for j in range(n)]
    if n == 1:
        return [np.eye(omega.dim)]
    if n == 2:
        return helstrom(omega.conditionals[0], omega.conditionals[1], float(omega.weights[0]))[1]
    return pretty_good_measurement(omega)[1]


def trial_uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Uniforms for trials start..start+count-1, shape (count, 4)."""
    bg = np.random.Philox(key=int(seed) % 2 ** 64)
    bg.advance(start)
    raw = bg.random_raw(WORDS_PER_TRIAL * count).astype(np.uint64)
    return ((raw >> np.uint64(11)).astype(np.float64) * 2.0 ** -53).reshape(count, WORDS_PER_TRIAL)


def _pick(cdf_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Row-wise inverse CDF sampling: index of the first cdf entry exceeding u."""
    idx = (u[:, None] >= cdf_rows).sum(axis=1)
    return np.minimum(idx, cdf_rows.shape[1] - 1)


def simulate(config: GameConfig, chunk: int = 1 << 16) -> GameResult:
    rho = as_density(config.rho_ar)
    h = config.hamiltonian
    rho_a = partial_trace(rho, [config.index])
    kappa = build_kappa(rho_a, h, config.ensemble)
    omega = build_omega(rho, h, config.index)
    p_time = _success(_time_povm(kappa, config.strategy), kappa.conditionals)
    p_energy = _success(_energy_povm(omega), omega.conditionals)
    w_t = np.asarray(kappa.weights)
    w_e = np.asarray(omega.weights)
    pred_t = float(np.sum(w_t * np.diag(p_time)))
    pred_e = float(np.sum(w_e * np.diag(p_energy)))

    cdf_t = np.cumsum(w_t)
    cdf_e = np.cumsum(w_e)
    cdf_pt = np.cumsum(p_time, axis=1)
    cdf_pe = np.cumsum(p_energy, axis=1)
    t_wins = e_wins = t_n = 0
    for start in range(0, config.trials, chunk):
        n = min(chunk, config.trials - start)
        u = trial_uniforms(config.rng_seed, start, n)
        if config.variant == "figure1":
            coin, label_u = u[:, 0], u[:, 1]
        else:
            # the evolution time is drawn first, then the coin
            label_u, coin = u[:, 0], u[:, 1]
        time_branch = coin < 0.5
        k = _pick(np.broadcast_to(cdf_t, (n, cdf_t.size)), label_u)
        eps = _pick(np.broadcast_to(cdf_e, (n, cdf_e.size)), label_u)
        guess_t = _pick(cdf_pt[k], u[:, 2])
        guess_e = _pick(cdf_pe[eps], u[:, 2])
        t_wins += int(np.sum(time_branch & (guess_t == k)))
        e_wins += int(np.sum(~time_branch & (guess_e == eps)))
        t_n += int(np.sum(time_branch))
    total = config.trials
    p_emp = (t_wins + e_wins) / total
    return GameResult(t_wins, e_wins, t_n, total - t_n, p_emp, 0.5 * (pred_t + pred_e),
                      math.sqrt(p_emp * (1 - p_emp) / total), pred_t, pred_e)
