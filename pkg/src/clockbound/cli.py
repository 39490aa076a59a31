"""Command-line front end.

    clockbound audit SCENARIO.yaml | --random N   relation audits
    clockbound figure2                             spin-1/2 example curves
    clockbound game SCENARIO.yaml                  guessing-game simulation
    clockbound truncation                          energy-cutoff convergence
    clockbound scan --over alpha|theta|tfinal      parameter sweeps

Exit codes: 0 all relations hold, 1 input error, 2 a relation failed (slack
below -tol) or a solver did not deliver. CSV output starts with the line
``# schema=clockbound-v1``; numbers carry 12 significant digits.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, Sequence

import numpy as np

from ._solvers import SolverOptions
from .asymmetry import relative_entropy_of_asymmetry
from .campaign import CAMPAIGN_ALPHAS, audit_instance
from .clock import TimeEnsemble, build_kappa, truncate
from .entropy import RenyiOrder, conditional_renyi, differential_conditional_entropy
from .errors import ClockboundError
from .game import GameConfig, simulate
from .linalg import DensityOperator, bloch_state, partial_trace, hamiltonian_from_energies, ket_to_density, pauli_z
from .relations import (
    AuditReport,
    RelationId,
    audit_asymmetry,
    audit_continuous,
    audit_main,
    audit_nonuniform,
    audit_pure,
    audit_split,
)
from .scenario import Scenario, load_scenario

SCHEMA = "clockbound-v1"
EXIT_OK, EXIT_INPUT, EXIT_VIOLATION = 0, 1, 2

AUDIT_COLUMNS = ["instance", "relation", "alpha", "time_term", "energy_term", "lhs", "rhs",
                 "slack", "residual", "converged", "asserted", "status", "note"]


class InputError(Exception):
    pass


# ------------------------------------------------------------------ output


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        s = f"{x:.12g}"
        return "0" if float(s) == 0 else s
    return str(x)


def _json_value(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        s = fmt(x)
        return s if s in ("nan", "inf", "-inf") else float(s)
    return x


def write_table(rows: list[dict], columns: Sequence[str], out: str | None, command: str) -> None:
    fmt_json = out is not None and out.endswith(".json")
    if fmt_json:
        doc = {"schema": SCHEMA, "command": command,
               "rows": [{c: _json_value(r.get(c, "")) for c in columns} for r in rows]}
        text = json.dumps(doc, indent=1) + "\n"
    else:
        lines = [f"# schema={SCHEMA}", ",".join(columns)]
        lines += [",".join(fmt(r.get(c, "")) for c in columns) for r in rows]
        text = "\n".join(lines) + "\n"
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# ------------------------------------------------------------------ parsing


def parse_alpha_list(text: str | None) -> list[RenyiOrder] | None:
    if text is None:
        return None
    try:
        out = [RenyiOrder.parse(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"--alpha: {exc}") from exc
    if not out:
        raise InputError("--alpha: empty list")
    return out


def parse_float_list(text: str, flag: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"{flag}: {exc}") from exc


def worker_count() -> int:
    raw = os.environ.get("CLOCKBOUND_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise InputError(f"CLOCKBOUND_THREADS must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise InputError(f"CLOCKBOUND_THREADS must be a positive integer, got {raw!r}")
    return n


def ordered_map(fn, tasks: list) -> list:
    """Map in input order, over CLOCKBOUND_THREADS worker processes when > 1."""
    n = min(worker_count(), max(1, len(tasks)))
    if n == 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, tasks))


# ------------------------------------------------------------------ audit


def _status(rep: AuditReport, asserted: bool, tol: float) -> str:
    if not asserted:
        return "unasserted"
    if rep.slack >= -tol:
        return "ok"
    return "violation" if rep.converged() else "solver-failure"


def audit_row(instance, rep: AuditReport, tol: float, asserted: bool = True) -> dict:
    terms = rep.lhs_terms
    energy = terms.get("energy", terms.get("asymmetry", 0.0))
    residual = max((d.get("residual", 0.0) for d in rep.diagnostics.values()), default=0.0)
    note = ";".join(f"{k}={fmt(v)}" for k, v in rep.extra.items())
    return {"instance": instance, "relation": rep.relation_id.value, "alpha": rep.alpha,
            "time_term": terms.get("time", 0.0), "energy_term": energy, "lhs": rep.lhs,
            "rhs": rep.rhs, "slack": rep.slack, "residual": residual,
            "converged": rep.converged(), "asserted": asserted,
            "status": _status(rep, asserted, tol), "note": note}


def scenario_reports(sc: Scenario, alphas: list[RenyiOrder], opts: SolverOptions) -> list[tuple]:
    """(report, asserted) pairs for every requested relation and order."""
    out = []
    h, ens = sc.hamiltonian, sc.ensemble
    for rel in sc.relations:
        if rel == "continuous":
            out.append((audit_continuous(sc.rho_a, h, ens.t_final), True))
            continue
        if rel == "nonuniform":
            out.append((audit_nonuniform(sc.rho_ar, h, ens), True))
            continue
        for a in alphas:
            if rel == "asymmetry":
                out.append((audit_asymmetry(sc.rho_a, h, ens, a, opts), True))
            elif a.alpha < 0.5:
                out.append((_unasserted(sc, rel, a, opts), False))
            elif rel == "main":
                out.append((audit_main(sc.rho_ar, h, ens, a, opts), True))
            elif rel == "pure":
                out.append((audit_pure(sc.rho_a, h, ens, a, opts), True))
            elif rel == "split":
                out.append((audit_split(sc.rho_ar, h, ens, a, opts), True))
    return out


def _unasserted(sc: Scenario, rel: str, order: RenyiOrder, opts: SolverOptions) -> AuditReport:
    """Below alpha = 1/2 there is no conjugate order; report the time term alone."""
    rho_t = partial_trace(sc.rho_ar, [0, 1]) if rel == "split" else sc.rho_a
    t = conditional_renyi(build_kappa(rho_t, sc.hamiltonian, sc.ensemble), order.alpha, opts=opts)
    rid = RelationId.PURE if rel == "pure" else RelationId(rel)
    return AuditReport(rid, str(order), {"time": t.value, "energy": math.nan},
                       math.log2(sc.ensemble.size), math.nan,
                       {"time": {"residual": t.residual, "converged": t.converged}})


def cmd_audit(args) -> int:
    alphas = parse_alpha_list(args.alpha)
    rows = []
    if args.random:
        labels = [str(a) for a in alphas] if alphas else list(CAMPAIGN_ALPHAS)
        tasks = [(args.seed, i, labels, args.seed) for i in range(args.random)]
        for i, reps in enumerate(ordered_map(audit_instance, tasks)):
            rows += [audit_row(i, r, args.tol) for r in reps]
    else:
        if not args.scenario:
            raise InputError("audit needs a scenario file or --random N")
        sc = load_scenario(args.scenario)
        opts = SolverOptions(seed=args.seed)
        for rep, asserted in scenario_reports(sc, alphas or sc.alpha_grid, opts):
            rows.append(audit_row(sc.name, rep, args.tol, asserted))
    write_table(rows, AUDIT_COLUMNS, args.out, "audit")
    bad = [r for r in rows if r["status"] in ("violation", "solver-failure")]
    for r in bad:
        print(f"relation {r['relation']} alpha={r['alpha']} instance {r['instance']}: "
              f"slack {fmt(r['slack'])} ({r['status']})", file=sys.stderr)
    return EXIT_VIOLATION if bad else EXIT_OK


# ------------------------------------------------------------------ figure 2

FIGURE2_COLUMNS = ["theta", "energy_uncertainty", "time_discrete", "time_continuous",
                   "total_discrete", "total_continuous", "rhs_discrete", "rhs_continuous"]


def figure2_rows(thetas: int = 181, kappa: float = 1.0, t_final: float = 2.0, times: int = 2) -> list[dict]:
    h = pauli_z(kappa)
    ens = TimeEnsemble.equally_spaced(times, t_final)
    rows = []
    for theta in np.linspace(0.0, math.pi, thetas):
        rho = bloch_state(float(theta))
        gamma = relative_entropy_of_asymmetry(rho, h).value
        s_disc = conditional_renyi(build_kappa(rho, h, ens), 1.0).value
        s_cont = differential_conditional_entropy(rho, h, t_final).value
        rows.append({"theta": float(theta), "energy_uncertainty": gamma, "time_discrete": s_disc,
                     "time_continuous": s_cont, "total_discrete": gamma + s_disc,
                     "total_continuous": gamma + s_cont, "rhs_discrete": math.log2(times),
                     "rhs_continuous": math.log2(t_final)})
    return rows


def cmd_figure2(args) -> int:
    if args.thetas < 2 or args.times < 2 or args.t_final <= 0:
        raise InputError("need --thetas >= 2, --times >= 2 and --t-final > 0")
    rows = figure2_rows(args.thetas, args.kappa, args.t_final, args.times)
    write_table(rows, FIGURE2_COLUMNS, args.out, "figure2")
    bad = [r for r in rows if r["total_discrete"] < r["rhs_discrete"] - args.tol
           or r["total_continuous"] < r["rhs_continuous"] - args.tol]
    return EXIT_VIOLATION if bad else EXIT_OK


# ------------------------------------------------------------------ game

GAME_COLUMNS = ["variant", "strategy", "trials", "seed", "time_trials", "time_wins",
                "energy_trials", "energy_wins", "empirical_p_win", "predicted_p_win",
                "std_error", "time_rate", "time_std_error", "predicted_time",
                "optimal_time", "predicted_energy"]


def cmd_game(args) -> int:
    sc = load_scenario(args.scenario)
    if sc.ensemble.kind != "discrete":
        raise InputError("game needs a discrete time ensemble")
    strategy = args.strategy or ("helstrom" if sc.ensemble.size == 2 else "pgm")
    cfg = GameConfig(sc.rho_ar, sc.hamiltonian, sc.ensemble, args.trials, args.seed,
                     args.variant, strategy)
    res = simulate(cfg)
    kappa = build_kappa(sc.rho_a, sc.hamiltonian, sc.ensemble)
    s_min = conditional_renyi(kappa, math.inf, opts=SolverOptions(seed=args.seed)).value
    row = {"variant": args.variant, "strategy": strategy, "trials": args.trials, "seed": args.seed,
           "time_trials": res.time_trials, "time_wins": res.time_branch_wins,
           "energy_trials": res.energy_trials, "energy_wins": res.energy_branch_wins,
           "empirical_p_win": res.empirical_p_win, "predicted_p_win": res.predicted_p_win,
           "std_error": res.std_error, "time_rate": res.time_rate,
           "time_std_error": res.time_std_error, "predicted_time": res.predicted_time,
           "optimal_time": 2.0 ** -s_min, "predicted_energy": res.predicted_energy}
    write_table([row], GAME_COLUMNS, args.out, "game")
    return EXIT_OK


# ------------------------------------------------------------------ truncation

TRUNCATION_COLUMNS = ["cutoff", "dim", "tail_weight", "trace_norm_distance",
                      "slack_discrete", "slack_continuous"]


def ladder_state(levels: int, ratio: float, kind: str) -> DensityOperator:
    """Geometric populations p_n proportional to ratio**n, diagonal or as one coherent ket."""
    p = ratio ** np.arange(levels)
    p = p / p.sum()
    if kind == "diagonal":
        return DensityOperator(np.diag(p))
    return ket_to_density(np.sqrt(p))


def truncation_rows(levels: int = 10, cutoffs: Iterable[float] | None = None, ratio: float = 0.5,
                    kind: str = "diagonal", times: int = 2, t_final: float = 2.0) -> list[dict]:
    h = hamiltonian_from_energies(np.arange(levels, dtype=float))
    rho = ladder_state(levels, ratio, kind)
    cutoffs = list(range(levels)) if cutoffs is None else list(cutoffs)
    ens = TimeEnsemble.equally_spaced(times, t_final)
    rows = []
    for c in cutoffs:
        tr = truncate(h, rho, c)
        dist = float(np.sum(np.abs(np.linalg.eigvalsh(tr.embed() - rho.matrix))))
        if tr.hamiltonian.dim > 1:
            s_disc = audit_asymmetry(tr.state, tr.hamiltonian, ens, 1.0).slack
        else:
            s_disc = 0.0  # one level: no asymmetry and S(T|A) = log2|T| exactly
        s_cont = audit_continuous(tr.state, tr.hamiltonian, t_final).slack
        rows.append({"cutoff": c, "dim": tr.hamiltonian.dim, "tail_weight": tr.tail_weight,
                     "trace_norm_distance": dist, "slack_discrete": s_disc,
                     "slack_continuous": s_cont})
    return rows


def cmd_truncation(args) -> int:
    if args.levels < 2 or not 0 < args.ratio < 1:
        raise InputError("need --levels >= 2 and 0 < --ratio < 1")
    cutoffs = parse_float_list(args.cutoffs, "--cutoffs") if args.cutoffs else None
    try:
        rows = truncation_rows(args.levels, cutoffs, args.ratio, args.state, args.times, args.t_final)
    except ClockboundError as exc:
        raise InputError(f"--cutoffs: {exc}") from exc
    write_table(rows, TRUNCATION_COLUMNS, args.out, "truncation")
    bad = [r for r in rows if min(r["slack_discrete"], r["slack_continuous"]) < -args.tol]
    return EXIT_VIOLATION if bad else EXIT_OK


# ------------------------------------------------------------------ scan

SCAN_COLUMNS = ["parameter", "value", "relation", "alpha", "time_term", "energy_term", "lhs",
                "rhs", "slack", "status"]


def _scan_task(task):
    over, value, alpha, kappa, times, t_final, theta, seed = task
    h = pauli_z(kappa)
    opts = SolverOptions(seed=seed)
    if over == "tfinal":
        return audit_continuous(bloch_state(theta), h, value)
    rho = bloch_state(value if over == "theta" else theta)
    ens = TimeEnsemble.equally_spaced(times, t_final)
    return audit_main(rho, h, ens, value if over == "alpha" else alpha, opts)


def cmd_scan(args) -> int:
    over = args.over
    if args.values:
        if over == "alpha":
            values = [a.alpha for a in parse_alpha_list(args.values)]
        else:
            values = parse_float_list(args.values, "--values")
    else:
        values = {"alpha": [0.5, 0.7, 1.0, 2.0, 10.0, math.inf],
                  "theta": list(np.linspace(0, math.pi, 19)),
                  "tfinal": [0.5, 1.0, 2.0, 4.0, 8.0]}[over]
    alphas = parse_alpha_list(args.alpha) or [RenyiOrder(1.0)]
    if over == "tfinal" and any(v <= 0 for v in values):
        raise InputError("--values: T_F must be positive")
    if over == "alpha" and any(v < 0.5 for v in values):
        raise InputError("--values: the memory form needs alpha >= 1/2")
    tasks = [(over, v, alphas[0].alpha, args.kappa, args.times, args.t_final, args.theta, args.seed)
             for v in values]
    rows = []
    for v, rep in zip(values, ordered_map(_scan_task, tasks)):
        row = audit_row("", rep, args.tol)
        rows.append({"parameter": over, "value": v, **{k: row[k] for k in SCAN_COLUMNS[2:]}})
    write_table(rows, SCAN_COLUMNS, args.out, "scan")
    return EXIT_VIOLATION if any(r["status"] != "ok" for r in rows) else EXIT_OK


# ------------------------------------------------------------------ main


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for solver restarts and sampling")
    common.add_argument("--tol", type=float, default=1e-6, help="slack tolerance (default 1e-6)")
    common.add_argument("--out", default=None, help="output path (.json for JSON, else CSV; default stdout)")
    common.add_argument("--alpha", default=None, help="comma-separated Renyi orders, e.g. 0.5,1,2,inf")

    p = argparse.ArgumentParser(prog="clockbound", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("audit", parents=[common], help="audit the uncertainty relations")
    a.add_argument("scenario", nargs="?", help="YAML scenario file")
    a.add_argument("--random", type=int, default=0, metavar="N", help="audit N random instances instead")
    a.set_defaults(func=cmd_audit)

    f = sub.add_parser("figure2", parents=[common], help="spin-1/2 example curves")
    f.add_argument("--thetas", type=int, default=181)
    f.add_argument("--kappa", type=float, default=1.0)
    f.add_argument("--t-final", type=float, default=2.0)
    f.add_argument("--times", type=int, default=2, help="|T|, equally spaced over [0, T_F)")
    f.set_defaults(func=cmd_figure2)

    g = sub.add_parser("game", parents=[common], help="simulate the guessing game")
    g.add_argument("scenario")
    g.add_argument("--trials", type=int, default=10_000)
    g.add_argument("--variant", choices=["figure1", "appendixA"], default="figure1")
    g.add_argument("--strategy", choices=["helstrom", "pgm"], default=None)
    g.set_defaults(func=cmd_game)

    t = sub.add_parser("truncation", parents=[common], help="energy-cutoff convergence")
    t.add_argument("--levels", type=int, default=10)
    t.add_argument("--cutoffs", default=None, help="comma-separated cutoffs (default 0..levels-1)")
    t.add_argument("--ratio", type=float, default=0.5, help="geometric population ratio")
    t.add_argument("--state", choices=["diagonal", "coherent"], default="diagonal")
    t.add_argument("--times", type=int, default=2)
    t.add_argument("--t-final", type=float, default=2.0)
    t.set_defaults(func=cmd_truncation)

    s = sub.add_parser("scan", parents=[common], help="sweep alpha, theta or T_F")
    s.add_argument("--over", choices=["alpha", "theta", "tfinal"], required=True)
    s.add_argument("--values", default=None, help="comma-separated values")
    s.add_argument("--theta", type=float, default=math.pi / 4, help="fixed Bloch angle")
    s.add_argument("--kappa", type=float, default=1.0)
    s.add_argument("--times", type=int, default=2)
    s.add_argument("--t-final", type=float, default=2.0)
    s.set_defaults(func=cmd_scan)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, ClockboundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
