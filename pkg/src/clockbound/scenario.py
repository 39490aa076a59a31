"""Scenario files (YAML) for the command-line tool.

Example::

    hamiltonian: {preset: pauli-z, scale: 1.0}
    state: {bloch: {theta: 0.7853981634, phi: 0.0}}
    memory: purify
    time: {count: 2, horizon: 3.14159265359}
    alpha_grid: [0.5, 1, 2, inf]

Complex entries are written as ``[re, im]`` pairs. Every validation error
names the offending key path, e.g. ``state.density: smallest eigenvalue ...``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .clock import TimeEnsemble
from .entropy import RenyiOrder
from .errors import ClockboundError, ScenarioError
from .linalg import (
    DensityOperator,
    SpectralHamiltonian,
    bloch_state,
    hamiltonian_from_energies,
    ket_to_density,
    partial_trace,
    purify,
    random_density,
    random_pure_state,
    spectral_decompose,
)

KNOWN_KEYS = {"hamiltonian", "state", "memory", "time", "weights", "alpha_grid", "relations",
              "outputs", "name", "game"}
RELATIONS = ("main", "pure", "split", "asymmetry", "nonuniform", "continuous")


@dataclass
class Scenario:
    hamiltonian: SpectralHamiltonian
    rho_ar: DensityOperator
    ensemble: TimeEnsemble
    alpha_grid: list
    relations: list
    name: str = "scenario"
    outputs: dict = field(default_factory=dict)
    game: dict = field(default_factory=dict)

    @property
    def rho_a(self) -> DensityOperator:
        return partial_trace(self.rho_ar, [0]) if len(self.rho_ar.dims) > 1 else self.rho_ar


def _complex(value, key: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    raise ScenarioError(key, f"expected a number or [re, im] pair, got {value!r}")


def _vector(value, key: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ScenarioError(key, "expected a non-empty list")
    return np.array([_complex(v, f"{key}[{i}]") for i, v in enumerate(value)])


def _matrix(value, key: str) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise ScenarioError(key, "expected a list of rows")
    rows = [_vector(r, f"{key}[{i}]") for i, r in enumerate(value)]
    n = len(rows)
    if any(r.size != n for r in rows):
        raise ScenarioError(key, "matrix must be square")
    return np.vstack(rows)


def _number(value, key: str, positive: bool = False) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity"):
        x = math.inf
    elif isinstance(value, (int, float)) and not isinstance(value, bool):
        x = float(value)
    else:
        raise ScenarioError(key, f"expected a number, got {value!r}")
    if positive and not x > 0:
        raise ScenarioError(key, f"must be positive, got {value!r}")
    return x


def _mapping(value, key: str) -> dict:
    if not isinstance(value, dict):
        raise ScenarioError(key, f"expected a mapping, got {type(value).__name__}")
    return value


def _wrap(key: str, fn, *args):
    try:
        return fn(*args)
    except ScenarioError:
        raise
    except (ClockboundError, ValueError) as exc:
        raise ScenarioError(key, str(exc)) from exc


def parse_hamiltonian(spec) -> SpectralHamiltonian:
    spec = _mapping(spec, "hamiltonian")
    if "preset" in spec:
        preset = spec["preset"]
        scale = _number(spec.get("scale", 1.0), "hamiltonian.scale")
        if preset == "pauli-z":
            return hamiltonian_from_energies([scale, -scale])
        if preset == "pauli-x":
            return spectral_decompose(scale * np.array([[0, 1], [1, 0]], dtype=complex))
        if preset == "pauli-y":
            return spectral_decompose(scale * np.array([[0, -1j], [1j, 0]]))
        if preset == "ladder":
            n = spec.get("levels")
            if not isinstance(n, int) or n < 2:
                raise ScenarioError("hamiltonian.levels", "ladder needs an integer levels >= 2")
            return hamiltonian_from_energies(scale * np.arange(n))
        raise ScenarioError("hamiltonian.preset", f"unknown preset {preset!r}")
    if "energies" in spec:
        e = [_number(x, f"hamiltonian.energies[{i}]") for i, x in enumerate(spec["energies"] or [])]
        if not e:
            raise ScenarioError("hamiltonian.energies", "empty energy list")
        return _wrap("hamiltonian.energies", hamiltonian_from_energies, e)
    if "matrix" in spec:
        m = _matrix(spec["matrix"], "hamiltonian.matrix")
        tol = _number(spec.get("grouping_tol", 1e-9), "hamiltonian.grouping_tol", positive=True)
        return _wrap("hamiltonian.matrix", spectral_decompose, m, tol)
    raise ScenarioError("hamiltonian", "give one of preset, energies, matrix")


def parse_state(spec, dim: int) -> DensityOperator:
    spec = _mapping(spec, "state")
    if "bloch" in spec:
        b = _mapping(spec["bloch"], "state.bloch")
        if dim != 2:
            raise ScenarioError("state.bloch", f"Bloch angles need a qubit, Hamiltonian has dim {dim}")
        return bloch_state(_number(b.get("theta", 0.0), "state.bloch.theta"),
                           _number(b.get("phi", 0.0), "state.bloch.phi"))
    if "ket" in spec:
        v = _vector(spec["ket"], "state.ket")
        if v.size != dim:
            raise ScenarioError("state.ket", f"length {v.size} does not match dim {dim}")
        return _wrap("state.ket", ket_to_density, v)
    if "density" in spec:
        m = _matrix(spec["density"], "state.density")
        if m.shape[0] != dim:
            raise ScenarioError("state.density", f"size {m.shape[0]} does not match dim {dim}")
        return _wrap("state.density", DensityOperator, m)
    if "random" in spec:
        r = _mapping(spec["random"], "state.random")
        seed = r.get("seed", 0)
        rank = r.get("rank", dim)
        if not isinstance(seed, int) or not isinstance(rank, int) or not 1 <= rank <= dim:
            raise ScenarioError("state.random", "seed must be an integer and 1 <= rank <= dim")
        return random_density(dim, np.random.default_rng(seed), rank)
    raise ScenarioError("state", "give one of bloch, ket, density, random")


def parse_memory(spec, rho_a: DensityOperator, h_dim: int) -> DensityOperator:
    if spec is None or spec == "none":
        return rho_a
    if spec == "purify":
        return purify(rho_a)
    spec = _mapping(spec, "memory")
    if "joint" in spec:
        j = _mapping(spec["joint"], "memory.joint")
        dims = j.get("dims")
        if not isinstance(dims, list) or not all(isinstance(d, int) and d >= 1 for d in dims):
            raise ScenarioError("memory.joint.dims", "expected a list of positive integers (A first)")
        if dims[0] != h_dim:
            raise ScenarioError("memory.joint.dims", f"first factor {dims[0]} must equal dim(H) = {h_dim}")
        if "ket" in j:
            v = _vector(j["ket"], "memory.joint.ket")
            if v.size != int(np.prod(dims)):
                raise ScenarioError("memory.joint.ket", f"length {v.size} does not match dims {dims}")
            return _wrap("memory.joint.ket", ket_to_density, v, dims)
        if "density" in j:
            m = _matrix(j["density"], "memory.joint.density")
            return _wrap("memory.joint.density", DensityOperator, m, dims)
        if "random_pure" in j:
            seed = j["random_pure"]
            if not isinstance(seed, int):
                raise ScenarioError("memory.joint.random_pure", "expected an integer seed")
            return random_pure_state(dims, np.random.default_rng(seed))
        raise ScenarioError("memory.joint", "give one of ket, density, random_pure")
    raise ScenarioError("memory", f"expected 'purify', 'none' or a joint spec, got {spec!r}")


def parse_time(spec, weights) -> TimeEnsemble:
    spec = _mapping(spec, "time")
    if "continuous" in spec:
        return TimeEnsemble.continuous(_number(spec["continuous"], "time.continuous", positive=True))
    if "grid" in spec:
        g = spec["grid"]
        if not isinstance(g, list):
            raise ScenarioError("time.grid", "expected a list of times")
        times = [_number(t, f"time.grid[{i}]") for i, t in enumerate(g)]
    elif "count" in spec:
        k = spec["count"]
        if not isinstance(k, int) or k < 2:
            raise ScenarioError("time.count", "expected an integer >= 2")
        horizon = _number(spec.get("horizon"), "time.horizon", positive=True)
        times = list(np.arange(k) * (horizon / k))
    else:
        raise ScenarioError("time", "give one of grid, count/horizon, continuous")
    if weights is not None:
        if not isinstance(weights, list):
            raise ScenarioError("weights", "expected a list")
        weights = [_number(w, f"weights[{i}]") for i, w in enumerate(weights)]
    key = "weights" if weights is not None else "time"
    return _wrap(key, TimeEnsemble.discrete, times, weights)


def parse_alpha_grid(spec) -> list:
    if spec is None:
        return [RenyiOrder(0.5), RenyiOrder(1.0), RenyiOrder(2.0), RenyiOrder(math.inf)]
    if not isinstance(spec, list) or not spec:
        raise ScenarioError("alpha_grid", "expected a non-empty list")
    out = []
    for i, a in enumerate(spec):
        out.append(_wrap(f"alpha_grid[{i}]", RenyiOrder.parse, a if not isinstance(a, bool) else "x"))
    return out


def parse_scenario(doc: dict) -> Scenario:
    doc = _mapping(doc, "<root>")
    unknown = set(doc) - KNOWN_KEYS
    if unknown:
        raise ScenarioError(sorted(unknown)[0], "unknown key")
    for key in ("hamiltonian", "state", "time"):
        if key not in doc:
            raise ScenarioError(key, "missing required key")
    h = parse_hamiltonian(doc["hamiltonian"])
    rho_a = parse_state(doc["state"], h.dim)
    rho_ar = parse_memory(doc.get("memory"), rho_a, h.dim)
    ensemble = parse_time(doc["time"], doc.get("weights"))
    alphas = parse_alpha_grid(doc.get("alpha_grid"))
    relations = doc.get("relations")
    if relations is None:
        relations = default_relations(rho_ar, ensemble)
    elif not isinstance(relations, list) or any(r not in RELATIONS for r in relations):
        raise ScenarioError("relations", f"expected a list drawn from {RELATIONS}")
    if "split" in relations and len(rho_ar.dims) != 3:
        raise ScenarioError("relations", "split needs a joint state with dims [A, R1, R2]")
    if "nonuniform" in relations and not rho_ar.is_pure():
        raise ScenarioError("memory", "nonuniform audit needs a pure joint state (use memory: purify)")
    if ensemble.kind == "continuous" and set(relations) - {"continuous"}:
        raise ScenarioError("time", "continuous time only supports the continuous relation")
    if ensemble.kind == "discrete" and "continuous" in relations:
        raise ScenarioError("time", "the continuous relation needs time: {continuous: T_F}")
    if ensemble.kind == "discrete" and not ensemble.is_uniform and set(relations) - {"nonuniform"}:
        raise ScenarioError("weights", "non-uniform weights only support the nonuniform relation")
    outputs = doc.get("outputs") or {}
    game = doc.get("game") or {}
    return Scenario(h, rho_ar, ensemble, alphas, list(relations), str(doc.get("name", "scenario")),
                    _mapping(outputs, "outputs"), _mapping(game, "game"))


def default_relations(rho_ar: DensityOperator, ensemble: TimeEnsemble) -> list:
    if ensemble.kind == "continuous":
        return ["continuous"]
    if not ensemble.is_uniform:
        return ["nonuniform"]
    rel = ["main", "asymmetry"]
    if len(rho_ar.dims) == 1 and rho_ar.is_pure():
        rel.insert(0, "pure")
    if len(rho_ar.dims) == 3:
        rel.append("split")
    return rel


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError("<file>", f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError("<file>", f"not valid YAML: {exc}") from exc
    return parse_scenario(doc)
