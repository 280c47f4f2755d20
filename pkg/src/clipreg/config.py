"""Run configuration: strict JSON ingestion with unknown-field rejection."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from clipreg.netcore import DomainSpec
from clipreg.adversary import Budget
from clipreg.zoo import ZOO


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        self.field_name = field_name
        super().__init__(f"config field {field_name!r}: {message}")


def _take(obj: dict, where: str, required: set, optional: set = frozenset()):
    if not isinstance(obj, dict):
        raise ConfigError(where, "expected an object")
    unknown = set(obj) - required - set(optional)
    if unknown:
        raise ConfigError(f"{where}.{sorted(unknown)[0]}", "unknown field")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{where}.{sorted(missing)[0]}", "missing required field")


@dataclass(frozen=True)
class QuadratureSpec:
    scheme: str
    size: int
    seed: int


@dataclass(frozen=True)
class SolverSpec:
    restarts: int
    iterations: int
    step0: float
    decay: float
    seed: int

    def budget(self) -> Budget:
        return Budget(restarts=self.restarts, iterations=self.iterations,
                      step0=self.step0, decay=self.decay)


@dataclass(frozen=True)
class TargetSpec:
    name: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class OutputSpec:
    report: str = "report.json"
    trace: str = "trace.csv"
    witness: str = "witness.json"


@dataclass(frozen=True)
class RunConfig:
    domain: DomainSpec
    dict_d: int
    dict_r: int
    epsilon: float
    quadrature: QuadratureSpec
    solver: SolverSpec
    target: TargetSpec
    stage_dict: str = "fixed"
    output: OutputSpec = OutputSpec()

    def echo(self) -> dict:
        return {
            "domain": {"n": self.domain.n, "q": self.domain.q},
            "dict": {"d": self.dict_d, "r": self.dict_r},
            "epsilon": self.epsilon,
            "quadrature": {"scheme": self.quadrature.scheme,
                           "size": self.quadrature.size,
                           "seed": self.quadrature.seed},
            "solver": {"restarts": self.solver.restarts,
                       "iterations": self.solver.iterations,
                       "step0": self.solver.step0,
                       "decay": self.solver.decay,
                       "seed": self.solver.seed},
            "target": {"name": self.target.name, "params": dict(self.target.params)},
            "stage_dict": self.stage_dict,
        }


def parse_config(obj: dict) -> RunConfig:
    _take(obj, "config", {"domain", "dict", "epsilon", "quadrature", "solver", "target"},
          {"stage_dict", "output"})

    dom = obj["domain"]
    _take(dom, "domain", {"n", "q"})
    if not isinstance(dom["n"], int) or dom["n"] < 1:
        raise ConfigError("domain.n", f"must be a positive integer, got {dom['n']!r}")
    if not isinstance(dom["q"], (int, float)) or dom["q"] < 1:
        raise ConfigError("domain.q", f"must be a real >= 1, got {dom['q']!r}")
    domain = DomainSpec(n=dom["n"], q=float(dom["q"]))

    dic = obj["dict"]
    _take(dic, "dict", {"d", "r"})
    if not isinstance(dic["d"], int) or dic["d"] < 1:
        raise ConfigError("dict.d", f"must be a positive integer, got {dic['d']!r}")
    if not isinstance(dic["r"], int) or dic["r"] < 0:
        raise ConfigError("dict.r", f"must be a non-negative integer, got {dic['r']!r}")

    eps = obj["epsilon"]
    if not isinstance(eps, (int, float)) or not (0 < eps <= 1):
        raise ConfigError("epsilon", f"must lie in (0, 1], got {eps!r}")

    qd = obj["quadrature"]
    _take(qd, "quadrature", {"scheme", "size", "seed"})
    if qd["scheme"] not in ("tensor-grid", "low-discrepancy", "seeded-uniform"):
        raise ConfigError("quadrature.scheme", f"unknown scheme {qd['scheme']!r}")
    if not isinstance(qd["size"], int) or qd["size"] < 1:
        raise ConfigError("quadrature.size", f"must be a positive integer, got {qd['size']!r}")
    if not isinstance(qd["seed"], int):
        raise ConfigError("quadrature.seed", "seed is mandatory (no wall-clock seeding)")
    quadrature = QuadratureSpec(scheme=qd["scheme"], size=qd["size"], seed=qd["seed"])

    sv = obj["solver"]
    _take(sv, "solver", {"restarts", "iterations", "step0", "decay", "seed"})
    for key in ("restarts", "iterations", "seed"):
        if not isinstance(sv[key], int):
            raise ConfigError(f"solver.{key}", f"must be an integer, got {sv[key]!r}")
    if sv["restarts"] < 1:
        raise ConfigError("solver.restarts", "must be >= 1")
    if sv["iterations"] < 1:
        raise ConfigError("solver.iterations", "must be >= 1")
    if not isinstance(sv["step0"], (int, float)) or sv["step0"] <= 0:
        raise ConfigError("solver.step0", f"must be > 0, got {sv['step0']!r}")
    if not isinstance(sv["decay"], (int, float)) or not (0 < sv["decay"] <= 1):
        raise ConfigError("solver.decay", f"must lie in (0, 1], got {sv['decay']!r}")
    solver = SolverSpec(restarts=sv["restarts"], iterations=sv["iterations"],
                        step0=float(sv["step0"]), decay=float(sv["decay"]), seed=sv["seed"])

    tg = obj["target"]
    _take(tg, "target", {"name"}, {"params"})
    if tg["name"] not in ZOO:
        raise ConfigError("target.name", f"unknown target {tg['name']!r}; known: {sorted(ZOO)}")
    target = TargetSpec(name=tg["name"], params=dict(tg.get("params", {})))

    stage_dict = obj.get("stage_dict", "fixed")
    if stage_dict not in ("fixed", "growing"):
        raise ConfigError("stage_dict", f"must be 'fixed' or 'growing', got {stage_dict!r}")

    out = obj.get("output", {})
    _take(out, "output", set(), {"report", "trace", "witness"})
    output = OutputSpec(report=out.get("report", "report.json"),
                        trace=out.get("trace", "trace.csv"),
                        witness=out.get("witness", "witness.json"))

    return RunConfig(domain=domain, dict_d=dic["d"], dict_r=dic["r"], epsilon=float(eps),
                     quadrature=quadrature, solver=solver, target=target,
                     stage_dict=stage_dict, output=output)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError("<file>", f"invalid JSON: {e}") from e
    return parse_config(obj)
