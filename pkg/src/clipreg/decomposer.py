"""Greedy energy-increment decomposition.

Each stage asks the adversary for the dictionary element best correlated with
the current residual, scales it optimally within [-q, q], and accepts the pick
only if the squared-residual decrease exceeds eps^2.  Since the initial energy
is at most 1, at most ceil(1/eps^2) stages can be accepted, independently of
the target and the dimension.  The accepted elements are assembled into one
network by block composition with a final clip, and the residual is audited
adversarially.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from clipreg.netcore import RepCert, RepNet, compose_parallel, net_to_dict, zero_net
from clipreg.measure import FunctionOracle, Quadrature, oracle_from_net, oracle_from_values
from clipreg.adversary import Budget, DictSpec, ascend, best_gain_element, invisibility_audit

_STAGE_SEED_STRIDE = 7919
_AUDIT_SEED_OFFSET = 104729


class DecomposeError(ValueError):
    pass


def m_budget_for(epsilon: float) -> int:
    if not (0 < epsilon <= 1):
        raise DecomposeError(f"epsilon must lie in (0, 1], got {epsilon}")
    return math.ceil(1.0 / epsilon ** 2)


@dataclass(frozen=True)
class StagePick:
    k: int               # stage index, 1-based
    element: RepNet
    lam: float           # coefficient in [-q, q]
    gain: float          # energy decrease achieved, > eps^2 when accepted
    t_after: float       # squared residual norm after acceptance

    def to_dict(self) -> dict:
        return {"k": self.k, "lambda": self.lam, "gain": self.gain,
                "t_after": self.t_after, "element": net_to_dict(self.element)}


@dataclass(frozen=True)
class EnergyTrace:
    t0: float
    picks: tuple

    def levels(self) -> list:
        return [self.t0] + [p.t_after for p in self.picks]

    def is_monotone(self) -> bool:
        lv = self.levels()
        return all(a >= b for a, b in zip(lv, lv[1:])) and lv[-1] >= -1e-12

    def to_dict(self) -> dict:
        return {"t0": self.t0, "picks": [p.to_dict() for p in self.picks]}


@dataclass(frozen=True)
class DecompositionReport:
    g: RepNet
    m_prime: int
    m_budget: int
    epsilon: float
    trace: EnergyTrace
    residual_l2_sq: float
    residual_l1: float
    audit: dict                      # invisibility_audit output
    constructive_cert: RepCert
    conservative_cert: RepCert       # worst-case bound (2^m' d | r + m')
    budget_exhausted: bool
    seed: int
    config_echo: dict

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "epsilon": self.epsilon,
            "m_prime": self.m_prime,
            "m_budget": self.m_budget,
            "budget_exhausted": self.budget_exhausted,
            "seed": self.seed,
            "trace": self.trace.to_dict(),
            "residual_l2_sq": self.residual_l2_sq,
            "residual_l1": self.residual_l1,
            "constructive_cert": {"d": self.constructive_cert.d, "r": self.constructive_cert.r},
            "conservative_cert": {"d": self.conservative_cert.d, "r": self.conservative_cert.r},
            "audit": {
                "invisible_up_to_budget": self.audit["invisible_up_to_budget"],
                "note": self.audit["note"],
                "result": self.audit["result"].to_dict(),
            },
            "g": net_to_dict(self.g),
            "config_echo": self.config_echo,
        }


def stage_solve(quad: Quadrature, spec: DictSpec, residual: FunctionOracle,
                budget: Budget, seed: int, threads: int = 1):
    """Best single dictionary step against the residual.

    Returns (element, lambda, gain, adversary result).  The coefficient is the
    clamped minimizer of ||residual - lam*h||^2; gain is the exact decrease
    2*lam*<h,res> - lam^2*||h||^2 of that quadratic.
    """
    rv = residual.values(quad)

    def realized(net):
        hv = net.eval_batch(quad.nodes)
        c = float(np.dot(quad.weights, hv * rv))
        h2 = float(np.dot(quad.weights, hv * hv))
        if h2 < 1e-14:
            return 0.0, 0.0
        lam = float(np.clip(c / h2, -spec.domain.q, spec.domain.q))
        return lam, 2.0 * lam * c - lam * lam * h2

    res = ascend(quad, spec, residual, budget, seed, threads=threads)
    # polish: the correlation maximizer points along the residual but may fit
    # it poorly; re-ascend on the gain objective from the witness and fresh
    # starts (fewer of them — the warm start already carries the search)
    polish_budget = replace(budget, restarts=max(8, budget.restarts // 4))
    polished = best_gain_element(quad, spec, residual, polish_budget, seed + 1,
                                 threads=threads, warm_start=res.witness)
    best_net, best_lam, best_gain = res.witness, *realized(res.witness)
    lam_p, gain_p = realized(polished)
    if gain_p > best_gain:
        best_net, best_lam, best_gain = polished, lam_p, gain_p
    return best_net, best_lam, best_gain, res


def decompose(quad: Quadrature, spec: DictSpec, f: FunctionOracle, epsilon: float,
              budget: Budget, seed: int, stage_dict: str = "fixed",
              threads: int = 1, audit_budget: Budget | None = None,
              config_echo: dict | None = None) -> DecompositionReport:
    """Run the energy-increment loop and audit the residual.

    stage_dict="fixed" searches F(d,r) at every stage; "growing" expands the
    dictionary to (2^{k-1} d | r+k-1) at stage k, as in the existence proof.
    """
    if stage_dict not in ("fixed", "growing"):
        raise DecomposeError(f"stage_dict must be 'fixed' or 'growing', got {stage_dict!r}")
    m_budget = m_budget_for(epsilon)
    eps_sq = epsilon ** 2

    fvals = f.values(quad)
    t0 = float(np.dot(quad.weights, fvals * fvals))
    if t0 > 1.0 + 1e-9:
        raise DecomposeError(f"target energy {t0} exceeds 1 (target not bounded by 1?)")

    picks = []
    elements = []
    lambdas = []
    resvals = fvals.copy()
    t_current = t0
    budget_exhausted = True
    for k in range(1, m_budget + 1):
        if stage_dict == "growing":
            stage_spec = DictSpec(2 ** (k - 1) * spec.d, spec.r + k - 1, spec.domain)
        else:
            stage_spec = spec
        residual = oracle_from_values(quad, resvals, f"residual-stage-{k}")
        element, lam, gain, _ = stage_solve(
            quad, stage_spec, residual, budget, seed + _STAGE_SEED_STRIDE * k, threads=threads)
        if gain <= eps_sq:  # strict improvement required; ties reject
            budget_exhausted = False
            break
        t_current -= gain
        hv = oracle_from_net(element).values(quad)
        resvals = resvals - lam * hv
        elements.append(element)
        lambdas.append(lam)
        picks.append(StagePick(k=k, element=element, lam=lam, gain=gain, t_after=t_current))

    m_prime = len(picks)
    if m_prime == 0:
        g = zero_net(spec.domain)
    else:
        g = compose_parallel(elements, lambdas, spec.domain)

    gvals = g.eval_batch(quad.nodes)
    diff = fvals - gvals
    residual_l2_sq = float(np.dot(quad.weights, diff * diff))
    residual_l1 = float(np.dot(quad.weights, np.abs(diff)))

    if audit_budget is None:
        audit_budget = budget
    audit = invisibility_audit(
        quad, spec, oracle_from_values(quad, diff, "f-g"), epsilon,
        audit_budget, seed + _AUDIT_SEED_OFFSET, threads=threads)

    conservative = RepCert(2 ** m_prime * spec.d, spec.r + m_prime)
    return DecompositionReport(
        g=g,
        m_prime=m_prime,
        m_budget=m_budget,
        epsilon=epsilon,
        trace=EnergyTrace(t0=t0, picks=tuple(picks)),
        residual_l2_sq=residual_l2_sq,
        residual_l1=residual_l1,
        audit=audit,
        constructive_cert=g.cert,
        conservative_cert=conservative,
        budget_exhausted=budget_exhausted,
        seed=seed,
        config_echo=config_echo or {},
    )


def report_from_dict(obj: dict) -> DecompositionReport:
    from clipreg.netcore import net_from_dict
    from clipreg.adversary import AdversaryResult

    picks = tuple(
        StagePick(k=p["k"], element=net_from_dict(p["element"]), lam=p["lambda"],
                  gain=p["gain"], t_after=p["t_after"])
        for p in obj["trace"]["picks"])
    ares = obj["audit"]["result"]
    audit_result = AdversaryResult(
        value=ares["value"],
        witness=net_from_dict(ares["witness"]),
        restarts_run=ares["restarts_run"],
        per_restart_values=tuple(ares["per_restart_values"]),
        seed=ares["seed"],
        budget=Budget(**ares["budget"]),
    )
    return DecompositionReport(
        g=net_from_dict(obj["g"]),
        m_prime=obj["m_prime"],
        m_budget=obj["m_budget"],
        epsilon=obj["epsilon"],
        trace=EnergyTrace(t0=obj["trace"]["t0"], picks=picks),
        residual_l2_sq=obj["residual_l2_sq"],
        residual_l1=obj["residual_l1"],
        audit={"invisible_up_to_budget": obj["audit"]["invisible_up_to_budget"],
               "note": obj["audit"]["note"], "result": audit_result},
        constructive_cert=RepCert(**obj["constructive_cert"]),
        conservative_cert=RepCert(**obj["conservative_cert"]),
        budget_exhausted=obj["budget_exhausted"],
        seed=obj["seed"],
        config_echo=obj["config_echo"],
    )


def certify_split(report: DecompositionReport, quad: Quadrature, f: FunctionOracle,
                  slack: float = 0.05) -> dict:
    """Pure re-verification of a report: f = g + (f-g) at every node, stage
    bound, monotone trace, certificate arithmetic, and the audit threshold."""
    checks = []

    gvals = report.g.eval_batch(quad.nodes)
    fvals = f.values(quad)
    diff = fvals - gvals
    split_exact = bool(np.max(np.abs(fvals - (gvals + diff))) <= 1e-12)
    checks.append(("pointwise_split", split_exact, "f equals g + (f-g) at every node"))

    res_sq = float(np.dot(quad.weights, diff * diff))
    checks.append(("residual_l2_sq", abs(res_sq - report.residual_l2_sq) <= 1e-10,
                   f"recomputed {res_sq} vs reported {report.residual_l2_sq}"))

    checks.append(("stage_bound", report.m_prime <= report.m_budget,
                   f"m'={report.m_prime} vs budget {report.m_budget}"))

    eps_sq = report.epsilon ** 2
    checks.append(("trace_monotone", report.trace.is_monotone(), "energy levels non-increasing"))
    checks.append(("gains_exceed_eps_sq",
                   all(p.gain > eps_sq for p in report.trace.picks),
                   "every accepted gain > eps^2"))
    checks.append(("trace_t0", report.trace.t0 <= 1.0 + 1e-9, f"t0={report.trace.t0}"))

    checks.append(("cert_dominance",
                   report.conservative_cert.dominates(report.constructive_cert),
                   f"{report.conservative_cert} dominates {report.constructive_cert}"))
    checks.append(("cert_constructive", report.g.satisfies(report.constructive_cert),
                   "assembled net satisfies its constructive certificate"))

    audit_value = report.audit["result"].value
    ok_audit = audit_value <= report.epsilon + slack
    detail = f"audit value {audit_value} vs eps+slack {report.epsilon + slack}"
    if not ok_audit:
        detail += "; witness: " + str(net_to_dict(report.audit["result"].witness))
    checks.append(("audit_threshold", ok_audit, detail))

    return {"ok": all(ok for _, ok, _ in checks),
            "details": [{"check": name, "ok": ok, "detail": d} for name, ok, d in checks]}
