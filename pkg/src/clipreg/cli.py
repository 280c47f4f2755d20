"""Batch front door: decompose / adversary / sweep / zoo / verify subcommands.

All randomness comes from config seeds, so two runs with the same config
produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace

from clipreg.config import ConfigError, RunConfig, load_config
from clipreg.netcore import DomainSpec, net_to_dict
from clipreg.measure import build_quadrature
from clipreg.adversary import Budget, DictSpec, ascend
from clipreg.decomposer import certify_split, decompose, report_from_dict
from clipreg.zoo import ZOO, ZooError, zoo

TRACE_HEADER = ["k", "t_after", "lambda", "gain"]
SWEEP_HEADER = ["n", "m_prime", "residual_l2_sq", "audit_value"]


def _fmt(x) -> str:
    return repr(float(x))


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, indent=2))
        fh.write("\n")


def _write_trace_csv(path, report) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for p in report.trace.picks:
            writer.writerow([p.k, _fmt(p.t_after), _fmt(p.lam), _fmt(p.gain)])


def _setup(cfg: RunConfig, n_override: int | None = None):
    domain = cfg.domain if n_override is None else DomainSpec(n=n_override, q=cfg.domain.q)
    quad = build_quadrature(domain, cfg.quadrature.scheme, cfg.quadrature.size,
                            cfg.quadrature.seed)
    target = zoo(cfg.target.name, cfg.target.params, domain)
    spec = DictSpec(cfg.dict_d, cfg.dict_r, domain)
    return domain, quad, target, spec


def run_decompose(cfg: RunConfig, threads: int = 1, n_override: int | None = None):
    domain, quad, target, spec = _setup(cfg, n_override)
    echo = cfg.echo()
    if n_override is not None:
        echo["domain"]["n"] = n_override
    return quad, target, decompose(
        quad, spec, target, cfg.epsilon, cfg.solver.budget(), cfg.solver.seed,
        stage_dict=cfg.stage_dict, threads=threads, config_echo=echo)


def cmd_decompose(args) -> int:
    cfg = load_config(args.config)
    quad, target, report = run_decompose(cfg, threads=args.threads)
    _write_json(cfg.output.report, report.to_dict())
    _write_trace_csv(cfg.output.trace, report)
    _write_json(cfg.output.witness, report.audit["result"].to_dict())
    print(f"wrote {cfg.output.report}, {cfg.output.trace}, {cfg.output.witness} "
          f"(m'={report.m_prime}/{report.m_budget}, "
          f"residual_l2_sq={report.residual_l2_sq:.6g})")
    if args.verify:
        verdict = certify_split(report, quad, target)
        if not verdict["ok"]:
            for item in verdict["details"]:
                if not item["ok"]:
                    print(f"verify FAILED: {item['check']}: {item['detail']}", file=sys.stderr)
            return 1
        print("verify ok")
    return 0


def cmd_adversary(args) -> int:
    cfg = load_config(args.config)
    domain, quad, target, spec = _setup(cfg)
    result = ascend(quad, spec, target, cfg.solver.budget(), cfg.solver.seed,
                    threads=args.threads)
    _write_json(cfg.output.report, result.to_dict())
    print(f"wrote {cfg.output.report} (value={result.value:.6g}, lower bound)")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    try:
        dims = [int(tok) for tok in args.n.split(",") if tok]
    except ValueError:
        print(f"error: --n expects a comma-separated integer list, got {args.n!r}",
              file=sys.stderr)
        return 2
    rows = []
    for n in dims:
        _, _, report = run_decompose(cfg, threads=args.threads, n_override=n)
        rows.append([n, report.m_prime, _fmt(report.residual_l2_sq),
                     _fmt(report.audit["result"].value)])
        print(f"n={n}: m'={report.m_prime}/{report.m_budget}")
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_HEADER)
        writer.writerows(rows)
    print(f"wrote {args.out}")
    return 0


def cmd_zoo(args) -> int:
    if args.action != "list":
        print(f"error: unknown zoo action {args.action!r} (expected 'list')", file=sys.stderr)
        return 2
    for name in sorted(ZOO):
        print(f"{name}: {ZOO[name][1]}")
    return 0


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    with open(args.report) as fh:
        report = report_from_dict(json.load(fh))
    n = report.config_echo.get("domain", {}).get("n")
    _, quad, target, _ = _setup(cfg, n_override=n)
    verdict = certify_split(report, quad, target, slack=args.slack)
    for item in verdict["details"]:
        status = "ok" if item["ok"] else "FAILED"
        print(f"{item['check']}: {status}")
        if not item["ok"]:
            print(f"  {item['detail']}", file=sys.stderr)
    return 0 if verdict["ok"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clipreg",
        description="Decompose bounded functions on [-1,1]^n into a small "
                    "clipped network plus a near-invisible residual.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="run the energy-increment decomposition")
    p.add_argument("--config", required=True)
    p.add_argument("--verify", action="store_true", help="re-verify the report after the run")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(fn=cmd_decompose)

    p = sub.add_parser("adversary", help="witness search against the configured target")
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(fn=cmd_adversary)

    p = sub.add_parser("sweep", help="repeat the decomposition over input dimensions")
    p.add_argument("--config", required=True)
    p.add_argument("--n", required=True, help="comma-separated dimensions, e.g. 2,4,8,16")
    p.add_argument("--out", default="sweep.csv")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("zoo", help="target zoo utilities")
    p.add_argument("action", choices=["list"])
    p.set_defaults(fn=cmd_zoo)

    p = sub.add_parser("verify", help="re-verify an emitted report")
    p.add_argument("--report", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--slack", type=float, default=0.05)
    p.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ZooError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
