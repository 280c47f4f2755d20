#!/usr/bin/env python3
"""Show that the stage count does not grow with the ambient dimension.

Usage:
    python3 scripts/dimension_sweep.py [--dims 2,4,8,16] [--epsilon 0.35]

Runs the decomposition on the same target family at increasing input
dimension and prints m' next to the dimension-free budget ceil(1/eps^2).
"""

import argparse

from clipreg.adversary import Budget, DictSpec
from clipreg.decomposer import decompose, m_budget_for
from clipreg.measure import build_quadrature
from clipreg.netcore import DomainSpec
from clipreg.zoo import zoo


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--dims", default="2,4,8,16")
    parser.add_argument("--epsilon", type=float, default=0.35)
    parser.add_argument("--target", default="random-grid")
    parser.add_argument("--restarts", type=int, default=32)
    parser.add_argument("--nodes", type=int, default=2 ** 14)
    args = parser.parse_args()

    dims = [int(tok) for tok in args.dims.split(",") if tok]
    budget = m_budget_for(args.epsilon)
    params = {"random-grid": {"k": 2, "seed": 5}, "ball": {"rho": 1.0},
              "sign-product": {}}.get(args.target, {})
    print(f"target={args.target} eps={args.epsilon} budget={budget} (all n)")

    for n in dims:
        dom = DomainSpec(n, 1.0)
        quad = build_quadrature(dom, "low-discrepancy", args.nodes, seed=3)
        report = decompose(quad, DictSpec(2, 1, dom),
                           zoo(args.target, params, dom), args.epsilon,
                           Budget(restarts=args.restarts, iterations=120),
                           seed=100 + n)
        print(f"n={n:>3}: m'={report.m_prime:>2}/{budget}  "
              f"residual={report.residual_l2_sq:.4f}  "
              f"audit={report.audit['result'].value:.4f}")


if __name__ == "__main__":
    main()
