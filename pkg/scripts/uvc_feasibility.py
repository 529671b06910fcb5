"""Solve random UVC instances and report residuals, LMI margins and trace slack.

    python scripts/uvc_feasibility.py --n 40 --count 50 --beta 0.5
"""

import argparse

import numpy as np

from discwalk import uvc


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=40)
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--method", default="auto", choices=("auto", "spectral", "ipm"))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    failures, worst = 0, 0.0
    slacks = []
    for _ in range(args.count):
        ell = int(rng.integers(0, int((1 - args.beta) * args.n)))
        w = rng.standard_normal((ell, args.n))
        p = uvc.UvcProblem(args.n, w, args.beta)
        vc = uvc.solve_uvc(p, method=args.method)
        rep = vc.report
        if not rep.ok(p, 1e-7):
            failures += 1
        worst = max(worst, rep.max_constraint_residual)
        slacks.append((vc.trace_value - p.guarantee) / args.n)
    print(f"{args.count} instances, n={args.n}, beta={args.beta}: {failures} infeasible")
    print(f"worst constraint residual {worst:.2e}")
    print(f"trace slack / n: min {min(slacks):.3f}, median {np.median(slacks):.3f}")


if __name__ == "__main__":
    main()
