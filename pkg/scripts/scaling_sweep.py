"""Scaling sweep: median discrepancy over the family predictor for each n.

    python scripts/scaling_sweep.py --strategy steinitz-linf --sizes 64,128,256 --d 8
"""

import argparse
import json

from discwalk import harness


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--strategy", default="tusnady")
    ap.add_argument("--sizes", default="32,64,128")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--t", type=int, default=3)
    ap.add_argument("--ell", default="formula")
    ap.add_argument("--csv", default=None, help="write per-run rows here")
    args = ap.parse_args()

    sizes = tuple(int(v) for v in args.sizes.split(","))
    cfg = harness.ExperimentConfig(args.strategy, sizes, args.trials, args.seed, d=args.d,
                                   t=args.t, ell=harness.parse_ell(args.ell))
    res = harness.experiment(cfg)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(res.csv_text())
    s = res.summary
    print(f"{args.strategy}: disc / {s['predictor']}")
    for n in sizes:
        row = s["per_n"][n]
        print(f"  n={n:<5} median disc {row['median_disc']:8.3f}  ratio {row['ratio']:.3f}")
    flat = harness.flat_or_decreasing(s["ratios"])
    print(f"  trend: {'flat or decreasing' if flat else 'growing'}")
    print(json.dumps({"max_ratio": s["max_ratio"], "flat": flat}))


if __name__ == "__main__":
    main()
