"""Command line interface: ``discwalk <command> ...``.

Exit codes: 0 success, 1 numerical failure, 2 guard refusal,
3 non-termination, 4 invalid input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import geometry, harness, oracles, uvc
from .engine import WalkParams
from .errors import DiscwalkError, InvalidInput


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise InvalidInput(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise InvalidInput(f"expected comma-separated integers, got {text!r}") from exc


def _emit(obj, out: str | None) -> None:
    text = harness.dump_json(obj, out)
    if not out:
        print(text)


def _params(args) -> WalkParams:
    return WalkParams(gamma=args.gamma, max_steps=args.max_steps, seed=args.seed,
                      trial=getattr(args, "trial", 0), tol=args.tol)


def cmd_gen(args) -> int:
    spec = harness.GeneratorSpec(args.family, args.n, m=args.m, t=args.t, d=args.d,
                                 seed=args.seed, skew=args.skew)
    inst = harness.generate(spec)
    if args.out:
        harness.save_instance(inst, args.out)
    else:
        print(json.dumps(inst.to_dict()))
    return 0


def cmd_run(args) -> int:
    inst = harness.load_instance(args.instance)
    monitors = harness.load_monitors(args.monitors) if args.monitors else None
    result, report = harness.single_run(inst, args.strategy, _params(args), monitors,
                                        harness.parse_ell(args.ell))
    _emit(report, args.out)
    return 0 if result.terminated else 3


def _uvc_problem(args) -> uvc.UvcProblem:
    obj = harness.load_json(args.input)
    try:
        n = int(obj["n"])
        w = np.asarray(obj.get("constraints", []), dtype=float).reshape(-1, n)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput("UVC input needs {n, constraints: [[...]]}") from exc
    beta = args.beta if args.beta is not None else obj.get("beta")
    if beta is None:
        raise InvalidInput("beta is required (--beta or a 'beta' field)")
    return uvc.UvcProblem(n, w, float(beta))


def cmd_uvc_solve(args) -> int:
    p = _uvc_problem(args)
    vc = uvc.solve_uvc(p, tol=args.tol, method=args.method)
    out = {"n": p.n, "beta": p.beta, "method": vc.method, "gram": vc.gram.tolist(),
           "trace": vc.trace_value, "guarantee": p.guarantee, "report": vc.report.as_dict()}
    if vc.dual is not None:
        out["dual"] = {"eta": np.asarray(vc.dual.eta).tolist(), "g": vc.dual.g.tolist(),
                       "q": vc.dual.q.tolist(), "objective": vc.dual.objective}
    _emit(out, args.out)
    return 0


def cmd_uvc_verify(args) -> int:
    p = _uvc_problem(args)
    sol = harness.load_json(args.solution)
    try:
        x = np.asarray(sol["gram"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput("solution file needs a 'gram' matrix") from exc
    if x.shape != (p.n, p.n):
        raise InvalidInput(f"gram has shape {x.shape}, expected {(p.n, p.n)}")
    report = uvc.verify_uvc(x, p, tol=args.tol)
    ok = report.ok(p, max(args.tol, 1e-7))
    _emit({"feasible": ok, "trace": float(np.trace(x)), "guarantee": p.guarantee,
           "report": report.as_dict()}, args.out)
    return 0 if ok else 1


def _points(path: str) -> geometry.PointSet:
    obj = harness.load_json(path)
    try:
        return geometry.PointSet(np.asarray(obj["points"], dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput("point file needs {d, points: [[...]]}") from exc


def _tree(args, p):
    ell = harness.parse_ell(args.ell)
    if ell == "auto":
        from .strategies import auto_ell
        ell = auto_ell(p.n, p.d)
    return geometry.build_canonical_boxes(p, None if ell == "formula" else ell)


def cmd_geom_boxes(args) -> int:
    p = _points(args.input)
    tree = _tree(args, p)
    out = {"n": p.n, "d": p.d, "ell": tree.ell, "block": tree.block, "count": len(tree.boxes),
           "census_bound": geometry.census_bound(p.n, p.d, tree.ell),
           "census": [{"type": list(k), "count": v} for k, v in sorted(tree.census().items())],
           "boxes": [{"id": b.box_id, "type": list(b.type_tag), "members": b.members.tolist()}
                     for b in tree.boxes]}
    _emit(out, args.out)
    return 0


def cmd_geom_decompose(args) -> int:
    p = _points(args.input)
    tree = _tree(args, p)
    box = geometry.Box(_floats(args.lows), _floats(args.highs))
    dec = geometry.decompose_box(box, tree, p)
    out = {"box": {"lows": list(box.lows), "highs": list(box.highs)}, "ell": tree.ell,
           "parts": [{"id": k, "members": tree.boxes[k].members.tolist()} for k in dec.parts],
           "leftover": dec.leftover.tolist(),
           "leftover_bound": geometry.leftover_bound(p.n, p.d, tree.ell)}
    _emit(out, args.out)
    return 0


def cmd_oracle_brute(args) -> int:
    inst = harness.load_instance(args.instance)
    pairs = harness.load_monitors(args.monitors) if args.monitors else None
    value, x = oracles.brute_force_discrepancy(inst.matrix(), pairs)
    _emit({"instance_digest": inst.digest(), "value": value, "coloring": x.tolist()}, args.out)
    return 0


def cmd_oracle_tail(args) -> int:
    obj = harness.load_json(args.config)
    if args.seed is not None:
        obj["seed"] = args.seed
    out = harness.tail_config_run(obj, os.path.dirname(os.path.abspath(args.config)))
    _emit(out, args.out)
    return 0


def cmd_experiment(args) -> int:
    cfg = harness.ExperimentConfig(args.strategy, _ints(args.sizes), args.trials, args.seed,
                                   d=args.d, t=args.t, ell=harness.parse_ell(args.ell),
                                   gamma=args.gamma, max_steps=args.max_steps)
    res = harness.experiment(cfg)
    text = res.csv_text()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.summary:
        harness.dump_json(res.summary, args.summary)
    else:
        print(json.dumps(res.summary), file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="discwalk", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, walk=False):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--tol", type=float, default=1e-9)
        if walk:
            p.add_argument("--gamma", type=float, default=None,
                           help="fixed step size (default: adaptive)")
            p.add_argument("--max-steps", type=int, default=None)
            p.add_argument("--ell", default="formula", help="Tusnady block floor: formula, auto or int")

    g = sub.add_parser("gen", help="generate an instance")
    common(g)
    g.add_argument("--family", required=True, choices=harness.FAMILIES)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, default=None)
    g.add_argument("--t", type=int, default=3)
    g.add_argument("--d", type=int, default=2)
    g.add_argument("--skew", type=float, default=1.0)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run the walk once")
    common(r, walk=True)
    r.add_argument("--instance", required=True)
    r.add_argument("--strategy", required=True)
    r.add_argument("--monitors", default=None)
    r.add_argument("--trial", type=int, default=0)
    r.set_defaults(func=cmd_run)

    u = sub.add_parser("uvc", help="vector coloring SDP")
    usub = u.add_subparsers(dest="action", required=True)
    us = usub.add_parser("solve")
    common(us)
    us.add_argument("--input", required=True)
    us.add_argument("--beta", type=float, default=None)
    us.add_argument("--method", default="auto", choices=("auto", "spectral", "ipm"))
    us.set_defaults(func=cmd_uvc_solve)
    uv = usub.add_parser("verify")
    common(uv)
    uv.add_argument("--input", required=True)
    uv.add_argument("--solution", required=True)
    uv.add_argument("--beta", type=float, default=None)
    uv.set_defaults(func=cmd_uvc_verify)

    gm = sub.add_parser("geom", help="canonical boxes")
    gsub = gm.add_subparsers(dest="action", required=True)
    gb = gsub.add_parser("boxes")
    common(gb)
    gb.add_argument("--input", required=True)
    gb.add_argument("--ell", default="formula")
    gb.set_defaults(func=cmd_geom_boxes)
    gd = gsub.add_parser("decompose")
    common(gd)
    gd.add_argument("--input", required=True)
    gd.add_argument("--ell", default="formula")
    gd.add_argument("--lows", required=True, help="comma-separated lower corner")
    gd.add_argument("--highs", required=True, help="comma-separated upper corner")
    gd.set_defaults(func=cmd_geom_decompose)

    o = sub.add_parser("oracle", help="exact and statistical checks")
    osub = o.add_subparsers(dest="action", required=True)
    ob = osub.add_parser("brute")
    common(ob)
    ob.add_argument("--instance", required=True)
    ob.add_argument("--monitors", default=None)
    ob.set_defaults(func=cmd_oracle_brute)
    ot = osub.add_parser("tail")
    ot.add_argument("--config", required=True)
    ot.add_argument("--out", default=None)
    ot.add_argument("--seed", type=int, default=None)
    ot.set_defaults(func=cmd_oracle_tail)

    e = sub.add_parser("experiment", help="scaling sweep to CSV")
    common(e, walk=True)
    e.add_argument("--strategy", required=True)
    e.add_argument("--sizes", default="32,64,128")
    e.add_argument("--trials", type=int, default=20)
    e.add_argument("--d", type=int, default=2)
    e.add_argument("--t", type=int, default=3)
    e.add_argument("--summary", default=None, help="write the ratio summary JSON here")
    e.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 4
    try:
        return int(args.func(args))
    except DiscwalkError as exc:
        print(f"discwalk: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, KeyError, TypeError) as exc:
        print(f"discwalk: invalid input: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
