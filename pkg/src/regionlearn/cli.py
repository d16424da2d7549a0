"""Command-line front end.

Subcommands: ``learn`` (run one learner against a simulated labeler),
``bench`` (seeded sweeps to CSV), ``lowerbound`` (hardness experiment),
``vc`` (probe-set VC estimate), ``teachtree`` (teaching-tree depth),
``forster-check`` (transform diagnostics).  Any invariant violation
exits nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .boxes import AxisBox
from .forster import ForsterFailure, forster_transform, isotropy_check
from .general import HypothesisTable, TabularHypothesis, TeachingInstance, teaching_tree_depth
from .harness import (ExperimentConfig, Halfspace, Instance, generate_instance,
                      run_benchmark, run_single, threshold_table)
from .intervals import UnionOfIntervals
from .lowerbound import low_intersection_family, run_lower_bound_experiment
from .oracle import PointSet, load_points_csv
from .regions import (AxisHalfspace, FiniteSet, Interval, empirical_vc_dimension,
                      region_from_json)


def target_from_json(data: dict, pool: PointSet):
    kind = data["kind"]
    if kind == "union_of_intervals":
        return UnionOfIntervals.make(data["intervals"])
    if kind == "axis_box":
        return AxisBox.make(data["bounds"])
    if kind == "halfspace":
        return Halfspace.make(data["w"])
    if kind == "table_row":
        return TabularHypothesis(pool, data["row"])
    raise ValueError(f"unknown target kind {kind!r}")


def _cmd_learn(args) -> int:
    if args.input:
        pool = load_points_csv(args.input)
        with open(args.target) as fh:
            target = target_from_json(json.load(fh), pool)
        domain = load_points_csv(args.domain) if args.domain else pool
        extras = {}
        if args.learner == "general":
            extras["table"] = (HypothesisTable.from_csv(args.table)
                               if args.table else threshold_table(pool))
        instance = Instance(pool, target, domain, extras)
    else:
        params = {"n": args.n, "extra": args.extra}
        if args.k is not None:
            params["k"] = args.k
        if args.d is not None:
            params["d"] = args.d
        kind = {"intervals": "intervals", "box": "box", "halfspace": "halfspace",
                "halfspace-sdl": "halfspace", "general": "finite"}[args.learner]
        instance = generate_instance(kind, params, args.seed)
    result, frac, ms = run_single(
        args.learner, instance, policy=args.policy, oracle_seed=args.oracle_seed,
        learner_seed=args.perm_seed if args.learner == "halfspace-sdl" else args.init_seed,
        alpha=args.alpha)
    summary = {"learner": args.learner, "n": len(instance.pool),
               "queries_used": result.queries_used, "rounds": result.rounds,
               "correct_fraction": frac, "wall_time_ms": round(ms, 3)}
    print(json.dumps(summary, indent=2, sort_keys=True))
    if args.out:
        with open(args.out, "w") as fh:
            for i in sorted(result.predictions):
                fh.write(f"{i},{result.predictions[i]}\n")
    if frac < 1.0 and args.learner != "halfspace":
        print("warning: imperfect labeling", file=sys.stderr)
        return 1
    return 0


def _cmd_bench(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    if args.out:
        config.out = args.out
    rows = run_benchmark(config, jobs=args.jobs)
    failures = [r for r in rows if r["error"]]
    print(json.dumps({"rows": len(rows), "failures": len(failures),
                      "out": config.out}, indent=2))
    return 1 if failures else 0


def _cmd_lowerbound(args) -> int:
    fam = low_intersection_family(args.k, args.gamma, args.sets, seed=args.seed)
    budget = args.budget if args.budget is not None else args.k // (2 * max(args.gamma, 1))
    report = run_lower_bound_experiment(fam, trials=args.trials, budget=budget,
                                        seed=args.seed)
    out = {"achieved_N": report["achieved_n"],
           "gamma_verified": report["gamma_verified"],
           "error_frequency": report["error_frequency"],
           "coverage_histogram": report["coverage_histogram"],
           "replay_violations": report["replay_violations"],
           "budget": budget}
    print(json.dumps(out, indent=2, sort_keys=True))
    return 1 if report["replay_violations"] else 0


def _builtin_family(name: str, probes: np.ndarray):
    if name == "intervals":
        vals = sorted(float(v) for v in np.atleast_1d(probes))
        return [Interval(a, b) for a in vals for b in vals if a <= b]
    if name == "axis-halfspaces":
        pts = np.atleast_2d(probes)
        fam = []
        for c in range(pts.shape[1]):
            for t in sorted(set(pts[:, c])):
                fam.append(AxisHalfspace(c, "ge", float(t)))
                fam.append(AxisHalfspace(c, "le", float(t)))
        return fam
    if name == "singletons":
        return [FiniteSet.make([p]) for p in np.atleast_1d(probes)]
    raise ValueError(f"unknown family {name!r}")


def _cmd_vc(args) -> int:
    if args.input:
        probes = load_points_csv(args.input).points
    else:
        probes = np.array([float(v) for v in args.probes.split(",")])
    fam = _builtin_family(args.family, probes)
    probe_list = list(probes if probes.ndim > 1 else probes)
    dim = empirical_vc_dimension(fam, probe_list, args.max_k)
    print(json.dumps({"family": args.family, "probes": len(probe_list),
                      "empirical_vc_dimension": dim}))
    return 0


def _cmd_teachtree(args) -> int:
    pool = load_points_csv(args.pool)
    table = HypothesisTable.from_csv(args.table)
    with open(args.queries) as fh:
        queries = tuple((region_from_json(q["region"]), q["label"])
                        for q in json.load(fh))
    with open(args.partial) as fh:
        partial = {int(k): int(v) for k, v in json.load(fh).items()}
    inst = TeachingInstance(table, pool, queries, partial)
    depth = teaching_tree_depth(inst)
    print(json.dumps({"depth": depth if depth != float("inf") else None}))
    return 0


def _cmd_forster_check(args) -> int:
    pool = load_points_csv(args.input)
    try:
        res = forster_transform(pool.points, eps=args.eps)
    except ForsterFailure as exc:
        print(json.dumps({"ok": False, "error": str(exc),
                          "diagnostics": exc.diagnostics}, default=str))
        return 1
    print(json.dumps({"ok": True, "k": res.k, "kept": len(res.kept_ids),
                      "n": len(pool), "eps": res.eps,
                      "iterations": res.iterations,
                      "isotropy": bool(isotropy_check(res.coords, res.eps))}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="regionlearn",
                                description="active learning with region queries")
    sub = p.add_subparsers(dest="command", required=True)

    learn = sub.add_parser("learn", help="run a learner against a simulated labeler")
    learn.add_argument("learner", choices=("intervals", "box", "halfspace",
                                           "halfspace-sdl", "general"))
    learn.add_argument("--input", help="pool CSV (id,x1,...,xd)")
    learn.add_argument("--target", help="target hypothesis JSON (with --input)")
    learn.add_argument("--domain", help="labeling domain CSV (defaults to the pool)")
    learn.add_argument("--table", help="hypothesis table CSV (general learner)")
    learn.add_argument("--n", type=int, default=64, help="pool size when generating")
    learn.add_argument("--k", type=int, help="intervals in the generated target")
    learn.add_argument("--d", type=int, help="dimension of the generated instance")
    learn.add_argument("--extra", type=int, default=0,
                       help="extra labeling-domain points when generating")
    learn.add_argument("--alpha", type=float, help="unlabeled fraction tolerated")
    learn.add_argument("--seed", type=int, default=0, help="instance seed")
    learn.add_argument("--oracle-seed", type=int, default=0)
    learn.add_argument("--perm-seed", type=int, default=0)
    learn.add_argument("--init-seed", type=int, default=0)
    learn.add_argument("--policy", default="seeded_random",
                       choices=("seeded_random", "always_one", "always_zero"))
    learn.add_argument("--out", help="write predictions CSV here")
    learn.set_defaults(func=_cmd_learn)

    bench = sub.add_parser("bench", help="run a benchmark sweep")
    bench.add_argument("--config", required=True)
    bench.add_argument("--out")
    bench.add_argument("--jobs", type=int, default=1)
    bench.set_defaults(func=_cmd_bench)

    lb = sub.add_parser("lowerbound", help="query-budget hardness experiment")
    lb.add_argument("--k", type=int, required=True)
    lb.add_argument("--gamma", type=int, required=True)
    lb.add_argument("--trials", type=int, default=300)
    lb.add_argument("--budget", type=int)
    lb.add_argument("--sets", type=int, default=16)
    lb.add_argument("--seed", type=int, default=0)
    lb.set_defaults(func=_cmd_lowerbound)

    vc = sub.add_parser("vc", help="probe-set VC dimension of a region family")
    vc.add_argument("--family", required=True,
                    choices=("intervals", "axis-halfspaces", "singletons"))
    vc.add_argument("--probes", help="comma-separated scalar probes")
    vc.add_argument("--input", help="probe points CSV")
    vc.add_argument("--max-k", type=int, default=6)
    vc.set_defaults(func=_cmd_vc)

    tt = sub.add_parser("teachtree", help="teaching-tree depth of a tiny instance")
    tt.add_argument("--pool", required=True)
    tt.add_argument("--table", required=True)
    tt.add_argument("--queries", required=True)
    tt.add_argument("--partial", required=True)
    tt.set_defaults(func=_cmd_teachtree)

    fc = sub.add_parser("forster-check", help="isotropy transform diagnostics")
    fc.add_argument("--input", required=True)
    fc.add_argument("--eps", type=float)
    fc.set_defaults(func=_cmd_forster_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # invariant violations exit nonzero
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
