"""Instance generation, benchmark orchestration, and scaling fits.

Everything is seeded: per-trial seeds are spawned from the master seed
with a counter-based scheme, so a results row can be reproduced from its
config echo alone.  Results go to CSV (one row per parameter point and
trial); diagnostics to JSON.
"""

from __future__ import annotations

import csv
import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .boxes import AxisBox, label_box
from .general import HypothesisTable, TabularHypothesis, general_query_learn
from .halfspace_sdl import randomized_svm_learn
from .intervals import UnionOfIntervals, label_k_intervals
from .oracle import Oracle, PointSet
from .perceptron import learning_ltf

LEARNERS = ("intervals", "box", "halfspace", "halfspace-sdl", "general")
RESULT_FIELDS = ("learner", "kind", "n", "k", "d", "extra", "trial",
                 "seed", "oracle_seed", "policy", "queries_used", "rounds",
                 "correct_fraction", "wall_time_ms", "error")


@dataclass(frozen=True)
class Halfspace:
    """Homogeneous halfspace target: label is the sign of w.x (ties +1)."""

    w: tuple

    @staticmethod
    def make(w) -> "Halfspace":
        v = np.asarray(w, dtype=float).ravel()
        n = np.linalg.norm(v)
        if n == 0:
            raise ValueError("w must be nonzero")
        return Halfspace(tuple(v / n))

    def predict(self, x) -> int:
        s = float(np.dot(self.w, np.asarray(x, dtype=float).ravel()))
        return 1 if s >= 0 else -1

    def predict_many(self, points: np.ndarray) -> np.ndarray:
        X = points[:, None] if points.ndim == 1 else points
        return np.where(X @ np.asarray(self.w) >= 0, 1, -1).astype(np.int8)

    def to_json(self):
        return {"kind": "halfspace", "w": list(self.w)}


@dataclass
class Instance:
    pool: PointSet
    target: object
    domain: PointSet
    extras: dict = field(default_factory=dict)


def generate_instance(kind: str, params: dict, seed: int) -> Instance:
    """Draw a pool, a target from the requested family, and a labeling
    domain L = pool plus ``extra`` additional points (consistent with the
    target by construction, since the target labels the whole space).

    ``extra_mode="boundary"`` places the extra points close to the
    target's decision boundary to stress domain-robust learners.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n = int(params["n"])
    extra = int(params.get("extra", 0))
    mode = params.get("extra_mode", "same")
    if kind == "intervals":
        k = int(params.get("k", 1))
        pts = rng.uniform(0.0, 1.0, size=n)
        cuts = np.sort(rng.uniform(0.0, 1.0, size=2 * k))
        target = UnionOfIntervals.make(list(zip(cuts[0::2], cuts[1::2])))
        if mode == "boundary" and extra:
            ends = np.array([v for iv in target.intervals for v in iv])
            more = rng.choice(ends, size=extra) + rng.uniform(-1e-7, 1e-7, size=extra)
        else:
            more = rng.uniform(0.0, 1.0, size=extra)
        domain = np.concatenate([pts, more])
        return Instance(PointSet.make(pts), target, PointSet.make(domain))
    if kind == "box":
        d = int(params.get("d", 2))
        pts = rng.uniform(-1.0, 1.0, size=(n, d))
        corners = np.sort(rng.uniform(-1.0, 1.0, size=(d, 2)), axis=1)
        target = AxisBox.make([(a, b) for a, b in corners])
        if mode == "boundary" and extra:
            more = rng.uniform(-1.0, 1.0, size=(extra, d))
            faces = rng.integers(0, d, size=extra)
            sides = rng.integers(0, 2, size=extra)
            for i in range(extra):
                more[i, faces[i]] = corners[faces[i], sides[i]] + rng.uniform(-1e-7, 1e-7)
        else:
            more = rng.uniform(-1.0, 1.0, size=(extra, d))
        domain = np.vstack([pts, more])
        return Instance(PointSet.make(pts), target, PointSet.make(domain))
    if kind == "halfspace":
        d = int(params.get("d", 2))
        pts = rng.normal(size=(n, d))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        w = rng.normal(size=d)
        target = Halfspace.make(w)
        if mode == "boundary" and extra:
            more = rng.normal(size=(extra, d))
            wv = np.asarray(target.w)
            more -= np.outer(more @ wv, wv)      # project onto the boundary
            more += np.outer(rng.uniform(-1e-7, 1e-7, size=extra), wv)
            norms = np.linalg.norm(more, axis=1, keepdims=True)
            norms[norms == 0] = 1.0
            more /= norms
        else:
            more = rng.normal(size=(extra, d))
            if extra:
                more /= np.linalg.norm(more, axis=1, keepdims=True)
        domain = np.vstack([pts, more])
        return Instance(PointSet.make(pts), target, PointSet.make(domain))
    if kind == "finite":
        pts = np.sort(rng.uniform(0.0, 1.0, size=n))
        pool = PointSet.make(pts)
        table = threshold_table(pool)
        row_idx = int(rng.integers(0, len(table.rows)))
        target = TabularHypothesis(pool, table.rows[row_idx])
        return Instance(pool, target, pool,
                        extras={"table": table, "target_row": row_idx})
    raise ValueError(f"unknown instance kind {kind!r}")


def threshold_table(pool: PointSet) -> HypothesisTable:
    """All threshold labelings of a scalar pool: n+1 distinct rows, row i
    labels the i largest points positive."""
    order = np.argsort(pool.points, kind="stable")
    n = len(pool)
    rows = np.full((n + 1, n), -1, dtype=np.int8)
    for i in range(n + 1):
        rows[i, order[n - i:]] = 1
    return HypothesisTable.make(rows)


def run_single(learner: str, instance: Instance, policy: str = "seeded_random",
               oracle_seed: int = 0, learner_seed: int = 0,
               alpha: float | None = None):
    """One learner run against a fresh oracle; returns (result, correct
    fraction, elapsed ms)."""
    oracle = Oracle(instance.target, instance.domain, sample=instance.pool,
                    empty_policy=policy, seed=oracle_seed)
    t0 = time.perf_counter()
    if learner == "intervals":
        result = label_k_intervals(instance.pool, oracle)
    elif learner == "box":
        result = label_box(instance.pool, oracle)
    elif learner == "halfspace":
        a = alpha if alpha is not None else 1.0 / (2 * len(instance.pool))
        result = learning_ltf(instance.pool, a, oracle, init_seed=learner_seed)
    elif learner == "halfspace-sdl":
        result = randomized_svm_learn(instance.pool, oracle, perm_seed=learner_seed)
    elif learner == "general":
        result = general_query_learn(instance.pool, instance.extras["table"], oracle)
    else:
        raise ValueError(f"unknown learner {learner!r}")
    elapsed_ms = (time.perf_counter() - t0) * 1000.0
    truth = instance.target.predict_many(instance.pool.points)
    n = len(instance.pool)
    correct = sum(1 for i in range(n) if result.predictions.get(i) == int(truth[i]))
    return result, correct / n, elapsed_ms


def _trial_row(args: dict) -> dict:
    row = {f: args.get(f, "") for f in RESULT_FIELDS}
    try:
        params = {k: args[k] for k in ("n", "k", "d", "extra") if args.get(k) != ""}
        instance = generate_instance(args["kind"], params, args["instance_seed"])
        result, frac, ms = run_single(
            args["learner"], instance, policy=args["policy"],
            oracle_seed=args["oracle_seed"], learner_seed=args["learner_seed"],
            alpha=args.get("alpha"))
        row.update(queries_used=result.queries_used, rounds=result.rounds,
                   correct_fraction=frac, wall_time_ms=round(ms, 3), error="")
    except Exception as exc:  # record failures per-row, keep sweeping
        row.update(queries_used="", rounds="", correct_fraction="",
                   wall_time_ms="", error=f"{type(exc).__name__}: {exc}")
    return row


@dataclass
class ExperimentConfig:
    """Benchmark sweep: list-valued instance parameters are crossed."""

    learner: str
    kind: str
    n: object = 256
    k: object = None
    d: object = None
    extra: int = 0
    alpha: float | None = None
    policy: str = "seeded_random"
    trials: int = 1
    seed: int = 0
    out: str | None = None

    @staticmethod
    def from_json(path) -> "ExperimentConfig":
        with open(path) as fh:
            return ExperimentConfig(**json.load(fh))

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


def run_benchmark(config: ExperimentConfig, jobs: int = 1) -> list[dict]:
    """One row per (parameter point x trial), deterministic under the
    master seed; rows are ordered by the config grid regardless of the
    number of worker processes."""
    if config.learner not in LEARNERS:
        raise ValueError(f"unknown learner {config.learner!r}")
    grid_axes = []
    for name in ("n", "k", "d"):
        val = getattr(config, name)
        if val is None:
            grid_axes.append([(name, None)])
        elif isinstance(val, (list, tuple)):
            grid_axes.append([(name, v) for v in val])
        else:
            grid_axes.append([(name, val)])
    tasks = []
    for pt_idx, combo in enumerate(itertools.product(*grid_axes)):
        point = {name: v for name, v in combo if v is not None}
        for trial in range(config.trials):
            ss = np.random.SeedSequence(config.seed, spawn_key=(pt_idx, trial))
            inst_seed, oracle_seed, learner_seed = [
                int(s.generate_state(1)[0]) for s in ss.spawn(3)]
            args = {"learner": config.learner, "kind": config.kind,
                    "extra": config.extra, "alpha": config.alpha,
                    "policy": config.policy, "trial": trial,
                    "seed": config.seed,
                    "instance_seed": inst_seed, "oracle_seed": oracle_seed,
                    "learner_seed": learner_seed}
            args.update(point)
            tasks.append(args)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_trial_row, tasks))
    else:
        rows = [_trial_row(t) for t in tasks]
    if config.out:
        write_results_csv(config.out, rows)
    return rows


def write_results_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({f: row.get(f, "") for f in RESULT_FIELDS})


def read_results_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def fit_log_slope(rows, group_keys=("k",)) -> dict:
    """Per-group least squares of mean queries against log2 n.

    Returns {group value(s): {"slope", "intercept", "r2"}}; every group
    needs at least three distinct n.
    """
    groups: dict = {}
    for row in rows:
        if row.get("error"):
            continue
        key = tuple(row.get(g) for g in group_keys)
        groups.setdefault(key, {}).setdefault(int(row["n"]), []).append(
            float(row["queries_used"]))
    out = {}
    for key, by_n in groups.items():
        if len(by_n) < 3:
            raise ValueError(f"group {key} has fewer than 3 distinct n")
        ns = np.array(sorted(by_n))
        means = np.array([np.mean(by_n[n]) for n in ns])
        x = np.log2(ns)
        slope, intercept = np.polyfit(x, means, 1)
        pred = slope * x + intercept
        ss_res = float(np.sum((means - pred) ** 2))
        ss_tot = float(np.sum((means - means.mean()) ** 2))
        r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
        out[key if len(group_keys) > 1 else key[0]] = {
            "slope": float(slope), "intercept": float(intercept), "r2": r2}
    return out
