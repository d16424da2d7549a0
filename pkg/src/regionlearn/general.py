"""Learner for arbitrary finite hypothesis families given as explicit
tables of labelings, plus the teaching-tree depth computation.

The table lists the restriction of the family to the pool: one row of
+/-1 entries per hypothesis, one column per pool point.  Each round finds
the shortest prefix of the ordered pool on which the running majority
vote isolates a block of between one third and two thirds of the
surviving rows, then spends two queries to either keep or discard that
block.  The version space shrinks by a factor >= 1/3 per round, so
2*ceil(log_{3/2} m) queries always suffice.

This learner requires the labeling domain to equal the pool; its query
regions are hypothesis-positive sets intersected with order intervals,
which only pin down pool points when the labeler sees exactly the pool.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .oracle import LearnResult, Oracle, PointSet, QuerySession
from .regions import HypothesisPositiveSet, Interval, order_key


@dataclass(frozen=True)
class HypothesisTable:
    """Explicit finite family of labelings of the pool (rows of +/-1).

    ``source`` optionally holds full-domain hypothesis handles realizing
    each row; when absent, rows are evaluated by table lookup.
    """

    rows: np.ndarray  # (m, n) int8 entries in {+1, -1}
    source: Optional[tuple] = None

    @staticmethod
    def make(rows, source=None) -> "HypothesisTable":
        arr = np.asarray(rows, dtype=np.int8)
        if arr.ndim != 2:
            raise ValueError("rows must be a 2-d array")
        if not np.all(np.abs(arr) == 1):
            raise ValueError("entries must be +1 or -1")
        seen = set()
        for r in arr:
            key = r.tobytes()
            if key in seen:
                raise ValueError("rows must be distinct")
            seen.add(key)
        if source is not None and len(source) != len(arr):
            raise ValueError("source length must match row count")
        return HypothesisTable(arr, None if source is None else tuple(source))

    def __len__(self) -> int:
        return len(self.rows)

    @staticmethod
    def from_csv(path) -> "HypothesisTable":
        with open(path, newline="") as fh:
            data = [[int(v) for v in row] for row in csv.reader(fh) if row]
        return HypothesisTable.make(data)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in self.rows:
                writer.writerow([int(v) for v in row])


class TabularHypothesis:
    """Hypothesis defined by a table row: label of x is the row entry at
    x's position in the pool.  Only evaluable on pool points."""

    def __init__(self, pool: PointSet, row):
        self.pool = pool
        self.row = np.asarray(row, dtype=np.int8)
        self._index = {t: i for i, t in enumerate(pool.coord_tuples())}

    def predict(self, x) -> int:
        t = (float(x),) if np.ndim(x) == 0 else tuple(float(v) for v in np.asarray(x).ravel())
        pos = self._index.get(t)
        if pos is None:
            raise ValueError(f"point {t} is not in the pool")
        return int(self.row[pos])

    def predict_many(self, points: np.ndarray) -> np.ndarray:
        pts = points[:, None] if points.ndim == 1 else points
        out = np.empty(len(pts), dtype=np.int8)
        for i, p in enumerate(pts):
            out[i] = self.predict(p)
        return out

    def to_json(self):
        return {"kind": "table_row", "row": [int(v) for v in self.row]}


def default_order(pool: PointSet) -> np.ndarray:
    """Ascending coordinate-lexicographic order (ties broken by id), the
    concrete strict total order used on numeric pools."""
    pts = pool.points
    if pts.ndim == 1:
        return np.lexsort((pool.ids, pts))
    cols = tuple(pts[:, c] for c in reversed(range(pts.shape[1])))
    return np.lexsort((pool.ids,) + cols)


def find_balanced_prefix(table: HypothesisTable, order: Sequence[int],
                         alive: Optional[np.ndarray] = None):
    """Walk the ordered pool maintaining the majority-prediction class:
    at each point keep the rows agreeing with the majority vote of the
    survivors (ties toward +1).  Stop at the first prefix length where
    the surviving block has at most 2/3 of the rows.

    Returns ``(i_star, rep, block)``: the prefix length, a representative
    row index, and the array of row indices agreeing with the
    representative on the prefix.  The block size is guaranteed to lie in
    [m/3, 2m/3] where m is the number of rows considered.
    """
    rows = table.rows
    if alive is None:
        alive = np.arange(len(rows))
    m = len(alive)
    if m <= 1:
        raise ValueError("need more than one hypothesis to split")
    current = alive
    for step, pos in enumerate(order):
        col = rows[current, pos]
        n_plus = int(np.sum(col == 1))
        majority = 1 if 2 * n_plus >= len(current) else -1
        current = current[col == majority]
        if 3 * len(current) <= 2 * m:
            return step + 1, int(current[0]), current
    raise RuntimeError("no balanced prefix found; table rows are not distinct")


def general_query_learn(pool: PointSet, table: HypothesisTable, oracle: Oracle,
                        order: Optional[Sequence[int]] = None) -> LearnResult:
    """Label the pool by version-space halving with two region queries per
    round.  Requires the labeling domain to equal the pool and the true
    labeling to appear among the table rows.
    """
    _check_domain_equals_pool(oracle, pool)
    if order is None:
        order = default_order(pool)
    order = np.asarray(order)
    session = QuerySession(oracle)
    keys = [order_key(pool.point(i)) for i in order]
    if len(set(keys)) != len(keys):
        raise ValueError("pool points must be distinct for the order intervals")
    alive = np.arange(len(table.rows))
    rounds = 0
    while len(alive) > 1:
        i_star, rep, block = find_balanced_prefix(table, order, alive)
        hyp = table.source[rep] if table.source is not None \
            else TabularHypothesis(pool, table.rows[rep])
        iv = Interval(keys[0], keys[i_star - 1])
        prefix = order[:i_star]
        rep_prefix = table.rows[rep, prefix]
        answers = []
        for sign in (1, -1):
            if not np.any(rep_prefix == sign):
                # region has no pool point; its constraint is vacuous
                answers.append(1)
                continue
            region = HypothesisPositiveSet(hyp, sign, iv)
            answers.append(session.ask(region, sign))
        if answers[0] == 1 and answers[1] == 1:
            alive = block
        else:
            keep = np.ones(len(alive), dtype=bool)
            keep[np.isin(alive, block)] = False
            alive = alive[keep]
        rounds += 1
        if len(alive) == 0:
            raise RuntimeError(
                "version space emptied: the true labeling is not in the table")
    row = table.rows[alive[0]]
    predictions = {int(i): int(row[i]) for i in range(len(pool))}
    return LearnResult(predictions, session.queries_used, rounds)


def _check_domain_equals_pool(oracle: Oracle, pool: PointSet):
    dom = set(oracle.domain.coord_tuples())
    pl = set(pool.coord_tuples())
    if dom != pl:
        raise ValueError("this learner requires the labeling domain to equal the pool")


# -- teaching trees ----------------------------------------------------------

@dataclass(frozen=True)
class TeachingInstance:
    """Tiny instance for exhaustive teaching-tree search."""

    table: HypothesisTable
    pool: PointSet
    queries: tuple  # tuple of (region, label)
    partial: dict   # point position -> +/-1

    def __post_init__(self):
        n = len(self.pool)
        if any(not 0 <= p < n for p in self.partial):
            raise ValueError("partial labeling domain must be pool positions")


def query_answer_bits(inst: TeachingInstance) -> np.ndarray:
    """bits[a, q]: answer of query q when hypothesis row a is the truth
    (labeling domain = pool; empty intersections answer 1 by convention)."""
    rows = inst.table.rows
    pts = list(inst.pool.points)
    bits = np.ones((len(rows), len(inst.queries)), dtype=np.int8)
    for qi, (region, label) in enumerate(inst.queries):
        member = [j for j, p in enumerate(pts) if region.contains(p)]
        for a in range(len(rows)):
            ok = all(rows[a, j] == label for j in member)
            bits[a, qi] = 1 if ok else 0
    return bits


def extension_mask(inst: TeachingInstance) -> np.ndarray:
    rows = inst.table.rows
    mask = np.ones(len(rows), dtype=bool)
    for pos, sign in inst.partial.items():
        mask &= rows[:, pos] == sign
    return mask


def teaching_tree_depth(inst: TeachingInstance) -> int:
    """Minimum depth of a teaching tree separating the partial labeling's
    extensions from the rest of the family: memoized min-max search over
    hypothesis subsets, splitting by query answer bits.

    Exhaustive; instances are capped at 16 hypotheses and 16 queries.
    Returns ``math.inf`` when no finite-depth tree exists (some mixed set
    is indistinguishable by every query).
    """
    if len(inst.table.rows) > 16 or len(inst.queries) > 16:
        raise ValueError("instance too large for exhaustive search")
    bits = query_answer_bits(inst)
    in_f = extension_mask(inst)
    f_set = frozenset(np.flatnonzero(in_f).tolist())
    nq = len(inst.queries)

    @lru_cache(maxsize=None)
    def depth(vset: frozenset) -> float:
        if vset <= f_set or not (vset & f_set):
            return 0
        best = math.inf
        for q in range(nq):
            ones = frozenset(a for a in vset if bits[a, q] == 1)
            zeros = vset - ones
            if not ones or not zeros:
                continue
            d = 1 + max(depth(ones), depth(zeros))
            if d < best:
                best = d
        return best

    return depth(frozenset(range(len(inst.table.rows))))
