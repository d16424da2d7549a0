"""Learner for unions of k intervals on the line, using only interval
queries (a query family of VC dimension 2).

The target partitions the line into at most 2k+1 maximal blocks of
constant label.  Each round binary-searches for the longest pure prefix
of the sorted remaining points, labels it, and removes it; at most 2k+1
rounds of O(log n) queries each are ever needed.  Every queried interval
starts at the smallest remaining sample point, so no query has an empty
intersection with the labeling domain and the answers are identical for
every consistent superset of the pool.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .oracle import LearnResult, Oracle, PointSet, QuerySession
from .regions import Interval


@dataclass(frozen=True)
class UnionOfIntervals:
    """Union of disjoint closed intervals; label +1 inside, -1 outside."""

    intervals: tuple  # tuple of (a, b) pairs, sorted, disjoint

    @staticmethod
    def make(intervals) -> "UnionOfIntervals":
        ivs = tuple((float(a), float(b)) for a, b in intervals)
        for a, b in ivs:
            if a > b:
                raise ValueError("interval endpoints must satisfy a <= b")
        for (_, b1), (a2, _) in zip(ivs, ivs[1:]):
            if a2 <= b1:
                raise ValueError("intervals must be disjoint and sorted")
        return UnionOfIntervals(ivs)

    def predict(self, x) -> int:
        v = float(x)
        return 1 if any(a <= v <= b for a, b in self.intervals) else -1

    def predict_many(self, points: np.ndarray) -> np.ndarray:
        v = np.asarray(points, dtype=float).ravel()
        inside = np.zeros(len(v), dtype=bool)
        for a, b in self.intervals:
            inside |= (v >= a) & (v <= b)
        return np.where(inside, 1, -1).astype(np.int8)

    def to_json(self):
        return {"kind": "union_of_intervals", "intervals": [list(p) for p in self.intervals]}


def find_left(values: np.ndarray, session: QuerySession):
    """Longest pure prefix of the ascending values, found by binary search.

    Returns ``(i_star, y)`` where ``i_star`` is the 1-based length of the
    longest prefix [values[0], values[i_star-1]] whose query answers 1 for
    some sign ``y``.  Prefix impurity is monotone (a mixed interval stays
    mixed when extended), which makes the halving sound for every
    labeling domain containing the sample.

    The search itself uses at most 2*ceil(log2 m) + 2 queries; resolving
    the sign of the final prefix costs at most one more when the binary
    search never answered it directly.
    """
    m = len(values)
    if m == 0:
        raise ValueError("empty input")
    lo = float(values[0])

    def prefix(hi, label):
        return session.ask(Interval(lo, float(hi)), label)

    if prefix(values[-1], 1) == 1:
        return m, 1
    if prefix(values[-1], -1) == 1:
        return m, -1

    cand = list(range(m))
    while len(cand) > 1:
        pos = len(cand) // 2  # median; the larger of the two middles when even
        mid = cand[pos]
        pure = prefix(values[mid], 1) == 1 or prefix(values[mid], -1) == 1
        if pure:
            cand = cand[pos:]
        else:
            cand = cand[:pos]
    i = cand[0]
    # Sign resolution: reuses the cached prefix answer when the search
    # already asked it; a pure prefix not positive must be negative.
    y = 1 if prefix(values[i], 1) == 1 else -1
    return i + 1, y


def label_k_intervals(pool: PointSet, oracle: Oracle) -> LearnResult:
    """Label the whole pool when the target is a union of intervals.

    Works against any labeling domain containing the pool.  Queries are
    O(k log n) for a k-interval target: at most 2k+1 prefix searches of
    at most 2(ceil(log2 n) + 2) queries each.
    """
    if pool.dim != 1:
        raise ValueError("interval learner needs scalar points")
    session = QuerySession(oracle)
    order = np.lexsort((pool.ids, pool.points))
    remaining = list(order)
    values = pool.points
    predictions = {}
    rounds = 0
    while remaining:
        vals = values[remaining]
        i_star, y = find_left(vals, session)
        for pos in remaining[:i_star]:
            predictions[int(pos)] = y
        remaining = remaining[i_star:]
        rounds += 1
    return LearnResult(predictions, session.queries_used, rounds)
