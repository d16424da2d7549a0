"""Learner for axis-parallel boxes via per-coordinate boundary search
with axis-aligned halfspace queries (a family of VC dimension O(log d)).

For each signed axis the learner binary-searches the largest sample
coordinate v such that the halfspace beyond v still contains an example
the labeler refuses to call negative.  The resulting inner box is
contained in the true box, and every sample point outside it provably
violates a true constraint, so predicting +1 exactly on the inner box
labels the pool perfectly.  All answers are domain-robust: every queried
halfspace contains a sample point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .oracle import LearnResult, Oracle, PointSet, QuerySession
from .regions import AxisHalfspace

ALL_NEGATIVE = float("-inf")  # sentinel: the whole sample is negative along this test


@dataclass(frozen=True)
class AxisBox:
    """Product of per-coordinate closed intervals; entries may be +/-inf."""

    bounds: tuple  # tuple of (a_i, b_i)

    @staticmethod
    def make(bounds) -> "AxisBox":
        bs = tuple((float(a), float(b)) for a, b in bounds)
        for a, b in bs:
            if a > b:
                raise ValueError("box bounds must satisfy a <= b")
        return AxisBox(bs)

    @property
    def dim(self):
        return len(self.bounds)

    def predict(self, x) -> int:
        xv = np.asarray(x, dtype=float).ravel()
        inside = all(a <= v <= b for v, (a, b) in zip(xv, self.bounds))
        return 1 if inside else -1

    def predict_many(self, points: np.ndarray) -> np.ndarray:
        X = points[:, None] if points.ndim == 1 else points
        inside = np.ones(len(X), dtype=bool)
        for i, (a, b) in enumerate(self.bounds):
            inside &= (X[:, i] >= a) & (X[:, i] <= b)
        return np.where(inside, 1, -1).astype(np.int8)

    def to_json(self):
        return {"kind": "axis_box", "bounds": [list(p) for p in self.bounds]}


def find_boundary(pool: PointSet, coord: int, direction: int,
                  session: QuerySession) -> float:
    """Boundary estimate along the signed axis ``direction * e_coord``.

    Returns, in the w.x scale of the direction, the largest candidate
    value v among the sample's projections such that the query
    ({x : w.x >= v}, -1) answers 0, or ``ALL_NEGATIVE`` when already the
    query over the whole sample answers 1 (everything is negative).

    For direction +1 the returned value underestimates the true upper
    face; every sample point strictly beyond it is genuinely negative.
    Uses at most ceil(log2 n) + 1 queries; duplicate projections collapse
    to a single candidate threshold.
    """
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    X = pool.points
    col = X if X.ndim == 1 else X[:, coord]
    proj = direction * col

    def region(v):
        # {x : direction * x_coord >= v}
        if direction == 1:
            return AxisHalfspace(coord, "ge", float(v))
        return AxisHalfspace(coord, "le", float(-v))

    cand = np.unique(proj)  # ascending, duplicates collapsed
    if session.ask(region(cand[0]), -1) == 1:
        return ALL_NEGATIVE
    cand = cand.tolist()
    while len(cand) > 1:
        pos = len(cand) // 2  # larger of the two middles when even
        if session.ask(region(cand[pos]), -1) == 1:
            cand = cand[:pos]
        else:
            cand = cand[pos:]
    return float(cand[0])


def label_box(pool: PointSet, oracle: Oracle) -> LearnResult:
    """Label the whole pool when the target is an axis-parallel box,
    using at most 2d(ceil(log2 n) + 1) queries."""
    session = QuerySession(oracle)
    d = pool.dim
    lo = np.empty(d)
    hi = np.empty(d)
    for i in range(d):
        hi[i] = find_boundary(pool, i, 1, session)
        # the -e_i search returns -a_i in its own scale
        lo[i] = -find_boundary(pool, i, -1, session)
    X = pool.points[:, None] if pool.points.ndim == 1 else pool.points
    inside = np.ones(len(X), dtype=bool)
    for i in range(d):
        inside &= (X[:, i] >= lo[i]) & (X[:, i] <= hi[i])
    predictions = {int(i): (1 if inside[i] else -1) for i in range(len(pool))}
    return LearnResult(predictions, session.queries_used, rounds=2 * d)
