"""Point pools and the simulated region-query labeler.

The labeler holds a hidden target hypothesis ``h*`` and a labeling domain
``L`` that contains the learner's pool ``S``.  A query ``(T, z)`` is
answered 1 iff every point of ``L`` inside the region ``T`` has label
``z`` under ``h*``.  When ``L`` intersected with ``T`` is empty the answer
is dictated by the configured policy (the labeler is free to answer
arbitrarily in that case, so learners must never rely on it).

Only the answer bit crosses the interface: no counterexamples, no labels.

For the benchmark scales used here the naive per-query scan over ``L`` is
too slow, so the oracle keeps sorted-coordinate prefix sums (interval and
axis-halfspace queries), a coordinate hash (finite sets, anchors), and a
per-transform image cache (pullback polytopes).  Every fast path computes
the same float comparisons as ``region.contains``.
"""

from __future__ import annotations

import bisect
import csv
import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .regions import (
    SPAN_TOL,
    AxisHalfspace,
    FiniteSet,
    HalfspacePolytope,
    HypothesisPositiveSet,
    Interval,
    TransformedPolytope,
    region_to_json,
)

EMPTY_POLICIES = ("seeded_random", "always_one", "always_zero")


@dataclass(frozen=True)
class PointSet:
    """Finite ordered pool of points with stable ids 0..n-1.

    ``points`` is an (n,) array for 1-d ordered domains or an (n, d) array
    for vector domains.
    """

    points: np.ndarray
    ids: np.ndarray

    @staticmethod
    def make(points) -> "PointSet":
        arr = np.asarray(points, dtype=float)
        if arr.ndim not in (1, 2):
            raise ValueError("points must be a 1-d or 2-d array")
        if arr.ndim == 2 and arr.shape[1] == 0:
            raise ValueError("points must have dimension >= 1")
        return PointSet(arr, np.arange(len(arr)))

    @property
    def dim(self) -> int:
        return 1 if self.points.ndim == 1 else self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def point(self, i: int):
        return self.points[i]

    def coord_tuples(self):
        if self.points.ndim == 1:
            return [(float(v),) for v in self.points]
        return [tuple(float(v) for v in row) for row in self.points]


def load_points_csv(path) -> PointSet:
    """Read a pool from CSV with header ``id,x1,...,xd``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "id":
            raise ValueError("expected CSV header starting with 'id'")
        d = len(header) - 1
        rows = sorted(reader, key=lambda r: int(r[0]))
        ids = [int(r[0]) for r in rows]
        if ids != list(range(len(ids))):
            raise ValueError("ids must be contiguous from 0")
        data = [[float(v) for v in r[1:]] for r in rows]
    arr = np.array(data, dtype=float)
    if d == 1:
        arr = arr.ravel()
    return PointSet.make(arr)


def write_points_csv(path, ps: PointSet):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        d = ps.dim
        writer.writerow(["id"] + [f"x{i+1}" for i in range(d)])
        for i, p in enumerate(ps.points):
            row = [p] if d == 1 else list(p)
            writer.writerow([i] + [repr(float(v)) for v in row])


@dataclass(frozen=True)
class RegionQuery:
    region: object
    label: int

    def __post_init__(self):
        if self.label not in (1, -1):
            raise ValueError("query label must be +1 or -1")


@dataclass
class TranscriptEntry:
    region: object
    label: int
    answer: int

    def to_json(self) -> dict:
        return {"region": region_to_json(self.region),
                "label": self.label, "answer": self.answer}


class Oracle:
    """Simulated labeler over a labeling domain ``L`` that contains the
    learner's pool ``S`` (checked at construction when ``sample`` is given).
    """

    def __init__(self, target, domain: PointSet, sample: Optional[PointSet] = None,
                 empty_policy: str = "seeded_random", seed: int = 0):
        if empty_policy not in EMPTY_POLICIES:
            raise ValueError(f"unknown empty policy {empty_policy!r}")
        self.target = target
        self.domain = domain
        self.sample = sample
        self.empty_policy = empty_policy
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        self.transcript: list[TranscriptEntry] = []
        self._labels = _evaluate_hypothesis(target, domain.points)
        self._coord_index = None
        self._sorted_1d = None
        self._axis_cache = {}
        self._transform_cache = {}
        if sample is not None:
            idx = self._coords()
            missing = [t for t in sample.coord_tuples() if t not in idx]
            if missing:
                raise ValueError(
                    f"sample is not contained in the labeling domain "
                    f"({len(missing)} points missing, e.g. {missing[0]})")

    # -- public interface ------------------------------------------------

    @property
    def n_queries(self) -> int:
        return len(self.transcript)

    def answer(self, query: RegionQuery) -> int:
        """Answer a region query per the membership semantics; the result
        is appended to the transcript."""
        nonempty, all_match = self._evaluate(query.region, query.label)
        if nonempty:
            ans = int(all_match)
        else:
            ans = self._empty_answer()
        self.transcript.append(TranscriptEntry(query.region, query.label, ans))
        return ans

    def label_point(self, x) -> int:
        """Label of a single pool point, at the cost of one query.

        The point is checked against the learner's pool ``S`` (the learner
        only ever knows ``S``).
        """
        key = _coord_tuple(x)
        if self.sample is not None and key not in set(self.sample.coord_tuples()):
            raise ValueError(f"point {key} is not in the learner's pool")
        ans = self.answer(RegionQuery(FiniteSet.make([x]), 1))
        return 1 if ans == 1 else -1

    def export_transcript_jsonl(self, path):
        with open(path, "w") as fh:
            for entry in self.transcript:
                fh.write(json.dumps(entry.to_json()) + "\n")

    # -- evaluation ------------------------------------------------------

    def _empty_answer(self) -> int:
        if self.empty_policy == "always_one":
            return 1
        if self.empty_policy == "always_zero":
            return 0
        return int(self._rng.integers(0, 2))

    def _evaluate(self, region, label):
        """Return (nonempty, all_match) for the region over L."""
        if isinstance(region, Interval) and self.domain.points.ndim == 1 \
                and not isinstance(region.lo, tuple):
            return self._eval_interval(region, label)
        if isinstance(region, AxisHalfspace):
            return self._eval_axis(region, label)
        if isinstance(region, FiniteSet):
            return self._eval_finite(region.points, label)
        if isinstance(region, TransformedPolytope):
            return self._eval_transformed(region, label)
        mask = self._member_mask(region)
        if not mask.any():
            return False, True
        return True, bool(np.all(self._labels[mask] == label))

    def _member_mask(self, region) -> np.ndarray:
        pts = self.domain.points
        if isinstance(region, HalfspacePolytope):
            return _polytope_mask(region, np.atleast_2d(pts.T).T if pts.ndim == 1 else pts)
        if isinstance(region, HypothesisPositiveSet):
            preds = _evaluate_hypothesis(region.hypothesis, pts)
            mask = preds == region.sign
            if region.interval is not None:
                mask &= self._interval_mask(region.interval)
            return mask
        return np.array([region.contains(p) for p in pts], dtype=bool)

    def _interval_mask(self, iv: Interval) -> np.ndarray:
        pts = self.domain.points
        if pts.ndim == 1 and not isinstance(iv.lo, tuple):
            return (pts >= iv.lo) & (pts <= iv.hi)
        return np.array([iv.contains(p) for p in pts], dtype=bool)

    def _eval_interval(self, region: Interval, label):
        vals, pos_prefix = self._sorted_1d_index()
        lo = bisect.bisect_left(vals, region.lo)
        hi = bisect.bisect_right(vals, region.hi)
        cnt = hi - lo
        if cnt == 0:
            return False, True
        pos = pos_prefix[hi] - pos_prefix[lo]
        match = pos if label == 1 else cnt - pos
        return True, match == cnt

    def _eval_axis(self, region: AxisHalfspace, label):
        pts = self.domain.points
        coord = region.coord
        if pts.ndim == 1:
            if coord != 0:
                raise ValueError("axis halfspace coordinate out of range")
            col_key = 0
        else:
            col_key = coord
        vals, pos_prefix = self._axis_index(col_key)
        n = len(vals)
        if region.sense == "ge":
            lo = bisect.bisect_left(vals, region.threshold)
            cnt = n - lo
            pos = pos_prefix[n] - pos_prefix[lo]
        else:
            hi = bisect.bisect_right(vals, region.threshold)
            cnt = hi
            pos = pos_prefix[hi]
        if cnt == 0:
            return False, True
        match = pos if label == 1 else cnt - pos
        return True, match == cnt

    def _eval_finite(self, coord_tuples, label):
        index = self._coords()
        found = False
        for t in coord_tuples:
            lab = index.get(t)
            if lab is None:
                continue
            found = True
            if lab != label:
                return True, False
        return found, True

    def _eval_transformed(self, region: TransformedPolytope, label):
        images, valid, span_ok = self._transform_images(region)
        mask = span_ok.copy()
        if mask.any():
            inner_mask = _polytope_mask(region.inner, images, valid)
            mask &= inner_mask
        if region.anchor is not None:
            lab = self._coords().get(region.anchor)
            if lab is not None:
                if lab != label:
                    return True, False
                # anchor matches; region is nonempty regardless of the rest
                if not mask.any():
                    return True, True
        if not mask.any():
            return False, True
        return True, bool(np.all(self._labels[mask] == label))

    # -- cached indexes ----------------------------------------------------

    def _coords(self):
        """Coordinate tuple -> label (h* is a function of coordinates, so
        duplicates share a label)."""
        if self._coord_index is None:
            self._coord_index = {
                t: int(l) for t, l in zip(self.domain.coord_tuples(), self._labels)}
        return self._coord_index

    def _sorted_1d_index(self):
        if self._sorted_1d is None:
            order = np.argsort(self.domain.points, kind="stable")
            vals = self.domain.points[order]
            pos = np.concatenate([[0], np.cumsum(self._labels[order] == 1)])
            self._sorted_1d = (vals.tolist(), pos)
        return self._sorted_1d

    def _axis_index(self, coord):
        if coord not in self._axis_cache:
            pts = self.domain.points
            col = pts if pts.ndim == 1 else pts[:, coord]
            order = np.argsort(col, kind="stable")
            vals = col[order]
            pos = np.concatenate([[0], np.cumsum(self._labels[order] == 1)])
            self._axis_cache[coord] = (vals.tolist(), pos)
        return self._axis_cache[coord]

    def _transform_images(self, region: TransformedPolytope):
        key = (region.transform.tobytes(), region.basis.tobytes())
        cached = self._transform_cache.get(key)
        if cached is None:
            pts = self.domain.points
            X = pts[:, None] if pts.ndim == 1 else pts
            resid = X - (X @ region.basis) @ region.basis.T
            scale = np.maximum(1.0, np.linalg.norm(X, axis=1))
            span_ok = np.linalg.norm(resid, axis=1) <= SPAN_TOL * scale
            img = X @ region.transform.T
            nrm = np.linalg.norm(img, axis=1)
            valid = nrm > 0
            images = np.zeros_like(img)
            images[valid] = img[valid] / nrm[valid, None]
            span_ok &= valid
            if len(self._transform_cache) >= 8:
                self._transform_cache.clear()
            self._transform_cache[key] = (images, valid, span_ok)
            cached = self._transform_cache[key]
        return cached


def _polytope_mask(poly: HalfspacePolytope, X: np.ndarray,
                   valid: Optional[np.ndarray] = None) -> np.ndarray:
    mask = np.ones(len(X), dtype=bool)
    if valid is not None:
        mask &= valid
    if poly.on_unit_sphere:
        mask &= np.abs(np.linalg.norm(X, axis=1) - 1.0) <= 1e-9
    for w, sense, b in poly.rows:
        s = X @ np.asarray(w)
        mask &= (s >= b) if sense == "ge" else (s <= b)
    return mask


def _evaluate_hypothesis(hyp, points: np.ndarray) -> np.ndarray:
    if hasattr(hyp, "predict_many"):
        return np.asarray(hyp.predict_many(points), dtype=np.int8)
    return np.array([int(hyp.predict(p)) for p in points], dtype=np.int8)


@dataclass
class LearnResult:
    """Outcome of one learner run: per-id predicted signs, the number of
    oracle queries consumed, and the number of adaptive rounds."""

    predictions: dict
    queries_used: int
    rounds: int


class QuerySession:
    """Per-run view of an oracle: counts queries and answers repeated
    queries from a cache instead of re-asking.

    Re-asking an identical query cannot produce new information (the
    labeler is deterministic given the hidden hypothesis once the region
    is nonempty), so cache hits are free; ``queries_used`` equals the
    transcript growth of the underlying oracle.
    """

    def __init__(self, oracle: Oracle):
        self.oracle = oracle
        self.queries_used = 0
        self._cache = {}

    def ask(self, region, label: int) -> int:
        key = (region.cache_key(), label)
        if key in self._cache:
            return self._cache[key]
        ans = self.oracle.answer(RegionQuery(region, label))
        self.queries_used += 1
        self._cache[key] = ans
        return ans


class QueryBudgetExceeded(RuntimeError):
    pass


class BudgetedSession(QuerySession):
    """Session that raises once a query budget is exhausted."""

    def __init__(self, oracle: Oracle, budget: int):
        super().__init__(oracle)
        self.budget = budget

    def ask(self, region, label: int) -> int:
        key = (region.cache_key(), label)
        if key in self._cache:
            return self._cache[key]
        if self.queries_used >= self.budget:
            raise QueryBudgetExceeded(f"query budget {self.budget} exhausted")
        return super().ask(region, label)
