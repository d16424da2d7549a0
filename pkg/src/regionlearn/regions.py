"""Query regions: membership tests, JSON round-trips, and a brute-force
VC-dimension probe.

Every learner in this package phrases its questions as ``(region, label)``
pairs, so the region vocabulary lives here.  Descriptors are immutable and
membership is pure; the labeler and the learners may therefore share them
freely.

``empirical_vc_dimension`` is a probe-set *lower bound*: it certifies that
some subset of the probe points is shattered.  It never claims anything
about the true VC dimension of a continuous family.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Callable, Optional, Sequence

import numpy as np

SPAN_TOL = 1e-9  # subspace-membership tolerance for transformed polytopes
UNIT_TOL = 1e-9  # |norm - 1| tolerance for sphere-restricted polytopes


def order_key(x):
    """Total-order key for a point: the scalar itself in 1-d, else the
    coordinate tuple (lexicographic)."""
    if np.ndim(x) == 0:
        return float(x)
    return tuple(float(v) for v in np.asarray(x).ravel())


def _as_tuple(x):
    if np.ndim(x) == 0:
        return (float(x),)
    return tuple(float(v) for v in np.asarray(x).ravel())


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] in the domain's total order."""

    lo: object
    hi: object

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"interval requires lo <= hi, got {self.lo} > {self.hi}")

    def contains(self, x) -> bool:
        k = order_key(x)
        return self.lo <= k <= self.hi

    def cache_key(self):
        return ("interval", self.lo, self.hi)

    def to_json(self):
        return {"kind": "interval", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class AxisHalfspace:
    """{x : x[coord] >= threshold} or {x : x[coord] <= threshold}."""

    coord: int
    sense: str  # "ge" or "le"
    threshold: float

    def __post_init__(self):
        if self.sense not in ("ge", "le"):
            raise ValueError(f"sense must be 'ge' or 'le', got {self.sense!r}")

    def contains(self, x) -> bool:
        v = float(np.asarray(x).ravel()[self.coord])
        return v >= self.threshold if self.sense == "ge" else v <= self.threshold

    def cache_key(self):
        return ("axis", self.coord, self.sense, self.threshold)

    def to_json(self):
        return {"kind": "axis_halfspace", "coord": self.coord,
                "sense": self.sense, "threshold": self.threshold}


@dataclass(frozen=True)
class HalfspacePolytope:
    """Intersection of linear constraints w.x >= b / w.x <= b, optionally
    restricted to the unit sphere."""

    rows: tuple  # tuple of (weights tuple, sense, offset)
    on_unit_sphere: bool = False

    @staticmethod
    def make(rows, on_unit_sphere=False):
        frozen = tuple((tuple(float(v) for v in w), sense, float(b))
                       for (w, sense, b) in rows)
        for _, sense, _ in frozen:
            if sense not in ("ge", "le"):
                raise ValueError(f"bad sense {sense!r}")
        return HalfspacePolytope(frozen, on_unit_sphere)

    def contains(self, x) -> bool:
        xv = np.asarray(x, dtype=float).ravel()
        if self.on_unit_sphere and abs(np.linalg.norm(xv) - 1.0) > UNIT_TOL:
            return False
        for w, sense, b in self.rows:
            s = float(np.dot(w, xv))
            if sense == "ge" and s < b:
                return False
            if sense == "le" and s > b:
                return False
        return True

    def cache_key(self):
        return ("poly", self.rows, self.on_unit_sphere)

    def to_json(self):
        return {"kind": "halfspace_polytope", "on_unit_sphere": self.on_unit_sphere,
                "rows": [{"w": list(w), "sense": s, "b": b} for w, s, b in self.rows]}


@dataclass(frozen=True)
class TransformedPolytope:
    """Pullback region {x in span(basis) : inner(Ax/||Ax||)} plus an
    optional anchor point that is unioned in.

    Membership requires x to lie in span(basis) up to ``SPAN_TOL``
    (relative to max(1, ||x||)); the inner polytope is then evaluated on
    the normalized image Ax/||Ax||.
    """

    transform: np.ndarray       # (d, d) invertible
    basis: np.ndarray           # (d, k) orthonormal columns
    inner: HalfspacePolytope
    anchor: Optional[tuple] = None  # coordinate tuple unioned into the region

    @staticmethod
    def make(transform, basis, inner, anchor=None):
        a = np.asarray(transform, dtype=float)
        b = np.asarray(basis, dtype=float)
        anc = None if anchor is None else _as_tuple(anchor)
        return TransformedPolytope(a, b, inner, anc)

    def contains(self, x) -> bool:
        xv = np.asarray(x, dtype=float).ravel()
        if self.anchor is not None and _as_tuple(xv) == self.anchor:
            return True
        resid = xv - self.basis @ (self.basis.T @ xv)
        if np.linalg.norm(resid) > SPAN_TOL * max(1.0, np.linalg.norm(xv)):
            return False
        img = self.transform @ xv
        nrm = np.linalg.norm(img)
        if nrm == 0.0:
            return False
        return self.inner.contains(img / nrm)

    def cache_key(self):
        return ("tpoly", self.transform.tobytes(), self.basis.tobytes(),
                self.inner.cache_key(), self.anchor)

    def to_json(self):
        return {"kind": "transformed_polytope",
                "transform": self.transform.tolist(),
                "basis": self.basis.tolist(),
                "inner": self.inner.to_json(),
                "anchor": None if self.anchor is None else list(self.anchor)}


@dataclass(frozen=True)
class HypothesisPositiveSet:
    """{x : g(x) = sign}, optionally intersected with an order interval."""

    hypothesis: object  # anything with .predict(x) -> +/-1
    sign: int
    interval: Optional[Interval] = None

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def contains(self, x) -> bool:
        if self.interval is not None and not self.interval.contains(x):
            return False
        return int(self.hypothesis.predict(x)) == self.sign

    def cache_key(self):
        iv = None if self.interval is None else (self.interval.lo, self.interval.hi)
        return ("hypset", id(self.hypothesis), self.sign, iv)

    def to_json(self):
        h = self.hypothesis.to_json() if hasattr(self.hypothesis, "to_json") \
            else {"kind": "opaque", "repr": repr(self.hypothesis)}
        return {"kind": "hypothesis_positive_set", "sign": self.sign,
                "hypothesis": h,
                "interval": None if self.interval is None else self.interval.to_json()}


@dataclass(frozen=True)
class FiniteSet:
    """Explicit point list; membership is exact coordinate equality."""

    points: tuple  # tuple of coordinate tuples

    @staticmethod
    def make(points):
        return FiniteSet(tuple(_as_tuple(p) for p in points))

    def contains(self, x) -> bool:
        return _as_tuple(x) in set(self.points)

    def cache_key(self):
        return ("finite", self.points)

    def to_json(self):
        return {"kind": "finite_set", "points": [list(p) for p in self.points]}


def region_to_json(region) -> dict:
    return region.to_json()


def region_from_json(data: dict, hypothesis_resolver: Optional[Callable] = None):
    """Rebuild a descriptor from its JSON form.

    ``hypothesis_resolver`` maps a hypothesis JSON dict back to a handle;
    it is only needed for hypothesis-positive-set regions.
    """
    kind = data["kind"]
    if kind == "interval":
        lo, hi = data["lo"], data["hi"]
        if isinstance(lo, list):
            lo, hi = tuple(lo), tuple(hi)
        return Interval(lo, hi)
    if kind == "axis_halfspace":
        return AxisHalfspace(data["coord"], data["sense"], data["threshold"])
    if kind == "halfspace_polytope":
        rows = [(r["w"], r["sense"], r["b"]) for r in data["rows"]]
        return HalfspacePolytope.make(rows, data["on_unit_sphere"])
    if kind == "transformed_polytope":
        inner = region_from_json(data["inner"])
        return TransformedPolytope.make(
            np.array(data["transform"]), np.array(data["basis"]),
            inner, data["anchor"])
    if kind == "hypothesis_positive_set":
        if hypothesis_resolver is None:
            raise ValueError("hypothesis_positive_set needs a hypothesis_resolver")
        hyp = hypothesis_resolver(data["hypothesis"])
        iv = None if data["interval"] is None else region_from_json(data["interval"])
        return HypothesisPositiveSet(hyp, data["sign"], iv)
    if kind == "finite_set":
        return FiniteSet.make(data["points"])
    raise ValueError(f"unknown region kind {kind!r}")


def membership_matrix(regions: Sequence, points) -> np.ndarray:
    """Boolean matrix M[i, j] = regions[i] contains points[j]."""
    pts = list(points)
    return np.array([[r.contains(p) for p in pts] for r in regions], dtype=bool)


def region_intersects_sample(region, sample) -> bool:
    """True iff some point of the sample lies in the region.  Learners use
    this guard to avoid issuing queries with empty intersections."""
    return any(region.contains(p) for p in sample)


def empirical_vc_dimension(regions: Sequence, probe_points, max_k: int) -> int:
    """Largest k <= max_k such that some k-subset of the probe points is
    shattered by the family (all 2^k membership dichotomies realized).

    Exhaustive over subsets and dichotomies; the probe set must be small
    (<= 20 points).  This is a lower-bound witness, not the true VC
    dimension of a continuous family.
    """
    pts = list(probe_points)
    if len(pts) > 20:
        raise ValueError("probe set too large for exhaustive shattering check")
    M = membership_matrix(regions, pts)
    best = 0
    for k in range(1, min(max_k, len(pts)) + 1):
        if _find_shattered_subset(M, k) is None:
            break
        best = k
    return best


def shattering_witness(regions: Sequence, probe_points, k: int):
    """Explicit witness for a shattered k-subset: returns ``(indices,
    {dichotomy: region_index})`` or None when no k-subset is shattered."""
    pts = list(probe_points)
    M = membership_matrix(regions, pts)
    subset = _find_shattered_subset(M, k)
    if subset is None:
        return None
    cols = M[:, list(subset)]
    witness = {}
    for i, row in enumerate(cols):
        witness.setdefault(tuple(bool(b) for b in row), i)
    return subset, witness


def _find_shattered_subset(M: np.ndarray, k: int):
    n = M.shape[1]
    need = 1 << k
    for subset in combinations(range(n), k):
        patterns = {tuple(row) for row in M[:, list(subset)].tolist()}
        if len(patterns) == need:
            return subset
    return None
