"""Region-query modified perceptron and the end-to-end halfspace driver.

The perceptron runs in the transformed space produced by the isotropy
transform.  Each round it checks the two caps {x : y v.x >= 1/(2 sqrt k)}
around its current direction; if the labeler certifies both pure, the cap
points are labeled and returned.  Otherwise some point of the labeling
domain inside a cap is misclassified, and a sequence of binary searches
over radial and coordinate strips corners it inside a box of diameter
sqrt(k) * delta.  Updating with any unit point of that box shrinks ||w||
geometrically while barely moving w . v*, so a budget of O(k log k)
updates either converges or certifies a bad start.

Every region queried after the anchor step unions in an anchor point of
the pool whose label was verified, so no query ever has an empty
intersection with the labeling domain.  Labels are only ever emitted from
answers of value 1, which makes every emitted label correct for every
labeling domain containing the pool.

Queries are phrased in the transformed space but realized in the original
space via ``pullback_query``: a region Z over the unit sphere of the
image space becomes {x in V : Ax/||Ax|| in Z}, optionally unioned with
the anchor.  Answers agree because membership and labels are preserved by
the transform for points of V.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .forster import ForsterResult, forster_transform
from .oracle import (LearnResult, Oracle, PointSet, QuerySession, RegionQuery,
                     _polytope_mask)
from .regions import HalfspacePolytope, TransformedPolytope


def perceptron_update(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """w <- w - x (x.w) for a unit vector x.  Never increases ||w||:
    ||w'||^2 = ||w||^2 - (x.w)^2."""
    return w - x * float(np.dot(x, w))


def default_strip_width(k: int) -> float:
    return float(k) ** -4


def default_update_budget(k: int) -> int:
    return math.ceil(64 * k * (math.log(k) + 1))


def pullback_query(rows_k, label: int, result: ForsterResult,
                   anchor_point=None) -> RegionQuery:
    """Realize a transformed-space query in the original space.

    A query (Z, label) on the image sphere becomes
    ({x in V : Ax/||Ax|| in Z} possibly union an anchor, label).
    ``rows_k`` are linear constraints on image-basis coordinates; each
    (v, sense, b) becomes (W v, sense, b) on the normalized image, where
    W is the image basis.  Answers agree with the transformed-space
    semantics because sign-labels of points in V are preserved by the
    transform.
    """
    W = result.image_basis
    rows_d = [(W @ np.asarray(v, dtype=float), sense, float(b))
              for v, sense, b in rows_k]
    inner = HalfspacePolytope.make(rows_d, on_unit_sphere=True)
    region = TransformedPolytope.make(result.transform, result.subspace_basis,
                                      inner, anchor_point)
    return RegionQuery(region, label)


class TransformedQueryChannel:
    """Query channel for a perceptron running in the transformed space:
    builds pullback regions and asks the original-space labeler."""

    def __init__(self, session: QuerySession, result: ForsterResult,
                 source_points: np.ndarray):
        self.session = session
        self.result = result
        src = source_points[:, None] if source_points.ndim == 1 else source_points
        self._anchor_points = src[result.kept_ids]

    @property
    def k(self) -> int:
        return self.result.k

    def _anchor(self, local_idx):
        if local_idx is None:
            return None
        if not 0 <= local_idx < len(self._anchor_points):
            raise ValueError("anchor is not among the kept points")
        return self._anchor_points[local_idx]

    def query_polytope(self, rows_k, y: int, anchor_local=None) -> int:
        q = pullback_query(rows_k, y, self.result, self._anchor(anchor_local))
        return self.session.ask(q.region, q.label)

    def query_singleton(self, local_idx: int, y: int) -> int:
        """Label probe for one kept point: the pullback of the singleton
        {z} is {x in V : f_A(x) = z}, realized as a sphere cap of angular
        radius ~1e-6 (all such points share the probed point's label)."""
        z = self.result.coords[local_idx]
        return self.query_polytope([(z, "ge", 1.0 - 1e-12)], y)

    def membership_mask(self, rows_k) -> np.ndarray:
        """Which kept points lie in the region, evaluated with the same
        arithmetic the labeler uses."""
        W = self.result.image_basis
        rows_d = [(W @ np.asarray(v, dtype=float), sense, float(b))
                  for v, sense, b in rows_k]
        inner = HalfspacePolytope.make(rows_d, on_unit_sphere=True)
        return _polytope_mask(inner, self.result.transformed_points)


class DirectSphereChannel:
    """Channel for unit tests: the pool already consists of unit vectors
    and the labeler works on them directly (identity transform)."""

    def __init__(self, session: QuerySession, points: np.ndarray):
        self.session = session
        X = points[:, None] if points.ndim == 1 else points
        self._points = X
        k = X.shape[1]
        self._eye = np.eye(k)

    @property
    def k(self) -> int:
        return self._points.shape[1]

    def query_polytope(self, rows_k, y: int, anchor_local=None) -> int:
        inner = HalfspacePolytope.make(rows_k, on_unit_sphere=True)
        anchor = None if anchor_local is None else self._points[anchor_local]
        region = TransformedPolytope.make(self._eye, self._eye, inner, anchor)
        return self.session.ask(region, y)

    def query_singleton(self, local_idx: int, y: int) -> int:
        z = self._points[local_idx]
        return self.query_polytope([(z, "ge", 1.0 - 1e-12)], y)

    def membership_mask(self, rows_k) -> np.ndarray:
        inner = HalfspacePolytope.make(rows_k, on_unit_sphere=True)
        return _polytope_mask(inner, self._points)


@dataclass
class PerceptronRun:
    """Outcome of one perceptron call: verified labels for a subset of the
    (local indices of the) transformed points, plus the update trail
    (w_t, x_t) for invariant auditing."""

    labels: dict
    updates: list
    converged: bool


def active_perceptron(w0: np.ndarray, coords: np.ndarray, channel,
                      strip_width: float | None = None,
                      update_budget: int | None = None) -> PerceptronRun:
    """Label a large fraction of the transformed points, or return empty
    when the start direction was bad.

    With isotropic inputs and w0 . v* >= Omega(1/sqrt k), at most
    O(k log k) updates occur, every emitted label is correct for every
    labeling domain containing the pool, and at least a 1/(4k) fraction
    of the points is returned.
    """
    k = coords.shape[1]
    theta0 = 1.0 / (2.0 * math.sqrt(k))
    delta = default_strip_width(k) if strip_width is None else strip_width
    t_max = default_update_budget(k) if update_budget is None else update_budget
    w = np.asarray(w0, dtype=float).copy()
    updates: list = []

    while True:
        nw = float(np.linalg.norm(w))
        if nw < 1e-12:
            # the update drove w to zero; only a bad start does that
            return PerceptronRun({}, updates, False)
        v0 = w / nw
        asked = {}
        members = {}
        for y in (1, -1):
            rows = [(y * v0, "ge", theta0)]
            mask = channel.membership_mask(rows)
            if mask.any():
                members[y] = mask
                asked[y] = channel.query_polytope(rows, y)
        if not asked:
            # neither cap touches the pool: treat as bad initialization
            return PerceptronRun({}, updates, False)
        if all(v == 1 for v in asked.values()):
            labels = {}
            for y, mask in members.items():
                for i in np.flatnonzero(mask):
                    labels[int(i)] = y
            return PerceptronRun(labels, updates, True)
        if len(updates) >= t_max:
            return PerceptronRun({}, updates, False)
        y = 1 if asked.get(1, 1) == 0 else -1
        anchor = int(np.flatnonzero(members[y])[0])
        if channel.query_singleton(anchor, y) == 0:
            x_t = coords[anchor].astype(float)
        else:
            x_t = _corner_violator(channel, v0, y, anchor, theta0, delta, k)
        updates.append((w.copy(), x_t.copy()))
        w = perceptron_update(w, x_t)


def _grid(lo: float, hi: float, step: float) -> list:
    vals = [lo]
    while vals[-1] + step < hi:
        vals.append(vals[-1] + step)
    vals.append(hi)
    return vals


def _corner_violator(channel, v0, y, anchor, theta0, delta, k) -> np.ndarray:
    """Binary-search radial and coordinate strips (always unioning the
    verified anchor into the region) until a box of per-coordinate width
    <= delta is known to contain a point the labeler says is mislabeled,
    then construct a unit point of that box."""
    strips = []  # (direction, lo, hi) in y-multiplied coordinates

    def strip_rows():
        rows = []
        for v, a, b in strips:
            rows.append((v, "ge", a))
            rows.append((v, "le", b))
        return rows

    # radial strip: the failed cap query pins answer 0 at the grid start
    # (unioning the anchor cannot flip it: the anchor's label is verified)
    grid = _grid(theta0, 1.0, delta)
    lo, hi = 0, len(grid)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        ans = channel.query_polytope([(y * v0, "ge", grid[mid])], y,
                                     anchor_local=anchor)
        if ans == 0:
            lo = mid
        else:
            hi = mid
    strips.append((y * v0, grid[lo], grid[hi] if hi < len(grid) else 1.0))

    basis = _complete_basis(v0)
    for j in range(k - 1):
        dirn = y * basis[:, j]
        grid_j = _grid(-1.0, 1.0, delta)
        # answer at the grid start is the previous level's conclusion
        lo, hi = 0, len(grid_j)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            rows = strip_rows() + [(dirn, "ge", grid_j[mid])]
            ans = channel.query_polytope(rows, y, anchor_local=anchor)
            if ans == 0:
                lo = mid
            else:
                hi = mid
        strips.append((dirn, grid_j[lo], grid_j[hi] if hi < len(grid_j) else 1.0))

    dirs = np.stack([v for v, _, _ in strips])
    c = _unit_box_point([(a, b) for _, a, b in strips])
    return dirs.T @ c


def _complete_basis(v: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of the complement of v."""
    k = len(v)
    q = np.linalg.qr(np.hstack([v[:, None], np.eye(k)]))[0]
    return q[:, 1:k]


def _unit_box_point(bounds) -> np.ndarray:
    """A unit-norm vector with every coordinate inside its strip.

    Exists whenever the box meets the unit sphere; starts from the
    minimum-norm corner and raises coordinates toward their larger-square
    endpoint until the norm reaches one.
    """
    c = np.empty(len(bounds))
    for i, (a, b) in enumerate(bounds):
        if a <= 0.0 <= b:
            c[i] = 0.0
        elif a > 0.0:
            c[i] = a
        else:
            c[i] = b
    total = float(c @ c)
    if total >= 1.0:
        return c / math.sqrt(total)
    for i, (a, b) in enumerate(bounds):
        hi_sq = max(a * a, b * b)
        room = hi_sq - c[i] * c[i]
        need = 1.0 - total
        if need <= 0.0:
            break
        add = min(room, need)
        v = math.sqrt(c[i] * c[i] + add)
        if a <= v <= b:
            new = v
        elif a <= -v <= b:
            new = -v
        else:
            new = a if a * a >= b * b else b
        total += new * new - c[i] * c[i]
        c[i] = new
    return c


def learning_ltf(pool: PointSet, alpha: float, oracle: Oracle,
                 init_seed: int = 0, redraw_cap: int = 200,
                 diagnostics: list | None = None) -> LearnResult:
    """Label at least a (1 - alpha) fraction of the pool under a
    homogeneous halfspace target; with alpha < 1/n this labels everything.

    Per round: transform the unlabeled remainder to isotropic position,
    shortcut with one (V, +1) query when the subspace is all positive,
    otherwise redraw start directions until the perceptron certifies at
    least |S ∩ V| / 4k labels.  All emitted labels are correct for every
    labeling domain containing the pool.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    session = QuerySession(oracle)
    X = pool.points[:, None] if pool.points.ndim == 1 else pool.points
    n = len(pool)
    rng = np.random.default_rng(init_seed)
    remaining = np.arange(n)
    predictions: dict[int, int] = {}
    rounds = 0
    while len(remaining) > alpha * n:
        queries_before = session.queries_used
        R = X[remaining]
        fr = forster_transform(R)
        k = fr.k
        kept_global = remaining[fr.kept_ids]
        redraws = 0
        subspace_query = pullback_query([], 1, fr)
        if session.ask(subspace_query.region, 1) == 1:
            labels = {i: 1 for i in range(len(fr.kept_ids))}
            update_log = []
        else:
            channel = TransformedQueryChannel(session, fr, R)
            target = len(fr.kept_ids) / (4.0 * k)
            update_log = []
            while True:
                if redraws >= redraw_cap:
                    raise RuntimeError(
                        f"no good start direction after {redraw_cap} redraws "
                        f"(k={k}, kept={len(fr.kept_ids)})")
                w0 = rng.normal(size=k)
                w0 /= np.linalg.norm(w0)
                run = active_perceptron(w0, fr.coords, channel)
                redraws += 1
                update_log.extend(run.updates)
                if run.labels and len(run.labels) >= target:
                    labels = run.labels
                    break
        for local, lab in labels.items():
            predictions[int(kept_global[local])] = int(lab)
        labeled_ids = np.array([kept_global[l] for l in labels], dtype=int)
        remaining = remaining[~np.isin(remaining, labeled_ids)]
        rounds += 1
        if diagnostics is not None:
            diagnostics.append({
                "k": k,
                "kept": len(fr.kept_ids),
                "labeled": len(labels),
                "queries": session.queries_used - queries_before,
                "redraws": redraws,
                "forster_iters": fr.iterations,
                "transform": fr.transform,
                "subspace_basis": fr.subspace_basis,
                "image_basis": fr.image_basis,
                "updates": update_log,
            })
    return LearnResult(predictions, session.queries_used, rounds)
