"""Halfspace learning by reduction to self-directed prediction, using
unrestricted finite-set queries.

A self-directed pass predicts the pool in a random order, refitting a
hard-margin separator on the pairs revealed so far; the expected number
of mistakes is O(d log n) because a random next point is a support
vector with probability at most d/(i+1).  The active learner simulates
the pass assuming its own predictions are correct, verifies the
proposed labeling with two finite-set queries, and on failure binary
searches (in pass order) for the first wrong prediction, fixes it, and
restarts.  Expected queries: O(d log^2 n).

The query regions here are arbitrary subsets of the pool, so this
learner deliberately pays with an unbounded-VC query family; the
transform-based pipeline removes that cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from cvxopt import matrix as _cvx_matrix
from cvxopt import solvers as _cvx_solvers

from .oracle import LearnResult, Oracle, PointSet, QuerySession
from .regions import FiniteSet

_cvx_solvers.options["show_progress"] = False

SUPPORT_TOL = 1e-6
REFIT_TOL = 1e-9


class NotSeparable(ValueError):
    """The labeled set admits no homogeneous separator with positive margin."""


@dataclass(frozen=True)
class MaxMarginModel:
    """Hard-margin separator: unit weights and the ids of the points
    attaining the minimum margin."""

    weights: np.ndarray
    support_ids: tuple

    def predict(self, x) -> int:
        s = float(np.dot(self.weights, np.asarray(x, dtype=float).ravel()))
        return 1 if s >= 0 else -1

    def predict_many(self, points: np.ndarray) -> np.ndarray:
        X = points[:, None] if points.ndim == 1 else points
        s = X @ self.weights
        return np.where(s >= 0, 1, -1).astype(np.int8)

    def margin(self, X: np.ndarray, y: np.ndarray) -> float:
        return float(np.min(y * (X @ self.weights)))


def max_margin_fit(labeled, dim: int | None = None) -> MaxMarginModel:
    """Deterministic hard-margin fit over homogeneous halfspaces.

    ``labeled`` is a sequence of (point, sign) pairs.  Empty input returns
    the fixed default direction e1 (``dim`` tells it the ambient
    dimension).  Raises ``NotSeparable`` when no positive-margin
    homogeneous separator exists.

    Solves min ||w||^2 subject to y_i w.x_i >= 1; the minimizer is unique,
    so the same input always yields the same output.
    """
    pairs = list(labeled)
    if not pairs:
        if dim is None:
            raise ValueError("dim is required for an empty fit")
        w = np.zeros(dim)
        w[0] = 1.0
        return MaxMarginModel(w, ())
    X = np.array([np.asarray(p, dtype=float).ravel() for p, _ in pairs])
    y = np.array([float(s) for _, s in pairs])
    d = X.shape[1]
    P = _cvx_matrix(np.eye(d))
    q = _cvx_matrix(np.zeros(d))
    G = _cvx_matrix(-(y[:, None] * X))
    h = _cvx_matrix(-np.ones(len(X)))
    try:
        sol = _cvx_solvers.qp(P, q, G, h)
    except (ValueError, ArithmeticError) as exc:
        raise NotSeparable(f"hard-margin QP failed: {exc}") from exc
    if sol["status"] != "optimal":
        raise NotSeparable(f"hard-margin QP status {sol['status']!r}")
    w = np.array(sol["x"]).ravel()
    nrm = np.linalg.norm(w)
    if nrm == 0.0:
        w = np.zeros(d)
        w[0] = 1.0
        return MaxMarginModel(w, ())
    wu = w / nrm
    margins = y * (X @ wu)
    m0 = margins.min()
    if m0 <= 0:
        raise NotSeparable("QP returned a non-separating direction")
    support = tuple(int(i) for i in np.flatnonzero(margins <= m0 * (1 + SUPPORT_TOL)))
    return MaxMarginModel(wu, support)


class _IncrementalFit:
    """Max-margin model maintained over a growing list of labeled points.

    Refits only when the incoming point's margin does not exceed the
    current minimum margin: a constraint that is slack at the optimum
    cannot change it.
    """

    def __init__(self, dim: int):
        self.dim = dim
        self.X: list[np.ndarray] = []
        self.y: list[float] = []
        self.model = max_margin_fit([], dim=dim)
        self._min_margin = np.inf
        self.refits = 0

    def predict(self, x) -> int:
        return self.model.predict(x)

    def add(self, x: np.ndarray, label: int):
        self.X.append(np.asarray(x, dtype=float))
        self.y.append(float(label))
        m = float(label * np.dot(self.model.weights, x))
        if m > self._min_margin + REFIT_TOL and len(self.X) > 1:
            # slack constraint: the optimum cannot move
            return
        self.model = max_margin_fit(zip(self.X, self.y), dim=self.dim)
        arr = np.array(self.X)
        self._min_margin = self.model.margin(arr, np.array(self.y))
        self.refits += 1


def _unitize(points: np.ndarray, jitter_seed: int = 0) -> np.ndarray:
    """Scale points to the unit sphere (labels of a homogeneous target are
    invariant under positive scaling); exact duplicates get a seeded
    1e-12 jitter so the max-margin solution stays unique."""
    X = points[:, None].astype(float) if points.ndim == 1 else points.astype(float)
    nrm = np.linalg.norm(X, axis=1, keepdims=True)
    if np.any(nrm == 0):
        raise ValueError("points must be nonzero")
    X = X / nrm
    seen = {}
    dup = []
    for i, row in enumerate(X):
        key = row.tobytes()
        if key in seen:
            dup.append(i)
        else:
            seen[key] = i
    if dup:
        rng = np.random.default_rng(jitter_seed)
        X = X.copy()
        X[dup] += rng.normal(size=(len(dup), X.shape[1])) * 1e-12
        X /= np.linalg.norm(X, axis=1, keepdims=True)
    return X


def self_directed_pass(pool: PointSet, order, feedback) -> int:
    """One self-directed prediction pass: predict each point in the given
    order with the max-margin fit of the pairs revealed so far, receive
    the true label from ``feedback(position, prediction)``, and count
    mistakes."""
    X = _unitize(pool.points)
    order = np.asarray(order)
    fit = _IncrementalFit(X.shape[1])
    mistakes = 0
    for pos in order:
        pred = fit.predict(X[pos])
        truth = int(feedback(int(pos), pred))
        if truth not in (1, -1):
            raise ValueError("feedback must return +1 or -1")
        if truth != pred:
            mistakes += 1
        fit.add(X[pos], truth)
    return mistakes


def randomized_svm_learn(pool: PointSet, oracle: Oracle,
                         perm_seed: int = 0) -> LearnResult:
    """Label the pool with finite-set queries by verifying simulated
    self-directed passes and binary-searching the first wrong prediction
    on failure.  Perfect labeling; expected O(d log^2 n) queries."""
    session = QuerySession(oracle)
    n = len(pool)
    X = _unitize(pool.points)
    raw = pool.points[:, None] if pool.points.ndim == 1 else pool.points
    order = np.random.default_rng(perm_seed).permutation(n)
    known: dict[int, int] = {}
    rounds = 0
    while True:
        rounds += 1
        fit = _IncrementalFit(X.shape[1])
        assumed = np.empty(n, dtype=np.int8)
        for pass_idx, pos in enumerate(order):
            pred = fit.predict(X[pos])
            lab = known.get(int(pos), pred)
            assumed[pass_idx] = lab
            fit.add(X[pos], lab)

        def prefix_ok(j):
            """Do the first j pass predictions all match the truth?"""
            answers = []
            for sign in (1, -1):
                pts = [raw[order[i]] for i in range(j) if assumed[i] == sign]
                if not pts:
                    continue
                answers.append(session.ask(FiniteSet.make(pts), sign))
            return all(a == 1 for a in answers)

        if prefix_ok(n):
            predictions = {int(order[i]): int(assumed[i]) for i in range(n)}
            return LearnResult(predictions, session.queries_used, rounds)
        # first mistake in pass order: prefix correctness is monotone
        lo, hi = 0, n
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if prefix_ok(mid):
                lo = mid
            else:
                hi = mid
        wrong = hi - 1
        for i in range(wrong):
            known[int(order[i])] = int(assumed[i])
        known[int(order[wrong])] = -int(assumed[wrong])
