"""Hardness machinery: low-pairwise-intersection set families, spiked
hypothesis families, and an experiment measuring how often a
budget-limited learner mislabels.

The construction: pick many k-subsets of a ground set with pairwise
intersections at most gamma.  Any fixed query family whose regions are
small inside one of them (guaranteed by counting when the family has
fewer regions than there are subsets) cannot cover that subset's points
quickly, and a hypothesis drawn uniformly from "all of C* positive"
plus its k single-point flips is then indistinguishable on uncovered
points: a learner held to k/(2 gamma) queries errs with probability at
least 1/3.

The family is built by rejection sampling and verified exhaustively; the
verified gamma is part of the returned object, never assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .oracle import (BudgetedSession, Oracle, PointSet, QueryBudgetExceeded,
                     RegionQuery)
from .regions import FiniteSet


@dataclass(frozen=True)
class SetFamily:
    """k-subsets of range(ground_size) with verified max pairwise
    intersection at most gamma."""

    ground_size: int
    sets: tuple  # tuple of frozensets
    k: int
    gamma: int

    def __len__(self):
        return len(self.sets)


def pairwise_intersection_max(sets) -> int:
    """Exact maximum pairwise intersection size over all pairs."""
    sets = [frozenset(s) for s in sets]
    best = 0
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            best = max(best, len(sets[i] & sets[j]))
    return best


def low_intersection_family(k: int, gamma: int, n_target: int,
                            seed: int = 0) -> SetFamily:
    """Rejection-sample k-subsets of a ground set of size
    ceil(4 k^2 ln 4k) until ``n_target`` pairwise-gamma-intersecting sets
    are kept or the retry cap (1000 * n_target samples) is hit; the
    returned family always carries an exhaustively verified gamma.
    """
    if gamma < 0 or k < gamma:
        raise ValueError("need 0 <= gamma <= k")
    ground = int(np.ceil(4 * k * k * np.log(4 * k)))
    ground = max(ground, k)
    rng = np.random.default_rng(seed)
    kept: list[frozenset] = []
    attempts = 0
    cap = 1000 * n_target
    while len(kept) < n_target and attempts < cap:
        attempts += 1
        cand = frozenset(int(v) for v in rng.choice(ground, size=k, replace=False))
        if all(len(cand & s) <= gamma for s in kept):
            kept.append(cand)
    verified = pairwise_intersection_max(kept)
    if verified > gamma:
        raise AssertionError("verification failed: construction is broken")
    return SetFamily(ground, tuple(kept), k, gamma)


class SpikedHypothesis:
    """+1 exactly on C* minus an optional flipped point, -1 elsewhere.
    Points are ground-set indices carried as scalars."""

    def __init__(self, cstar, flip=None):
        self.cstar = frozenset(int(v) for v in cstar)
        self.flip = None if flip is None else int(flip)
        if self.flip is not None and self.flip not in self.cstar:
            raise ValueError("flip must be a point of C*")

    def predict(self, x) -> int:
        v = int(round(float(np.asarray(x).ravel()[0])))
        if v == self.flip:
            return -1
        return 1 if v in self.cstar else -1

    def predict_many(self, points: np.ndarray) -> np.ndarray:
        idx = np.rint(np.asarray(points, dtype=float).ravel()).astype(int)
        out = np.where(np.isin(idx, list(self.cstar)), 1, -1).astype(np.int8)
        if self.flip is not None:
            out[idx == self.flip] = -1
        return out

    def to_json(self):
        return {"kind": "spiked", "cstar": sorted(self.cstar), "flip": self.flip}


def spiked_family(cstar) -> list[SpikedHypothesis]:
    """The all-positive hypothesis on C* plus its single-point flips
    (k + 1 hypotheses)."""
    base = [SpikedHypothesis(cstar)]
    return base + [SpikedHypothesis(cstar, x) for x in sorted(cstar)]


def select_uncovered_target(fam: SetFamily, query_regions) -> int:
    """Index of a family set witnessed by no region: no region T is a
    subset of it with |T| > gamma.  Counting guarantees existence when
    the family is larger than the region list."""
    ground = [float(v) for v in range(fam.ground_size)]
    member_sets = []
    for region in query_regions:
        member_sets.append(frozenset(i for i, x in enumerate(ground)
                                     if region.contains(x)))
    for idx, cand in enumerate(fam.sets):
        witnessed = any(len(t) > fam.gamma and t <= cand for t in member_sets)
        if not witnessed:
            return idx
    raise RuntimeError("every set is witnessed; need a larger family")


def covered_points(transcript_regions, cstar, ground_size: int) -> set:
    """Points x of C* covered per the set-cover criterion: some queried
    region T has x in T subset of C*, or T meets C* exactly in {x}."""
    cs = sorted(int(v) for v in cstar)
    return {x for x in cs
            if any(_covers(r, x, cs, ground_size) for r in transcript_regions)}


def _region_subset_of(region, cstar, ground_size=None) -> bool:
    limit = (max(cstar) + 1) if ground_size is None else ground_size
    for v in range(limit):
        if region.contains(float(v)) and v not in cstar:
            return False
    return True


def replay_answers(transcript, hypothesis, domain: PointSet):
    """Answers the transcript's queries would receive under the given
    hypothesis (queries with empty domain intersection are reported as
    None: their answer is policy noise, identical under any hypothesis)."""
    labels = hypothesis.predict_many(domain.points)
    out = []
    for entry in transcript:
        mask = np.array([entry.region.contains(p) for p in domain.points])
        if not mask.any():
            out.append(None)
        else:
            out.append(int(np.all(labels[mask] == entry.label)))
    return out


def exhaustive_coverage_learner(session: BudgetedSession, pool: PointSet,
                                cstar) -> dict:
    """Baseline learner: probes the points of C* one by one with singleton
    queries until the budget runs out; unprobed points fall back to the
    all-positive hypothesis' labels."""
    cstar = sorted(int(v) for v in cstar)
    base = SpikedHypothesis(cstar)
    predictions = {i: int(base.predict(p)) for i, p in enumerate(pool.points)}
    for x in cstar:
        try:
            ans = session.ask(FiniteSet.make([float(x)]), 1)
        except QueryBudgetExceeded:
            break
        predictions[x] = 1 if ans == 1 else -1
    return predictions


def run_lower_bound_experiment(fam: SetFamily, trials: int, budget: int,
                               seed: int = 0, query_regions=(),
                               learner=exhaustive_coverage_learner) -> dict:
    """Measure the mislabel frequency of a budget-limited learner against
    targets drawn uniformly from the spiked family of an unwitnessed set.

    The labeling domain equals the pool equals the ground set.  Per trial
    the report records which points of C* the transcript covered, and the
    returned dict includes a replay check: for every uncovered flip, the
    transcript answers under the flip match those under the all-positive
    hypothesis exactly.
    """
    cstar_idx = select_uncovered_target(fam, query_regions)
    cstar = sorted(fam.sets[cstar_idx])
    hypotheses = spiked_family(cstar)
    ground = PointSet.make(np.arange(fam.ground_size, dtype=float))
    errors = 0
    coverage_hist: dict[int, int] = {}
    replay_violations = 0
    records = []
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(t,)))
        h_star = hypotheses[int(rng.integers(0, len(hypotheses)))]
        oracle = Oracle(h_star, ground, sample=ground,
                        empty_policy="seeded_random",
                        seed=int(rng.integers(0, 2 ** 31)))
        session = BudgetedSession(oracle, budget)
        predictions = learner(session, ground, cstar)
        truth = h_star.predict_many(ground.points)
        wrong = any(predictions[i] != int(truth[i]) for i in range(len(ground)))
        errors += int(wrong)
        regions = [e.region for e in oracle.transcript]
        covered = covered_points(regions, cstar, fam.ground_size)
        coverage_hist[len(covered)] = coverage_hist.get(len(covered), 0) + 1
        # indistinguishability: flips at uncovered points answer identically
        base_answers = replay_answers(oracle.transcript, hypotheses[0], ground)
        for x in set(cstar) - covered:
            flip = SpikedHypothesis(cstar, x)
            if replay_answers(oracle.transcript, flip, ground) != base_answers:
                replay_violations += 1
        records.append({"trial": t, "wrong": bool(wrong), "covered": len(covered)})
    return {
        "cstar_index": cstar_idx,
        "cstar": cstar,
        "achieved_n": len(fam),
        "gamma_verified": pairwise_intersection_max(fam.sets),
        "error_frequency": errors / trials,
        "coverage_histogram": dict(sorted(coverage_hist.items())),
        "replay_violations": replay_violations,
        "trials": records,
    }


def _covers(region, x: int, cstar, ground_size: int) -> bool:
    """x in T subset of C*, or T meets C* exactly in {x}."""
    if not region.contains(float(x)):
        return False
    inside_cstar = [v for v in cstar if region.contains(float(v))]
    if inside_cstar == [x]:
        return True
    return _region_subset_of(region, frozenset(cstar), ground_size)
