"""Approximate radial-isotropy transform and its diagnostics.

Given nonzero points, the transform finds a subspace V (of dimension k)
holding at least a k/d fraction of them and an invertible matrix A such
that the normalized images Ax/||Ax|| of the points inside V have all
directional second moments at least 1/k - eps.  On such a point set a
large fraction of points keeps a margin of 1/(2 sqrt(k)) against every
direction, which is what the transform buys the halfspace learner.

The implementation is a fixed-point iteration: repeatedly replace A by
(k M)^(-1/2) A where M is the second-moment matrix of the current
normalized images.  When mass concentrates on a proper subspace the
iteration cannot converge; persistently tiny eigenvalues trigger a
restriction to the span of the healthy eigendirections, dropping the
points outside it, and the procedure recurses.  All advertised
postconditions (isotropy at the requested eps, kept fraction >= k/d) are
verified on the result, never assumed; failures raise with diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .regions import SPAN_TOL

MAX_ITERS = 10_000
STALL_PATIENCE = 200  # iterations with a sub-tolerance eigenvalue before restricting


class ForsterFailure(RuntimeError):
    """Transform could not reach isotropy; carries diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def isotropy_check(points: np.ndarray, eps: float) -> bool:
    """True iff the unit points have second-moment matrix with smallest
    eigenvalue at least 1/d - eps (equivalently every direction u has
    mean squared projection at least 1/d - eps)."""
    Z = np.asarray(points, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    nrm = np.linalg.norm(Z, axis=1)
    if np.any(np.abs(nrm - 1.0) > 1e-9):
        raise ValueError("isotropy check requires unit-norm points")
    d = Z.shape[1]
    M = Z.T @ Z / len(Z)
    lam_min = float(np.linalg.eigvalsh(M)[0])
    return lam_min >= 1.0 / d - eps


def margin_fraction(points: np.ndarray, u: np.ndarray, gamma: float) -> float:
    """Fraction of unit points x with |u.x| >= gamma."""
    Z = np.asarray(points, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    return float(np.mean(np.abs(Z @ np.asarray(u, dtype=float)) >= gamma))


@dataclass
class ForsterResult:
    """Output of the transform.

    transform:        invertible (d, d) matrix A
    subspace_basis:   (d, k) orthonormal columns spanning V
    image_basis:      (d, k) orthonormal columns spanning A(V)
    kept_ids:         indices (into the input) of the points in V
    transformed_points: (m, d) unit rows f_A(x) = Ax/||Ax|| for kept x
    coords:           (m, k) the same images in image-basis coordinates
    eps:              the isotropy tolerance the result satisfies
    iterations:       total fixed-point iterations across recursion levels
    """

    transform: np.ndarray
    subspace_basis: np.ndarray
    image_basis: np.ndarray
    kept_ids: np.ndarray
    transformed_points: np.ndarray
    coords: np.ndarray
    eps: float
    iterations: int

    @property
    def k(self) -> int:
        return self.subspace_basis.shape[1]


def forster_transform(points: np.ndarray, eps: float | None = None,
                      max_iters: int = MAX_ITERS) -> ForsterResult:
    """Compute an approximate radial-isotropy transform.

    ``eps`` defaults to 1/(2k) at each working dimension k, the tolerance
    the downstream margin guarantee needs; when given it applies at the
    top level and recursion levels tighten it to min(eps, 1/(2k)).
    Raises ``ForsterFailure`` when isotropy cannot be certified or the
    kept fraction drops below k/d.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, d = X.shape
    if n == 0:
        raise ValueError("empty point set")
    if np.any(np.linalg.norm(X, axis=1) == 0):
        raise ValueError("points must be nonzero")

    basis, A_sub, _, iters, eps_used = _solve(X, np.arange(n), np.eye(d), eps, max_iters)
    k = basis.shape[1]

    # assemble the full-space transform: act by A_sub on V, identity off V
    comp = _orth_complement(basis)
    A_full = basis @ A_sub @ basis.T + comp @ comp.T

    # keep exactly the points that the query regions will consider members
    # of V (same residual criterion, same tolerance)
    resid = X - (X @ basis) @ basis.T
    scale = np.maximum(1.0, np.linalg.norm(X, axis=1))
    kept = np.flatnonzero(np.linalg.norm(resid, axis=1) <= SPAN_TOL * scale)
    if len(kept) == 0:
        raise ForsterFailure("no points inside the recovered subspace",
                             {"k": k, "iterations": iters})

    img = X[kept] @ A_full.T
    nrm = np.linalg.norm(img, axis=1, keepdims=True)
    transformed = img / nrm
    image_basis = _orthonormalize(A_full @ basis)
    coords = transformed @ image_basis

    result = ForsterResult(A_full, basis, image_basis, np.asarray(kept),
                           transformed, coords, eps_used, iters)
    # verified postconditions, never assumed
    if not isotropy_check(coords, eps_used):
        raise ForsterFailure("result failed the isotropy check",
                             {"k": k, "eps": eps_used, "iterations": iters})
    if len(kept) * d < k * n:
        raise ForsterFailure(
            f"kept fraction {len(kept)}/{n} below k/d = {k}/{d}",
            {"k": k, "kept": len(kept), "n": n, "iterations": iters})
    return result


def _solve(X: np.ndarray, ids: np.ndarray, basis: np.ndarray,
           eps: float | None, max_iters: int, depth: int = 0):
    """Recursive worker: X holds coordinates of the points in the current
    subspace (spanned by ``basis`` in the original space)."""
    if depth > X.shape[1] + 1:
        raise ForsterFailure("restriction recursion failed to terminate")

    # drop to the span of the points first
    rank_basis = _row_space(X)
    if rank_basis.shape[1] < X.shape[1]:
        X = X @ rank_basis
        basis = basis @ rank_basis
    c = X.shape[1]
    if eps is None:
        eps_c = 1.0 / (2 * c)
    elif depth == 0:
        eps_c = eps
    else:
        eps_c = min(eps, 1.0 / (2 * c))

    A = np.eye(c)
    stall = 0
    for it in range(1, max_iters + 1):
        img = X @ A.T
        Y = img / np.linalg.norm(img, axis=1, keepdims=True)
        M = Y.T @ Y / len(Y)
        lam, U = np.linalg.eigh(M)
        if lam[0] >= 1.0 / c - eps_c:
            return basis, A, ids, it, eps_c
        stall = stall + 1 if lam[0] < eps_c / 10 else 0
        if stall >= STALL_PATIENCE:
            return _restrict(X, ids, basis, A, lam, U, eps, max_iters, depth, it, eps_c)
        scaled = np.maximum(lam, 1e-14) * c
        A = (U * scaled ** -0.5) @ U.T @ A
        A /= np.linalg.norm(A, ord=2)

    # out of iterations: try a restriction, else give up
    img = X @ A.T
    Y = img / np.linalg.norm(img, axis=1, keepdims=True)
    M = Y.T @ Y / len(Y)
    lam, U = np.linalg.eigh(M)
    if lam[0] < eps_c / 10:
        return _restrict(X, ids, basis, A, lam, U, eps, max_iters, depth, max_iters, eps_c)
    raise ForsterFailure(
        "fixed-point iteration did not converge",
        {"dim": c, "eps": eps_c, "lambda_min": float(lam[0])})


def _restrict(X, ids, basis, A, lam, U, eps, max_iters, depth, iters_so_far, eps_c):
    """Restrict to the span of the healthy eigendirections of the image
    second moment: keep the points whose images lie (exactly, up to
    tolerance) in that span and recurse on them."""
    healthy = U[:, lam >= eps_c / 10]
    if healthy.shape[1] == X.shape[1] or healthy.shape[1] == 0:
        raise ForsterFailure("cannot identify a proper subspace to restrict to",
                             {"dim": X.shape[1], "eigs": lam.tolist()})
    img = X @ A.T
    nrm = np.linalg.norm(img, axis=1)
    resid = img - (img @ healthy) @ healthy.T
    keep = np.linalg.norm(resid, axis=1) <= SPAN_TOL * np.maximum(1.0, nrm)
    if not keep.any() or keep.all():
        raise ForsterFailure(
            "restriction made no progress",
            {"dim": X.shape[1], "kept": int(keep.sum()), "total": len(X)})
    # subspace of the current coordinates whose image lies in the healthy span
    sub = _null_space(_drop_rows(U, lam, eps_c) @ A)
    b2, A2, ids2, it2, eps2 = _solve(X[keep] @ sub, ids[keep], basis @ sub,
                                     eps, max_iters, depth + 1)
    return b2, A2, ids2, iters_so_far + it2, eps2


def _drop_rows(U, lam, eps_c):
    return U[:, lam < eps_c / 10].T


def _row_space(X: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the span of the rows of X."""
    _, s, Vt = np.linalg.svd(X, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise ValueError("degenerate point set")
    r = int(np.sum(s > 1e-12 * s[0]))
    return Vt[:r].T


def _null_space(Mat: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the null space of Mat (columns)."""
    m, n = Mat.shape
    _, s, Vt = np.linalg.svd(Mat, full_matrices=True)
    tol = (s[0] if s.size else 0.0) * max(m, n) * np.finfo(float).eps
    rank = int(np.sum(s > tol))
    return Vt[rank:].T


def _orthonormalize(Mat: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(Mat)
    # canonical orientation: positive diagonal of r
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def _orth_complement(basis: np.ndarray) -> np.ndarray:
    d, k = basis.shape
    if k == d:
        return np.zeros((d, 0))
    full = np.linalg.qr(np.hstack([basis, np.eye(d)]))[0]
    return full[:, k:d]
