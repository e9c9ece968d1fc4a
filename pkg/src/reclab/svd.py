"""Rank-k truncated SVD by orthogonal (subspace) iteration.

Works on the Gram matrix ``A.T @ A``.  Each sweep multiplies the active
block, re-orthonormalizes it against the already converged (locked)
vectors, and applies a Rayleigh-Ritz rotation.  Leading Ritz pairs whose
residual drops below ``tol * lambda_max`` are locked and deflated from
further sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument


@dataclass(frozen=True)
class TruncatedSVD:
    U: np.ndarray
    s: np.ndarray
    V: np.ndarray
    iterations: int
    converged: bool

    def reconstruct(self):
        return (self.U * self.s) @ self.V.T


def _orthonormalize(Z, locked):
    for _ in range(2):
        if locked.shape[1]:
            Z = Z - locked @ (locked.T @ Z)
    Q, _ = np.linalg.qr(Z)
    return Q


def truncated_svd(A, k, maxiter=100, tol=1e-9, seed=0) -> TruncatedSVD:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InvalidArgument("A must be 2-d")
    m, n = A.shape
    k = int(k)
    if not 1 <= k <= min(m, n):
        raise InvalidArgument(f"k must be in [1, {min(m, n)}]")
    if maxiter < 1:
        raise InvalidArgument("maxiter must be >= 1")

    G = A.T @ A
    # 1-norm bounds the largest eigenvalue of the symmetric Gram matrix
    scale = max(float(np.abs(G).sum(axis=0).max()), np.finfo(float).tiny)
    rng = np.random.default_rng(seed)
    V = np.linalg.qr(rng.standard_normal((n, k)))[0]
    lam = np.zeros(k)
    n_locked = 0
    it = 0
    for it in range(1, maxiter + 1):
        locked = V[:, :n_locked]
        Q = _orthonormalize(G @ V[:, n_locked:], locked)
        H = Q.T @ G @ Q
        w, Y = np.linalg.eigh((H + H.T) / 2)
        order = np.argsort(w)[::-1]
        Q = Q @ Y[:, order]
        w = w[order]
        V = np.hstack([locked, Q])
        lam[n_locked:] = w
        res = np.linalg.norm(G @ Q - Q * w, axis=0)
        for r in res:
            if r > tol * scale:
                break
            n_locked += 1
        if n_locked == k:
            break

    s = np.sqrt(np.clip(lam, 0.0, None))
    order = np.argsort(s)[::-1]
    s, V = s[order], V[:, order]
    AV = A @ V
    with np.errstate(invalid="ignore", divide="ignore"):
        U = np.where(s > 0, AV / s, 0.0)
    return TruncatedSVD(U, s, V, it, n_locked == k)
