"""Similarity measures between users (rows) or items (columns).

Real-valued vectors use NaN for a missing rating and are compared over the
dimensions rated by *both* sides only.  Binary vectors are boolean arrays
describing 0-1 data where every cell is observed.

An undefined similarity (too few co-rated dimensions, zero denominator,
empty union) is reported as NaN and is never treated as 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, InvalidMeasure
from .ratings import BinaryRatingMatrix, RatingMatrix

__all__ = [
    "MEASURES",
    "ZERO_TOL",
    "TIE_DECIMALS",
    "similarity",
    "similarity_to_rows",
    "similarity_matrix",
    "Neighborhood",
    "select_neighborhood",
    "rank_order",
]

MEASURES = ("pearson", "cosine", "jaccard")

# sums of squares at or below this are treated as an exact zero
ZERO_TOL = 1e-20
# similarities equal after rounding to this many decimals count as tied
TIE_DECIMALS = 12


def _check_measure(measure, binary):
    measure = measure.lower()
    if measure not in MEASURES:
        raise InvalidMeasure(f"unknown similarity measure {measure!r}")
    if measure == "jaccard" and not binary:
        raise InvalidMeasure("jaccard similarity needs binary data")
    return measure


def _real_to_rows(a, B, measure, min_matching):
    co = ~np.isnan(B) & ~np.isnan(a)
    n = co.sum(axis=1)
    A = np.where(co, a, 0.0)
    Bz = np.where(co, B, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        if measure == "cosine":
            floor = max(min_matching, 1)
            num = (A * Bz).sum(axis=1)
            sa = (A * A).sum(axis=1)
            sb = (Bz * Bz).sum(axis=1)
        else:
            floor = max(min_matching, 2)
            nn = np.maximum(n, 1)
            ma = A.sum(axis=1) / nn
            mb = Bz.sum(axis=1) / nn
            da = np.where(co, A - ma[:, None], 0.0)
            db = np.where(co, Bz - mb[:, None], 0.0)
            num = (da * db).sum(axis=1)
            sa = (da * da).sum(axis=1)
            sb = (db * db).sum(axis=1)
        sim = num / (np.sqrt(sa) * np.sqrt(sb))
    bad = (n < floor) | (sa <= ZERO_TOL) | (sb <= ZERO_TOL)
    sim = np.clip(sim, -1.0, 1.0)
    sim[bad] = np.nan
    return sim


def _binary_to_rows(a, B, measure, min_matching):
    a = np.asarray(a, dtype=bool)
    B = np.asarray(B, dtype=bool)
    inter = (B & a).sum(axis=1)
    na = int(a.sum())
    nb = B.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        if measure == "jaccard":
            union = na + nb - inter
            sim = inter / union
            bad = union == 0
        elif measure == "cosine":
            sim = inter / (np.sqrt(na) * np.sqrt(nb))
            bad = (na == 0) | (nb == 0)
        else:
            d = a.size
            ma, mb = na / d, nb / d
            num = inter - d * ma * mb
            sa = na - d * ma * ma
            sb = nb - d * mb * mb
            sim = num / (np.sqrt(sa) * np.sqrt(sb))
            bad = (sa <= ZERO_TOL) | (sb <= ZERO_TOL)
    sim = np.clip(np.asarray(sim, dtype=float), -1.0, 1.0)
    bad = bad | (inter < min_matching)
    sim[bad] = np.nan
    return sim


def similarity_to_rows(a, B, measure="cosine", min_matching=0, binary=None):
    """Similarity of vector ``a`` to every row of ``B``.

    ``binary`` defaults to whether ``a`` has a boolean dtype.
    """
    a = np.asarray(a)
    B = np.atleast_2d(np.asarray(B))
    if binary is None:
        binary = a.dtype == bool
    if min_matching < 0:
        raise InvalidArgument("min_matching must be >= 0")
    measure = _check_measure(measure, binary)
    if B.shape[1] != a.shape[0]:
        raise InvalidArgument("vector lengths differ")
    if binary:
        return _binary_to_rows(a, B, measure, min_matching)
    return _real_to_rows(a.astype(float), B.astype(float), measure, min_matching)


def similarity(a, b, measure="cosine", min_matching=0):
    """Similarity of two rating vectors; NaN when undefined.

    Pearson and cosine are computed over co-rated dimensions of real vectors
    (NaN = missing) and need at least ``max(min_matching, 2)`` respectively
    ``max(min_matching, 1)`` of them.  Jaccard, ``|X & Y| / |X | Y|``, is for
    boolean vectors only.
    """
    return float(similarity_to_rows(a, np.asarray(b)[None, :], measure, min_matching)[0])


def _dense_view(m, axis):
    if isinstance(m, BinaryRatingMatrix):
        d = m.to_dense()
    elif isinstance(m, RatingMatrix):
        d = m.to_dense()
    else:
        d = np.asarray(m)
    if axis == "items":
        d = d.T
    elif axis != "users":
        raise InvalidArgument(f"axis must be 'users' or 'items', got {axis!r}")
    return np.ascontiguousarray(d)


def similarity_matrix(m, axis="users", measure="cosine", min_matching=0):
    """Symmetric matrix of pairwise similarities between rows or columns.

    The diagonal holds each vector's self-similarity (NaN where undefined);
    neighborhood selection excludes it.
    """
    d = _dense_view(m, axis)
    binary = d.dtype == bool
    measure = _check_measure(measure, binary)
    n = d.shape[0]
    S = np.full((n, n), np.nan)
    for i in range(n):
        row = similarity_to_rows(d[i], d[i:], measure, min_matching, binary)
        S[i, i:] = row
        S[i:, i] = row
    return S


@dataclass(frozen=True)
class Neighborhood:
    """Selected neighbors of one target, best first."""

    mode: str
    param: float
    indices: np.ndarray
    similarities: np.ndarray

    def __len__(self):
        return int(self.indices.size)


def rank_order(scores, candidates=None):
    """Indices of ``candidates`` sorted by descending score, ties by index.

    Scores are compared after rounding to ``TIE_DECIMALS`` decimals so that
    values differing only by floating-point noise tie deterministically.
    """
    scores = np.asarray(scores, dtype=float)
    if candidates is None:
        candidates = np.arange(scores.size)
    candidates = np.asarray(candidates, dtype=np.int64)
    keys = np.round(scores[candidates], TIE_DECIMALS)
    return candidates[np.lexsort((candidates, -keys))]


def select_neighborhood(sims, target=None, k=None, threshold=None):
    """Pick neighbors from a similarity vector.

    Exactly one of ``k`` (k nearest neighbors) or ``threshold`` (all with
    similarity >= threshold) must be given.  Undefined similarities and the
    target itself are never selected.
    """
    if (k is None) == (threshold is None):
        raise InvalidArgument("give exactly one of k or threshold")
    sims = np.asarray(sims, dtype=float)
    ok = ~np.isnan(sims)
    if target is not None:
        ok[target] = False
    cand = np.flatnonzero(ok)
    if threshold is not None:
        cand = cand[sims[cand] >= threshold]
        order = rank_order(sims, cand)
        mode, param = "threshold", float(threshold)
    else:
        if k < 0:
            raise InvalidArgument("k must be >= 0")
        order = rank_order(sims, cand)[: int(k)]
        mode, param = "knn", int(k)
    return Neighborhood(mode, param, order, sims[order])
