"""Built-in recommender algorithms and their registry entries."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidParam
from ..ratings import RatingMatrix, col_stats, normalize
from ..rulemine import TransactionDB, _best_per_item, mine_rules, recommend_from_rules
from ..similarity import MEASURES, select_neighborhood, similarity_matrix, similarity_to_rows, rank_order
from ..svd import truncated_svd
from .base import AlgorithmSpec, Recommender, fit as fit_model, register

__all__ = [
    "RandomRecommender",
    "PopularRecommender",
    "RerecommendRecommender",
    "UBCF",
    "IBCF",
    "ARRecommender",
    "SVDRecommender",
    "HybridRecommender",
]


def _normalized(m, method):
    """Dense normalized ratings (NaN missing) plus the per-user means and sds."""
    if method is None:
        return m.to_dense(), np.zeros(m.n_users), np.ones(m.n_users)
    norm, info = normalize(m, method)
    sds = info.row_sds if info.row_sds is not None else np.ones(m.n_users)
    return norm.to_dense(), info.row_means, sds


def _check_normalize(method):
    if method not in (None, "center", "z-score"):
        raise InvalidParam(f"normalize must be 'center', 'z-score' or None, got {method!r}")
    return method


def _check_measure(method, binary):
    m = str(method).lower()
    if m not in MEASURES or (m == "jaccard" and not binary):
        raise InvalidParam(f"unsupported similarity method {method!r}")
    return m


def _positive_int(name, value):
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
        raise InvalidParam(f"{name} must be a positive integer, got {value!r}")
    return int(value)


class RandomRecommender(Recommender):
    """Uniform random scores; a baseline.

    Real data: scores are drawn from the observed rating range.  Each user
    gets an independent stream seeded from ``(seed, row position)``.
    """

    def fit(self, data):
        seed = self.params.get("seed")
        self.seed = int(np.random.SeedSequence().entropy % 2**63) if seed is None else int(seed)
        if isinstance(data, RatingMatrix) and data.nnz:
            self.lo, self.hi = float(data.values.min()), float(data.values.max())
        else:
            self.lo, self.hi = 0.0, 1.0
        return self

    def scores(self, newdata):
        S = np.empty(newdata.shape)
        for u in range(newdata.n_users):
            S[u] = np.random.default_rng([self.seed, u]).uniform(self.lo, self.hi, newdata.n_items)
        return S

    ratings = scores


class PopularRecommender(Recommender):
    """Ranks items by how many users rated them.

    Rating predictions are the user's mean plus the item's mean normalized
    rating.
    """

    def fit(self, data):
        self.popularity = data.col_counts().astype(float)
        if isinstance(data, RatingMatrix):
            method = _check_normalize(self.params.get("normalize", "center"))
            self.normalize = method
            src = data if method is None else normalize(data, method)[0]
            self.item_means = col_stats(src).mean
        return self

    def scores(self, newdata):
        return np.broadcast_to(self.popularity, newdata.shape).copy()

    def ratings(self, newdata):
        _, means, sds = _normalized(newdata, self.normalize)
        return means[:, None] + sds[:, None] * self.item_means[None, :]


class RerecommendRecommender(Recommender):
    """Re-recommends the user's own highly rated items.

    Candidates are rated items with rating >= ``min_rating`` (all rated
    items when None), ordered by rating plus uniform jitter in
    ``[0, randomize)``.
    """

    recommends_known = True

    def fit(self, data):
        self.randomize = float(self.params.get("randomize", 0) or 0)
        if self.randomize < 0:
            raise InvalidParam("randomize must be >= 0")
        self.min_rating = self.params.get("min_rating")
        seed = self.params.get("seed")
        self.seed = int(np.random.SeedSequence().entropy % 2**63) if seed is None else int(seed)
        return self

    def scores(self, newdata):
        S = newdata.to_dense()
        if self.min_rating is not None:
            S[S < self.min_rating] = np.nan
        if self.randomize > 0:
            for u in range(newdata.n_users):
                S[u] += self.randomize * np.random.default_rng([self.seed, u]).random(newdata.n_items)
        return S

    def ratings(self, newdata):
        return np.full(newdata.shape, np.nan)


class UBCF(Recommender):
    """User-based collaborative filtering.

    The active user's neighborhood is the ``nn`` most similar training
    users (similarity over co-rated items of normalized ratings).  For an
    item, only neighbors who rated it contribute: either their plain mean
    normalized rating or the similarity-weighted mean.  Neighbors with
    non-positive similarity are dropped from the weighted form when
    ``drop_nonpositive`` is set.
    """

    def fit(self, data):
        p = self.params
        self.binary = not isinstance(data, RatingMatrix)
        self.method = _check_measure(p["method"], self.binary)
        self.nn = _positive_int("nn", p["nn"])
        self.weighted = bool(p["weighted"])
        self.drop_nonpositive = bool(p.get("drop_nonpositive", True))
        self.min_matching = int(p.get("min_matching_items", 0))
        if self.binary:
            self.train = data.to_dense()
        else:
            self.normalize = _check_normalize(p["normalize"])
            self.train, _, _ = _normalized(data, self.normalize)
        return self

    def neighborhood(self, a):
        """Neighbor indices and similarities for one (normalized) profile."""
        if self.binary:
            sims = similarity_to_rows(a, self.train, self.method, self.min_matching, binary=True)
        else:
            cols = np.flatnonzero(~np.isnan(a))
            sims = similarity_to_rows(a[cols], self.train[:, cols], self.method,
                                      self.min_matching, binary=False)
        nb = select_neighborhood(sims, k=self.nn)
        idx, s = nb.indices, nb.similarities
        if self.weighted and self.drop_nonpositive:
            keep = s > 0
            idx, s = idx[keep], s[keep]
        return idx, s

    def _aggregate(self, idx, s):
        R = self.train[idx]
        if self.binary:
            has = R.astype(float)
            if self.weighted:
                den = s.sum()
                out = (s @ has) / den if den > 0 else np.full(R.shape[1], np.nan)
            else:
                out = has.mean(axis=0) if len(idx) else np.full(R.shape[1], np.nan)
            cnt = has.sum(axis=0)
        else:
            rated = ~np.isnan(R)
            Rz = np.where(rated, R, 0.0)
            cnt = rated.sum(axis=0)
            with np.errstate(invalid="ignore", divide="ignore"):
                if self.weighted:
                    den = s @ rated
                    out = (s @ Rz) / den
                    out[~(den > 0)] = np.nan
                else:
                    out = Rz.sum(axis=0) / cnt
        out = np.asarray(out, dtype=float)
        out[cnt == 0] = np.nan
        return out

    def scores(self, newdata):
        if self.binary:
            A = newdata.to_dense()
            means, sds = np.zeros(newdata.n_users), np.ones(newdata.n_users)
        else:
            A, means, sds = _normalized(newdata, self.normalize)
        P = np.full(newdata.shape, np.nan)
        for u in range(newdata.n_users):
            idx, s = self.neighborhood(A[u])
            if len(idx):
                P[u] = self._aggregate(idx, s)
        if not self.binary:
            P = P * sds[:, None] + means[:, None]
        return P

    def ratings(self, newdata):
        return self.scores(newdata)


class IBCF(Recommender):
    """Item-based collaborative filtering with a k-truncated similarity model.

    Each item keeps only its ``k`` most similar other items.  The predicted
    normalized rating of item i is the similarity-weighted mean of the
    user's ratings over those retained neighbors of i that the user rated.
    On 0-1 data the score is the sum of those similarities.
    """

    def fit(self, data):
        p = self.params
        self.binary = not isinstance(data, RatingMatrix)
        self.method = _check_measure(p["method"], self.binary)
        self.k = _positive_int("k", p["k"])
        if self.binary:
            src = data
        else:
            self.normalize = _check_normalize(p["normalize"])
            src = data if self.normalize is None else normalize(data, self.normalize)[0]
        S = similarity_matrix(src, axis="items", measure=self.method,
                              min_matching=int(p.get("min_matching_items", 0)))
        np.fill_diagonal(S, np.nan)
        n = S.shape[0]
        self.neighbors = []
        self.retained = np.zeros((n, n), dtype=bool)
        self.weights = np.zeros((n, n))
        for i in range(n):
            cand = np.flatnonzero(~np.isnan(S[i]))
            keep = rank_order(S[i], cand)[: self.k]
            self.neighbors.append((keep, S[i, keep]))
            self.retained[i, keep] = True
            self.weights[i, keep] = S[i, keep]
        return self

    def scores(self, newdata):
        if self.binary:
            M = newdata.to_dense().astype(float)
            cnt = M @ self.retained.T.astype(float)
            out = M @ self.weights.T
            out[cnt == 0] = np.nan
            return out
        A, means, sds = _normalized(newdata, self.normalize)
        M = ~np.isnan(A)
        Az = np.where(M, A, 0.0)
        Mf = M.astype(float)
        num = Az @ self.weights.T
        den = Mf @ self.weights.T
        cnt = Mf @ self.retained.T.astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            P = num / den
        P[(cnt == 0) | ~(den > 0)] = np.nan
        return P * sds[:, None] + means[:, None]

    def ratings(self, newdata):
        return self.scores(newdata)


class ARRecommender(Recommender):
    """Association-rule recommender for 0-1 data.

    An item's score is the highest confidence among the mined rules whose
    left-hand side is contained in the user's profile and whose right-hand
    side is the item.
    """

    def fit(self, data):
        p = self.params
        self.rules = mine_rules(TransactionDB.from_matrix(data), p["support"],
                                p["confidence"], _positive_int("maxlen", p["maxlen"]))
        return self

    def scores(self, newdata):
        S = np.full(newdata.shape, np.nan)
        for u in range(newdata.n_users):
            for item, (conf, _) in _best_per_item(self.rules.rules, newdata.row_items(u)).items():
                S[u, item] = conf
        return S

    def top_n(self, newdata, n):
        out = []
        for u in range(newdata.n_users):
            recs = recommend_from_rules(self.rules, newdata.row_items(u), n)
            out.append((np.array([i for i, _ in recs], dtype=np.int64),
                        np.array([c for _, c in recs], dtype=float)))
        return out


class SVDRecommender(Recommender):
    """Low-rank approximation of the normalized, column-mean imputed matrix.

    New users are folded in by projecting their imputed normalized profile
    onto the top-``k`` right singular vectors.
    """

    def fit(self, data):
        p = self.params
        self.normalize = _check_normalize(p["normalize"])
        k = _positive_int("k", p["k"])
        X, _, _ = _normalized(data, self.normalize)
        counts = (~np.isnan(X)).sum(axis=0)
        with np.errstate(invalid="ignore"):
            cm = np.where(counts > 0, np.nansum(X, axis=0) / np.maximum(counts, 1), 0.0)
        self.col_means = cm
        self.imputed = np.where(np.isnan(X), cm, X)
        k = min(k, *self.imputed.shape)
        self.svd = truncated_svd(self.imputed, k, maxiter=_positive_int("maxiter", p["maxiter"]),
                                 tol=1e-9)
        self.V = self.svd.V
        return self

    def scores(self, newdata):
        X, means, sds = _normalized(newdata, self.normalize)
        Xi = np.where(np.isnan(X), self.col_means, X)
        P = (Xi @ self.V) @ self.V.T
        P = P * sds[:, None] + means[:, None]
        P[np.isnan(means)] = np.nan
        return P

    def ratings(self, newdata):
        return self.scores(newdata)


def _minmax_rows(S, candidates):
    out = np.full(S.shape, np.nan)
    for u in range(S.shape[0]):
        ok = candidates[u] & ~np.isnan(S[u])
        if not ok.any():
            continue
        lo, hi = S[u, ok].min(), S[u, ok].max()
        out[u, ok] = (S[u, ok] - lo) / (hi - lo) if hi > lo else 1.0
    return out


class HybridRecommender(Recommender):
    """Weighted mean of several fitted recommenders.

    For ranking, each child's scores are min-max scaled to [0, 1] per user
    over that user's unrated items.  Children without a score for a cell
    are left out and the remaining weights renormalized.
    """

    def fit(self, data):
        p = self.params
        children = p.get("recommenders") or []
        if not children:
            raise InvalidParam("HYBRID needs at least one child recommender")
        self.models = []
        for child in children:
            if isinstance(child, dict):
                name, params = child.get("name"), child.get("params") or {}
            else:
                name, params = child[0], (child[1] if len(child) > 1 else {}) or {}
            self.models.append(fit_model(name, data, params))
        w = p.get("weights")
        w = np.ones(len(self.models)) if w is None else np.asarray(w, dtype=float)
        if w.shape != (len(self.models),) or np.any(w < 0) or not w.sum() > 0:
            raise InvalidParam("weights must be one non-negative number per child")
        self.weights = w
        return self

    def _combine(self, mats):
        num = np.zeros(mats[0].shape)
        den = np.zeros(mats[0].shape)
        for w, M in zip(self.weights, mats):
            ok = ~np.isnan(M)
            num[ok] += w * M[ok]
            den[ok] += w
        with np.errstate(invalid="ignore", divide="ignore"):
            out = num / den
        out[den == 0] = np.nan
        return out

    def scores(self, newdata):
        unknown = ~newdata.rated_mask()
        return self._combine([_minmax_rows(m.recommender.scores(newdata), unknown)
                              for m in self.models])

    def ratings(self, newdata):
        return self._combine([np.asarray(m.recommender.ratings(newdata), dtype=float)
                              for m in self.models])


_UBCF_REAL = dict(method="cosine", nn=25, weighted=True, normalize="center",
                  min_matching_items=0, drop_nonpositive=True)
_UBCF_BIN = dict(method="jaccard", nn=25, weighted=True, min_matching_items=0,
                 drop_nonpositive=True)

_BUILTINS = [
    ("HYBRID", "real", "Hybrid recommender that aggregates several recommendation "
     "strategies using weighted averages.", dict(recommenders=None, weights=None),
     HybridRecommender),
    ("IBCF", "real", "Recommender based on item-based collaborative filtering.",
     dict(k=30, method="cosine", normalize="center", min_matching_items=0), IBCF),
    ("POPULAR", "real", "Recommender based on item popularity.",
     dict(normalize="center"), PopularRecommender),
    ("RANDOM", "real", "Produce random recommendations (real ratings).",
     dict(seed=None), RandomRecommender),
    ("RERECOMMEND", "real", "Re-recommends highly rated items (real ratings).",
     dict(randomize=1, min_rating=None, seed=None), RerecommendRecommender),
    ("SVD", "real", "Recommender based on SVD approximation with column-mean imputation.",
     dict(k=10, maxiter=100, normalize="center"), SVDRecommender),
    ("UBCF", "real", "Recommender based on user-based collaborative filtering.",
     _UBCF_REAL, UBCF),
    ("AR", "binary", "Recommender based on association rules.",
     dict(support=0.1, confidence=0.8, maxlen=3), ARRecommender),
    ("HYBRID", "binary", "Hybrid recommender that aggregates several recommendation "
     "strategies using weighted averages.", dict(recommenders=None, weights=None),
     HybridRecommender),
    ("IBCF", "binary", "Recommender based on item-based collaborative filtering (binary data).",
     dict(k=30, method="jaccard", min_matching_items=0), IBCF),
    ("POPULAR", "binary", "Recommender based on item popularity (binary data).",
     {}, PopularRecommender),
    ("RANDOM", "binary", "Produce random recommendations (binary data).",
     dict(seed=None), RandomRecommender),
    ("UBCF", "binary", "Recommender based on user-based collaborative filtering (binary data).",
     _UBCF_BIN, UBCF),
]


def register_builtins():
    for name, kind, desc, defaults, cls in _BUILTINS:
        register(AlgorithmSpec(name, kind, desc, dict(defaults)), cls)


register_builtins()
