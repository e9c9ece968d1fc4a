"""Brute-force reference implementations used by the tests.

Everything here works on plain dense arrays with explicit Python loops and
shares no code with the package.  Conventions (NaN = missing, ties broken by
lower index after rounding to 12 decimals, undefined = NaN) mirror the
documented behavior.
"""

import itertools
import math

import numpy as np

NAN = float("nan")


def row_center(D, zscore=False):
    """Normalize each row of dense ``D`` (NaN missing); returns (N, means, sds)."""
    n_rows, n_cols = D.shape
    N = np.full(D.shape, NAN)
    means = np.full(n_rows, NAN)
    sds = np.ones(n_rows)
    for u in range(n_rows):
        vals = [D[u, j] for j in range(n_cols) if not math.isnan(D[u, j])]
        if not vals:
            continue
        mu = sum(vals) / len(vals)
        means[u] = mu
        sd = 1.0
        if zscore and len(vals) > 1:
            var = sum((v - mu) ** 2 for v in vals) / (len(vals) - 1)
            if var > 0:
                sd = math.sqrt(var)
        sds[u] = sd
        for j in range(n_cols):
            if not math.isnan(D[u, j]):
                N[u, j] = (D[u, j] - mu) / sd
    return N, means, sds


def sim_pair(x, y, measure, min_matching=0):
    """Similarity over co-rated positions of two NaN-padded vectors."""
    xs, ys = [], []
    for a, b in zip(x, y):
        if not math.isnan(a) and not math.isnan(b):
            xs.append(a)
            ys.append(b)
    n = len(xs)
    if measure == "cosine":
        if n < max(min_matching, 1):
            return NAN
        num = sum(a * b for a, b in zip(xs, ys))
        sa = sum(a * a for a in xs)
        sb = sum(b * b for b in ys)
    else:
        if n < max(min_matching, 2):
            return NAN
        mx, my = sum(xs) / n, sum(ys) / n
        num = sum((a - mx) * (b - my) for a, b in zip(xs, ys))
        sa = sum((a - mx) ** 2 for a in xs)
        sb = sum((b - my) ** 2 for b in ys)
    if sa <= 1e-20 or sb <= 1e-20:
        return NAN
    return max(-1.0, min(1.0, num / (math.sqrt(sa) * math.sqrt(sb))))


def jaccard_pair(x, y):
    inter = sum(1 for a, b in zip(x, y) if a and b)
    union = sum(1 for a, b in zip(x, y) if a or b)
    return inter / union if union else NAN


def top_k(sims, k, exclude=None):
    """Indices of the k largest defined similarities; ties to the lower index."""
    cand = [(round(s, 12), i) for i, s in enumerate(sims)
            if not math.isnan(s) and i != exclude]
    cand.sort(key=lambda t: (-t[0], t[1]))
    return [i for _, i in cand[:k]]


def ubcf_predict(train, active, measure="cosine", nn=25, weighted=True,
                 zscore=False, drop_nonpositive=True):
    """User-based CF predictions for every cell of ``active`` (dense, NaN missing)."""
    T, _, _ = row_center(train, zscore)
    A, means, sds = row_center(active, zscore)
    n_items = train.shape[1]
    P = np.full(active.shape, NAN)
    for a in range(A.shape[0]):
        sims = [sim_pair(A[a], T[u], measure) for u in range(T.shape[0])]
        nbrs = top_k(sims, nn)
        if weighted and drop_nonpositive:
            nbrs = [u for u in nbrs if sims[u] > 0]
        for j in range(n_items):
            raters = [u for u in nbrs if not math.isnan(T[u, j])]
            if not raters:
                continue
            if weighted:
                den = sum(sims[u] for u in raters)
                if den <= 0:
                    continue
                val = sum(sims[u] * T[u, j] for u in raters) / den
            else:
                val = sum(T[u, j] for u in raters) / len(raters)
            P[a, j] = val * sds[a] + means[a]
    return P


def ibcf_predict(train, active, measure="cosine", k=30, zscore=False):
    """Item-based CF with k-truncated item similarities."""
    T, _, _ = row_center(train, zscore)
    A, means, sds = row_center(active, zscore)
    n_items = train.shape[1]
    S = [[NAN] * n_items for _ in range(n_items)]
    for i in range(n_items):
        for j in range(n_items):
            if i != j:
                S[i][j] = sim_pair(T[:, i], T[:, j], measure)
    keep = [top_k(S[i], k, exclude=i) for i in range(n_items)]
    P = np.full(active.shape, NAN)
    for a in range(A.shape[0]):
        for i in range(n_items):
            used = [j for j in keep[i] if not math.isnan(A[a, j])]
            if not used:
                continue
            den = sum(S[i][j] for j in used)
            if den <= 0:
                continue
            val = sum(S[i][j] * A[a, j] for j in used) / den
            P[a, i] = val * sds[a] + means[a]
    return P


def frequent_itemsets(transactions, n_items, min_support, max_len):
    """Every itemset up to ``max_len`` with support strictly above the threshold."""
    n = len(transactions)
    sets = [set(t) for t in transactions]
    out = {}
    for size in range(1, max_len + 1):
        for combo in itertools.combinations(range(n_items), size):
            c = sum(1 for t in sets if t.issuperset(combo))
            if c / n > min_support:
                out[combo] = c
    return out


def rules(transactions, n_items, min_support, min_confidence, max_len):
    """``{(lhs, rhs): (support, confidence)}`` by exhaustive enumeration."""
    n = len(transactions)
    freq = frequent_itemsets(transactions, n_items, min_support, max_len)
    out = {}
    for itemset, c in freq.items():
        if len(itemset) < 2:
            continue
        for rhs in itemset:
            lhs = tuple(i for i in itemset if i != rhs)
            c_lhs = sum(1 for t in transactions if set(t).issuperset(lhs))
            conf = c / c_lhs
            if conf > min_confidence:
                out[(lhs, rhs)] = (c / n, conf)
    return out


def prediction_errors(pred, truth):
    """(RMSE, MSE, MAE) over cells defined in both dense matrices."""
    se = ae = 0.0
    k = 0
    for u in range(truth.shape[0]):
        for j in range(truth.shape[1]):
            if math.isnan(pred[u, j]) or math.isnan(truth[u, j]):
                continue
            d = pred[u, j] - truth[u, j]
            se += d * d
            ae += abs(d)
            k += 1
    mse = se / k
    return math.sqrt(mse), mse, ae / k


def binarize_dense(D, min_rating):
    out = np.zeros(D.shape, dtype=bool)
    for u in range(D.shape[0]):
        for j in range(D.shape[1]):
            if not math.isnan(D[u, j]) and D[u, j] >= min_rating:
                out[u, j] = True
    return out


def random_ratings(rng, n_users, n_items, density=0.5, integer=False):
    """Dense NaN-padded matrix; every row has at least two ratings."""
    D = np.full((n_users, n_items), NAN)
    for u in range(n_users):
        mask = rng.random(n_items) < density
        mask[rng.choice(n_items, 2, replace=False)] = True
        vals = rng.integers(1, 6, n_items).astype(float) if integer else rng.uniform(-10, 10, n_items).round(2)
        D[u, mask] = vals[mask]
    return D
