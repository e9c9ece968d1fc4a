"""Synthetic rating data with popularity skew and user bias.

Which items a user rates depends on item popularity (a power law over a
random item order) and on the user's latent taste for the item; the rating
itself combines user bias, item quality (correlated with popularity), the
same taste term and noise, clamped to the rating scale.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidArgument
from .ratings import RatingMatrix


@dataclass(frozen=True)
class SyntheticSpec:
    n_users: int = 1000
    n_items: int = 100
    density: float = 0.3
    user_bias_sd: float = 1.0
    skew: float = 0.5
    scale: tuple = (-10.0, 10.0)
    seed: int = 0
    n_factors: int = 3
    taste_weight: float = 2.0
    selection_strength: float = 0.5
    quality_popularity_corr: float = 0.7
    noise_sd: float = 0.5
    spread: float = 0.6
    activity_sd: float = 0.3
    min_per_user: int = 1
    decimals: int = 2

    def validate(self):
        if self.n_users < 1 or self.n_items < 1:
            raise InvalidArgument("n_users and n_items must be >= 1")
        if not 0 < self.density < 1:
            raise InvalidArgument("density must be in (0, 1)")
        lo, hi = self.scale
        if not lo < hi:
            raise InvalidArgument("scale must be (lo, hi) with lo < hi")
        if self.skew < 0 or self.user_bias_sd < 0 or self.noise_sd < 0:
            raise InvalidArgument("skew and standard deviations must be >= 0")
        if not 0 <= self.min_per_user <= self.n_items:
            raise InvalidArgument("min_per_user must be in [0, n_items]")
        if self.min_per_user * self.n_users > round(self.density * self.n_users * self.n_items):
            raise InvalidArgument("min_per_user is incompatible with the density")
        if not -1 <= self.quality_popularity_corr <= 1:
            raise InvalidArgument("quality_popularity_corr must be in [-1, 1]")
        return self

    def to_dict(self):
        d = asdict(self)
        d["scale"] = list(self.scale)
        return d


def _allocate(total, weights, lo, hi):
    """Integer counts summing to ``total``, proportional to ``weights``, within [lo, hi]."""
    raw = total * weights / weights.sum()
    counts = np.clip(np.floor(raw).astype(np.int64), lo, hi)
    order = np.argsort(-(raw - np.floor(raw)), kind="stable")
    diff = total - int(counts.sum())
    i = 0
    while diff != 0:
        u = order[i % len(order)]
        step = 1 if diff > 0 else -1
        if lo <= counts[u] + step <= hi:
            counts[u] += step
            diff -= step
        i += 1
    return counts


def generate(spec: SyntheticSpec) -> RatingMatrix:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    U, I, f = spec.n_users, spec.n_items, max(spec.n_factors, 1)

    rank = rng.permutation(I)
    log_pop = -spec.skew * np.log(rank + 1.0)
    activity = rng.lognormal(0.0, spec.activity_sd, U)
    total = int(round(spec.density * U * I))
    counts = _allocate(total, activity, spec.min_per_user, I)

    P = rng.standard_normal((U, f))
    Q = rng.standard_normal((I, f))
    affinity = P @ Q.T / np.sqrt(f)

    # Gumbel top-k = weighted sampling without replacement
    keys = log_pop[None, :] + spec.selection_strength * affinity + rng.gumbel(size=(U, I))
    order = np.argsort(-keys, axis=1)
    rated = np.zeros((U, I), dtype=bool)
    for u in range(U):
        rated[u, order[u, : counts[u]]] = True

    sd = log_pop.std()
    z_pop = (log_pop - log_pop.mean()) / sd if sd > 0 else np.zeros(I)
    c = spec.quality_popularity_corr
    quality = c * z_pop + np.sqrt(1 - c * c) * rng.standard_normal(I)
    bias = spec.user_bias_sd * rng.standard_normal(U)
    z = (bias[:, None] + quality[None, :] + spec.taste_weight * affinity
         + spec.noise_sd * rng.standard_normal((U, I)))

    # z has unit variance per component; spread it over the scale
    z_sd = np.sqrt(spec.user_bias_sd**2 + 1.0 + spec.taste_weight**2 + spec.noise_sd**2)
    lo, hi = spec.scale
    mid, half = (lo + hi) / 2, (hi - lo) / 2
    ratings = np.clip(mid + spec.spread * half * z / z_sd, lo, hi).round(spec.decimals)
    dense = np.where(rated, ratings, np.nan)
    return RatingMatrix.from_dense(dense)
