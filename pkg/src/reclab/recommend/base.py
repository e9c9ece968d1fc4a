"""Recommender registry, fitted models, top-N lists and ``predict``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import AlreadyRegistered, InvalidArgument, InvalidParam, ShapeMismatch, UnknownAlgorithm
from ..ratings import BinaryRatingMatrix, RatingMatrix
from ..similarity import rank_order

__all__ = [
    "AlgorithmSpec",
    "Recommender",
    "RecommenderModel",
    "TopNList",
    "register",
    "registry_entries",
    "get_spec",
    "fit",
    "predict",
    "best_n",
    "data_kind",
]

DATA_KINDS = ("real", "binary")
PREDICT_TYPES = ("topNList", "ratings", "ratingMatrix")


def data_kind(data):
    if isinstance(data, RatingMatrix):
        return "real"
    if isinstance(data, BinaryRatingMatrix):
        return "binary"
    raise InvalidArgument(f"expected a rating matrix, got {type(data).__name__}")


class Recommender:
    """Base class for algorithms.

    Subclasses implement :meth:`fit` and :meth:`scores`; rating predictors
    also implement :meth:`ratings`.  ``scores`` returns an
    ``(n_users, n_items)`` array where NaN means "no score".
    """

    #: RERECOMMEND sets this; everyone else only ranks unknown items
    recommends_known = False

    def __init__(self, **params):
        self.params = params

    def fit(self, data):
        return self

    def scores(self, newdata) -> np.ndarray:
        raise NotImplementedError

    def ratings(self, newdata) -> np.ndarray:
        raise InvalidArgument(f"{type(self).__name__} does not predict ratings")

    def top_n(self, newdata, n):
        """Per-user ``(items, scores)`` of the best ``n`` candidates."""
        S = self.scores(newdata)
        known = newdata.rated_mask()
        out = []
        for u in range(newdata.n_users):
            ok = ~np.isnan(S[u])
            ok &= known[u] if self.recommends_known else ~known[u]
            items = rank_order(S[u], np.flatnonzero(ok))[:n]
            out.append((items, S[u, items]))
        return out


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    data_kind: str
    description: str
    default_params: dict
    constructor: Callable = field(repr=False, compare=False, default=None)


_REGISTRY: dict = {}


def register(spec: AlgorithmSpec, constructor=None):
    """Add an algorithm; ``constructor(**params)`` must return a :class:`Recommender`."""
    if spec.data_kind not in DATA_KINDS:
        raise InvalidArgument(f"unknown data kind {spec.data_kind!r}")
    key = (spec.name, spec.data_kind)
    if key in _REGISTRY:
        raise AlreadyRegistered(f"{spec.name} is already registered for {spec.data_kind} data")
    if constructor is not None:
        spec = AlgorithmSpec(spec.name, spec.data_kind, spec.description,
                             dict(spec.default_params), constructor)
    if spec.constructor is None:
        raise InvalidArgument("a constructor is required")
    _REGISTRY[key] = spec


def unregister(name, kind):
    _REGISTRY.pop((name, kind), None)


def registry_entries(kind=None):
    if kind is not None and kind not in DATA_KINDS:
        raise InvalidArgument(f"unknown data kind {kind!r}")
    return [s for (_, k), s in _REGISTRY.items() if kind is None or k == kind]


def get_spec(name, kind):
    try:
        return _REGISTRY[(name, kind)]
    except KeyError:
        pass
    if any(n == name for n, _ in _REGISTRY):
        raise UnknownAlgorithm(f"{name} does not implement a method for {kind} data")
    known = sorted({n for n, _ in _REGISTRY})
    raise UnknownAlgorithm(f"unknown algorithm {name!r}; registered: {', '.join(known)}")


def resolve_params(spec, params):
    params = dict(params or {})
    unknown = set(params) - set(spec.default_params)
    if unknown:
        raise InvalidParam(f"{spec.name}: unknown parameter(s) {sorted(unknown)}; "
                           f"accepted: {sorted(spec.default_params)}")
    return {**spec.default_params, **params}


@dataclass
class RecommenderModel:
    name: str
    data_kind: str
    params: dict
    recommender: Recommender
    n_users: int
    item_labels: tuple

    def __repr__(self):
        return (f"<Recommender of type {self.name!r} for {self.data_kind} data "
                f"learned using {self.n_users} users>")


def fit(name, data, params=None) -> RecommenderModel:
    kind = data_kind(data)
    spec = get_spec(name, kind)
    full = resolve_params(spec, params)
    rec = spec.constructor(**full)
    rec.fit(data)
    return RecommenderModel(name, kind, full, rec, data.n_users, tuple(data.item_labels))


@dataclass(frozen=True)
class TopNList:
    """One ordered recommendation list per active user."""

    items: tuple
    scores: tuple
    n: int
    user_labels: tuple
    item_labels: tuple

    def __len__(self):
        return len(self.items)

    def as_labels(self):
        return {u: [self.item_labels[i] for i in its]
                for u, its in zip(self.user_labels, self.items)}

    def __repr__(self):
        return f"<top-N lists with n = {self.n} for {len(self.items)} users>"


def best_n(lists: TopNList, n: int) -> TopNList:
    if n < 1:
        raise InvalidParam("n must be >= 1")
    return TopNList(
        tuple(i[:n] for i in lists.items),
        tuple(s[:n] for s in lists.scores),
        min(n, lists.n),
        lists.user_labels,
        lists.item_labels,
    )


def align(model, newdata):
    if data_kind(newdata) != model.data_kind:
        raise ShapeMismatch(f"model expects {model.data_kind} data")
    return newdata.reindex_items(model.item_labels)


def predict(model: RecommenderModel, newdata, type="topNList", n=10):
    """Recommendations or rating predictions for the users in ``newdata``.

    * ``topNList``: best ``n`` items per user among the items they have not
      rated (RERECOMMEND ranks rated items instead).
    * ``ratings``: predicted ratings; cells the user already rated are missing.
    * ``ratingMatrix``: predictions merged with the user's own ratings.
    """
    if type not in PREDICT_TYPES:
        raise InvalidParam(f"type must be one of {PREDICT_TYPES}")
    newdata = align(model, newdata)
    rec = model.recommender
    if type == "topNList":
        n = int(n)
        if n < 1:
            raise InvalidParam("n must be >= 1")
        ranked = rec.top_n(newdata, n)
        return TopNList(
            tuple(np.asarray(i, dtype=np.int64) for i, _ in ranked),
            tuple(np.asarray(s, dtype=float) for _, s in ranked),
            n,
            tuple(newdata.user_labels),
            tuple(model.item_labels),
        )
    if model.data_kind != "real":
        raise InvalidParam(f"type {type!r} needs real-valued ratings")
    P = np.array(rec.ratings(newdata), dtype=float)
    known = newdata.rated_mask()
    P[known] = np.nan
    if type == "ratingMatrix":
        P = np.where(known, newdata.to_dense(), P)
    return RatingMatrix.from_dense(P, newdata.user_labels, model.item_labels)
