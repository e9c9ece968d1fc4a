"""Recommender algorithms behind a name-based registry."""

from .base import (
    AlgorithmSpec,
    Recommender,
    RecommenderModel,
    TopNList,
    best_n,
    fit,
    get_spec,
    predict,
    register,
    registry_entries,
    unregister,
)
from . import algorithms  # noqa: F401  (registers the built-ins)
from .algorithms import (
    ARRecommender,
    HybridRecommender,
    IBCF,
    PopularRecommender,
    RandomRecommender,
    RerecommendRecommender,
    SVDRecommender,
    UBCF,
)

__all__ = [
    "AlgorithmSpec",
    "Recommender",
    "RecommenderModel",
    "TopNList",
    "best_n",
    "fit",
    "get_spec",
    "predict",
    "register",
    "registry_entries",
    "unregister",
    "ARRecommender",
    "HybridRecommender",
    "IBCF",
    "PopularRecommender",
    "RandomRecommender",
    "RerecommendRecommender",
    "SVDRecommender",
    "UBCF",
]
