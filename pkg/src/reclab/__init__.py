"""reclab: sparse rating matrices, collaborative-filtering recommenders and
an evaluation harness for top-N and rating-prediction experiments."""

from .errors import ReclabError
from .ratings import (
    BinaryRatingMatrix,
    NormalizationInfo,
    RatingMatrix,
    binarize,
    col_stats,
    denormalize,
    from_tuples,
    normalize,
    read_csv,
    row_stats,
    sample_users,
    to_tuples,
    write_csv,
)
from .recommend import Recommender, TopNList, best_n, fit, predict, register, registry_entries

__version__ = "0.1.0"

__all__ = [
    "ReclabError",
    "BinaryRatingMatrix",
    "NormalizationInfo",
    "RatingMatrix",
    "binarize",
    "col_stats",
    "denormalize",
    "from_tuples",
    "normalize",
    "read_csv",
    "row_stats",
    "sample_users",
    "to_tuples",
    "write_csv",
    "Recommender",
    "TopNList",
    "best_n",
    "fit",
    "predict",
    "register",
    "registry_entries",
]
