"""Sparse user x item rating matrices.

Two concrete containers are provided:

* :class:`RatingMatrix` stores real-valued ratings.  A cell is *rated* iff an
  entry is stored for it, so an explicit ``0.0`` is a rating like any other.
* :class:`BinaryRatingMatrix` stores the positions of the 1s of 0-1 data.

Both use a row-major compressed layout (``indptr``/``indices``) with item
indices strictly increasing inside each row.  Instances are immutable; all
transforms return new objects.
"""

from __future__ import annotations

import contextlib
import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateEntry,
    EmptyInput,
    InvalidArgument,
    InvalidRating,
    ParseError,
    ShapeMismatch,
)

__all__ = [
    "RatingMatrix",
    "BinaryRatingMatrix",
    "NormalizationInfo",
    "Stats",
    "from_tuples",
    "to_tuples",
    "read_csv",
    "write_csv",
    "row_stats",
    "col_stats",
    "normalize",
    "denormalize",
    "binarize",
    "sample_users",
]


def _default_labels(prefix, n):
    return tuple(f"{prefix}{i + 1}" for i in range(n))


def _check_labels(labels, n, what):
    labels = tuple(labels)
    if len(labels) != n:
        raise ShapeMismatch(f"expected {n} {what} labels, got {len(labels)}")
    for lab in labels:
        if not isinstance(lab, str) or not lab:
            raise InvalidArgument(f"{what} labels must be non-empty strings, got {lab!r}")
    if len(set(labels)) != n:
        raise InvalidArgument(f"{what} labels are not unique")
    return labels


def _readonly(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


class _SparseRows:
    """Shared row-compressed structure for both matrix kinds."""

    kind = None

    def __init__(self, indptr, indices, n_items, user_labels=None, item_labels=None):
        indptr = _readonly(indptr, np.int64)
        indices = _readonly(indices, np.int64)
        if indptr.ndim != 1 or indptr.size == 0 or indptr[0] != 0:
            raise InvalidArgument("indptr must be a 1-d array starting at 0")
        if np.any(np.diff(indptr) < 0) or indptr[-1] != indices.size:
            raise InvalidArgument("indptr is not consistent with indices")
        n_users = indptr.size - 1
        n_items = int(n_items)
        if n_items < 0:
            raise InvalidArgument("n_items must be >= 0")
        if indices.size:
            if indices.min() < 0 or indices.max() >= n_items:
                raise InvalidArgument("item index out of range")
            # strictly increasing within each row
            step = np.diff(indices)
            row_start = np.zeros(indices.size, dtype=bool)
            row_start[indptr[:-1][indptr[:-1] < indices.size]] = True
            if np.any(step[~row_start[1:]] <= 0):
                raise InvalidArgument("item indices must be strictly increasing within a row")
        self.indptr = indptr
        self.indices = indices
        self.n_items = n_items
        self.user_labels = (
            _default_labels("u", n_users) if user_labels is None
            else _check_labels(user_labels, n_users, "user")
        )
        self.item_labels = (
            _default_labels("i", n_items) if item_labels is None
            else _check_labels(item_labels, n_items, "item")
        )
        self._user_pos = None
        self._item_pos = None

    @property
    def n_users(self):
        return self.indptr.size - 1

    @property
    def shape(self):
        return (self.n_users, self.n_items)

    @property
    def nnz(self):
        return int(self.indices.size)

    def __len__(self):
        return self.n_users

    def user_index(self, label):
        if self._user_pos is None:
            self._user_pos = {lab: i for i, lab in enumerate(self.user_labels)}
        try:
            return self._user_pos[label]
        except KeyError:
            raise KeyError(f"unknown user {label!r}") from None

    def item_index(self, label):
        if self._item_pos is None:
            self._item_pos = {lab: i for i, lab in enumerate(self.item_labels)}
        try:
            return self._item_pos[label]
        except KeyError:
            raise KeyError(f"unknown item {label!r}") from None

    def row_items(self, u):
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def row_counts(self):
        return np.diff(self.indptr)

    def col_counts(self):
        return np.bincount(self.indices, minlength=self.n_items)

    def rated_mask(self):
        """Dense boolean array, True where an entry is stored."""
        mask = np.zeros(self.shape, dtype=bool)
        rows = np.repeat(np.arange(self.n_users), self.row_counts())
        mask[rows, self.indices] = True
        return mask

    def _row_ids(self):
        return np.repeat(np.arange(self.n_users), self.row_counts())

    def _take_rows(self, rows):
        rows = np.asarray(rows, dtype=np.int64)
        if rows.ndim != 1:
            raise InvalidArgument("row selection must be 1-d")
        if rows.size and (rows.min() < 0 or rows.max() >= self.n_users):
            raise InvalidArgument("row index out of range")
        counts = self.row_counts()[rows]
        indptr = np.concatenate([[0], np.cumsum(counts)])
        pos = (
            np.concatenate([np.arange(self.indptr[r], self.indptr[r + 1]) for r in rows])
            if rows.size else np.zeros(0, dtype=np.int64)
        ).astype(np.int64)
        labels = tuple(self.user_labels[r] for r in rows)
        return indptr, pos, labels

    def _item_map(self, item_labels):
        """Old item index -> new index for a target label order."""
        item_labels = tuple(item_labels)
        target = {lab: j for j, lab in enumerate(item_labels)}
        try:
            return item_labels, np.array([target[lab] for lab in self.item_labels], dtype=np.int64)
        except KeyError as e:
            raise ShapeMismatch(f"item {e.args[0]!r} is not part of the target item set") from None


class RatingMatrix(_SparseRows):
    """Real-valued user x item rating matrix with presence-based missingness."""

    kind = "real"

    def __init__(self, indptr, indices, values, n_items, user_labels=None, item_labels=None):
        super().__init__(indptr, indices, n_items, user_labels, item_labels)
        values = _readonly(values, np.float64)
        if values.shape != self.indices.shape:
            raise InvalidArgument("values and indices differ in length")
        if not np.all(np.isfinite(values)):
            raise InvalidRating("ratings must be finite")
        self.values = values

    def __repr__(self):
        return f"<{self.n_users} x {self.n_items} rating matrix with {self.nnz} ratings>"

    def __eq__(self, other):
        if not isinstance(other, RatingMatrix):
            return NotImplemented
        return (
            self.user_labels == other.user_labels
            and self.item_labels == other.item_labels
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    @classmethod
    def from_dense(cls, dense, user_labels=None, item_labels=None):
        """Build from a 2-d array where NaN marks a missing rating."""
        dense = np.asarray(dense, dtype=np.float64)
        if dense.ndim != 2:
            raise InvalidArgument("dense ratings must be 2-d")
        present = ~np.isnan(dense)
        if np.any(np.isinf(dense)):
            raise InvalidRating("ratings must be finite")
        rows, cols = np.nonzero(present)
        indptr = np.concatenate([[0], np.cumsum(present.sum(axis=1))])
        return cls(indptr, cols, dense[rows, cols], dense.shape[1], user_labels, item_labels)

    def to_dense(self, fill=np.nan):
        out = np.full(self.shape, fill, dtype=np.float64)
        out[self._row_ids(), self.indices] = self.values
        return out

    def row(self, u):
        """(item indices, ratings) of user ``u``."""
        lo, hi = self.indptr[u], self.indptr[u + 1]
        return self.indices[lo:hi], self.values[lo:hi]

    def ratings(self):
        """All stored ratings in row-major order."""
        return self.values

    def subset_users(self, rows):
        indptr, pos, labels = self._take_rows(rows)
        return RatingMatrix(indptr, self.indices[pos], self.values[pos], self.n_items,
                            labels, self.item_labels)

    def with_values(self, values):
        """Same sparsity pattern, new ratings."""
        return RatingMatrix(self.indptr, self.indices, values, self.n_items,
                            self.user_labels, self.item_labels)

    def reindex_items(self, item_labels):
        """Re-express the matrix over another item universe (by label)."""
        item_labels, remap = self._item_map(item_labels)
        if item_labels == self.item_labels:
            return self
        dense = np.full((self.n_users, len(item_labels)), np.nan)
        dense[self._row_ids(), remap[self.indices]] = self.values
        return RatingMatrix.from_dense(dense, self.user_labels, item_labels)


class BinaryRatingMatrix(_SparseRows):
    """0-1 user x item matrix; only the 1s are stored."""

    kind = "binary"

    def __repr__(self):
        return f"<{self.n_users} x {self.n_items} binary rating matrix with {self.nnz} ones>"

    def __eq__(self, other):
        if not isinstance(other, BinaryRatingMatrix):
            return NotImplemented
        return (
            self.user_labels == other.user_labels
            and self.item_labels == other.item_labels
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    __hash__ = None

    @classmethod
    def from_dense(cls, dense, user_labels=None, item_labels=None):
        dense = np.asarray(dense).astype(bool)
        if dense.ndim != 2:
            raise InvalidArgument("dense matrix must be 2-d")
        _, cols = np.nonzero(dense)
        indptr = np.concatenate([[0], np.cumsum(dense.sum(axis=1))])
        return cls(indptr, cols, dense.shape[1], user_labels, item_labels)

    @classmethod
    def from_sets(cls, rows, n_items, user_labels=None, item_labels=None):
        rows = [sorted(set(int(i) for i in r)) for r in rows]
        indptr = np.concatenate([[0], np.cumsum([len(r) for r in rows])]).astype(np.int64)
        indices = np.array([i for r in rows for i in r], dtype=np.int64)
        return cls(indptr, indices, n_items, user_labels, item_labels)

    def to_dense(self):
        return self.rated_mask()

    def row(self, u):
        return self.row_items(u)

    def subset_users(self, rows):
        indptr, pos, labels = self._take_rows(rows)
        return BinaryRatingMatrix(indptr, self.indices[pos], self.n_items, labels, self.item_labels)

    def reindex_items(self, item_labels):
        item_labels, remap = self._item_map(item_labels)
        if item_labels == self.item_labels:
            return self
        return BinaryRatingMatrix.from_sets(
            [remap[self.row_items(u)] for u in range(self.n_users)],
            len(item_labels), self.user_labels, item_labels,
        )


# --------------------------------------------------------------------------
# construction and I/O


def from_tuples(tuples: Iterable[tuple], user_labels=None, item_labels=None) -> RatingMatrix:
    """Build a :class:`RatingMatrix` from ``(user, item, rating)`` triples.

    Users and items are indexed in order of first appearance unless explicit
    label lists are given (which also lets unrated items/users exist).
    """
    tuples = list(tuples)
    if not tuples:
        raise EmptyInput("a rating matrix needs at least one rating")
    users = {} if user_labels is None else {lab: i for i, lab in enumerate(user_labels)}
    items = {} if item_labels is None else {lab: i for i, lab in enumerate(item_labels)}
    cells = {}
    for user, item, rating in tuples:
        for lab in (user, item):
            if not isinstance(lab, str) or not lab:
                raise InvalidArgument(f"labels must be non-empty strings, got {lab!r}")
        rating = float(rating)
        if not math.isfinite(rating):
            raise InvalidRating(f"non-finite rating for ({user}, {item})")
        for lab, table, fixed in ((user, users, user_labels), (item, items, item_labels)):
            if lab not in table:
                if fixed is not None:
                    raise InvalidArgument(f"label {lab!r} not among the given labels")
                table[lab] = len(table)
        key = (users[user], items[item])
        if key in cells:
            raise DuplicateEntry(f"duplicate rating for ({user}, {item})")
        cells[key] = rating
    n_users, n_items = len(users), len(items)
    keys = sorted(cells)
    counts = np.bincount([k[0] for k in keys], minlength=n_users)
    indptr = np.concatenate([[0], np.cumsum(counts)])
    return RatingMatrix(
        indptr,
        [k[1] for k in keys],
        [cells[k] for k in keys],
        n_items,
        user_labels=list(users),
        item_labels=list(items),
    )


def to_tuples(m) -> list[tuple[str, str, float]]:
    """Row-major ``(user, item, rating)`` triples; binary matrices yield 1.0."""
    out = []
    for u in range(m.n_users):
        lo, hi = m.indptr[u], m.indptr[u + 1]
        for p in range(lo, hi):
            val = float(m.values[p]) if isinstance(m, RatingMatrix) else 1.0
            out.append((m.user_labels[u], m.item_labels[m.indices[p]], val))
    return out


def _parse_float(text, line):
    try:
        val = float(text)
    except ValueError:
        raise ParseError(f"cannot parse rating {text!r}", line) from None
    if not math.isfinite(val):
        raise InvalidRating(f"line {line}: non-finite rating {text!r}")
    return val


def read_csv(path, format="tuples", binary=False):
    """Read ratings from ``path``.

    ``format="tuples"`` expects a ``user,item,rating`` header followed by one
    rating per line.  ``format="dense"`` expects a header row of item labels
    (first cell ignored), one row per user, empty cells meaning *missing*.
    With ``binary=True`` a :class:`BinaryRatingMatrix` is returned holding the
    cells whose value is non-zero.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("file is empty", 1)
    if format == "tuples":
        header = [h.strip().lower() for h in rows[0]]
        if header != ["user", "item", "rating"]:
            raise ParseError("header must be 'user,item,rating'", 1)
        tuples = []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", lineno)
            user, item = row[0].strip(), row[1].strip()
            if not user or not item:
                raise ParseError("empty user or item label", lineno)
            tuples.append((user, item, _parse_float(row[2].strip(), lineno)))
        m = from_tuples(tuples)
    elif format == "dense":
        items = [h.strip() for h in rows[0][1:]]
        tuples, users = [], []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != len(items) + 1:
                raise ParseError(f"expected {len(items) + 1} fields, got {len(row)}", lineno)
            user = row[0].strip()
            if not user:
                raise ParseError("empty user label", lineno)
            users.append(user)
            for item, cell in zip(items, row[1:]):
                cell = cell.strip()
                if cell != "":
                    tuples.append((user, item, _parse_float(cell, lineno)))
        if len(set(users)) != len(users):
            raise DuplicateEntry("duplicate user row in dense file")
        m = from_tuples(tuples, user_labels=users, item_labels=items)
    else:
        raise InvalidArgument(f"unknown CSV format {format!r}")
    if binary:
        return binarize_nonzero(m)
    return m


def _fmt(x):
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


@contextlib.contextmanager
def _writer_target(target):
    if hasattr(target, "write"):
        yield target
    else:
        with Path(target).open("w", newline="", encoding="utf-8") as fh:
            yield fh


def write_csv(m, path, format="tuples"):
    """Write ``m`` in one of the formats understood by :func:`read_csv`.

    ``path`` may also be an open text stream.
    """
    with _writer_target(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        if format == "tuples":
            w.writerow(["user", "item", "rating"])
            for user, item, val in to_tuples(m):
                w.writerow([user, item, _fmt(val)])
        elif format == "dense":
            w.writerow(["user", *m.item_labels])
            dense = m.to_dense() if isinstance(m, RatingMatrix) else m.to_dense().astype(float)
            for u, lab in enumerate(m.user_labels):
                row = dense[u]
                if isinstance(m, BinaryRatingMatrix):
                    cells = ["1" if v else "0" for v in row]
                else:
                    cells = ["" if np.isnan(v) else _fmt(v) for v in row]
                w.writerow([lab, *cells])
        else:
            raise InvalidArgument(f"unknown CSV format {format!r}")


# --------------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class Stats:
    """Per-row or per-column summary.  ``mean`` is NaN where ``count == 0``."""

    count: np.ndarray
    mean: np.ndarray
    sum: np.ndarray

    @property
    def undefined(self):
        return self.count == 0


def _stats(groups, values, counts, n):
    sums = np.bincount(groups, weights=values, minlength=n)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return Stats(counts, means, sums)


def row_stats(m) -> Stats:
    """Per-user count, mean and sum.

    For a :class:`BinaryRatingMatrix` every cell is a 0/1 value, so the mean
    is the fraction of items set to 1.
    """
    counts = m.row_counts()
    if isinstance(m, BinaryRatingMatrix):
        sums = counts.astype(float)
        means = sums / m.n_items if m.n_items else np.full(m.n_users, np.nan)
        return Stats(counts, means, sums)
    return _stats(m._row_ids(), m.values, counts, m.n_users)


def col_stats(m) -> Stats:
    counts = m.col_counts()
    if isinstance(m, BinaryRatingMatrix):
        sums = counts.astype(float)
        means = sums / m.n_users if m.n_users else np.full(m.n_items, np.nan)
        return Stats(counts, means, sums)
    return _stats(m.indices, m.values, counts, m.n_items)


# --------------------------------------------------------------------------
# normalization


@dataclass(frozen=True)
class NormalizationInfo:
    """What :func:`normalize` removed, enough for an exact inverse."""

    method: str
    user_labels: tuple
    row_means: np.ndarray
    row_sds: np.ndarray | None = None


_METHODS = {"center": "center", "z-score": "z-score", "zscore": "z-score", "z_score": "z-score"}


def normalize(m: RatingMatrix, method="center"):
    """Remove per-user rating bias.

    ``center`` subtracts each user's mean rating; ``z-score`` also divides by
    the user's sample standard deviation.  Rows with fewer than two ratings
    or zero spread are only centered and record ``sd = 1``.
    Returns ``(normalized matrix, NormalizationInfo)``.
    """
    if not isinstance(m, RatingMatrix):
        raise InvalidArgument("normalize needs a RatingMatrix")
    try:
        method = _METHODS[method.lower()]
    except (KeyError, AttributeError):
        raise InvalidArgument(f"unknown normalization {method!r}") from None
    rows = m._row_ids()
    stats = row_stats(m)
    means = stats.mean
    values = m.values - means[rows]
    sds = None
    if method == "z-score":
        sq = np.bincount(rows, weights=values**2, minlength=m.n_users)
        counts = stats.count
        with np.errstate(invalid="ignore", divide="ignore"):
            sds = np.sqrt(sq / (counts - 1))
        sds = np.where((counts < 2) | ~(sds > 0), 1.0, sds)
        values = values / sds[rows]
    info = NormalizationInfo(method, m.user_labels, means, sds)
    return m.with_values(values), info


def denormalize(m: RatingMatrix, info: NormalizationInfo) -> RatingMatrix:
    """Invert :func:`normalize` for a matrix over the same users."""
    if tuple(m.user_labels) != tuple(info.user_labels):
        raise ShapeMismatch("normalization info belongs to a different set of users")
    rows = m._row_ids()
    values = m.values
    if info.row_sds is not None:
        values = values * info.row_sds[rows]
    return m.with_values(values + info.row_means[rows])


# --------------------------------------------------------------------------
# binarization and sampling


def binarize(m: RatingMatrix, min_rating: float) -> BinaryRatingMatrix:
    """Cells rated ``>= min_rating`` become 1, everything else 0."""
    keep = m.values >= min_rating
    counts = np.bincount(m._row_ids()[keep], minlength=m.n_users)
    indptr = np.concatenate([[0], np.cumsum(counts)])
    return BinaryRatingMatrix(indptr, m.indices[keep], m.n_items, m.user_labels, m.item_labels)


def binarize_nonzero(m: RatingMatrix) -> BinaryRatingMatrix:
    keep = m.values != 0
    counts = np.bincount(m._row_ids()[keep], minlength=m.n_users)
    indptr = np.concatenate([[0], np.cumsum(counts)])
    return BinaryRatingMatrix(indptr, m.indices[keep], m.n_items, m.user_labels, m.item_labels)


def sample_users(m, k: int, seed=None):
    """``k`` distinct users drawn uniformly without replacement."""
    k = int(k)
    if k < 1:
        raise InvalidArgument("sample size must be >= 1")
    if k > m.n_users:
        raise InvalidArgument(f"cannot sample {k} of {m.n_users} users without replacement")
    rng = np.random.default_rng(seed)
    return m.subset_users(rng.choice(m.n_users, size=k, replace=False))


def concat_users(mats: Sequence):
    """Stack matrices over the same item set (used by tests and tools)."""
    first = mats[0]
    labels = [lab for mm in mats for lab in mm.user_labels]
    if isinstance(first, RatingMatrix):
        dense = np.vstack([mm.reindex_items(first.item_labels).to_dense() for mm in mats])
        return RatingMatrix.from_dense(dense, labels, first.item_labels)
    dense = np.vstack([mm.reindex_items(first.item_labels).to_dense() for mm in mats])
    return BinaryRatingMatrix.from_dense(dense, labels, first.item_labels)
