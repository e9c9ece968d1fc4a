"""Evaluation schemes and metrics for recommenders.

A scheme partitions users into training and test users (random split,
bootstrap, or k-fold cross-validation) and, for each test user, splits the
user's ratings into a *known* part shown to the recommender and an
*unknown* part used for scoring.  ``given > 0`` shows exactly ``given``
ratings (Given-x); ``given < 0`` withholds exactly ``|given|`` (All-but-x).

Top-N evaluation builds a confusion matrix per test user and list length
and then averages over users.  Rates (precision, recall, TPR, FPR) are
averaged per user, not recomputed from the averaged counts.
"""

from __future__ import annotations

import csv
import logging
import math
import time
import zlib
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import InvalidArgument, ShapeMismatch, UndefinedMetric, UnknownAlgorithm, WrongMode
from .ratings import BinaryRatingMatrix, RatingMatrix, _writer_target
from .recommend import base as rb

log = logging.getLogger(__name__)

__all__ = [
    "EvaluationScheme",
    "ConfusionRow",
    "EvaluationResult",
    "make_scheme",
    "get_data",
    "prediction_accuracy",
    "confusion_for_user",
    "derived_metrics",
    "e_measure",
    "f_measure",
    "evaluate",
    "curve_points",
    "roc_auc",
    "write_results_csv",
    "write_avg_csv",
    "write_curve_csv",
    "TOPN_COLUMNS",
    "RATING_COLUMNS",
]

TOPN_COLUMNS = ("algorithm", "run", "n", "TP", "FP", "FN", "TN", "N",
                "precision", "recall", "TPR", "FPR")
RATING_COLUMNS = ("algorithm", "run", "RMSE", "MSE", "MAE")


# --------------------------------------------------------------------------
# schemes


@dataclass(frozen=True)
class RunSplit:
    train: np.ndarray
    test: np.ndarray
    known: object
    unknown: object
    train_draws: np.ndarray | None = None


@dataclass
class EvaluationScheme:
    data: object
    method: str
    given: int
    good_rating: float | None
    seed: int
    splits: list
    train_prop: float | None = None
    k: int | None = None
    eligible: np.ndarray = None
    n_excluded: int = 0

    @property
    def runs(self):
        return len(self.splits)

    @property
    def data_kind(self):
        return rb.data_kind(self.data)

    def get_data(self, run, part):
        return get_data(self, run, part)

    def __repr__(self):
        proto = f"{self.given} items given" if self.given > 0 else f"all-but-{-self.given} items"
        return (f"<Evaluation scheme with {proto}; method {self.method!r} with {self.runs} run(s); "
                f"good ratings >= {self.good_rating}; data {self.data!r}>")


def _split_rows(m, rows, rng, given):
    """Known/unknown matrices for the test users ``rows``."""
    known_ptr, unknown_ptr = [0], [0]
    known_pos, unknown_pos = [], []
    for r in rows:
        lo, hi = int(m.indptr[r]), int(m.indptr[r + 1])
        cnt = hi - lo
        if given > 0:
            pick = rng.choice(cnt, size=given, replace=False)
            is_known = np.zeros(cnt, dtype=bool)
            is_known[pick] = True
        else:
            pick = rng.choice(cnt, size=-given, replace=False)
            is_known = np.ones(cnt, dtype=bool)
            is_known[pick] = False
        pos = np.arange(lo, hi)
        known_pos.append(pos[is_known])
        unknown_pos.append(pos[~is_known])
        known_ptr.append(known_ptr[-1] + int(is_known.sum()))
        unknown_ptr.append(unknown_ptr[-1] + int((~is_known).sum()))
    labels = [m.user_labels[r] for r in rows]
    out = []
    for ptr, pos in ((known_ptr, known_pos), (unknown_ptr, unknown_pos)):
        pos = np.concatenate(pos) if pos else np.zeros(0, dtype=np.int64)
        if isinstance(m, RatingMatrix):
            out.append(RatingMatrix(ptr, m.indices[pos], m.values[pos], m.n_items,
                                    labels, m.item_labels))
        else:
            out.append(BinaryRatingMatrix(ptr, m.indices[pos], m.n_items, labels, m.item_labels))
    return out


def make_scheme(data, method="split", train=0.9, k=None, runs=1, given=3,
                good_rating=None, seed=None) -> EvaluationScheme:
    """Create an evaluation scheme.

    ``method`` is ``"split"`` (``train`` = proportion of training users,
    ``runs`` independent repetitions), ``"cross"`` (``k`` folds, one run per
    fold) or ``"bootstrap"`` (``round(train * n)`` training users drawn with
    replacement, undrawn users tested, ``runs`` repetitions).

    Users with too few ratings for the protocol (``given + 1`` for Given-x,
    ``|given| + 1`` for All-but-x) are left out of the scheme entirely.
    """
    rb.data_kind(data)
    given = int(given)
    if given == 0:
        raise InvalidArgument("given must be non-zero")
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % 2**63)
    seed = int(seed)

    floor = abs(given) + 1
    counts = data.row_counts()
    eligible = np.flatnonzero(counts >= floor)
    n_excluded = int(data.n_users - eligible.size)
    if n_excluded:
        log.warning("%d users have fewer than %d ratings and are excluded", n_excluded, floor)
    n = eligible.size
    if n < 2:
        raise InvalidArgument("need at least two eligible users")

    splits = []
    if method == "split":
        if not 0 < train < 1:
            raise InvalidArgument("train must be in (0, 1)")
        runs = int(runs)
        if runs < 1:
            raise InvalidArgument("runs must be >= 1")
        n_train = int(round(train * n))
        if not 1 <= n_train < n:
            raise InvalidArgument("split leaves no training or no test users")
        for r in range(runs):
            rng = np.random.default_rng([seed, r])
            perm = rng.permutation(eligible)
            tr, te = np.sort(perm[:n_train]), np.sort(perm[n_train:])
            known, unknown = _split_rows(data, te, rng, given)
            splits.append(RunSplit(tr, te, known, unknown))
    elif method == "cross":
        k = 10 if k is None else int(k)
        if not 2 <= k <= n:
            raise InvalidArgument("k must be in [2, number of eligible users]")
        perm = np.random.default_rng(seed).permutation(eligible)
        folds = np.array_split(perm, k)
        for r, fold in enumerate(folds):
            rng = np.random.default_rng([seed, r])
            te = np.sort(fold)
            tr = np.sort(np.setdiff1d(eligible, te))
            known, unknown = _split_rows(data, te, rng, given)
            splits.append(RunSplit(tr, te, known, unknown))
    elif method == "bootstrap":
        if not train > 0:
            raise InvalidArgument("train must be > 0")
        runs = int(runs)
        if runs < 1:
            raise InvalidArgument("runs must be >= 1")
        size = int(round(train * n))
        if size < 1:
            raise InvalidArgument("bootstrap training sample is empty")
        for r in range(runs):
            rng = np.random.default_rng([seed, r])
            draws = rng.choice(eligible, size=size, replace=True)
            tr = np.unique(draws)
            te = np.setdiff1d(eligible, tr)
            if te.size == 0:
                raise InvalidArgument("bootstrap sample covers every user; no test users left")
            known, unknown = _split_rows(data, te, rng, given)
            splits.append(RunSplit(tr, te, known, unknown, draws))
    else:
        raise InvalidArgument(f"unknown method {method!r}")

    return EvaluationScheme(
        data, method, given, good_rating, seed, splits,
        train_prop=float(train) if method != "cross" else None,
        k=k if method == "cross" else None,
        eligible=eligible, n_excluded=n_excluded,
    )


def get_data(scheme, run, part):
    """``"train"``, ``"known"`` or ``"unknown"`` data of one run."""
    if not 0 <= run < scheme.runs:
        raise InvalidArgument(f"run must be in [0, {scheme.runs})")
    split = scheme.splits[run]
    if part == "train":
        return scheme.data.subset_users(split.train)
    if part == "known":
        return split.known
    if part == "unknown":
        return split.unknown
    raise InvalidArgument(f"unknown part {part!r}")


# --------------------------------------------------------------------------
# metrics


def prediction_accuracy(pred: RatingMatrix, truth: RatingMatrix):
    """``(RMSE, MSE, MAE)`` over cells present in both matrices."""
    if tuple(pred.user_labels) != tuple(truth.user_labels):
        raise ShapeMismatch("prediction and truth have different users")
    P = pred.reindex_items(truth.item_labels).to_dense()
    T = truth.to_dense()
    ok = ~np.isnan(P) & ~np.isnan(T)
    if not ok.any():
        raise UndefinedMetric("no cell is both predicted and known")
    err = P[ok] - T[ok]
    mse = float(np.mean(err**2))
    return math.sqrt(mse), mse, float(np.mean(np.abs(err)))


def confusion_for_user(topn, known, relevant, n_items):
    """``(TP, FP, FN, TN, N)`` for one user's list."""
    topn = set(int(i) for i in topn)
    relevant = set(int(i) for i in relevant)
    N = n_items - len(known)
    tp = len(topn & relevant)
    fp = len(topn) - tp
    fn = len(relevant) - tp
    return tp, fp, fn, N - tp - fp - fn, N


def _ratio(a, b):
    return a / b if b else math.nan


def e_measure(precision, recall, alpha=0.5):
    if precision == 0 or recall == 0:
        return 0.0
    return 1.0 / (alpha / precision + (1 - alpha) / recall)


def f_measure(precision, recall):
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def derived_metrics(TP, FP, FN, TN, alpha=0.5):
    """Rates derived from one confusion matrix; NaN where a denominator is 0.

    With the 2x2 layout ``a = TN, b = FP, c = FN, d = TP``.
    """
    total = TP + FP + FN + TN
    p = _ratio(TP, TP + FP)
    r = _ratio(TP, TP + FN)
    both = not (math.isnan(p) or math.isnan(r))
    return {
        "precision": p,
        "recall": r,
        "TPR": r,
        "FPR": _ratio(FP, FP + TN),
        "accuracy": _ratio(TN + TP, total),
        "mae01": _ratio(FP + FN, total),
        "e_measure": e_measure(p, r, alpha) if both else math.nan,
        "f_measure": f_measure(p, r) if both else math.nan,
    }


@dataclass(frozen=True)
class ConfusionRow:
    n: int
    TP: float
    FP: float
    FN: float
    TN: float
    N: float
    precision: float
    recall: float
    TPR: float
    FPR: float

    @property
    def accuracy(self):
        return _ratio(self.TP + self.TN, self.N)

    @property
    def mae01(self):
        return _ratio(self.FP + self.FN, self.N)

    @property
    def f_measure(self):
        return f_measure(self.precision, self.recall)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _mean_or_nan(xs):
    return float(np.mean(xs)) if len(xs) else math.nan


def confusion_rows(lists, known, unknown, n_values, good_rating=None):
    """Per-user confusion counts averaged into one :class:`ConfusionRow` per n.

    ``lists`` holds one ranked item array per test user.  Users with an
    empty list score precision 0; users with no relevant withheld items are
    left out of the recall/TPR average.
    """
    n_items = known.n_items
    rows = []
    per_user = []
    for u in range(known.n_users):
        kn = known.row_items(u)
        if isinstance(unknown, RatingMatrix):
            items, vals = unknown.row(u)
            rel = items if good_rating is None else items[vals >= good_rating]
        else:
            rel = unknown.row_items(u)
        per_user.append((set(kn.tolist()), set(rel.tolist()), np.asarray(lists[u])))
    for n in n_values:
        acc = {k: [] for k in ("TP", "FP", "FN", "TN", "N", "precision", "recall", "FPR")}
        for kn, rel, lst in per_user:
            top = [i for i in lst[:n] if i not in kn]
            tp, fp, fn, tn, N = confusion_for_user(top, kn, rel, n_items)
            for key, val in zip(("TP", "FP", "FN", "TN", "N"), (tp, fp, fn, tn, N)):
                acc[key].append(val)
            acc["precision"].append(tp / (tp + fp) if tp + fp else 0.0)
            if tp + fn:
                acc["recall"].append(tp / (tp + fn))
            if fp + tn:
                acc["FPR"].append(fp / (fp + tn))
        rec = _mean_or_nan(acc["recall"])
        rows.append(ConfusionRow(
            int(n),
            *(_mean_or_nan(acc[k]) for k in ("TP", "FP", "FN", "TN", "N")),
            _mean_or_nan(acc["precision"]), rec, rec, _mean_or_nan(acc["FPR"]),
        ))
    return rows


# --------------------------------------------------------------------------
# running experiments


@dataclass
class EvaluationResult:
    """All runs of one algorithm under one scheme."""

    label: str
    algorithm: str
    mode: str
    runs: list
    timings: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def avg(self):
        if self.mode == "ratings":
            arr = np.array(self.runs, dtype=float)
            return tuple(float(x) for x in arr.mean(axis=0))
        out = []
        for per_n in zip(*self.runs):
            vals = {f.name: float(np.mean([getattr(r, f.name) for r in per_n])) for f in fields(ConfusionRow)}
            vals["n"] = per_n[0].n
            out.append(ConfusionRow(**vals))
        return out

    def __repr__(self):
        return (f"<Evaluation results for {len(self.runs)} folds/samples "
                f"using method {self.algorithm!r}>")


class ResultList(dict):
    """Label -> :class:`EvaluationResult`; ``skipped`` lists labels not run."""

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.skipped = []


def _normalize_algorithms(algorithms):
    if isinstance(algorithms, str):
        return {algorithms: (algorithms, {})}
    if isinstance(algorithms, dict):
        out = {}
        for label, spec in algorithms.items():
            if isinstance(spec, str):
                out[label] = (spec, {})
            elif isinstance(spec, dict):
                out[label] = (spec["name"], dict(spec.get("params") or {}))
            else:
                out[label] = (spec[0], dict(spec[1] or {}))
        return out
    return {name: (name, {}) for name in algorithms}


def _run_seed(seed, run, label):
    salt = zlib.crc32(label.encode())
    return int(np.random.SeedSequence([seed, run, salt]).generate_state(1)[0])


def evaluate(scheme: EvaluationScheme, algorithms, type="topNList",
             n_values=(1, 3, 5, 10, 15, 20)) -> ResultList:
    """Fit every algorithm on each run's training users and score it.

    ``algorithms`` is a name, a list of names, or a mapping of labels to
    ``(name, params)`` / ``{"name": ..., "params": ...}``.  Algorithms that
    cannot handle the scheme's data kind are skipped with a log notice.
    """
    if type not in ("topNList", "ratings"):
        raise InvalidArgument("type must be 'topNList' or 'ratings'")
    kind = scheme.data_kind
    if type == "ratings" and kind != "real":
        raise InvalidArgument("rating evaluation needs real-valued data")
    n_values = sorted(int(n) for n in n_values)
    if type == "topNList" and (not n_values or n_values[0] < 1):
        raise InvalidArgument("n_values must be positive")
    good = scheme.good_rating if kind == "real" else None
    if type == "topNList" and kind == "real" and good is None:
        raise InvalidArgument("top-N evaluation on real data needs good_rating")

    results = ResultList()
    for label, (name, params) in _normalize_algorithms(algorithms).items():
        try:
            spec = rb.get_spec(name, kind)
        except UnknownAlgorithm as e:
            log.warning("%s skipped: %s", label, e)
            results.skipped.append(label)
            continue
        full = rb.resolve_params(spec, params)
        res = EvaluationResult(label, name, type, [], [], full)
        for run in range(scheme.runs):
            run_params = dict(params)
            if "seed" in spec.default_params and params.get("seed") is None:
                run_params["seed"] = _run_seed(scheme.seed, run, label)
            train = get_data(scheme, run, "train")
            known = get_data(scheme, run, "known")
            unknown = get_data(scheme, run, "unknown")
            t0 = time.perf_counter()
            model = rb.fit(name, train, run_params)
            t1 = time.perf_counter()
            if type == "topNList":
                lists = rb.predict(model, known, "topNList", n=n_values[-1])
                t2 = time.perf_counter()
                res.runs.append(confusion_rows(lists.items, known, unknown, n_values, good))
            else:
                pred = rb.predict(model, known, "ratings")
                t2 = time.perf_counter()
                try:
                    res.runs.append(prediction_accuracy(pred, unknown))
                except UndefinedMetric:
                    res.runs.append((math.nan, math.nan, math.nan))
            res.timings.append((t1 - t0, t2 - t1))
            log.info("%s run %d [%.3fsec/%.3fsec]", name, run + 1, t1 - t0, t2 - t1)
        results[label] = res
    return results


# --------------------------------------------------------------------------
# curves


def curve_points(result: EvaluationResult, kind="roc"):
    """``(x, y, n)`` per list length from the run-averaged table.

    ``roc`` gives ``(FPR, TPR, n)``, ``prec_rec`` gives ``(recall, precision, n)``.
    """
    if result.mode != "topNList":
        raise WrongMode("curves need a top-N evaluation result")
    rows = result.avg()
    if kind == "roc":
        return [(r.FPR, r.TPR, r.n) for r in rows]
    if kind == "prec_rec":
        return [(r.recall, r.precision, r.n) for r in rows]
    raise InvalidArgument(f"unknown curve kind {kind!r}")


def roc_auc(result_or_points):
    """Trapezoidal area under the ROC points, anchored at (0, 0) and (1, 1).

    The anchors stand for the empty list and for recommending every
    candidate item.
    """
    pts = result_or_points
    if isinstance(pts, EvaluationResult):
        pts = curve_points(pts, "roc")
    xy = [(0.0, 0.0)] + sorted((x, y) for x, y, *_ in pts) + [(1.0, 1.0)]
    x = np.array([p[0] for p in xy])
    y = np.array([p[1] for p in xy])
    return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2))


# --------------------------------------------------------------------------
# CSV export


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "NA"
    return format(x, ".10g")


def _topn_lines(results, averaged):
    for label, res in results.items():
        if res.mode != "topNList":
            continue
        tables = [("avg", res.avg())] if averaged else [(str(i + 1), t) for i, t in enumerate(res.runs)]
        for run, table in tables:
            for r in table:
                yield [label, run, r.n, r.TP, r.FP, r.FN, r.TN, r.N,
                       r.precision, r.recall, r.TPR, r.FPR]


def _rating_lines(results, averaged):
    for label, res in results.items():
        if res.mode != "ratings":
            continue
        rows = [("avg", res.avg())] if averaged else [(str(i + 1), t) for i, t in enumerate(res.runs)]
        for run, (rmse, mse, mae) in rows:
            yield [label, run, rmse, mse, mae]


def _write(path, header, lines):
    with _writer_target(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for line in lines:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in line])


def write_results_csv(results, path, mode="topNList"):
    """Per-run tables of every algorithm; ``path`` may be an open text stream."""
    if mode == "topNList":
        _write(path, TOPN_COLUMNS, _topn_lines(results, False))
    else:
        _write(path, RATING_COLUMNS, _rating_lines(results, False))


def write_avg_csv(results, path, mode="topNList"):
    """Run-averaged tables; same columns as the per-run file with ``run = avg``."""
    if mode == "topNList":
        _write(path, TOPN_COLUMNS, _topn_lines(results, True))
    else:
        _write(path, RATING_COLUMNS, _rating_lines(results, True))


def write_curve_csv(results, path, kind="roc"):
    header = ("algorithm", "n", "FPR", "TPR") if kind == "roc" else ("algorithm", "n", "recall", "precision")
    lines = ([label, n, x, y] for label, res in results.items()
             for x, y, n in curve_points(res, kind))
    _write(path, header, lines)
