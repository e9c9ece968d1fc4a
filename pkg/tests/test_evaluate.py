import csv
import math

import numpy as np
import pytest

from reclab import RatingMatrix, binarize
from reclab import evaluate as ev
from reclab.errors import InvalidArgument, UndefinedMetric, WrongMode
from reclab.synthetic import SyntheticSpec, generate

import oracles


@pytest.fixture(scope="module")
def data():
    return generate(SyntheticSpec(n_users=200, n_items=40, density=0.3, seed=11, min_per_user=6))


def test_split_scheme(data):
    s = ev.make_scheme(data, "split", train=0.9, given=3, good_rating=5, seed=1)
    assert s.runs == 1
    sp = s.splits[0]
    assert len(sp.train) == 180 and len(sp.test) == 20
    assert not set(sp.train) & set(sp.test)
    assert all(n == 3 for n in sp.known.row_counts())
    assert "3 items given" in repr(s)


def test_known_unknown_partition(data):
    s = ev.make_scheme(data, "split", train=0.8, given=-2, good_rating=5, seed=2)
    sp = s.splits[0]
    kn, un = ev.get_data(s, 0, "known"), ev.get_data(s, 0, "unknown")
    assert kn.user_labels == un.user_labels
    for j, r in enumerate(sp.test):
        k, u = set(kn.row_items(j).tolist()), set(un.row_items(j).tolist())
        assert not k & u
        assert k | u == set(data.row_items(r).tolist())
        assert len(u) == 2


def test_cross_scheme(data):
    s = ev.make_scheme(data, "cross", k=4, given=3, good_rating=5, seed=3)
    assert s.runs == 4
    folds = [set(sp.test.tolist()) for sp in s.splits]
    assert set().union(*folds) == set(s.eligible.tolist())
    assert sum(len(f) for f in folds) == len(s.eligible)
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1


def test_bootstrap_scheme(data):
    s = ev.make_scheme(data, "bootstrap", train=0.9, runs=2, given=3, good_rating=5, seed=4)
    for sp in s.splits:
        assert len(sp.train_draws) == round(0.9 * data.n_users)
        assert set(sp.test.tolist()) == set(range(data.n_users)) - set(sp.train_draws.tolist())


def test_scheme_is_deterministic(data):
    a = ev.make_scheme(data, "split", given=3, good_rating=5, seed=9)
    b = ev.make_scheme(data, "split", given=3, good_rating=5, seed=9)
    assert np.array_equal(a.splits[0].test, b.splits[0].test)
    assert a.splits[0].known == b.splits[0].known


def test_ineligible_users_excluded():
    D = np.full((6, 5), np.nan)
    D[:4] = 1.0
    D[4:, 0] = 2.0
    m = RatingMatrix.from_dense(D)
    s = ev.make_scheme(m, "split", train=0.5, given=3, good_rating=1, seed=0)
    assert s.n_excluded == 2
    assert set(s.eligible.tolist()) == {0, 1, 2, 3}


def test_scheme_errors(data):
    with pytest.raises(InvalidArgument):
        ev.make_scheme(data, "split", train=1.0, given=3)
    with pytest.raises(InvalidArgument):
        ev.make_scheme(data, "cross", k=1, given=3)
    with pytest.raises(InvalidArgument):
        ev.make_scheme(data, "magic", given=3)
    with pytest.raises(InvalidArgument):
        ev.make_scheme(data, given=0)
    s = ev.make_scheme(data, given=3, seed=1)
    with pytest.raises(InvalidArgument):
        ev.get_data(s, 1, "train")


def test_prediction_accuracy():
    T = RatingMatrix.from_dense(np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert ev.prediction_accuracy(T, T) == (0.0, 0.0, 0.0)
    P = T.with_values(T.values + 1)
    assert ev.prediction_accuracy(P, T) == (1.0, 1.0, 1.0)
    empty = RatingMatrix.from_dense(np.array([[np.nan, 1.0], [np.nan, np.nan]]))
    truth = RatingMatrix.from_dense(np.array([[1.0, np.nan], [2.0, np.nan]]))
    with pytest.raises(UndefinedMetric):
        ev.prediction_accuracy(empty, truth)


def test_prediction_accuracy_oracle():
    rng = np.random.default_rng(0)
    P = oracles.random_ratings(rng, 10, 10)
    T = oracles.random_ratings(rng, 10, 10)
    got = ev.prediction_accuracy(RatingMatrix.from_dense(P), RatingMatrix.from_dense(T))
    assert np.allclose(got, oracles.prediction_errors(P, T), atol=1e-12)


def test_confusion_for_user():
    assert ev.confusion_for_user([1, 2], {0}, {1, 2}, 10) == (2, 0, 0, 7, 9)
    assert ev.confusion_for_user([1, 2, 3], {0}, set(), 10) == (0, 3, 0, 6, 9)


def test_derived_metrics():
    m = ev.derived_metrics(TP=0.464, FP=0.536, FN=19.25, TN=76.75)
    assert m["precision"] == pytest.approx(0.4640, abs=1e-12)
    assert m["TPR"] == m["recall"]
    assert ev.f_measure(0.5, 0.5) == 0.5
    assert math.isnan(ev.derived_metrics(0, 0, 0, 5)["precision"])
    d = ev.derived_metrics(1, 1, 1, 1)
    assert d["accuracy"] == 0.5 and d["mae01"] == 0.5


def test_macro_averaging():
    # user A: 1 hit of 1 relevant; user B: 0 of 9 relevant
    known = RatingMatrix.from_dense(np.array([[1.0] + [np.nan] * 11, [1.0] + [np.nan] * 11]))
    un = np.full((2, 12), np.nan)
    un[0, 1] = 5
    un[1, 2:11] = 5
    unknown = RatingMatrix.from_dense(un)
    rows = ev.confusion_rows([np.array([1]), np.array([11])], known, unknown, [1], good_rating=5)
    r = rows[0]
    assert r.recall == pytest.approx(0.5)  # mean of 1 and 0
    assert r.TP / (r.TP + r.FN) == pytest.approx(0.1)  # pooled would be 1 / 10
    assert r.precision == pytest.approx(0.5)


def test_no_relevant_users_excluded_from_recall():
    known = RatingMatrix.from_dense(np.array([[1.0, np.nan, np.nan], [1.0, np.nan, np.nan]]))
    unknown = RatingMatrix.from_dense(np.array([[np.nan, 5.0, np.nan], [np.nan, 1.0, np.nan]]))
    r = ev.confusion_rows([np.array([1]), np.array([1])], known, unknown, [1], good_rating=5)[0]
    assert r.recall == 1.0
    assert r.precision == 0.5


def test_evaluate_topn(data):
    s = ev.make_scheme(data, "cross", k=3, given=3, good_rating=5, seed=5)
    res = ev.evaluate(s, {"pop": ("POPULAR", None), "rand": ("RANDOM", None)}, n_values=[1, 3, 5])
    pop = res["pop"]
    assert len(pop.runs) == 3 and all(len(t) == 3 for t in pop.runs)
    avg = pop.avg()
    for j, row in enumerate(avg):
        assert row.TP == pytest.approx(np.mean([t[j].TP for t in pop.runs]))
    for table in pop.runs:
        for r in table:
            assert r.TP + r.FP <= r.n + 1e-12
    assert "3 folds" in repr(pop)
    pts = ev.curve_points(pop, "roc")
    assert [p[2] for p in pts] == [1, 3, 5]
    assert 0 <= ev.roc_auc(pop) <= 1


def test_evaluate_ratings_and_wrong_mode(data):
    s = ev.make_scheme(data, "split", given=3, good_rating=5, seed=5)
    res = ev.evaluate(s, ["POPULAR"], type="ratings")
    rmse, mse, mae = res["POPULAR"].avg()
    assert rmse == pytest.approx(math.sqrt(mse))
    with pytest.raises(WrongMode):
        ev.curve_points(res["POPULAR"], "roc")


def test_evaluate_skips_kind_mismatch(data):
    b = binarize(data, 3)
    b = b.subset_users(np.flatnonzero(b.row_counts() >= 4))
    s = ev.make_scheme(b, "split", given=3, seed=1)
    res = ev.evaluate(s, {"svd": ("SVD", {}), "pop": ("POPULAR", {})}, n_values=[1, 3])
    assert res.skipped == ["svd"]
    assert list(res) == ["pop"]


def test_evaluate_reproducible(data):
    s = ev.make_scheme(data, "split", given=3, good_rating=5, seed=5)
    a = ev.evaluate(s, ["RANDOM"], n_values=[1, 5])
    b = ev.evaluate(s, ["RANDOM"], n_values=[1, 5])
    assert a["RANDOM"].runs == b["RANDOM"].runs


def test_csv_exports(tmp_path, data):
    s = ev.make_scheme(data, "split", given=3, good_rating=5, seed=5)
    res = ev.evaluate(s, ["POPULAR"], n_values=[1, 3])
    ev.write_results_csv(res, tmp_path / "r.csv")
    ev.write_avg_csv(res, tmp_path / "a.csv")
    ev.write_curve_csv(res, tmp_path / "roc.csv", "roc")
    ev.write_curve_csv(res, tmp_path / "pr.csv", "prec_rec")
    rows = list(csv.reader(open(tmp_path / "r.csv")))
    assert tuple(rows[0]) == ev.TOPN_COLUMNS
    assert len(rows) == 3 and rows[1][1] == "1"
    assert list(csv.reader(open(tmp_path / "a.csv")))[1][1] == "avg"
    assert open(tmp_path / "roc.csv").readline().strip() == "algorithm,n,FPR,TPR"
    assert open(tmp_path / "pr.csv").readline().strip() == "algorithm,n,recall,precision"
    rr = ev.evaluate(s, ["POPULAR"], type="ratings")
    ev.write_results_csv(rr, tmp_path / "rat.csv", mode="ratings")
    assert tuple(next(csv.reader(open(tmp_path / "rat.csv")))) == ev.RATING_COLUMNS


def test_auc_of_known_points():
    pts = [(0.5, 0.5, 1)]
    assert ev.roc_auc(pts) == pytest.approx(0.5)
    pts = [(0.0, 1.0, 1)]
    assert ev.roc_auc(pts) == pytest.approx(1.0)
