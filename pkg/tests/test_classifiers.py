import numpy as np
import pytest
from conftest import make_dataset
from hypothesis import given, settings
from hypothesis import strategies as st

from hdsurvey import classifiers as clf
from hdsurvey.classifiers import FeatureImportance, ModelKind, TrainedModel
from hdsurvey.classifiers.linear import logloss_objective
from hdsurvey.errors import InputError, TrainingError
from hdsurvey.rng import make_rng

FAST = clf.Hyperparams.from_dict({"RandomForest": {"n_trees": 20}, "GradBoost": {"rounds": 30}})


@pytest.fixture(scope="module")
def line1d():
    return make_dataset([[0.0]] * 5 + [[1.0]] * 5, [0] * 5 + [1] * 5)


def test_logreg_1d_sign_matches_grid_search(line1d):
    X, y = line1d.matrix, line1d.labels.astype(float)
    l2 = clf.LogRegParams().l2
    grid = np.linspace(-20, 20, 401)
    best = min(((logloss_objective(np.array([w]), b, X, y, l2)[0], w, b) for w in grid for b in grid))
    m = clf.train("LogReg", line1d)
    w = m.params["weights"][0]
    assert w > 0 and np.sign(w) == np.sign(best[1])
    trained_loss = logloss_objective(m.params["weights"], m.params["intercept"], X, y, l2)[0]
    assert trained_loss < logloss_objective(np.zeros(1), 0.0, X, y, l2)[0]
    assert clf.predict(m, [0.0])[0] == 0 and clf.predict(m, [1.0])[0] == 1


def test_gnb_identical_classes_scores_half():
    rows = make_rng(1).random((50, 3))
    d = make_dataset(np.vstack([rows, rows]), [0] * 50 + [1] * 50)
    m = clf.train("GaussianNB", d)
    scores = clf.predict_scores(m, make_rng(2).random((100, 3)))
    assert np.allclose(scores, 0.5, atol=1e-12)


def test_random_forest_is_deterministic(planted3):
    a = clf.train("RandomForest", planted3, FAST, seed=5)
    b = clf.train("RandomForest", planted3, FAST, seed=5)
    assert clf.dumps(a) == clf.dumps(b)
    assert np.array_equal(clf.predict_scores(a, planted3.matrix), clf.predict_scores(b, planted3.matrix))
    c = clf.train("RandomForest", planted3, FAST, seed=6)
    assert clf.dumps(a) != clf.dumps(c)


def test_knn_k1_returns_stored_label():
    d = make_dataset(make_rng(3).random((20, 2)), [0, 1] * 10)
    m = clf.train("Knn", d, clf.Hyperparams(knn=clf.KnnParams(k=1)))
    for row, label in zip(d.matrix, d.labels):
        lab, score = clf.predict(m, row)
        assert lab == label and score in (0.0, 1.0)


def test_knn_vote_tie_is_label_one():
    d = make_dataset([[0.0], [1.0]], [0, 1])
    m = clf.train("Knn", d, clf.Hyperparams(knn=clf.KnnParams(k=2)))
    assert clf.predict(m, [0.0]) == (1, 0.5)


def test_knn_distance_tie_prefers_lower_index():
    d = make_dataset([[0.0], [1.0], [0.0]], [1, 0, 0])
    m = clf.train("Knn", d, clf.Hyperparams(knn=clf.KnnParams(k=1)))
    assert clf.predict(m, [0.0])[0] == 1
    m2 = clf.train("Knn", make_dataset([[0.4], [0.6]], [1, 0]), clf.Hyperparams(knn=clf.KnnParams(k=1)))
    assert clf.predict(m2, [0.5])[0] == 1


def test_zero_linear_model_scores_half():
    m = TrainedModel(ModelKind.LOGREG, {"weights": np.zeros(3), "intercept": 0.0}, ("a", "b", "c"))
    assert np.all(clf.predict_scores(m, make_rng(0).random((10, 3))) == 0.5)
    assert clf.predict(m, [0.2, 0.3, 0.4]) == (1, 0.5)


def test_importance_examples(line1d):
    m = TrainedModel(ModelKind.LOGREG, {"weights": np.array([3.0, -1.0]), "intercept": 0.0}, ("a", "b"))
    assert clf.importance(m).weights.tolist() == [0.75, 0.25]
    assert clf.importance(clf.train("Knn", line1d)) is None
    assert clf.importance(clf.train("GaussianNB", line1d)) is None


@pytest.mark.parametrize("kind", clf.IMPORTANCE_KINDS)
def test_planted_feature_gets_top_importance(kind, planted1):
    m = clf.train(kind, planted1, FAST, seed=2)
    imp = clf.importance(m)
    assert int(np.argmax(imp.weights)) == 0
    assert imp.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(imp.weights >= 0)


def test_top_k_examples():
    assert clf.top_k(FeatureImportance([0.5, 0.3, 0.2]), 2) == [0, 1]
    assert clf.top_k(FeatureImportance([0.25] * 4), 2) == [0, 1]
    assert sorted(clf.top_k(FeatureImportance([0.1, 0.4, 0.2, 0.3]), 4)) == [0, 1, 2, 3]
    assert clf.top_k(FeatureImportance([0.1, 0.4, 0.2, 0.3]), 4) == [1, 3, 2, 0]
    for k in (0, 5):
        with pytest.raises(InputError):
            clf.top_k(FeatureImportance([0.25] * 4), k)


@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=12),
       st.floats(1e-3, 1e3), st.data())
def test_top_k_invariant_under_positive_scaling(weights, c, data):
    w = np.array(weights)
    k = data.draw(st.integers(1, w.size))
    a = TrainedModel(ModelKind.LOGREG, {"weights": w, "intercept": 0.0}, tuple(map(str, range(w.size))))
    b = TrainedModel(ModelKind.LOGREG, {"weights": w * c, "intercept": 0.0}, a.feature_names)
    ia, ib = clf.importance(a), clf.importance(b)
    # scaling can only merge or split ties through rounding; compare on distinct magnitudes
    if np.unique(np.abs(w)).size == w.size:
        assert clf.top_k(ia, k) == clf.top_k(ib, k)
    assert ia.weights.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("kind", clf.ALL_KINDS)
def test_scores_in_unit_interval_and_labels_consistent(kind, planted3):
    m = clf.train(kind, planted3, FAST, seed=1)
    Q = make_rng(5).random((300, planted3.n_features))
    s = clf.predict_scores(m, Q)
    assert np.all((s >= 0) & (s <= 1))
    assert np.array_equal(clf.predict_labels(m, Q), (s >= 0.5).astype(np.int8))


@pytest.mark.parametrize("kind", clf.ALL_KINDS)
def test_serialization_round_trip(kind, planted3, tmp_path):
    m = clf.train(kind, planted3, FAST, seed=1)
    path = tmp_path / "m.json"
    clf.save(m, path)
    back = clf.load(path)
    assert clf.dumps(back) == clf.dumps(m)
    Q = planted3.matrix[:200]
    assert np.array_equal(clf.predict_scores(back, Q), clf.predict_scores(m, Q))


def test_serialization_rejects_foreign_documents():
    with pytest.raises(InputError):
        clf.loads('{"format": "other"}')
    with pytest.raises(InputError):
        clf.loads('{"format": "hdsurvey-model", "version": 99}')


def test_training_errors(planted3):
    single = make_dataset([[0.1], [0.2]], [1, 1])
    with pytest.raises(InputError, match="single class"):
        clf.train("LogReg", single)
    raw = make_dataset([[5.0], [7.0]], [0, 1], normalized=False)
    with pytest.raises(InputError, match="normalized"):
        clf.train("LogReg", raw)
    m = clf.train("LogReg", planted3)
    with pytest.raises(InputError, match="expected 21 features"):
        clf.predict(m, np.zeros(3))
    with pytest.raises(InputError):
        clf.Hyperparams.from_dict({"LogReg": {"nope": 1}})
    with pytest.raises(InputError):
        ModelKind.parse("Perceptron")


def test_non_finite_loss_reports_epoch():
    big = make_dataset(np.vstack([np.zeros((5, 1)), np.ones((5, 1))]), [1] * 5 + [0] * 5)
    hp = clf.Hyperparams(logreg=clf.LogRegParams(lr=1e308, l2=1.0))
    with pytest.raises(TrainingError, match="epoch"):
        clf.train("LogReg", big, hp)
    hp = clf.Hyperparams(sgd=clf.SgdParams(lr=1e308, l2=1.0))
    with pytest.raises(TrainingError, match="epoch"):
        clf.train("SgdLogReg", big, hp)


@pytest.mark.parametrize("kind", clf.ALL_KINDS)
def test_separable_training_accuracy(kind, planted3):
    m = clf.train(kind, planted3, seed=0)
    acc = float(np.mean(clf.predict_labels(m, planted3.matrix) == planted3.labels))
    assert acc >= 0.99, acc


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_gradient_matches_finite_differences(seed):
    rng = make_rng(seed)
    X = rng.random((15, 4))
    y = (rng.random(15) < 0.5).astype(float)
    w, b = rng.normal(size=4), float(rng.normal())
    _, gw, gb = logloss_objective(w, b, X, y, 0.01)
    h = 1e-6
    num = []
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        num.append((logloss_objective(w + e, b, X, y, 0.01)[0] - logloss_objective(w - e, b, X, y, 0.01)[0]) / (2 * h))
    num_b = (logloss_objective(w, b + h, X, y, 0.01)[0] - logloss_objective(w, b - h, X, y, 0.01)[0]) / (2 * h)
    analytic = np.append(gw, gb)
    numeric = np.append(num, num_b)
    assert np.linalg.norm(analytic - numeric) <= 1e-5 * max(1.0, np.linalg.norm(numeric))
