import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from bnverify import classify, posterior
from bnverify.estimator import DiagramClassifier
from bnverify.io import bundled_network

from conftest import assignments


def grid(net):
    return np.array([[a[f] for f in net.features] for a in assignments(net)])


def test_predict_matches_classify(small_corpus):
    for net in small_corpus[:8]:
        X = grid(net)
        clf = DiagramClassifier(net).fit(X)
        want = [classify(net, dict(zip(net.features, row))) for row in X]
        np.testing.assert_array_equal(clf.predict(X), want)
        proba = clf.predict_proba(X)
        np.testing.assert_allclose(proba.sum(axis=1), 1.0)
        assert proba[0, 1] == posterior(net, dict(zip(net.features, X[0])))
        assert clf.score(X, want) == 1.0


def test_params_and_clone(small_corpus):
    clf = DiagramClassifier(small_corpus[0], threshold=0.3)
    assert clone(clf).get_params()["threshold"] == 0.3
    with pytest.raises(NotFittedError):
        clf.predict(np.zeros((1, len(small_corpus[0].features)), dtype=int))


def test_zero_evidence_probabilities():
    net = bundled_network("asia", "xray")
    clf = DiagramClassifier(net, zero_evidence_class=0).fit()
    X = grid(net)
    proba = clf.predict_proba(X)
    pred = clf.predict(X)
    assert set(np.unique(pred)) <= {0, 1}
    np.testing.assert_array_equal(pred, (proba[:, 1] >= 0.5).astype(int))


def test_bad_input(small_corpus):
    net = small_corpus[0]
    clf = DiagramClassifier(net).fit()
    with pytest.raises(ValueError):
        clf.predict(np.zeros((1, len(net.features) + 1), dtype=int))
    with pytest.raises(ValueError):
        clf.predict(np.full((1, len(net.features)), 9))
    with pytest.raises(ValueError):
        DiagramClassifier().fit()
