import numpy as np
import pytest
from sklearn.base import clone

from reclag import RecLagDetector, gen_gaussian_mixture, gen_uniform_ring


@pytest.fixture(scope="module")
def fitted():
    id_data = gen_gaussian_mixture(3, 200, 2, center_scale=10.0,
                                   noise_sigma=0.2, seed=0)
    det = RecLagDetector(n_memories=8, beta=5.0, epochs=40,
                         learning_rate=0.05, batch_size=128,
                         random_state=0)
    det.fit(id_data.features)
    return det, id_data


def test_get_set_params_round_trip():
    det = RecLagDetector(n_memories=12, beta=2.5)
    params = det.get_params()
    assert params["n_memories"] == 12
    assert params["beta"] == 2.5
    other = clone(det)
    assert other.get_params() == params


def test_fit_returns_self_and_sets_attributes(fitted):
    det, _ = fitted
    assert det.n_features_in_ == 2
    assert det.model_.xi.shape == (8, 2)
    assert len(det.loss_history_) == 40
    assert det.gamma_ > 0


def test_score_orientation(fitted):
    det, id_data = fitted
    ood = gen_uniform_ring(300, dim=2, r_inner=12.0, r_outer=16.0, seed=5)
    id_scores = det.score_samples(id_data.features)
    ood_scores = det.score_samples(ood.features)
    assert np.median(id_scores) > np.median(ood_scores)


def test_predict_flags_and_contamination(fitted):
    det, id_data = fitted
    preds = det.predict(id_data.features)
    assert set(np.unique(preds)).issubset({-1, 1})
    inlier_rate = float(np.mean(preds == 1))
    assert inlier_rate == pytest.approx(0.95, abs=0.02)


def test_decision_function_zero_cut(fitted):
    det, id_data = fitted
    scores = det.decision_function(id_data.features)
    preds = det.predict(id_data.features)
    np.testing.assert_array_equal(preds, np.where(scores >= 0, 1, -1))


def test_fit_predict_matches(fitted):
    det, id_data = fitted
    fresh = clone(det)
    out = fresh.fit_predict(id_data.features)
    np.testing.assert_array_equal(out, det.predict(id_data.features))


def test_deterministic_refits(fitted):
    det, id_data = fitted
    again = clone(det).fit(id_data.features)
    np.testing.assert_array_equal(again.model_.xi, det.model_.xi)
    assert again.gamma_ == det.gamma_


def test_explicit_gamma_respected():
    id_data = gen_gaussian_mixture(2, 100, 2, center_scale=8.0,
                                   noise_sigma=0.3, seed=1)
    det = RecLagDetector(n_memories=4, epochs=5, gamma=123.0,
                         random_state=1)
    det.fit(id_data.features)
    assert det.gamma_ == 123.0
    assert det.model_.gamma == 123.0


def test_feature_count_mismatch_rejected(fitted):
    det, _ = fitted
    with pytest.raises(ValueError):
        det.score_samples(np.zeros((3, 5)))
