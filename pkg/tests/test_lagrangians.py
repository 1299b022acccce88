import math

import numpy as np
import pytest

from reclag import (
    AbsSum,
    AdditiveSigma,
    HalfSquare,
    LogSumExp,
    RecLag,
    gate_value,
)


def fd_gradient(fn, x, step=1e-5):
    grad = np.zeros_like(x)
    for i in range(x.size):
        hi, lo = x.copy(), x.copy()
        hi[i] += step
        lo[i] -= step
        grad[i] = (fn(hi) - fn(lo)) / (2.0 * step)
    return grad


class TestMemoryLagrangians:
    def test_reclag_value_at_origin(self):
        n = 4
        spec = RecLag(beta=1.0, gamma=2.0 * n)
        assert spec.value(np.zeros(n)) == 0.0

    def test_logsumexp_value_at_origin(self):
        spec = LogSumExp(beta=1.0)
        assert spec.value(np.zeros(4)) == pytest.approx(math.log(4.0),
                                                        abs=1e-12)

    def test_additive_square(self):
        spec = AdditiveSigma(n=2)
        assert spec.value(np.array([1.0, -2.0])) == 5.0

    def test_reclag_gate_closed_at_origin(self):
        n = 4
        spec = RecLag(beta=1.0, gamma=2.0 * n)
        assert np.array_equal(spec.activation(np.zeros(n)), np.zeros(n))

    def test_reclag_gate_open_at_origin(self):
        n = 4
        spec = RecLag(beta=1.0, gamma=n / 2.0)
        np.testing.assert_allclose(spec.activation(np.zeros(n)),
                                   np.full(n, 0.25), atol=1e-15)

    def test_logsumexp_activation_is_softmax(self):
        spec = LogSumExp(beta=1.0)
        act = spec.activation(np.array([1.0, 0.0]))
        np.testing.assert_allclose(
            act, [math.e / (math.e + 1.0), 1.0 / (math.e + 1.0)],
            atol=1e-12)

    def test_reclag_activation_sums_to_zero_or_one(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(2, 9))
            spec = RecLag(beta=float(rng.uniform(0.5, 3.0)),
                          gamma=float(rng.uniform(0.5, 2.0)) * n)
            h = rng.uniform(-2.0, 2.0, size=n)
            total = spec.activation(h).sum()
            if spec.shifted_log_sum_exp(h) < 0:
                assert total == 0.0
            else:
                assert total == pytest.approx(1.0, abs=1e-12)

    def test_reclag_value_matches_logsumexp_minus_log_gamma(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            n = int(rng.integers(2, 9))
            beta = float(rng.uniform(0.5, 3.0))
            gamma = float(rng.uniform(0.5, 2.0)) * n
            rec = RecLag(beta=beta, gamma=gamma)
            lse = LogSumExp(beta=beta)
            h = rng.uniform(-2.0, 2.0, size=n)
            shifted = lse.value(h) - math.log(gamma) / beta
            assert rec.value(h) >= 0.0
            if shifted > 0:
                assert rec.value(h) == pytest.approx(shifted, abs=1e-12)
            else:
                assert rec.value(h) == 0.0

    def test_custom_sigma_pair(self):
        spec = AdditiveSigma(fn=np.tanh, dfn=lambda x: 1.0 / np.cosh(x) ** 2)
        h = np.array([0.3, -0.7])
        assert spec.value(h) == pytest.approx(np.tanh(h).sum(), abs=1e-15)
        np.testing.assert_allclose(spec.activation(h), fd_gradient(
            spec.value, h), atol=1e-9)

    def test_invalid_parameters_rejected(self):
        with pytest.raises(ValueError):
            LogSumExp(beta=0.0)
        with pytest.raises(ValueError):
            RecLag(beta=1.0, gamma=-1.0)
        with pytest.raises(ValueError):
            AdditiveSigma(fn=np.tanh)  # missing derivative

    def test_origin_attractor_predicate(self):
        assert RecLag(beta=1.0, gamma=9.0).guarantees_origin_attractor(8)
        assert not RecLag(beta=1.0, gamma=8.0).guarantees_origin_attractor(8)


class TestFeatureLagrangians:
    def test_halfsquare_identity(self):
        feat = HalfSquare()
        v = np.array([3.0, -1.0])
        np.testing.assert_array_equal(feat.activation(v), v)
        assert feat.activation(np.zeros(2)).sum() == 0.0
        assert feat.value(v) == 5.0

    def test_abssum_sign(self):
        feat = AbsSum()
        np.testing.assert_array_equal(
            feat.activation(np.array([2.0, -5.0, 0.0])),
            np.array([1.0, -1.0, 0.0]))
        assert feat.value(np.array([2.0, -5.0, 0.0])) == 7.0


class TestGateValue:
    def test_origin_value(self):
        rng = np.random.default_rng(0)
        xi = rng.normal(size=(5, 3))
        g = gate_value(xi, np.zeros(3), beta=2.0, gamma=7.0)
        assert g == pytest.approx(math.log(5.0 / 7.0), abs=1e-12)

    def test_identity_example(self):
        g = gate_value(np.eye(2), np.array([1.0, 0.0]), 1.0, 1.0)
        assert g == pytest.approx(math.log(math.e + 1.0), abs=1e-12)

    def test_gamma_doubling_shifts_by_log2(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            xi = rng.normal(size=(4, 3))
            v = rng.normal(size=3)
            gamma = float(rng.uniform(0.5, 10.0))
            g1 = gate_value(xi, v, 1.5, gamma)
            g2 = gate_value(xi, v, 1.5, 2.0 * gamma)
            assert g1 - g2 == pytest.approx(math.log(2.0), abs=1e-12)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(2)
        xi = rng.normal(size=(6, 4))
        batch = rng.normal(size=(11, 4))
        g = gate_value(xi, batch, 2.0, 9.0)
        for i in range(11):
            assert g[i] == pytest.approx(
                gate_value(xi, batch[i], 2.0, 9.0), abs=1e-12)

    def test_large_exponents_do_not_overflow(self):
        xi = np.full((3, 4), 10.0)
        v = np.full(4, 10.0)
        g = gate_value(xi, v, 5.0, 6.0)
        assert np.isfinite(g)
        assert g == pytest.approx(5.0 * 400.0 + math.log(3.0)
                                  - math.log(6.0), rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            gate_value(np.eye(2), np.zeros(3), 1.0, 1.0)


class TestGradientConsistency:
    def test_memory_activations_match_finite_differences(self):
        rng = np.random.default_rng(7)
        checked = 0
        while checked < 100:
            n = int(rng.integers(2, 8))
            kind = checked % 3
            h = rng.uniform(-2.0, 2.0, size=n)
            if kind == 0:
                spec = LogSumExp(beta=float(rng.uniform(0.5, 3.0)))
            elif kind == 1:
                spec = AdditiveSigma(n=int(rng.integers(2, 5)))
            else:
                spec = RecLag(beta=float(rng.uniform(0.5, 3.0)),
                              gamma=float(rng.uniform(0.5, 2.0)) * n)
                if abs(spec.shifted_log_sum_exp(h)) <= 1e-3:
                    continue  # skip the kink neighborhood
            fd = fd_gradient(spec.value, h)
            analytic = spec.activation(h)
            scale = max(float(np.max(np.abs(analytic))), 1e-9)
            assert np.max(np.abs(fd - analytic)) / scale <= 1e-6
            checked += 1

    def test_feature_activations_match_finite_differences(self):
        rng = np.random.default_rng(8)
        for i in range(100):
            n = int(rng.integers(2, 6))
            # keep coordinates away from zero, where |v| is not smooth
            v = rng.uniform(0.2, 2.0, size=n) * rng.choice([-1.0, 1.0],
                                                           size=n)
            feat = HalfSquare() if i % 2 == 0 else AbsSum()
            fd = fd_gradient(feat.value, v)
            assert np.max(np.abs(fd - feat.activation(v))) <= 1e-6


class TestGateBoundary:
    def test_chi_step_convention(self):
        from reclag import chi
        assert chi(0.0) == 1.0          # boundary counts as open
        assert chi(1e-300) == 1.0
        assert chi(-1e-300) == 0.0
        assert chi(-5.0) == 0.0

    def test_reclag_open_exactly_at_zero_gate(self):
        # gamma = sum(exp(beta h)) makes the shifted response exactly 0
        h = np.zeros(3)
        spec = RecLag(beta=1.0, gamma=3.0)
        assert spec.shifted_log_sum_exp(h) == 0.0
        act = spec.activation(h)
        np.testing.assert_allclose(act, np.full(3, 1.0 / 3.0), atol=1e-15)
