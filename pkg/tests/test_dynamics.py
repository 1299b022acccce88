import numpy as np
import pytest

from reclag import (
    AbsSum,
    DivergenceError,
    HalfSquare,
    HopfieldConfig,
    LogSumExp,
    RecLag,
    Trajectory,
    capture_radius,
    classify_attractor,
    integrate_two_body,
    reclag_update,
    run_to_fixed_point,
    theorem1_ball_check,
    theorem2_gamma,
    vanilla_update,
)


def brute_force_retrieval(xi, v0, beta, tol=1e-6, max_iter=500):
    """Independent iteration oracle: repeat the softmax map to a fixed point."""
    v = np.asarray(v0, dtype=np.float64)
    for _ in range(max_iter):
        scores = beta * (xi @ v)
        e = np.exp(scores - scores.max())
        v_next = (e / e.sum()) @ xi
        if np.linalg.norm(v_next - v) < tol:
            return v_next
        v = v_next
    return v


class TestVanillaUpdate:
    def test_identity_example(self):
        out = vanilla_update(np.eye(2), np.array([1.0, 0.0]), 1.0)
        np.testing.assert_allclose(
            out, [np.e / (np.e + 1.0), 1.0 / (np.e + 1.0)], atol=1e-12)

    def test_zero_maps_to_row_mean(self):
        rng = np.random.default_rng(0)
        xi = rng.normal(size=(5, 3))
        out = vanilla_update(xi, np.zeros(3), 2.0)
        np.testing.assert_allclose(out, xi.mean(axis=0), atol=1e-12)

    def test_stored_pattern_retrieval(self):
        xi = np.array([[4.0, 0.0], [0.0, -4.0]])
        target = brute_force_retrieval(xi, xi[0], 5.0)
        assert np.linalg.norm(target - xi[0]) < 1e-6
        out = xi[0]
        for _ in range(50):
            out = vanilla_update(xi, out, 5.0)
        assert np.linalg.norm(out - xi[0]) < 1e-6

    def test_iterates_stay_in_row_hull(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            xi = rng.uniform(-1.0, 1.0, size=(6, 4))
            v = rng.uniform(-5.0, 5.0, size=4)
            bound = np.max(np.abs(xi))
            for _ in range(5):
                v = vanilla_update(xi, v, 1.5)
                assert np.max(np.abs(v)) <= bound + 1e-12


class TestRecLagUpdate:
    def test_origin_is_exact_fixed_point(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            xi = rng.uniform(-1.0, 1.0, size=(4, 3))
            out = reclag_update(xi, np.zeros(3), 1.0, 2.0 * 4)
            assert np.array_equal(out, np.zeros(3))

    def test_open_gate_equals_vanilla_bitwise(self):
        rng = np.random.default_rng(3)
        hits = 0
        from reclag import gate_value
        while hits < 25:
            xi = rng.uniform(-1.0, 1.0, size=(5, 3))
            v = rng.uniform(-1.0, 1.0, size=3)
            if gate_value(xi, v, 2.0, 1.0) < 0:
                continue
            a = reclag_update(xi, v, 2.0, 1.0)
            b = vanilla_update(xi, v, 2.0)
            assert np.array_equal(a, b)
            hits += 1

    def test_batch_gating(self):
        rng = np.random.default_rng(4)
        xi = rng.uniform(-1.0, 1.0, size=(4, 2))
        eps = capture_radius(xi, 1.0, 8.0)
        batch = np.vstack([np.zeros(2), np.full(2, eps / 10.0),
                           np.full(2, 5.0)])
        out = reclag_update(xi, batch, 1.0, 8.0)
        assert np.array_equal(out[0], np.zeros(2))
        assert np.array_equal(out[1], np.zeros(2))
        # open rows must match the batched ungated update bit-for-bit
        np.testing.assert_array_equal(out[2],
                                      vanilla_update(xi, batch, 1.0)[2])


class TestTheorem1:
    def test_epsilon_formula(self):
        xi = np.array([[1.0, -1.0], [1.0, 1.0]])
        eps = capture_radius(xi, 1.0, 2.0 * 2)
        assert eps == pytest.approx(np.log(2.0) / 2.0, abs=1e-12)

    def test_ball_check_captures_everything(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            n_mem, n_feat = int(rng.integers(2, 9)), int(rng.integers(2, 5))
            xi = rng.uniform(-1.0, 1.0, size=(n_mem, n_feat))
            report = theorem1_ball_check(xi, beta=1.5, gamma=2.0 * n_mem,
                                         n_probes=1000,
                                         seed=int(rng.integers(1000)))
            assert report.all_captured
            assert report.epsilon > 0

    def test_gamma_precondition(self):
        xi = np.eye(3)
        with pytest.raises(ValueError):
            theorem1_ball_check(xi, 1.0, gamma=1.5)  # gamma <= N_H


class TestTheorem2:
    def test_single_state_at_origin(self):
        xi = np.eye(4)
        traj = Trajectory(states=np.zeros((1, 4)))
        gamma = theorem2_gamma(xi, 1.0, traj, delta=0.5)
        assert gamma == pytest.approx(0.5 * 4.0, rel=1e-12)

    def test_reclag_reproduces_vanilla_exactly(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            xi = rng.uniform(-1.0, 1.0, size=(5, 3))
            v = rng.uniform(-1.0, 1.0, size=3)
            states = [v.copy()]
            for _ in range(40):
                v = vanilla_update(xi, v, 2.0)
                states.append(v.copy())
            traj = Trajectory(states=np.array(states))
            gamma = theorem2_gamma(xi, 2.0, traj, delta=0.5)
            w = traj.states[0]
            for k in range(40):
                w = reclag_update(xi, w, 2.0, gamma)
                assert np.array_equal(w, traj.states[k + 1])

    def test_gate_stays_open_by_log_delta(self):
        from reclag import gate_value
        rng = np.random.default_rng(7)
        xi = rng.uniform(-1.0, 1.0, size=(4, 3))
        v = rng.uniform(-1.0, 1.0, size=3)
        states = [v.copy()]
        for _ in range(20):
            v = vanilla_update(xi, v, 1.0)
            states.append(v.copy())
        traj = Trajectory(states=np.array(states))
        gamma = theorem2_gamma(xi, 1.0, traj, delta=0.5)
        for s in traj.states:
            assert gate_value(xi, s, 1.0, gamma) >= -np.log(0.5) - 1e-9

    def test_delta_out_of_range(self):
        with pytest.raises(ValueError):
            theorem2_gamma(np.eye(2), 1.0,
                           Trajectory(states=np.zeros((1, 2))), delta=1.5)


class TestIntegrateTwoBody:
    def test_adiabatic_reduces_to_vanilla(self):
        rng = np.random.default_rng(8)
        xi = rng.uniform(-1.0, 1.0, size=(5, 3))
        v0 = rng.uniform(-1.0, 1.0, size=3)
        cfg = HopfieldConfig(adiabatic=True)
        traj = integrate_two_body(xi, v0, np.zeros(5), LogSumExp(beta=2.0),
                                  HalfSquare(), cfg, steps=10)
        v = v0.copy()
        for k in range(10):
            v = vanilla_update(xi, v, 2.0)
            np.testing.assert_allclose(traj.states[k + 1], v, atol=1e-12)

    def test_adiabatic_reclag_origin_stays(self):
        rng = np.random.default_rng(9)
        xi = rng.uniform(-1.0, 1.0, size=(4, 3))
        cfg = HopfieldConfig(adiabatic=True)
        traj = integrate_two_body(xi, np.zeros(3), np.zeros(4),
                                  RecLag(beta=1.0, gamma=8.0),
                                  HalfSquare(), cfg, steps=7)
        assert np.array_equal(traj.states, np.zeros((8, 3)))

    def test_zero_steps_rejected(self):
        with pytest.raises(ValueError):
            integrate_two_body(np.eye(2), np.zeros(2), np.zeros(2),
                               LogSumExp(), HalfSquare(),
                               HopfieldConfig(), steps=0)

    def test_non_adiabatic_relaxes_toward_attractor(self):
        xi = np.array([[2.0, 0.0], [0.0, 2.0]])
        cfg = HopfieldConfig(tau_v=1.0, tau_h=0.1, dt=0.05)
        traj = integrate_two_body(xi, np.array([1.5, 0.1]), np.zeros(2),
                                  LogSumExp(beta=3.0), HalfSquare(), cfg,
                                  steps=2000, track_energy=True)
        assert np.linalg.norm(traj.final - xi[0]) < 1e-2
        assert traj.energies is not None
        assert len(traj.energies) == len(traj.states)

    def test_energy_tracking_length(self):
        xi = np.eye(2)
        cfg = HopfieldConfig(adiabatic=True)
        traj = integrate_two_body(xi, np.array([0.4, 0.1]), np.zeros(2),
                                  LogSumExp(beta=1.0), HalfSquare(), cfg,
                                  steps=5, track_energy=True)
        assert traj.energies.shape == (6,)

    def test_divergence_reported_with_step(self):
        # explosive additive dynamics: sigma' grows without bound
        from reclag import AdditiveSigma
        xi = 8.0 * np.ones((2, 2))
        cfg = HopfieldConfig(tau_v=1.0, tau_h=1.0, dt=1.0)
        with np.errstate(over="ignore"), pytest.raises(DivergenceError):
            integrate_two_body(xi, np.full(2, 1e150), np.full(2, 1e150),
                               AdditiveSigma(n=3), HalfSquare(), cfg,
                               steps=10)


class TestRunToFixedPoint:
    def test_origin_fixed_point_converges_immediately(self):
        rng = np.random.default_rng(10)
        xi = rng.uniform(-1.0, 1.0, size=(4, 3))
        traj = run_to_fixed_point(xi, np.zeros(3),
                                  RecLag(beta=1.0, gamma=8.5), HalfSquare())
        assert traj.converged
        assert traj.steps_taken == 1
        assert np.array_equal(traj.final, np.zeros(3))

    def test_retrieval_converges_to_pattern(self):
        xi = np.array([[4.0, 0.0], [0.0, -4.0]])
        target = brute_force_retrieval(xi, np.array([3.5, 0.3]), 5.0)
        traj = run_to_fixed_point(xi, np.array([3.5, 0.3]),
                                  LogSumExp(beta=5.0), HalfSquare(),
                                  tol=1e-10)
        assert traj.converged
        assert np.linalg.norm(traj.final - target) < 1e-8

    def test_step_budget_exhaustion(self):
        xi = np.array([[4.0, 0.0], [0.0, -4.0]])
        traj = run_to_fixed_point(xi, np.array([2.0, -1.9]),
                                  LogSumExp(beta=5.0), HalfSquare(),
                                  max_steps=1)
        assert not traj.converged

    def test_energy_descends_along_trajectory(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            xi = rng.uniform(-1.0, 1.0, size=(6, 4))
            beta = float(rng.uniform(0.5, 4.0))
            traj = run_to_fixed_point(xi, rng.uniform(-1.0, 1.0, size=4),
                                      LogSumExp(beta=beta), HalfSquare(),
                                      track_energy=True)
            rises = np.diff(traj.energies)
            assert np.all(rises <= 1e-9)


class TestClassifyAttractor:
    def test_origin_label(self):
        xi = np.eye(3)
        traj = Trajectory(states=np.zeros((2, 3)), converged=True,
                          steps_taken=1)
        label = classify_attractor(traj, xi)
        assert label.kind == "origin"

    def test_pattern_label(self):
        xi = np.array([[1.0, 0.0], [0.0, 1.0]])
        traj = Trajectory(states=np.array([[0.5, 0.5], [0.0, 1.0]]),
                          converged=True, steps_taken=1)
        label = classify_attractor(traj, xi)
        assert label.kind == "pattern"
        assert label.index == 1
        assert label.distance == 0.0

    def test_unconverged_label(self):
        traj = Trajectory(states=np.zeros((2, 2)), converged=False)
        assert classify_attractor(traj, np.eye(2)).kind == "unconverged"


class TestGenericAdiabaticBranch:
    def test_additive_sigma_step_matches_hand_formula(self):
        from reclag import AdditiveSigma
        rng = np.random.default_rng(12)
        xi = rng.uniform(-1.0, 1.0, size=(4, 3))
        v0 = rng.uniform(-1.0, 1.0, size=3)
        cfg = HopfieldConfig(adiabatic=True)
        traj = integrate_two_body(xi, v0, np.zeros(4), AdditiveSigma(n=2),
                                  AbsSum(), cfg, steps=1)
        h = xi @ np.sign(v0)
        expected = xi.T @ (2.0 * h)
        np.testing.assert_allclose(traj.states[1], expected, atol=1e-12)

    def test_non_adiabatic_gated_memory_runs(self):
        rng = np.random.default_rng(13)
        xi = rng.uniform(-1.0, 1.0, size=(5, 3))
        cfg = HopfieldConfig(tau_v=1.0, tau_h=0.2, dt=0.05)
        traj = integrate_two_body(xi, rng.uniform(-0.1, 0.1, size=3),
                                  np.zeros(5),
                                  RecLag(beta=1.0, gamma=2.0 * 5),
                                  HalfSquare(), cfg, steps=400,
                                  track_energy=True)
        # tiny states keep the memory gate shut, so features decay to 0
        assert np.linalg.norm(traj.final) < 1e-6
        assert np.all(np.isfinite(traj.energies))
