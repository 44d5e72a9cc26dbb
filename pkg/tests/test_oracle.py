"""Self-tests for the brute-force oracles (written before the production
paths they guard)."""

import numpy as np
import pytest

from hrhr_rl import oracle
from hrhr_rl.envs import ChainEnv
from hrhr_rl.errors import InvalidInputError


class TestNaiveProject:
    def test_on_grid_identity(self):
        probs = [0.25, 0.25, 0.5]
        out = oracle.naive_project(probs, 0.0, 1.0, -1.0, 1.0)
        np.testing.assert_allclose(out, probs, atol=1e-15)

    def test_hand_split(self):
        out = oracle.naive_project([0.0, 1.0, 0.0], 0.5, 1.0, -1.0, 1.0)
        np.testing.assert_allclose(out, [0.0, 0.5, 0.5], atol=1e-15)

    def test_clamp_everything_to_top(self):
        out = oracle.naive_project([0.2, 0.5, 0.3], 10.0, 1.0, -1.0, 1.0)
        np.testing.assert_allclose(out, [0.0, 0.0, 1.0], atol=1e-15)

    def test_gamma_zero_collapses_to_reward(self):
        out = oracle.naive_project([0.1, 0.8, 0.1], -1.0, 0.0, -1.0, 1.0)
        np.testing.assert_allclose(out, [1.0, 0.0, 0.0], atol=1e-15)

    def test_mass_conserved(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(2, 30))
            probs = rng.dirichlet(np.ones(n))
            out = oracle.naive_project(
                list(probs),
                float(rng.uniform(-3, 3)),
                float(rng.uniform(0, 1)),
                -1.0,
                1.0,
            )
            assert abs(sum(out) - 1.0) < 1e-12


class TestNaiveMerge:
    def test_idempotent(self):
        probs = [0.2, 0.3, 0.5]
        np.testing.assert_allclose(oracle.naive_merge(probs, probs), probs)

    def test_hand_case(self):
        out = oracle.naive_merge([0.6, 0.0, 0.4], [0.0, 1.0, 0.0])
        np.testing.assert_allclose(out, [0.6, 0.4, 0.0], atol=1e-15)

    def test_rejects_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            oracle.naive_merge([1.0], [0.5, 0.5])


class TestFdGradient:
    def test_quadratic(self):
        grad = oracle.fd_gradient(lambda w: float(np.sum(w**2)), np.array([1.0, 2.0]))
        np.testing.assert_allclose(grad, [2.0, 4.0], atol=1e-8)

    def test_trig(self):
        x = np.array([0.3, -0.7])
        grad = oracle.fd_gradient(lambda w: float(np.sin(w[0]) * np.cos(w[1])), x)
        want = [np.cos(0.3) * np.cos(-0.7), -np.sin(0.3) * np.sin(-0.7)]
        np.testing.assert_allclose(grad, want, atol=1e-9)

    def test_step_bounds_enforced(self):
        with pytest.raises(InvalidInputError):
            oracle.fd_gradient(lambda w: 0.0, np.zeros(1), step=1e-2)


class TestValueIteration:
    def test_single_step_env_returns_best_expected_reward(self):
        env = ChainEnv(length=1)
        actions = np.linspace(-2, 2, 41)
        values, policy = oracle.value_iteration(1, actions, env.outcomes, 0.9)
        assert values[0] == pytest.approx(0.5, abs=1e-10)
        assert abs(actions[policy[0]] - 1.0) <= env.band_delta

    def test_two_state_chain_hand_value(self):
        env = ChainEnv(length=2)
        actions = np.linspace(-2, 2, 41)
        values, _ = oracle.value_iteration(2, actions, env.outcomes, 0.99)
        np.testing.assert_allclose(values, [0.99 * 0.5, 0.5], atol=1e-10)

    def test_gamma_zero_gives_immediate_reward(self):
        env = ChainEnv(length=2)
        actions = np.linspace(-2, 2, 41)
        values, _ = oracle.value_iteration(2, actions, env.outcomes, 0.0)
        # With no lookahead, only the final state's bonus is worth anything.
        np.testing.assert_allclose(values, [0.0, 0.5], atol=1e-10)

    def test_nonconvergence_is_reported(self):
        def outcomes(state, action):
            return [(1.0, state, 1.0)]  # self-loop with reward, gamma = 1

        with pytest.raises(RuntimeError, match="converge"):
            oracle.value_iteration(
                1, [0.0], outcomes, 1.0, tol=1e-10, max_sweeps=50
            )


class TestMleGridSearch:
    def test_matches_closed_form_at_delta_03(self):
        mu, sigma_sq = oracle.mle_grid_search(0.3)
        assert mu == pytest.approx(0.0, abs=2e-3)
        assert sigma_sq == pytest.approx(1.03, abs=2e-3)

    def test_matches_closed_form_at_delta_09(self):
        mu, sigma_sq = oracle.mle_grid_search(0.9)
        assert sigma_sq == pytest.approx(1.27, abs=2e-3)

    def test_found_point_is_a_local_maximum(self):
        delta = 0.3
        mu, sigma_sq = oracle.mle_grid_search(delta)
        sigma = np.sqrt(sigma_sq)
        best = oracle.region_log_likelihood(mu, sigma, delta)
        for dmu in (-0.05, 0.05):
            for dsigma in (-0.05, 0.05):
                assert (
                    oracle.region_log_likelihood(mu + dmu, sigma + dsigma, delta)
                    < best + 1e-12
                )


class TestOracleReport:
    def test_pass_flag_tracks_tolerance(self):
        good = oracle.OracleReport("x", 1.0, 1.0, 0.0, 1e-9)
        bad = oracle.OracleReport("x", 1.0, 2.0, 1.0, 1e-9)
        assert good.passed and not bad.passed
        assert "PASS" in good.row() and "FAIL" in bad.row()
