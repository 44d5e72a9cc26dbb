"""Tests for categorical value-distribution arithmetic.

Randomized cases are cross-checked against the brute-force oracles in
hrhr_rl.oracle; hand values were computed by hand or with the oracle
first and then frozen here.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hrhr_rl import oracle
from hrhr_rl.errors import InvalidInputError
from hrhr_rl.value_dist import (
    ValueDistribution,
    ValueSupport,
    bellman_project,
    clipped_merge,
    expectation,
    kl_ce_grad_target,
    log_complement_cdf,
    log_softmax,
    log_sum_exp,
    softmax_dist,
)


def support(v_min=-1.0, v_max=1.0, n=3) -> ValueSupport:
    return ValueSupport(v_min, v_max, n)


def dist(probs, sup=None) -> ValueDistribution:
    probs = np.asarray(probs, dtype=np.float64)
    return ValueDistribution(sup or support(n=probs.size), probs)


class TestValueSupport:
    def test_atom_grid_hits_both_endpoints(self):
        sup = ValueSupport(-10.0, 10.0, 51)
        assert sup.atoms[0] == -10.0
        assert sup.atoms[-1] == 10.0
        assert sup.delta_z == pytest.approx(0.4)
        np.testing.assert_allclose(np.diff(sup.atoms), sup.delta_z, rtol=1e-12)

    def test_rejects_degenerate_bounds_and_atom_counts(self):
        with pytest.raises(InvalidInputError):
            ValueSupport(1.0, 1.0, 5)
        with pytest.raises(InvalidInputError):
            ValueSupport(0.0, 1.0, 1)

    def test_distribution_validation(self):
        sup = support()
        with pytest.raises(InvalidInputError):
            ValueDistribution(sup, np.array([0.5, 0.6, 0.1]))
        with pytest.raises(InvalidInputError):
            ValueDistribution(sup, np.array([0.5, -0.1, 0.6]))
        with pytest.raises(InvalidInputError):
            ValueDistribution(sup, np.array([0.5, np.nan, 0.5]))


class TestSoftmaxDist:
    def test_equal_logits_give_uniform(self):
        sup = ValueSupport(-1.0, 1.0, 51)
        z = softmax_dist(np.full(51, 3.7), sup)
        np.testing.assert_allclose(z.probs, 1.0 / 51.0, rtol=1e-12)

    def test_two_atom_hand_value(self):
        z = softmax_dist(np.array([0.0, math.log(3.0)]), support(n=2))
        np.testing.assert_allclose(z.probs, [0.25, 0.75], rtol=1e-12)

    def test_extreme_logits_stay_finite(self):
        sup = ValueSupport(0.0, 1.0, 2)
        z = softmax_dist(np.array([700.0, -700.0]), sup)
        assert np.all(np.isfinite(z.probs))
        np.testing.assert_allclose(z.probs, [1.0, 0.0], atol=1e-300)

    def test_rejects_non_finite_logits(self):
        with pytest.raises(InvalidInputError):
            softmax_dist(np.array([0.0, np.inf, 0.0]), support())


class TestExpectation:
    def test_uniform_over_symmetric_support_is_zero(self):
        z = dist(np.full(5, 0.2), ValueSupport(-1.0, 1.0, 5))
        assert expectation(z) == pytest.approx(0.0, abs=1e-15)

    def test_point_mass_on_top_atom_is_v_max(self):
        z = dist([0.0, 0.0, 1.0])
        assert expectation(z) == 1.0

    def test_direct_sum(self):
        z = dist([0.5, 0.5, 0.0])
        assert expectation(z) == pytest.approx(-0.5)


class TestBellmanProject:
    def test_identity_transport_when_on_grid(self):
        sup = support(n=5)
        probs = np.array([0.1, 0.2, 0.3, 0.25, 0.15])
        out = bellman_project(dist(probs, sup), 0.0, 1.0, sup)
        np.testing.assert_array_equal(out.probs, probs)

    def test_split_between_neighbors(self):
        sup = support()
        out = bellman_project(dist([0.0, 1.0, 0.0], sup), 0.5, 1.0, sup)
        np.testing.assert_allclose(out.probs, [0.0, 0.5, 0.5], atol=1e-15)

    def test_reward_beyond_v_max_clamps_all_mass_to_top(self):
        sup = support()
        out = bellman_project(dist([0.3, 0.4, 0.3], sup), 10.0, 1.0, sup)
        np.testing.assert_allclose(out.probs, [0.0, 0.0, 1.0], atol=1e-15)

    def test_terminal_convention_lands_at_reward(self):
        sup = ValueSupport(-1.0, 1.0, 51)
        z_next = softmax_dist(np.random.default_rng(3).normal(0, 1, 51), sup)
        out = bellman_project(z_next, 0.5, 0.0, sup)
        # 0.5 falls halfway between atoms 0.48 and 0.52 on this grid.
        assert expectation(out) == pytest.approx(0.5, abs=1e-12)
        assert np.count_nonzero(out.probs) <= 2

    def test_rejects_gamma_outside_unit_interval(self):
        sup = support()
        with pytest.raises(InvalidInputError):
            bellman_project(dist([1.0, 0.0, 0.0], sup), 0.0, 1.5, sup)

    def test_matches_double_loop_oracle_on_random_cases(self):
        rng = np.random.default_rng(42)
        for _ in range(300):
            n = int(rng.integers(2, 64))
            sup = ValueSupport(
                float(rng.uniform(-5, 0)), float(rng.uniform(0.5, 5)), n
            )
            probs = rng.dirichlet(np.ones(n) * rng.uniform(0.2, 4.0))
            r = float(rng.uniform(2 * sup.v_min, 2 * sup.v_max))
            gamma = float(rng.uniform(0.0, 1.0))
            got = bellman_project(dist(probs, sup), r, gamma, sup).probs
            want = oracle.naive_project(list(probs), r, gamma, sup.v_min, sup.v_max)
            np.testing.assert_allclose(got, want, atol=1e-9)
            assert abs(got.sum() - 1.0) < 1e-12

    def test_linear_in_input_probabilities(self):
        rng = np.random.default_rng(7)
        sup = ValueSupport(-2.0, 2.0, 21)
        for _ in range(50):
            p1 = rng.dirichlet(np.ones(21))
            p2 = rng.dirichlet(np.ones(21))
            lam = float(rng.uniform(0, 1))
            r, gamma = float(rng.uniform(-1, 1)), float(rng.uniform(0, 1))
            mixed = bellman_project(
                dist(lam * p1 + (1 - lam) * p2, sup), r, gamma, sup
            ).probs
            separate = lam * bellman_project(
                dist(p1, sup), r, gamma, sup
            ).probs + (1 - lam) * bellman_project(dist(p2, sup), r, gamma, sup).probs
            np.testing.assert_allclose(mixed, separate, atol=1e-12)


class TestClippedMerge:
    def test_idempotent_exactly(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(2, 80))
            z = dist(rng.dirichlet(np.ones(n) * 0.4), ValueSupport(0.0, 1.0, n))
            merged = clipped_merge(z, z)
            np.testing.assert_array_equal(merged.probs, z.probs)

    def test_dominated_input_wins(self):
        z1 = dist([0.5, 0.5, 0.0])
        z2 = dist([0.0, 0.5, 0.5])
        np.testing.assert_array_equal(clipped_merge(z1, z2).probs, z1.probs)

    def test_crossing_cdfs_hand_value(self):
        z1 = dist([0.6, 0.0, 0.4])
        z2 = dist([0.0, 1.0, 0.0])
        np.testing.assert_allclose(
            clipped_merge(z1, z2).probs, [0.6, 0.4, 0.0], atol=1e-15
        )

    def test_rejects_mismatched_supports(self):
        z1 = dist([0.5, 0.5, 0.0], ValueSupport(-1.0, 1.0, 3))
        z2 = dist([0.5, 0.5, 0.0], ValueSupport(-2.0, 1.0, 3))
        with pytest.raises(InvalidInputError):
            clipped_merge(z1, z2)

    def test_cdf_equals_pointwise_max_exactly(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            n = int(rng.integers(2, 64))
            sup = ValueSupport(-1.0, 1.0, n)
            z1 = dist(rng.dirichlet(np.ones(n) * rng.uniform(0.2, 4)), sup)
            z2 = dist(rng.dirichlet(np.ones(n) * rng.uniform(0.2, 4)), sup)
            merged = clipped_merge(z1, z2)
            np.testing.assert_array_equal(merged.cdf, np.maximum(z1.cdf, z2.cdf))
            # Commutativity is exact.
            np.testing.assert_array_equal(
                merged.probs, clipped_merge(z2, z1).probs
            )
            # Conservatism: never more optimistic than either input.
            assert expectation(merged) <= expectation(z1) + 1e-12
            assert expectation(merged) <= expectation(z2) + 1e-12
            # Agreement with the running-sum oracle.
            np.testing.assert_allclose(
                merged.probs,
                oracle.naive_merge(list(z1.probs), list(z2.probs)),
                atol=1e-9,
            )


class TestCrossEntropyGrad:
    def test_matched_distributions_have_zero_gradient(self):
        sup = ValueSupport(-1.0, 1.0, 7)
        logits = np.random.default_rng(0).normal(0, 2, 7)
        target = softmax_dist(logits, sup)
        _, grad = kl_ce_grad_target(target, logits)
        np.testing.assert_allclose(grad, 0.0, atol=1e-15)

    def test_point_mass_target_uniform_logits(self):
        n = 5
        sup = ValueSupport(0.0, 1.0, n)
        target_probs = np.zeros(n)
        target_probs[2] = 1.0
        _, grad = kl_ce_grad_target(ValueDistribution(sup, target_probs), np.zeros(n))
        want = np.full(n, 1.0 / n)
        want[2] -= 1.0
        np.testing.assert_allclose(grad, want, rtol=1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            n = int(rng.integers(2, 16))
            sup = ValueSupport(-1.0, 1.0, n)
            target = dist(rng.dirichlet(np.ones(n)), sup)
            logits = rng.normal(0, 2, n)
            _, grad = kl_ce_grad_target(target, logits)
            fd = oracle.fd_gradient(
                lambda p: kl_ce_grad_target(target, p)[0], logits.copy()
            )
            scale = max(np.max(np.abs(grad)), 1e-12)
            assert np.max(np.abs(grad - fd)) / scale < 1e-6

    def test_loss_uses_log_softmax_under_extreme_logits(self):
        sup = ValueSupport(0.0, 1.0, 3)
        target = dist([0.2, 0.3, 0.5], sup)
        loss, grad = kl_ce_grad_target(target, np.array([700.0, 0.0, -700.0]))
        assert np.isfinite(loss)
        assert np.all(np.isfinite(grad))


class TestLogSumExp:
    def test_pair_of_zeros(self):
        assert log_sum_exp(np.zeros(2)) == pytest.approx(math.log(2.0), rel=1e-15)

    def test_large_equal_entries(self):
        got = log_sum_exp(np.array([1000.0, 1000.0]))
        assert got == pytest.approx(1000.0 + math.log(2.0), rel=1e-15)

    def test_tiny_tail_term(self):
        got = log_sum_exp(np.array([0.0, -745.0]))
        assert abs(got - math.log1p(math.exp(-745.0))) < 1e-12

    def test_rejects_empty_vector(self):
        with pytest.raises(InvalidInputError):
            log_sum_exp(np.array([]))

    @given(
        st.lists(st.floats(-300, 300), min_size=1, max_size=30),
        st.floats(-100, 100),
    )
    @settings(max_examples=60, deadline=None)
    def test_shift_invariance(self, xs, c):
        xs = np.asarray(xs)
        assert log_sum_exp(xs + c) == pytest.approx(log_sum_exp(xs) + c, abs=1e-12)


class TestLogComplementCdf:
    def test_uniform_two_atoms(self):
        assert log_complement_cdf(np.zeros(2), 1, 0.0) == pytest.approx(
            math.log(0.5), rel=1e-15
        )

    def test_full_block_is_exactly_log_epsilon(self):
        logits = np.random.default_rng(1).normal(0, 5, 9)
        assert log_complement_cdf(logits, 9, 1e-4) == math.log(1e-4)

    def test_matches_naive_formula_when_well_conditioned(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            n = int(rng.integers(2, 30))
            logits = rng.normal(0, 3, n)
            k = int(rng.integers(1, n + 1))
            eps = 1e-4
            probs = np.exp(logits - logits.max())
            probs /= probs.sum()
            naive = math.log(1.0 - (1.0 - eps) * probs[:k].sum())
            assert abs(log_complement_cdf(logits, k, eps) - naive) < 1e-10

    def test_never_overflows_on_magnitude_700_logits(self):
        logits = np.array([700.0, -700.0, 350.0, 0.0])
        for k in (1, 2, 3, 4):
            assert math.isfinite(log_complement_cdf(logits, k, 1e-4))

    def test_rejects_out_of_range_atom_index(self):
        with pytest.raises(InvalidInputError):
            log_complement_cdf(np.zeros(4), 0, 0.0)
        with pytest.raises(InvalidInputError):
            log_complement_cdf(np.zeros(4), 5, 0.0)


def test_log_softmax_agrees_with_softmax_log():
    rng = np.random.default_rng(9)
    logits = rng.normal(0, 3, 20)
    probs = np.exp(logits - logits.max())
    probs /= probs.sum()
    np.testing.assert_allclose(log_softmax(logits), np.log(probs), atol=1e-12)
