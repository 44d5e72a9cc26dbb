"""Release-gate checks: run every production primitive against its
brute-force or high-precision counterpart and report one row per check.

The check builders take the functions under test as arguments so the test
suite can inject perturbed implementations and confirm that exactly the
matching rows fail.
"""

from __future__ import annotations

import math
from typing import Callable

import mpmath
import numpy as np

from . import oracle, value_dist
from .action_space import entropy_rows
from .agent import _entropy_backward, _row_softmax_backward
from .baseline import RewardRegion, gaussian_mle_fit
from .envs import ChainEnv
from .oracle import OracleReport
from .value_dist import ValueSupport


def _random_support(rng) -> ValueSupport:
    v_min = float(rng.uniform(-5.0, 0.0))
    v_max = v_min + float(rng.uniform(0.5, 10.0))
    return ValueSupport(v_min, v_max, int(rng.integers(2, 64)))


def _random_probs(rng, n: int) -> np.ndarray:
    return rng.dirichlet(np.ones(n) * float(rng.uniform(0.2, 5.0)))


def check_projection_agreement(
    n_cases: int = 500, project=None, seed: int = 101
) -> OracleReport:
    """Production projection vs the double-loop kernel, including forced
    clamp-boundary cases."""
    project = project or value_dist.bellman_project
    rng = np.random.default_rng(seed)
    worst = 0.0
    for case in range(n_cases):
        support = _random_support(rng)
        probs = _random_probs(rng, support.n_atoms)
        if case % 3 == 0:
            # Force mass against one of the clamp boundaries.
            r = float(rng.choice([-1.0, 1.0])) * (
                abs(support.v_max) + abs(support.v_min) + rng.uniform(0, 5)
            )
        else:
            r = float(rng.uniform(support.v_min, support.v_max))
        gamma = float(rng.uniform(0.0, 1.0))
        z = value_dist.ValueDistribution(support, probs)
        got = project(z, r, gamma, support).probs
        want = oracle.naive_project(
            list(probs), r, gamma, support.v_min, support.v_max
        )
        worst = max(worst, float(np.max(np.abs(got - np.asarray(want)))))
    return OracleReport("projection vs double-loop oracle", 0.0, worst, worst, 1e-9)


def check_projection_mass(n_cases: int = 500, project=None, seed: int = 102) -> OracleReport:
    project = project or value_dist.bellman_project
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases):
        support = _random_support(rng)
        z = value_dist.ValueDistribution(support, _random_probs(rng, support.n_atoms))
        r = float(rng.uniform(2 * support.v_min, 2 * support.v_max))
        out = project(z, r, float(rng.uniform(0, 1)), support)
        worst = max(worst, abs(float(out.probs.sum()) - 1.0))
    return OracleReport("projection mass conservation", 0.0, worst, worst, 1e-12)


def check_merge_agreement(n_cases: int = 500, merge=None, seed: int = 103) -> OracleReport:
    merge = merge or value_dist.clipped_merge
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases):
        support = _random_support(rng)
        z1 = value_dist.ValueDistribution(support, _random_probs(rng, support.n_atoms))
        z2 = value_dist.ValueDistribution(support, _random_probs(rng, support.n_atoms))
        got = merge(z1, z2).probs
        want = np.asarray(oracle.naive_merge(list(z1.probs), list(z2.probs)))
        worst = max(worst, float(np.max(np.abs(got - want))))
    return OracleReport("merge vs running-sum oracle", 0.0, worst, worst, 1e-9)


def check_merge_dominance(n_cases: int = 500, merge=None, seed: int = 104) -> OracleReport:
    """Merged CDF must equal the pointwise max of the input CDFs exactly."""
    merge = merge or value_dist.clipped_merge
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases):
        support = _random_support(rng)
        z1 = value_dist.ValueDistribution(support, _random_probs(rng, support.n_atoms))
        z2 = value_dist.ValueDistribution(support, _random_probs(rng, support.n_atoms))
        merged = merge(z1, z2)
        expected = np.maximum(z1.cdf, z2.cdf)
        worst = max(worst, float(np.max(np.abs(merged.cdf - expected))))
    return OracleReport("merge CDF dominance (exact)", 0.0, worst, worst, 0.0)


def _fd_relative_error(analytic: np.ndarray, fd: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(analytic))), float(np.max(np.abs(fd))), 1e-12)
    return float(np.max(np.abs(analytic - fd))) / scale


def check_critic_ce_gradient(n_cases: int = 20, ce=None, seed: int = 105) -> OracleReport:
    """Cross-entropy gradient in the logits against central differences."""
    ce = ce or value_dist.kl_ce_grad_target
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases):
        support = _random_support(rng)
        target = value_dist.ValueDistribution(
            support, _random_probs(rng, support.n_atoms)
        )
        logits = rng.normal(0, 2, support.n_atoms)
        _, grad = ce(target, logits)
        fd = oracle.fd_gradient(lambda p: ce(target, p)[0], logits.copy())
        worst = max(worst, _fd_relative_error(grad, fd))
    return OracleReport("critic cross-entropy gradient vs FD", 0.0, worst, worst, 1e-5)


def check_policy_objective_gradient(
    n_cases: int = 10, seed: int = 106
) -> OracleReport:
    """Actor-objective gradient through a composed actor-critic stack
    against central differences in the actor parameters."""
    from .agent import AgentConfig, TwinCriticAgent
    from .action_space import ActionSpaceSpec

    rng = np.random.default_rng(seed)
    worst = 0.0
    for case in range(n_cases):
        n_atoms = int(rng.integers(3, 9))
        n_dims = int(rng.integers(1, 3))
        m = int(rng.integers(3, 7))
        config = AgentConfig(
            support=ValueSupport(-1.0, 1.0, n_atoms),
            actions=ActionSpaceSpec.uniform(n_dims, m, -1.0, 1.0),
            state_dim=2,
            hidden=(8,),
            seed=case,
        )
        agent = TwinCriticAgent(config)
        agent.params["actor"] = rng.normal(0, 0.5, agent.actor_net.n_params)
        agent.params["critic1"] = rng.normal(0, 0.5, agent.critic_nets[0].n_params)
        states = rng.normal(0, 1, (3, 2))

        def objective(actor_params: np.ndarray) -> float:
            adist = agent._policy_probs(actor_params, states)
            logits = agent._critic_logits(
                agent.critic_nets[0], agent.params["critic1"], states, adist
            )
            total = 0.0
            for b in range(states.shape[0]):
                for k in range(1, n_atoms):
                    total += value_dist.log_complement_cdf(
                        logits[b], k, config.smoothing
                    )
            return total / states.shape[0]

        adist = agent._policy_probs(agent.params["actor"], states)
        inputs = np.concatenate([states, adist.reshape(3, -1)], axis=1)
        logits1 = agent.critic_nets[0].forward(agent.params["critic1"], inputs)
        e1 = np.exp(logits1 - logits1.max(axis=1, keepdims=True))
        _, dlogits, _ = agent._cumulative_objective(e1)
        _, dinputs = agent.critic_nets[0].backward(
            agent.params["critic1"], inputs, dlogits
        )
        grad_adist = dinputs[:, 2:].reshape(3, n_dims, m)
        grad_logits = _row_softmax_backward(adist, grad_adist)
        gparams, _ = agent.actor_net.backward(
            agent.params["actor"], states, grad_logits.reshape(3, -1) / 3.0
        )
        fd = oracle.fd_gradient(objective, agent.params["actor"].copy())
        worst = max(worst, _fd_relative_error(gparams, fd))
    return OracleReport("policy objective gradient vs FD", 0.0, worst, worst, 1e-5)


def check_entropy_gradient(n_cases: int = 10, seed: int = 107) -> OracleReport:
    """Analytic entropy gradient in row logits against central
    differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases):
        n, m = int(rng.integers(1, 4)), int(rng.integers(2, 8))
        logits = rng.normal(0, 2, (1, n, m))

        def entropy_of(flat: np.ndarray) -> float:
            z = flat.reshape(1, n, m)
            z = z - z.max(axis=-1, keepdims=True)
            e = np.exp(z)
            p = e / e.sum(axis=-1, keepdims=True)
            return float(entropy_rows(p)[0])

        z = logits - logits.max(axis=-1, keepdims=True)
        e = np.exp(z)
        probs = e / e.sum(axis=-1, keepdims=True)
        analytic = _entropy_backward(probs).ravel()
        fd = oracle.fd_gradient(entropy_of, logits.ravel().copy())
        worst = max(worst, _fd_relative_error(analytic, fd))
    return OracleReport("entropy gradient vs FD", 0.0, worst, worst, 1e-6)


def _mp_logsumexp(values) -> float:
    total = mpmath.mpf(0)
    for v in values:
        total += mpmath.e**mpmath.mpf(float(v))
    return float(mpmath.log(total))


def check_log_sum_exp(n_cases: int = 200, lse=None, seed: int = 108) -> OracleReport:
    lse = lse or value_dist.log_sum_exp
    rng = np.random.default_rng(seed)
    worst = 0.0
    with mpmath.workdps(60):
        for _ in range(n_cases):
            xs = rng.normal(0, 10, int(rng.integers(1, 40)))
            worst = max(worst, abs(lse(xs) - _mp_logsumexp(xs)))
    return OracleReport("log-sum-exp vs 60-digit reference", 0.0, worst, worst, 1e-10)


def check_log_softmax(n_cases: int = 200, seed: int = 109) -> OracleReport:
    rng = np.random.default_rng(seed)
    worst = 0.0
    with mpmath.workdps(60):
        for _ in range(n_cases):
            xs = rng.normal(0, 10, int(rng.integers(2, 40)))
            got = value_dist.log_softmax(xs)
            denom = _mp_logsumexp(xs)
            want = np.array([float(mpmath.mpf(float(x)) - denom) for x in xs])
            worst = max(worst, float(np.max(np.abs(got - want))))
    return OracleReport("log-softmax vs 60-digit reference", 0.0, worst, worst, 1e-10)


def check_log_complement_cdf(
    n_cases: int = 200, lcc=None, seed: int = 110
) -> OracleReport:
    lcc = lcc or value_dist.log_complement_cdf
    rng = np.random.default_rng(seed)
    eps = 1e-4
    worst = 0.0
    with mpmath.workdps(60):
        for _ in range(n_cases):
            n = int(rng.integers(2, 30))
            xs = rng.normal(0, 5, n)
            k = int(rng.integers(1, n + 1))
            exps = [mpmath.e**mpmath.mpf(float(x)) for x in xs]
            total = mpmath.fsum(exps)
            rho = mpmath.fsum(exps[:k]) / total
            want = float(mpmath.log(1 - (1 - mpmath.mpf(eps)) * rho))
            worst = max(worst, abs(lcc(xs, k, eps) - want))
    return OracleReport(
        "log-complement-CDF vs 60-digit reference", 0.0, worst, worst, 1e-10
    )


def check_log_domain_extremes() -> OracleReport:
    """Magnitude-700 logits must produce finite values everywhere."""
    xs = np.array([700.0, -700.0, 0.0, 699.0])
    values = [
        value_dist.log_sum_exp(xs),
        float(np.max(np.abs(value_dist.log_softmax(xs)))),
        value_dist.log_complement_cdf(xs, 2, 1e-4),
        value_dist.log_complement_cdf(-xs, 1, 1e-4),
    ]
    bad = 0.0 if all(math.isfinite(v) for v in values) else math.inf
    return OracleReport("log-domain primitives finite at |x|=700", 0.0, bad, bad, 0.0)


def check_mle_against_grid(fit=None) -> OracleReport:
    """Numerical likelihood maximizer vs the independent grid search and
    the closed-form solution, over four band widths."""
    fit = fit or gaussian_mle_fit
    worst = 0.0
    for delta in (0.1, 0.3, 0.5, 0.9):
        mu, sigma_sq = fit(RewardRegion(delta))
        grid_mu, grid_sigma_sq = oracle.mle_grid_search(delta)
        closed = 1.0 + delta**2 / 3.0
        worst = max(
            worst,
            abs(mu),
            abs(grid_mu),
            abs(sigma_sq - closed),
            abs(sigma_sq - grid_sigma_sq),
        )
    return OracleReport("Gaussian MLE fit vs grid search", 0.0, worst, worst, 2e-3)


def check_value_iteration() -> OracleReport:
    """Hand-checkable chain values: two states, gamma 0.99, expected
    terminal bonus 0.5 reached after one advancing step."""
    env = ChainEnv(length=2)
    actions = np.linspace(env.action_low, env.action_high, 51)
    values, _ = oracle.value_iteration(2, actions, env.outcomes, 0.99)
    want = np.array([0.99 * 0.5, 0.5])
    dev = float(np.max(np.abs(values - want)))
    return OracleReport("value iteration vs hand-computed chain", 0.0, dev, dev, 1e-8)


def default_checks() -> list[tuple[str, Callable[[], OracleReport]]]:
    return [
        ("projection_agreement", check_projection_agreement),
        ("projection_mass", check_projection_mass),
        ("merge_agreement", check_merge_agreement),
        ("merge_dominance", check_merge_dominance),
        ("critic_ce_gradient", check_critic_ce_gradient),
        ("policy_objective_gradient", check_policy_objective_gradient),
        ("entropy_gradient", check_entropy_gradient),
        ("log_sum_exp", check_log_sum_exp),
        ("log_softmax", check_log_softmax),
        ("log_complement_cdf", check_log_complement_cdf),
        ("log_domain_extremes", check_log_domain_extremes),
        ("gaussian_mle", check_mle_against_grid),
        ("value_iteration", check_value_iteration),
    ]


def run_verify(checks=None) -> list[OracleReport]:
    """Execute every registered check and return the reports in order."""
    checks = default_checks() if checks is None else checks
    return [fn() for _, fn in checks]
