"""Gaussian-policy baseline and closed-form analytics for the two-band
reward region.

Three pieces live here: the maximum-likelihood analysis of a Gaussian
versus a discrete distribution fitted to the band region, a Monte Carlo
probe that measures which action region the policy gradient of a Gaussian
policy actually favors, and a compact likelihood-ratio policy-gradient
learner used to reproduce the trap-collapse behavior. The learner is a
plain Gaussian REINFORCE baseline, not a port of any larger algorithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .envs import HRHRLandscape
from .errors import InvalidInputError, PoisonError

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0


@dataclass(frozen=True)
class RewardRegion:
    """Two closed bands of half-width delta centered at -1 and +1."""

    delta: float

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise InvalidInputError(f"delta {self.delta} outside (0, 1)")

    def contains(self, a: float) -> bool:
        return abs(abs(a) - 1.0) <= self.delta


def region_log_likelihood(mu: float, sigma: float, region: RewardRegion) -> float:
    """Integral of the Gaussian log-density over the band region, in
    closed form."""
    delta = region.delta
    return -4.0 * delta * math.log(math.sqrt(2.0 * math.pi) * sigma) - (
        2.0 * delta / (3.0 * sigma**2)
    ) * (3.0 * (1.0 + mu**2) + delta**2)


def region_log_likelihood_grad(
    mu: float, sigma: float, region: RewardRegion
) -> tuple[float, float]:
    """Closed-form first-order conditions (d/dmu, d/dsigma)."""
    delta = region.delta
    dmu = -4.0 * delta * mu / sigma**2
    dsigma = -4.0 * delta / sigma + (4.0 * delta / (3.0 * sigma**3)) * (
        3.0 * (1.0 + mu**2) + delta**2
    )
    return dmu, dsigma


def gaussian_mle_fit(region: RewardRegion) -> tuple[float, float]:
    """Numerically maximize the band-region log-likelihood over (mu,
    sigma). Returns (mu, sigma squared)."""

    def neg_ll(params):
        mu, log_sigma = params
        return -region_log_likelihood(mu, math.exp(log_sigma), region)

    result = optimize.minimize(
        neg_ll,
        x0=np.array([0.3, math.log(1.2)]),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 10_000},
    )
    if not result.success:
        raise RuntimeError(f"likelihood optimization failed: {result.message}")
    mu, log_sigma = result.x
    return float(mu), float(math.exp(log_sigma) ** 2)


def discrete_mle_fit(region: RewardRegion, atoms: np.ndarray) -> np.ndarray:
    """Maximum-likelihood categorical distribution over an action grid
    restricted to the band region: uniform on the atoms inside, zero
    elsewhere."""
    atoms = np.asarray(atoms, dtype=np.float64)
    inside = np.array([region.contains(float(a)) for a in atoms])
    count = int(inside.sum())
    if count == 0:
        raise InvalidInputError("no grid atom intersects the reward region")
    probs = np.zeros(atoms.shape[0], dtype=np.float64)
    probs[inside] = 1.0 / count
    return probs


@dataclass
class GaussianPolicy:
    """Linear mean head on the state plus a free log-std vector, clamped
    to keep the density proper."""

    state_dim: int
    action_dim: int
    init_log_std: float = 0.0
    action_low: float = -2.0
    action_high: float = 2.0
    weights: np.ndarray = field(init=False)
    bias: np.ndarray = field(init=False)
    log_std: np.ndarray = field(init=False)

    def __post_init__(self):
        self.weights = np.zeros((self.state_dim, self.action_dim), dtype=np.float64)
        self.bias = np.zeros(self.action_dim, dtype=np.float64)
        self.log_std = np.full(self.action_dim, self.init_log_std, dtype=np.float64)

    def mean(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weights + self.bias

    def std(self) -> np.ndarray:
        return np.exp(np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX))

    def sample(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return self.mean(x) + self.std() * rng.standard_normal(self.action_dim)


@dataclass(frozen=True)
class BaselineConfig:
    lr: float = 0.02
    entropy_bonus: float = 1e-3
    episodes: int = 4000
    init_log_std: float = 0.0  # sigma starts at exp(0) = 1
    return_baseline_decay: float = 0.99


def train_baseline(
    env,
    config: BaselineConfig,
    rng: np.random.Generator,
    on_episode=None,
) -> tuple[GaussianPolicy, np.ndarray]:
    """Likelihood-ratio policy gradient with a running return baseline and
    a small entropy bonus on a one-step environment.

    Returns the trained policy and the per-episode return trace;
    `on_episode(index, policy, episode_return)` is invoked after every
    update when given.
    """
    spec = env.spec()
    policy = GaussianPolicy(
        spec.state_dim,
        spec.action_dim,
        init_log_std=config.init_log_std,
        action_low=spec.action_low,
        action_high=spec.action_high,
    )
    returns = np.zeros(config.episodes, dtype=np.float64)
    running = 0.0
    for ep in range(config.episodes):
        x = env.reset(rng)
        mean = policy.mean(x)
        std = policy.std()
        action = mean + std * rng.standard_normal(spec.action_dim)
        clipped = np.clip(action, spec.action_low, spec.action_high)
        _, reward, _, _ = env.step(clipped, rng)
        returns[ep] = reward

        advantage = reward - running
        running = (
            config.return_baseline_decay * running
            + (1.0 - config.return_baseline_decay) * reward
        )
        # Score function of the unclipped Gaussian; the clamp only guards
        # the environment call.
        z = (action - mean) / std
        g_mean = advantage * z / std
        g_log_std = advantage * (z**2 - 1.0)
        g_log_std += config.entropy_bonus  # d entropy / d log_std = 1
        policy.weights += config.lr * np.outer(x, g_mean)
        policy.bias += config.lr * g_mean
        policy.log_std += config.lr * g_log_std
        policy.log_std = np.clip(policy.log_std, LOG_STD_MIN, LOG_STD_MAX)
        if not (
            np.all(np.isfinite(policy.weights))
            and np.all(np.isfinite(policy.bias))
            and np.all(np.isfinite(policy.log_std))
        ):
            raise PoisonError(f"baseline parameters diverged at episode {ep}")
        if on_episode is not None:
            on_episode(ep, policy, float(reward))
    return policy, returns


@dataclass(frozen=True)
class ProbeReport:
    """Monte Carlo estimates of the alignment between the policy gradient
    and the unit directions toward each region's centroid."""

    toward_risky: float
    toward_risky_se: float
    toward_stable: float
    toward_stable_se: float
    difference: float  # toward_stable - toward_risky
    difference_se: float


def preference_probe(
    landscape: HRHRLandscape,
    mu: np.ndarray,
    sigma: float,
    n_samples: int,
    rng: np.random.Generator,
) -> ProbeReport:
    """Estimate which region the Gaussian policy gradient prefers.

    Draws actions from N(mu, sigma^2 I), forms the per-sample mean-shift
    score (a - mu) / sigma^2 weighted by the expected return, and projects
    it onto the unit directions from mu toward each region's centroid.
    Standard errors come from the same per-sample projections.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    if mu.shape[0] != landscape.dim:
        raise InvalidInputError("policy mean dimension does not match landscape")
    if sigma <= 0:
        raise InvalidInputError("sigma must be positive")
    samples = mu[None, :] + sigma * rng.standard_normal((n_samples, landscape.dim))
    q = landscape.q_values(samples)
    score = (samples - mu[None, :]) / sigma**2

    def direction(region) -> np.ndarray:
        d = region.centroid() - mu
        norm = np.linalg.norm(d)
        if norm == 0.0:
            raise InvalidInputError("policy mean sits on a region centroid")
        return d / norm

    d_risky = direction(landscape.risky_region)
    d_stable = direction(landscape.stable_region)
    proj_risky = (score @ d_risky) * q
    proj_stable = (score @ d_stable) * q
    diff = proj_stable - proj_risky
    scale = math.sqrt(n_samples)
    return ProbeReport(
        toward_risky=float(proj_risky.mean()),
        toward_risky_se=float(proj_risky.std(ddof=1) / scale),
        toward_stable=float(proj_stable.mean()),
        toward_stable_se=float(proj_stable.std(ddof=1) / scale),
        difference=float(diff.mean()),
        difference_se=float(diff.std(ddof=1) / scale),
    )
