"""Desk-scale environments.

Three tasks, all cheap enough to solve and verify exhaustively:

* a one-step bandit whose central actions are catastrophic while two
  narrow side bands pay a stochastic bonus (the minimal trap scenario),
* a configurable synthetic return landscape with a small "grain" of top
  returns buried inside an otherwise poor region, used to classify
  high-risk-high-return structure numerically,
* a short chain task whose per-state landscape reuses the band/trap
  pattern, exercising discounted multi-step backups.

Environments are value types; all randomness comes from the generator the
caller passes in, so replaying a seed replays trajectories exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

Outcome = tuple[float, int | None, float]


@dataclass(frozen=True)
class EnvSpec:
    """Static facts the harness needs about an environment."""

    state_dim: int
    action_dim: int
    action_low: float
    action_high: float
    horizon: int
    reward_bound: float

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidInputError("horizon must be >= 1")
        if self.reward_bound <= 0:
            raise InvalidInputError("reward bound must be positive")


def normalize_reward(raw: float, bound: float) -> float:
    """Scale a raw reward into [-1, 1] by the declared supremum, keeping
    discounted returns within 1 / (1 - gamma)."""
    if bound <= 0:
        raise InvalidInputError(f"reward bound {bound} must be positive")
    return raw / bound


def in_trap_cheese_region(action: float, delta: float) -> bool:
    """Membership in the two closed reward bands centered at -1 and +1."""
    return (1.0 - delta) <= abs(action) <= (1.0 + delta)


def trap_cheese_step(
    action: float, delta: float, rng: np.random.Generator
) -> tuple[float, bool]:
    """One pull of the trap bandit: inside a band the payoff is 1.0 or 0.0
    with equal probability (expected 0.5); everywhere else it is -1.0.
    Episodes always terminate."""
    if not (0.0 < delta < 1.0):
        raise InvalidInputError(f"delta {delta} outside (0, 1)")
    if in_trap_cheese_region(action, delta):
        reward = 1.0 if rng.random() < 0.5 else 0.0
    else:
        reward = -1.0
    return reward, True


@dataclass(frozen=True)
class TrapCheeseEnv:
    """Single-state, single-step bandit wrapper around trap_cheese_step."""

    delta: float = 0.2
    action_low: float = -2.0
    action_high: float = 2.0

    def spec(self) -> EnvSpec:
        return EnvSpec(
            state_dim=1,
            action_dim=1,
            action_low=self.action_low,
            action_high=self.action_high,
            horizon=1,
            reward_bound=1.0,
        )

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        return np.ones(1, dtype=np.float64)

    def step(
        self, action: np.ndarray, rng: np.random.Generator
    ) -> tuple[np.ndarray, float, bool, bool]:
        reward, done = trap_cheese_step(float(action[0]), self.delta, rng)
        return np.ones(1, dtype=np.float64), reward, done, False


@dataclass(frozen=True)
class Box:
    """Axis-aligned closed box."""

    low: tuple[float, ...]
    high: tuple[float, ...]

    def __post_init__(self):
        if len(self.low) != len(self.high):
            raise InvalidInputError("box bounds length mismatch")
        for lo, hi in zip(self.low, self.high):
            if not lo < hi:
                raise InvalidInputError(f"box bound {lo} must be < {hi}")

    @property
    def dim(self) -> int:
        return len(self.low)

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        lo = np.asarray(self.low)
        hi = np.asarray(self.high)
        return np.all((points >= lo) & (points <= hi), axis=-1)

    def centroid(self) -> np.ndarray:
        return (np.asarray(self.low) + np.asarray(self.high)) / 2.0

    def overlaps(self, other: "Box") -> bool:
        """Interior overlap; boxes that only share a boundary (a set of
        measure zero) do not count."""
        return all(
            lo1 < hi2 and lo2 < hi1
            for lo1, hi1, lo2, hi2 in zip(self.low, self.high, other.low, other.high)
        )


@dataclass(frozen=True)
class Grain:
    """Small hypercube of top returns; `diameter` is its side length."""

    center: tuple[float, ...]
    diameter: float
    height: float

    def box(self) -> Box:
        half = self.diameter / 2.0
        return Box(
            tuple(c - half for c in self.center),
            tuple(c + half for c in self.center),
        )


@dataclass(frozen=True)
class HRHRLandscape:
    """Synthetic expected-return surface over a 1-D or 2-D action box.

    Returns are `base_level` outside both regions, `risky_level` inside
    the risky region except on its grains (which pay `Grain.height`), and
    `stable_level` on the stable region. Grain rewards realize as 0 or
    twice the height with equal probability; all other returns are
    deterministic.
    """

    bounds: Box
    base_level: float
    risky_region: Box
    risky_level: float
    stable_region: Box
    stable_level: float
    grains: tuple[Grain, ...]
    grain_max_diameter: float

    def __post_init__(self):
        if self.bounds.dim not in (1, 2):
            raise InvalidInputError("landscapes are 1-D or 2-D")
        if self.risky_region.dim != self.bounds.dim or self.stable_region.dim != self.bounds.dim:
            raise InvalidInputError("region dimension mismatch")
        if self.risky_region.overlaps(self.stable_region):
            raise InvalidInputError("risky and stable regions must be disjoint")
        for grain in self.grains:
            if grain.diameter > self.grain_max_diameter + 1e-12:
                raise InvalidInputError(
                    f"grain diameter {grain.diameter} exceeds "
                    f"{self.grain_max_diameter}"
                )
            gb = grain.box()
            inside = self.risky_region.contains(
                np.array([gb.low, gb.high], dtype=np.float64)
            )
            if not bool(inside.all()):
                raise InvalidInputError("grains must lie inside the risky region")

    @property
    def dim(self) -> int:
        return self.bounds.dim

    def q_values(self, points: np.ndarray) -> np.ndarray:
        """Expected return at each point; points is (k, dim) or (dim,)."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        q = np.full(points.shape[0], self.base_level, dtype=np.float64)
        q[self.risky_region.contains(points)] = self.risky_level
        q[self.stable_region.contains(points)] = self.stable_level
        for grain in self.grains:
            q[grain.box().contains(points)] = grain.height
        return q

    def q(self, point) -> float:
        return float(self.q_values(np.atleast_1d(np.asarray(point, dtype=np.float64)))[0])

    def sample_reward(self, point, rng: np.random.Generator) -> float:
        """Realize one stochastic reward draw at a point."""
        point = np.atleast_1d(np.asarray(point, dtype=np.float64))
        for grain in self.grains:
            if bool(grain.box().contains(point)[0]):
                return 2.0 * grain.height if rng.random() < 0.5 else 0.0
        return self.q(point)

    def scaled(self, c: float) -> "HRHRLandscape":
        """The same geometry with every return level multiplied by c > 0."""
        if c <= 0:
            raise InvalidInputError("scale must be positive")
        return HRHRLandscape(
            bounds=self.bounds,
            base_level=c * self.base_level,
            risky_region=self.risky_region,
            risky_level=c * self.risky_level,
            stable_region=self.stable_region,
            stable_level=c * self.stable_level,
            grains=tuple(
                Grain(g.center, g.diameter, c * g.height) for g in self.grains
            ),
            grain_max_diameter=self.grain_max_diameter,
        )


@dataclass(frozen=True)
class HrhrVerdict:
    """Numerical evaluation of the two defining inequalities."""

    is_hrhr: bool
    sup_risky: float
    sup_stable: float
    mean_risky: float
    mean_stable: float


def _grid_points(bounds: Box, resolution: int) -> np.ndarray:
    axes = [
        np.linspace(lo, hi, resolution) for lo, hi in zip(bounds.low, bounds.high)
    ]
    if len(axes) == 1:
        return axes[0][:, None]
    xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def is_hrhr(landscape: HRHRLandscape, resolution: int = 1001) -> HrhrVerdict:
    """Classify a landscape by evaluating both region suprema (grid
    maxima) and both uniform-expectation integrals (Riemann sums over the
    grid points inside each region; error is O(1/resolution)).

    The landscape qualifies when the risky region's supremum is strictly
    higher while its mean is strictly lower.
    """
    if resolution < 100:
        raise InvalidInputError("resolution must be at least 100 points per axis")
    points = _grid_points(landscape.bounds, resolution)
    q = landscape.q_values(points)
    risky_mask = landscape.risky_region.contains(points)
    stable_mask = landscape.stable_region.contains(points)
    if not risky_mask.any() or not stable_mask.any():
        raise InvalidInputError("a region contains no grid points")
    sup_risky = float(q[risky_mask].max())
    sup_stable = float(q[stable_mask].max())
    mean_risky = float(q[risky_mask].mean())
    mean_stable = float(q[stable_mask].mean())
    return HrhrVerdict(
        is_hrhr=(sup_risky > sup_stable) and (mean_risky < mean_stable),
        sup_risky=sup_risky,
        sup_stable=sup_stable,
        mean_risky=mean_risky,
        mean_stable=mean_stable,
    )


def trap_cheese_landscape(delta: float = 0.3) -> HRHRLandscape:
    """The trap bandit's expected-return surface as a landscape: two
    grains of 0.5 at +-1 on a -1 floor."""
    return HRHRLandscape(
        bounds=Box((-2.0,), (2.0,)),
        base_level=-1.0,
        risky_region=Box((-1.5,), (1.5,)),
        risky_level=-1.0,
        stable_region=Box((1.6,), (2.0,)),
        stable_level=-1.0,
        grains=(
            Grain((-1.0,), 2.0 * delta, 0.5),
            Grain((1.0,), 2.0 * delta, 0.5),
        ),
        grain_max_diameter=2.0 * delta,
    )


def probe_landscape(delta: float = 0.2) -> HRHRLandscape:
    """Purpose-built 1-D scenario for gradient-preference probes: the
    risky region [0, 1] holds one grain of height 1 hugging the origin on
    an otherwise -0.8 floor; the stable region just left of it pays a
    flat 0.3. A microscopic gap keeps the closed regions from sharing the
    origin."""
    return HRHRLandscape(
        bounds=Box((-2.0,), (2.0,)),
        base_level=0.0,
        risky_region=Box((0.0,), (1.0,)),
        risky_level=-0.8,
        stable_region=Box((-1.0,), (-1e-9,)),
        stable_level=0.3,
        grains=(Grain((delta / 2.0,), delta, 1.0),),
        grain_max_diameter=delta,
    )


@dataclass
class ChainEnv:
    """Fixed-length chain with a band/trap action landscape at every
    state.

    The observation is a one-hot state indicator. Actions inside the
    state's band advance the chain (reward 0); at the last state they pay
    the stochastic bonus (1.0 or 0.0, equal odds). Actions inside the trap
    band end the episode at -1. Anything else leaves the state unchanged,
    subject to the horizon cap (reported as truncation, not termination).
    """

    length: int = 5
    band_delta: float = 0.3
    trap_delta: float = 0.3
    action_low: float = -2.0
    action_high: float = 2.0
    horizon: int = 40

    def __post_init__(self):
        self._state = 0
        self._step_count = 0

    def spec(self) -> EnvSpec:
        return EnvSpec(
            state_dim=self.length,
            action_dim=1,
            action_low=self.action_low,
            action_high=self.action_high,
            horizon=self.horizon,
            reward_bound=1.0,
        )

    def band_center(self, state: int) -> float:
        # Alternate the rewarded band between +1 and -1 along the chain so
        # the policy must actually condition on the state.
        return 1.0 if state % 2 == 0 else -1.0

    def outcomes(self, state: int, action: float) -> list[Outcome]:
        """Transition branches for (state, action): (probability,
        next state or None, reward). Shared by step() and by dynamic
        programming over the discretized action grid."""
        center = self.band_center(state)
        if abs(action) <= self.trap_delta:
            return [(1.0, None, -1.0)]
        if abs(action - center) <= self.band_delta:
            if state == self.length - 1:
                return [(0.5, None, 1.0), (0.5, None, 0.0)]
            return [(1.0, state + 1, 0.0)]
        return [(1.0, state, 0.0)]

    def _one_hot(self, state: int) -> np.ndarray:
        obs = np.zeros(self.length, dtype=np.float64)
        obs[state] = 1.0
        return obs

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self._state = 0
        self._step_count = 0
        return self._one_hot(0)

    def step(
        self, action: np.ndarray, rng: np.random.Generator
    ) -> tuple[np.ndarray, float, bool, bool]:
        branches = self.outcomes(self._state, float(action[0]))
        if len(branches) == 1:
            nxt, reward = branches[0][1], branches[0][2]
        else:
            draw = rng.random()
            acc = 0.0
            nxt, reward = branches[-1][1], branches[-1][2]
            for p, s, r in branches:
                acc += p
                if draw < acc:
                    nxt, reward = s, r
                    break
        self._step_count += 1
        terminated = nxt is None
        truncated = not terminated and self._step_count >= self.horizon
        if not terminated:
            self._state = nxt
        return self._one_hot(self._state), reward, terminated, truncated
