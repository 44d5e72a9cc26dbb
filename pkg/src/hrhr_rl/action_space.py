"""Discretized n-dimensional action space.

An action is one atom index per dimension; the actor emits an n x m
row-stochastic matrix from which those indices are sampled independently.
Atoms are placed uniformly on [low, high] inclusive of both endpoints, so
extreme (bang-bang) actions stay representable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidInputError

_ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ActionSpaceSpec:
    """n action dimensions, each discretized into m atoms on [low, high]."""

    n_dims: int
    m_atoms: int
    low: tuple[float, ...]
    high: tuple[float, ...]

    def __post_init__(self):
        if self.n_dims < 1:
            raise InvalidInputError("need at least one action dimension")
        if self.m_atoms < 2:
            raise InvalidInputError("need at least two atoms per dimension")
        if len(self.low) != self.n_dims or len(self.high) != self.n_dims:
            raise InvalidInputError("bounds length does not match n_dims")
        for lo, hi in zip(self.low, self.high):
            if not lo < hi:
                raise InvalidInputError(f"bound {lo} must be < {hi}")

    @classmethod
    def uniform(cls, n_dims: int, m_atoms: int, low: float, high: float):
        return cls(n_dims, m_atoms, (low,) * n_dims, (high,) * n_dims)

    @cached_property
    def atom_grid(self) -> np.ndarray:
        """(n, m) array of actuator values; row i spans [low[i], high[i]]."""
        steps = np.arange(self.m_atoms, dtype=np.float64) / (self.m_atoms - 1)
        lo = np.asarray(self.low, dtype=np.float64)[:, None]
        hi = np.asarray(self.high, dtype=np.float64)[:, None]
        grid = lo + steps[None, :] * (hi - lo)
        grid[:, -1] = hi[:, 0]
        grid.flags.writeable = False
        return grid


class ActionDistribution:
    """n x m matrix with one categorical distribution per row."""

    __slots__ = ("spec", "probs")

    def __init__(self, spec: ActionSpaceSpec, probs: np.ndarray):
        probs = np.asarray(probs, dtype=np.float64)
        if probs.shape != (spec.n_dims, spec.m_atoms):
            raise InvalidInputError(
                f"distribution shape {probs.shape} does not match "
                f"({spec.n_dims}, {spec.m_atoms})"
            )
        if not np.all(np.isfinite(probs)):
            raise InvalidInputError("non-finite probability")
        if np.any(probs < 0):
            raise InvalidInputError("negative probability")
        sums = probs.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > _ROW_SUM_TOL):
            raise InvalidInputError(f"row sums {sums} deviate from 1")
        self.spec = spec
        self.probs = probs


@dataclass(frozen=True)
class ActionSample:
    """One atom index per dimension (0-based); bijective with the one-hot
    matrix form."""

    spec: ActionSpaceSpec
    indices: tuple[int, ...]

    def __post_init__(self):
        if len(self.indices) != self.spec.n_dims:
            raise InvalidInputError("index count does not match n_dims")
        for idx in self.indices:
            if not 0 <= idx < self.spec.m_atoms:
                raise InvalidInputError(f"atom index {idx} out of range")

    def one_hot(self) -> np.ndarray:
        mat = np.zeros((self.spec.n_dims, self.spec.m_atoms), dtype=np.float64)
        mat[np.arange(self.spec.n_dims), list(self.indices)] = 1.0
        return mat


def sample_indices_batch(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one atom index per row of a (..., n, m) stack of row-stochastic
    matrices using a single uniform per row (inverse CDF).

    The uniform is scaled by the final CDF value, which both absorbs the
    rounding slack in the row sum and guarantees a zero-probability atom is
    never selected.
    """
    cdf = np.cumsum(probs, axis=-1)
    u = rng.random(probs.shape[:-1])[..., None] * cdf[..., -1:]
    return (cdf <= u).sum(axis=-1)


def sample(
    adist: ActionDistribution, rng: np.random.Generator
) -> tuple[ActionSample, float]:
    """Sample each dimension independently from its row. Returns the
    sample together with its log-probability under the matrix."""
    idx = sample_indices_batch(adist.probs, rng)
    rows = np.arange(adist.spec.n_dims)
    log_prob = float(np.sum(np.log(adist.probs[rows, idx])))
    return ActionSample(adist.spec, tuple(int(i) for i in idx)), log_prob


def decode(asample: ActionSample) -> np.ndarray:
    """Map atom indices to actuator values on the uniform grid."""
    grid = asample.spec.atom_grid
    return grid[np.arange(asample.spec.n_dims), list(asample.indices)].copy()


def entropy_rows(probs: np.ndarray) -> np.ndarray:
    """Summed per-row Shannon entropy (nats) of a (..., n, m) stack, with
    0 * log 0 taken as 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(probs > 0.0, probs * np.log(probs), 0.0)
    return -terms.sum(axis=(-2, -1))


def entropy(adist: ActionDistribution) -> float:
    """Action entropy of the full matrix; maximal value is n * log(m)."""
    return float(entropy_rows(adist.probs))


def max_entropy(spec: ActionSpaceSpec) -> float:
    """Upper bound on the action entropy, attained by all-uniform rows."""
    return spec.n_dims * float(np.log(spec.m_atoms))


def argmax_action(adist: ActionDistribution) -> ActionSample:
    """Per-row highest-probability atom; ties resolve to the lowest index
    so evaluation behavior is reproducible across platforms."""
    idx = np.argmax(adist.probs, axis=1)
    return ActionSample(adist.spec, tuple(int(i) for i in idx))
