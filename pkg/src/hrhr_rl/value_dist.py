"""Categorical value distributions on a fixed return grid.

Holds the support construction, softmax materialization of critic logits,
expectation and CDF queries, the shift-and-redistribute projection used to
build learning targets, the conservative twin-critic merge (pointwise CDF
maximum), the cross-entropy loss/gradient pair, and the log-domain
primitives that keep all of it finite when probabilities underflow.

All arithmetic here is float64 regardless of what produced the inputs;
the smoothing floor (1e-4 by default) sits near the float32 noise floor,
so 32-bit loss math would be meaningless.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidInputError

# Tolerance for "probabilities sum to one" checks at construction time.
_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ValueSupport:
    """The discretized return axis: n_atoms evenly spaced points from
    v_min to v_max inclusive."""

    v_min: float
    v_max: float
    n_atoms: int

    def __post_init__(self):
        if not (self.v_min < self.v_max):
            raise InvalidInputError(f"v_min {self.v_min} must be < v_max {self.v_max}")
        if self.n_atoms < 2:
            raise InvalidInputError("need at least two atoms")

    @property
    def delta_z(self) -> float:
        return (self.v_max - self.v_min) / (self.n_atoms - 1)

    @cached_property
    def atoms(self) -> np.ndarray:
        grid = self.v_min + self.delta_z * np.arange(self.n_atoms, dtype=np.float64)
        # Pin the endpoints exactly; cumulative rounding must not move them.
        grid[0] = self.v_min
        grid[-1] = self.v_max
        grid.flags.writeable = False
        return grid


class ValueDistribution:
    """Probability vector over the atoms of a ValueSupport.

    The cumulative distribution is computed once and carried with the
    object; operations defined in CDF space (the conservative merge)
    construct their result directly from a CDF so that CDF-level
    identities hold exactly rather than up to cumsum round-trip error.
    """

    __slots__ = ("support", "probs", "cdf")

    def __init__(
        self,
        support: ValueSupport,
        probs: np.ndarray,
        _cdf: np.ndarray | None = None,
    ):
        probs = np.asarray(probs, dtype=np.float64)
        if probs.shape != (support.n_atoms,):
            raise InvalidInputError(
                f"probability vector shape {probs.shape} does not match "
                f"{support.n_atoms} atoms"
            )
        if not np.all(np.isfinite(probs)):
            raise InvalidInputError("non-finite probability")
        if np.any(probs < 0):
            raise InvalidInputError("negative probability")
        total = float(probs.sum())
        if abs(total - 1.0) > _SUM_TOL:
            raise InvalidInputError(f"probabilities sum to {total!r}, not 1")
        self.support = support
        self.probs = probs
        self.cdf = np.cumsum(probs) if _cdf is None else _cdf

    @classmethod
    def from_cdf(cls, support: ValueSupport, cdf: np.ndarray) -> "ValueDistribution":
        """Build a distribution whose defining representation is the given
        nondecreasing CDF; probabilities are its first differences."""
        cdf = np.asarray(cdf, dtype=np.float64)
        probs = np.diff(cdf, prepend=0.0)
        return cls(support, probs, _cdf=cdf)


def _require_same_support(z1: ValueDistribution, z2: ValueDistribution):
    if z1.support != z2.support:
        raise InvalidInputError("distributions live on different supports")


def softmax_dist(logits: np.ndarray, support: ValueSupport) -> ValueDistribution:
    """Materialize critic logits into a categorical value distribution via
    a max-shifted softmax; safe for logit magnitudes far beyond exp range."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape != (support.n_atoms,):
        raise InvalidInputError(
            f"logit vector shape {logits.shape} does not match support"
        )
    if not np.all(np.isfinite(logits)):
        raise InvalidInputError("non-finite logit")
    shifted = np.exp(logits - logits.max())
    return ValueDistribution(support, shifted / shifted.sum())


def expectation(z: ValueDistribution) -> float:
    """Mean return of the distribution; always within [v_min, v_max]."""
    return float(np.dot(z.probs, z.support.atoms))


def project_batch(
    probs: np.ndarray,
    rewards: np.ndarray,
    gammas: np.ndarray,
    support: ValueSupport,
) -> np.ndarray:
    """Vectorized transport of a batch of distributions through
    r + gamma * z, clamped to the support, mass split linearly between the
    two neighboring atoms (an exact atom hit keeps all its mass).

    probs: (B, N); rewards, gammas: (B,). Returns (B, N).
    """
    probs = np.asarray(probs, dtype=np.float64)
    rewards = np.asarray(rewards, dtype=np.float64)
    gammas = np.asarray(gammas, dtype=np.float64)
    n = support.n_atoms
    tz = rewards[:, None] + gammas[:, None] * support.atoms[None, :]
    np.clip(tz, support.v_min, support.v_max, out=tz)
    pos = (tz - support.v_min) / support.delta_z
    np.clip(pos, 0.0, n - 1.0, out=pos)
    lower = np.floor(pos).astype(np.int64)
    upper = np.minimum(lower + 1, n - 1)
    frac = pos - lower
    out = np.zeros_like(probs)
    rows = np.arange(probs.shape[0])[:, None]
    np.add.at(out, (rows, lower), probs * (1.0 - frac))
    np.add.at(out, (rows, upper), probs * frac)
    return out


def bellman_project(
    z_next: ValueDistribution, r: float, gamma: float, support: ValueSupport
) -> ValueDistribution:
    """One-sample distributional backup: shift z_next by (r, gamma) and
    project back onto `support`. Callers pass gamma = 0 for terminal
    transitions so all mass lands at the clamped reward."""
    if not (0.0 <= gamma <= 1.0):
        raise InvalidInputError(f"gamma {gamma} outside [0, 1]")
    if z_next.support != support:
        raise InvalidInputError("projection target support differs from input support")
    out = project_batch(
        z_next.probs[None, :], np.array([r]), np.array([gamma]), support
    )
    return ValueDistribution(support, out[0])


def cdf_max_merge_batch(p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    """Batched conservative merge: probabilities whose CDF is the
    elementwise maximum of the two input CDFs. (B, N) in, (B, N) out."""
    if p1.shape != p2.shape:
        raise InvalidInputError("batch shape mismatch")
    if p1 is p2 or np.array_equal(p1, p2):
        return np.array(p1, dtype=np.float64, copy=True)
    cm = np.maximum(np.cumsum(p1, axis=-1), np.cumsum(p2, axis=-1))
    out = np.diff(cm, prepend=0.0, axis=-1)
    return out


def clipped_merge(z1: ValueDistribution, z2: ValueDistribution) -> ValueDistribution:
    """Merge two value distributions into the conservative one whose CDF
    pointwise dominates both (first-order stochastically smallest of the
    achievable envelopes). Merging a distribution with itself returns an
    identical copy."""
    _require_same_support(z1, z2)
    if np.array_equal(z1.probs, z2.probs):
        return ValueDistribution(z1.support, z1.probs.copy(), _cdf=z1.cdf.copy())
    cm = np.maximum(z1.cdf, z2.cdf)
    return ValueDistribution.from_cdf(z1.support, cm)


def log_sum_exp(xs: np.ndarray) -> float:
    """Max-shifted log of a sum of exponentials; finite for any finite
    input vector."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size == 0:
        raise InvalidInputError("empty vector")
    if not np.all(np.isfinite(xs)):
        raise InvalidInputError("non-finite entry")
    m = xs.max()
    return float(m + np.log(np.sum(np.exp(xs - m))))


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Log of the softmax computed without ever forming the softmax:
    x_j - max - log(sum exp(x - max))."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.size == 0:
        raise InvalidInputError("empty vector")
    if not np.all(np.isfinite(logits)):
        raise InvalidInputError("non-finite logit")
    m = logits.max(axis=-1, keepdims=True)
    shifted = logits - m
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def kl_ce_grad_target(
    z_target: ValueDistribution, pred_logits: np.ndarray
) -> tuple[float, np.ndarray]:
    """Cross-entropy between a fixed target distribution and the softmax
    of prediction logits, with its exact gradient in the logits.

    Loss is assembled from the log-softmax (never log of a softmax);
    gradient is softmax(pred) - target.
    """
    pred_logits = np.asarray(pred_logits, dtype=np.float64)
    if pred_logits.shape != (z_target.support.n_atoms,):
        raise InvalidInputError("logit vector does not match target support")
    log_probs = log_softmax(pred_logits)
    loss = -float(np.dot(z_target.probs, log_probs))
    grad = np.exp(log_probs) - z_target.probs
    return loss, grad


def log_complement_cdf(logits: np.ndarray, k: int, epsilon: float = 1e-4) -> float:
    """log(1 - (1 - epsilon) * rho_k) where rho_k is the CDF at the k-th
    atom (1-based) of the softmax of `logits`.

    Evaluated entirely in the log domain: the numerator splits into the
    epsilon-damped head (atoms 1..k) and the untouched tail (atoms k+1..N),
    so no near-zero difference is ever passed to log. k = n gives exactly
    log(epsilon).
    """
    logits = np.asarray(logits, dtype=np.float64)
    n = logits.shape[-1]
    if logits.ndim != 1 or n == 0:
        raise InvalidInputError("logits must be a non-empty vector")
    if not np.all(np.isfinite(logits)):
        raise InvalidInputError("non-finite logit")
    if not (1 <= k <= n):
        raise InvalidInputError(f"atom index {k} outside 1..{n}")
    if not (0.0 <= epsilon < 1.0):
        raise InvalidInputError(f"epsilon {epsilon} outside [0, 1)")
    if k == n:
        # rho_n = 1 identically, so the result is log(epsilon) by algebra.
        return float(np.log(epsilon)) if epsilon > 0.0 else -np.inf
    if epsilon == 0.0:
        numer = log_sum_exp(logits[k:])
    else:
        damped = np.concatenate([logits[:k] + np.log(epsilon), logits[k:]])
        numer = log_sum_exp(damped)
    return numer - log_sum_exp(logits)
