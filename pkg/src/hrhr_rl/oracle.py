"""Brute-force reference implementations used only by tests and the
verify command.

Everything here is written for clarity over speed (plain loops, O(N^2)
where that is the obvious formulation) and deliberately shares no
algorithm code with the production modules: production modules never
import this one, and this one operates on primitive sequences so that
agreement between the two routes is meaningful evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidInputError


@dataclass
class OracleReport:
    """Outcome of one oracle-vs-candidate comparison."""

    name: str
    oracle_value: float
    candidate_value: float
    deviation: float
    tolerance: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = self.deviation <= self.tolerance

    def row(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status}  {self.name}: deviation {self.deviation:.3e} "
            f"(tolerance {self.tolerance:.1e})"
        )


def naive_project(
    probs: Sequence[float],
    r: float,
    gamma: float,
    v_min: float,
    v_max: float,
) -> list[float]:
    """Transport a categorical value distribution through r + gamma*z and
    redistribute every atom's mass onto the fixed grid with the linear
    interpolation kernel, as a direct double loop.

    The shifted point is clamped into [v_min, v_max] before splitting.
    """
    n = len(probs)
    if n < 2:
        raise InvalidInputError("need at least two atoms")
    dz = (v_max - v_min) / (n - 1)
    atoms = [v_min + i * dz for i in range(n)]
    out = [0.0] * n
    for j in range(n):
        tz = r + gamma * atoms[j]
        if tz < v_min:
            tz = v_min
        elif tz > v_max:
            tz = v_max
        for i in range(n):
            w = 1.0 - abs(tz - atoms[i]) / dz
            if w > 0.0:
                out[i] += w * probs[j]
    return out


def naive_merge(p1: Sequence[float], p2: Sequence[float]) -> list[float]:
    """Conservative merge of two categorical distributions on one grid:
    per-index maximum of the two cumulative distributions, mapped back to
    probabilities by first differences. Explicit running sums."""
    if len(p1) != len(p2):
        raise InvalidInputError("length mismatch")
    c1 = []
    c2 = []
    s1 = s2 = 0.0
    for a, b in zip(p1, p2):
        s1 += a
        s2 += b
        c1.append(s1)
        c2.append(s2)
    out = []
    prev = 0.0
    for a, b in zip(c1, c2):
        c = a if a >= b else b
        out.append(c - prev)
        prev = c
    return out


def fd_gradient(
    f: Callable[[np.ndarray], float],
    params: np.ndarray,
    step: float = 1e-6,
) -> np.ndarray:
    """Central finite differences of a scalar function, one coordinate at
    a time. `step` must lie in [1e-7, 1e-4]."""
    if not (1e-7 <= step <= 1e-4):
        raise InvalidInputError(f"step {step} outside [1e-7, 1e-4]")
    params = np.asarray(params, dtype=np.float64)
    grad = np.zeros_like(params)
    flat = params.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        up = f(params)
        flat[i] = orig - step
        down = f(params)
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * step)
    return grad


Outcome = tuple[float, int | None, float]  # (probability, next state or None, reward)


def value_iteration(
    n_states: int,
    actions: Sequence[float],
    outcomes: Callable[[int, float], Sequence[Outcome]],
    gamma: float,
    tol: float = 1e-10,
    max_sweeps: int = 100_000,
) -> tuple[np.ndarray, np.ndarray]:
    """Tabular value iteration over a finite state set and a discretized
    action grid.

    `outcomes(state, action)` yields (probability, next_state, reward)
    branches; next_state None means termination. Returns the optimal
    values and the greedy action indices (ties broken toward the lowest
    index). Raises RuntimeError if the fixed point is not reached.
    """
    values = np.zeros(n_states, dtype=np.float64)
    policy = np.zeros(n_states, dtype=np.int64)
    for _ in range(max_sweeps):
        delta = 0.0
        for s in range(n_states):
            best = -math.inf
            best_a = 0
            for ai, a in enumerate(actions):
                q = 0.0
                for prob, nxt, reward in outcomes(s, a):
                    cont = 0.0 if nxt is None else gamma * values[nxt]
                    q += prob * (reward + cont)
                if q > best:
                    best = q
                    best_a = ai
            delta = max(delta, abs(best - values[s]))
            values[s] = best
            policy[s] = best_a
        if delta < tol:
            return values, policy
    raise RuntimeError(f"value iteration did not converge in {max_sweeps} sweeps")


def _region_log_likelihood(mu: float, sigma: float, delta: float) -> float:
    # Integral of the Gaussian log-density over the two bands centered at
    # -1 and +1 with half-width delta, in closed form.
    return -4.0 * delta * math.log(math.sqrt(2.0 * math.pi) * sigma) - (
        2.0 * delta / (3.0 * sigma**2)
    ) * (3.0 * (1.0 + mu**2) + delta**2)


def _grid_argmax(
    delta: float, mu_grid: Sequence[float], sigma_grid: Sequence[float]
) -> tuple[float, float]:
    best = -math.inf
    best_mu = best_sigma = 0.0
    for mu in mu_grid:
        for sigma in sigma_grid:
            ll = _region_log_likelihood(float(mu), float(sigma), delta)
            if ll > best:
                best = ll
                best_mu = float(mu)
                best_sigma = float(sigma)
    return best_mu, best_sigma


def mle_grid_search(delta: float, refine_rounds: int = 3) -> tuple[float, float]:
    """Grid maximizer of the band-region Gaussian log-likelihood over
    mu in [-2, 2], sigma in (0.1, 3].

    A coarse scan followed by `refine_rounds` local refinements, each
    shrinking the window tenfold around the incumbent. Returns
    (mu, sigma squared).
    """
    mu_lo, mu_hi = -2.0, 2.0
    sg_lo, sg_hi = 0.1, 3.0
    mu = sigma = 0.0
    for _ in range(refine_rounds + 1):
        mu, sigma = _grid_argmax(
            delta,
            np.linspace(mu_lo, mu_hi, 81),
            np.linspace(sg_lo, sg_hi, 81),
        )
        mu_span = (mu_hi - mu_lo) / 10.0
        sg_span = (sg_hi - sg_lo) / 10.0
        mu_lo, mu_hi = mu - mu_span, mu + mu_span
        sg_lo, sg_hi = max(0.05, sigma - sg_span), sigma + sg_span
    return mu, sigma**2


def region_log_likelihood(mu: float, sigma: float, delta: float) -> float:
    """Closed-form band-region log-likelihood (exposed for local-maximum
    spot checks)."""
    return _region_log_likelihood(mu, sigma, delta)
