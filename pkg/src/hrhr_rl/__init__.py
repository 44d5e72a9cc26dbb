"""Distributional reinforcement learning with discrete actions and twin
categorical critics, built for desk-scale high-risk-high-return tasks.

The package couples a row-stochastic discrete actor with two categorical
value critics merged by pointwise CDF maximization, an entropy-gated
exploration term, small verifiable environments, and brute-force oracles
used by the test suite.
"""

__version__ = "0.1.0"

from .errors import InvalidInputError, PoisonError

__all__ = ["InvalidInputError", "PoisonError", "__version__"]
