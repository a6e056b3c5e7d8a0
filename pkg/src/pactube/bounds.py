"""Sample-size calculus for scenario optimization.

A scenario program over m decision variables, built from K i.i.d. sampled
constraints, certifies that the returned optimum violates at most an
epsilon-fraction of the constraint distribution with confidence 1 - beta,
provided

    epsilon >= (2 / K) * (ln(1 / beta) + m).

This module inverts that inequality: given (epsilon, beta, m) it returns the
smallest admissible K, and given K it returns the tightest certified epsilon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "PacBudget",
    "TwoLevelBudget",
    "min_samples",
    "achieved_epsilon",
    "two_level_budget",
]

# Relative guard applied before ceil() so that exactly-integer quotients do
# not round up one extra sample from floating-point noise.
_CEIL_GUARD = 1e-12


def _check_unit_interval(name: str, value: float) -> None:
    if not (0.0 < value < 1.0):
        raise ValueError(f"{name} must lie in (0, 1), got {value}")


@dataclass(frozen=True)
class PacBudget:
    """Single-level accuracy/confidence budget.

    epsilon: admissible violated-constraint fraction, in (0, 1).
    beta: confidence parameter, in (0, 1).
    decision_dims: number of LP decision variables (coefficients plus the
        tube half-width), at least 1.
    """

    epsilon: float
    beta: float
    decision_dims: int

    def __post_init__(self) -> None:
        _check_unit_interval("epsilon", self.epsilon)
        _check_unit_interval("beta", self.beta)
        if self.decision_dims < 1:
            raise ValueError("decision_dims must be >= 1")

    def min_samples(self) -> int:
        return min_samples(self.epsilon, self.beta, self.decision_dims)


@dataclass(frozen=True)
class TwoLevelBudget:
    """Nested budget: (epsilon1, beta1) over time, (epsilon2, beta2) over inputs."""

    epsilon1: float
    beta1: float
    epsilon2: float
    beta2: float
    decision_dims: int

    def __post_init__(self) -> None:
        _check_unit_interval("epsilon1", self.epsilon1)
        _check_unit_interval("beta1", self.beta1)
        _check_unit_interval("epsilon2", self.epsilon2)
        _check_unit_interval("beta2", self.beta2)
        if self.decision_dims < 1:
            raise ValueError("decision_dims must be >= 1")

    def time_budget(self) -> PacBudget:
        return PacBudget(self.epsilon1, self.beta1, self.decision_dims)

    def input_budget(self) -> PacBudget:
        return PacBudget(self.epsilon2, self.beta2, self.decision_dims)


def min_samples(epsilon: float, beta: float, decision_dims: int) -> int:
    """Smallest K with epsilon >= (2/K)(ln(1/beta) + decision_dims).

    K - 1 is guaranteed to violate the inequality.
    """
    _check_unit_interval("epsilon", epsilon)
    _check_unit_interval("beta", beta)
    if decision_dims < 1:
        raise ValueError("decision_dims must be >= 1")
    raw = (2.0 / epsilon) * (math.log(1.0 / beta) + decision_dims)
    return max(1, math.ceil(raw * (1.0 - _CEIL_GUARD)))


def achieved_epsilon(num_samples: int, beta: float, decision_dims: int) -> float:
    """Tightest epsilon certified by num_samples i.i.d. scenario constraints."""
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    _check_unit_interval("beta", beta)
    if decision_dims < 1:
        raise ValueError("decision_dims must be >= 1")
    return (2.0 / num_samples) * (math.log(1.0 / beta) + decision_dims)


def two_level_budget(budget: TwoLevelBudget) -> tuple[int, int]:
    """Required (M time samples, N input samples) for a two-level budget."""
    m = min_samples(budget.epsilon1, budget.beta1, budget.decision_dims)
    n = min_samples(budget.epsilon2, budget.beta2, budget.decision_dims)
    return m, n
