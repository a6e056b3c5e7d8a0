"""Linearly-parameterized model templates.

A template is an ordered basis (phi_1, ..., phi_k) of functions of an input
vector x0 and a time t; a model is the linear combination
w(c, x0, t) = sum_l c_l * phi_l(x0, t). Polynomial templates use all
monomials in (x0_1, ..., x0_n, t) up to a total degree, ordered graded
lexicographically. Inside basis evaluation the time variable is rescaled to
t / horizon so that high powers of t stay O(1) and the downstream linear
programs remain well conditioned; coefficients are reported in the scaled
basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ModelTemplate",
    "PolynomialTemplate",
    "FrozenTemplate",
    "CustomTemplate",
    "LearnedModel",
    "Provenance",
    "poly_time_template",
    "poly_input_time_template",
    "evaluate",
    "freeze",
]


class CoefficientMismatchError(ValueError):
    """Coefficient vector length does not match the template's basis size."""


def _as_points(x0, t, input_dimension: int):
    """Broadcast (x0, t) to arrays of shape (P, n) and (P,)."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if input_dimension == 0:
        x_arr = np.zeros((t_arr.shape[0], 0))
        return x_arr, t_arr
    x_arr = np.asarray(x0, dtype=float)
    if x_arr.ndim == 1:
        x_arr = np.broadcast_to(x_arr, (t_arr.shape[0], x_arr.shape[0]))
    if x_arr.shape[0] != t_arr.shape[0]:
        t_arr = np.broadcast_to(t_arr, (x_arr.shape[0],))
    if x_arr.shape[1] != input_dimension:
        raise ValueError(
            f"input has dimension {x_arr.shape[1]}, template expects {input_dimension}"
        )
    return x_arr, t_arr


class ModelTemplate:
    """Common surface for all template kinds.

    Subclasses provide `basis_matrix`, evaluating the k basis functions at a
    batch of (x0, t) points. Templates are immutable after construction and
    safe to share between threads.
    """

    k: int
    input_dimension: int
    horizon: float
    description: str
    is_polynomial: bool

    def basis_matrix(self, x0s: np.ndarray, ts: np.ndarray) -> np.ndarray:
        """Basis values at P points: x0s (P, n), ts (P,) -> (P, k)."""
        raise NotImplementedError

    @property
    def decision_dims(self) -> int:
        """LP decision-variable count: k coefficients plus the half-width."""
        return self.k + 1

    def evaluate(self, c, x0, t):
        """w(c, x0, t); scalar in, scalar out; arrays broadcast pointwise."""
        c = np.asarray(c, dtype=float)
        if c.shape != (self.k,):
            raise CoefficientMismatchError(
                f"expected {self.k} coefficients, got {c.shape}"
            )
        scalar = np.isscalar(t) or np.asarray(t).ndim == 0
        x_arr, t_arr = _as_points(x0, t, self.input_dimension)
        out = self.basis_matrix(x_arr, t_arr) @ c
        return float(out[0]) if scalar and out.shape[0] == 1 else out

    def design_matrix(self, inputs: np.ndarray, times: np.ndarray) -> np.ndarray:
        """Basis values on the full grid: (N, n) x (M,) -> (N*M, k), i-major."""
        inputs = np.asarray(inputs, dtype=float)
        times = np.asarray(times, dtype=float)
        n_in, m_t = inputs.shape[0], times.shape[0]
        if self.input_dimension == 0:
            block = self.basis_matrix(np.zeros((m_t, 0)), times)
            return np.tile(block, (n_in, 1))
        xs = np.repeat(inputs, m_t, axis=0)
        ts = np.tile(times, n_in)
        return self.basis_matrix(xs, ts)

    def coefficient_scales(self) -> np.ndarray:
        """Per-coefficient box scale: coefficient l is bounded by U_c * scale_l.

        Basis functions that were rescaled for conditioning (time divided by
        the horizon) get proportionally wider boxes, so the feasible function
        class is the same as with unscaled basis functions and a uniform box.
        """
        return np.ones(self.k)

    def freeze(self, c) -> "FrozenTemplate":
        """Collapse to a single-basis template equal to w(c, ., .)."""
        c = np.asarray(c, dtype=float)
        if c.shape != (self.k,):
            raise CoefficientMismatchError(
                f"expected {self.k} coefficients, got {c.shape}"
            )
        return FrozenTemplate(base=self, base_coefficients=c)


def _graded_lex_exponents(n_vars: int, degree: int) -> np.ndarray:
    """All exponent tuples of total degree <= degree, graded lex order."""
    rows = []
    for total in range(degree + 1):
        level = []
        for combo in combinations_with_replacement(range(n_vars), total):
            e = [0] * n_vars
            for v in combo:
                e[v] += 1
            level.append(tuple(e))
        rows.extend(sorted(level))
    return np.array(rows, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class PolynomialTemplate(ModelTemplate):
    """Monomials in (x0_1..x0_n, t/horizon) up to a total degree."""

    input_dimension: int
    degree: int
    horizon: float = 1.0
    exponents: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        if self.input_dimension < 0:
            raise ValueError("input_dimension must be >= 0")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        object.__setattr__(
            self,
            "exponents",
            _graded_lex_exponents(self.input_dimension + 1, self.degree),
        )

    @property
    def k(self) -> int:
        return self.exponents.shape[0]

    @property
    def is_polynomial(self) -> bool:
        return True

    @property
    def description(self) -> str:
        if self.input_dimension == 0:
            head = f"poly_time(degree={self.degree})"
        else:
            head = f"poly_input_time(degree={self.degree}, n={self.input_dimension})"
        return f"{head}; time scaled by 1/{self.horizon:g}; graded-lex monomial order"

    def basis_matrix(self, x0s: np.ndarray, ts: np.ndarray) -> np.ndarray:
        s = np.asarray(ts, dtype=float) / self.horizon
        variables = np.column_stack([np.asarray(x0s, dtype=float), s])  # (P, n+1)
        # power table per variable up to its maximum exponent, then product
        out = np.ones((variables.shape[0], self.k))
        for v in range(variables.shape[1]):
            exps = self.exponents[:, v]
            max_e = int(exps.max())
            if max_e == 0:
                continue
            powers = np.empty((variables.shape[0], max_e + 1))
            powers[:, 0] = 1.0
            for p in range(1, max_e + 1):
                powers[:, p] = powers[:, p - 1] * variables[:, v]
            out *= powers[:, exps]
        return out

    def coefficient_scales(self) -> np.ndarray:
        # monomial with time exponent q was divided by horizon**q
        return np.asarray(self.horizon, dtype=float) ** self.exponents[:, -1]

    def time_coefficients(self, c, x0=None) -> np.ndarray:
        """Collapse to univariate coefficients in s = t/horizon at a fixed x0.

        Returns q with w(c, x0, t) = sum_p q_p * s**p.
        """
        c = np.asarray(c, dtype=float)
        if c.shape != (self.k,):
            raise CoefficientMismatchError(
                f"expected {self.k} coefficients, got {c.shape}"
            )
        q = np.zeros(self.degree + 1)
        if self.input_dimension == 0:
            x_part = np.ones(self.k)
        else:
            x0 = np.asarray(x0, dtype=float)
            x_part = np.prod(
                x0[None, :] ** self.exponents[:, :-1], axis=1
            )
        t_exps = self.exponents[:, -1]
        np.add.at(q, t_exps, c * x_part)
        return q


@dataclass(frozen=True, eq=False)
class FrozenTemplate(ModelTemplate):
    """Single-basis template whose only basis function is a fitted model.

    Downstream LPs over a frozen template have one decision variable (the
    half-width alone), since the lone coefficient is fixed at 1.
    """

    base: ModelTemplate
    base_coefficients: np.ndarray

    @property
    def k(self) -> int:
        return 1

    @property
    def input_dimension(self) -> int:
        return self.base.input_dimension

    @property
    def horizon(self) -> float:
        return self.base.horizon

    @property
    def is_polynomial(self) -> bool:
        return self.base.is_polynomial

    @property
    def description(self) -> str:
        return f"frozen({self.base.description})"

    def basis_matrix(self, x0s: np.ndarray, ts: np.ndarray) -> np.ndarray:
        vals = self.base.basis_matrix(x0s, ts) @ self.base_coefficients
        return vals[:, None]


@dataclass(frozen=True, eq=False)
class CustomTemplate(ModelTemplate):
    """User-supplied basis functions phi(x0, t) -> float.

    Flagged non-polynomial: range verification for models over a custom
    template falls back to grid evaluation.
    """

    functions: tuple
    input_dimension: int
    horizon: float = 1.0
    name: str = "custom"

    @property
    def k(self) -> int:
        return len(self.functions)

    @property
    def is_polynomial(self) -> bool:
        return False

    @property
    def description(self) -> str:
        return f"{self.name}(k={self.k}); non-polynomial basis"

    def basis_matrix(self, x0s: np.ndarray, ts: np.ndarray) -> np.ndarray:
        cols = []
        for phi in self.functions:
            col = np.array(
                [phi(x0s[p], float(ts[p])) for p in range(ts.shape[0])], dtype=float
            )
            cols.append(col)
        return np.column_stack(cols)


def poly_time_template(degree: int, horizon: float = 1.0) -> PolynomialTemplate:
    """Input-independent basis {1, s, ..., s^degree} with s = t/horizon."""
    return PolynomialTemplate(input_dimension=0, degree=degree, horizon=horizon)


def poly_input_time_template(
    n: int, degree: int, horizon: float = 1.0
) -> PolynomialTemplate:
    """All monomials in (x0_1..x0_n, s) of total degree <= degree."""
    if n < 1:
        raise ValueError("n must be >= 1; use poly_time_template for n = 0")
    return PolynomialTemplate(input_dimension=n, degree=degree, horizon=horizon)


def evaluate(template: ModelTemplate, c, x0, t):
    return template.evaluate(c, x0, t)


def freeze(template: ModelTemplate, c) -> FrozenTemplate:
    return template.freeze(c)


@dataclass(frozen=True)
class Provenance:
    """How a model was learned: sample sizes, bounds, seed, budget."""

    M: int
    N: int
    U_c: float
    U_xi: float
    seed: int | None = None
    budget: object | None = None  # PacBudget | TwoLevelBudget | None (pilot fit)
    pilot_M: int | None = None
    pilot_N: int | None = None


@dataclass(frozen=True, eq=False)
class LearnedModel:
    """A fitted template: coefficients plus certified tube half-width."""

    template: ModelTemplate
    coefficients: np.ndarray
    xi: float
    provenance: Provenance | None = None

    def __post_init__(self) -> None:
        c = np.asarray(self.coefficients, dtype=float)
        object.__setattr__(self, "coefficients", c)
        if c.shape != (self.template.k,):
            raise CoefficientMismatchError(
                f"expected {self.template.k} coefficients, got {c.shape}"
            )
        if not (self.xi >= 0.0):
            raise ValueError("xi must be nonnegative")

    def predict(self, x0, t):
        """Model trajectory z(t) at the given input."""
        return self.template.evaluate(self.coefficients, x0, t)
