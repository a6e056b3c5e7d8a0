"""Safety verdicts from a learned tube.

Given a learned model z and half-width xi, the tube [z - xi, z + xi] must be
shown disjoint from the unsafe output set before the certified statement
("unsafe time is at most epsilon * T, at the stated confidence") applies.
Emptiness is decided by a rigor-tagged range computation:

  * input-independent polynomial models: exact univariate extrema by
    recursive derivative root isolation (certified);
  * input-dependent polynomial models over a box (balls are boxed first):
    interval arithmetic with dyadic subdivision (certified, conservative);
  * anything else: dense grid extrema (grid-approximate, flagged).

When the tube does touch the unsafe set, an over-approximated contact time
tau is computed instead and the budget becomes epsilon * T + tau.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .bounds import PacBudget, TwoLevelBudget
from .sampling import Ball, Box, InputSet, PointSet, Stream, rng_stream
from .templates import FrozenTemplate, LearnedModel, PolynomialTemplate

__all__ = [
    "UnsafeSet",
    "TubeRange",
    "Verdict",
    "ConfidenceStatement",
    "ProvenanceMismatchError",
    "tube_range",
    "check_safety",
    "unsafe_time_budget",
]

ROOT_TOL = 1e-9  # width of isolated root intervals, in time units
SUBDIV_GAIN = 1e-3
SUBDIV_DEPTH = 20
GRID_TIMES = 100_000
GRID_INPUTS = 1_000


class ProvenanceMismatchError(ValueError):
    """Model provenance does not support the requested verdict scope."""


@dataclass(frozen=True)
class UnsafeSet:
    """Finite union of real intervals, normalized disjoint and sorted."""

    intervals: tuple

    @staticmethod
    def from_intervals(pairs) -> "UnsafeSet":
        cleaned = sorted((float(a), float(b)) for a, b in pairs if a <= b)
        merged: list[tuple[float, float]] = []
        for a, b in cleaned:
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        return UnsafeSet(tuple(merged))

    @staticmethod
    def above(u: float) -> "UnsafeSet":
        return UnsafeSet(((float(u), math.inf),))

    @staticmethod
    def below(u: float) -> "UnsafeSet":
        return UnsafeSet(((-math.inf, float(u)),))

    @staticmethod
    def empty() -> "UnsafeSet":
        return UnsafeSet(())

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def intersects(self, low: float, high: float) -> bool:
        return any(a <= high and low <= b for a, b in self.intervals)

    def inflate(self, amount: float) -> "UnsafeSet":
        return UnsafeSet.from_intervals(
            (a - amount, b + amount) for a, b in self.intervals
        )

    def contains_value(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        hit = np.zeros(y.shape, dtype=bool)
        for a, b in self.intervals:
            hit |= (y >= a) & (y <= b)
        return hit

    def describe(self) -> str:
        if self.is_empty:
            return "none"
        parts = []
        for a, b in self.intervals:
            if b == math.inf:
                parts.append(f"y >= {a:g}")
            elif a == -math.inf:
                parts.append(f"y <= {b:g}")
            else:
                parts.append(f"{a:g} <= y <= {b:g}")
        return " or ".join(parts)


@dataclass(frozen=True)
class TubeRange:
    """Enclosure of z(t) +/- xi over the whole verification domain."""

    low: float
    high: float
    rigor: str  # "certified" | "grid-approximate"


@dataclass(frozen=True)
class ConfidenceStatement:
    scope: str  # "one-trajectory" | "listed-inputs" | "all-inputs"
    epsilon: float
    beta: float
    epsilon2: float | None = None
    beta2: float | None = None


@dataclass(frozen=True)
class Verdict:
    kind: str  # "safe-with-budget" | "budgeted-with-tau"
    unsafe_time_bound: float
    confidence: ConfidenceStatement
    rigor: str
    tau: float = 0.0
    tube: TubeRange | None = None
    unsafe: UnsafeSet | None = None
    horizon: float | None = None

    def summary(self) -> str:
        c = self.confidence
        if c.scope == "all-inputs":
            head = (
                f"with confidence >= {1 - c.beta2:.15g}, a measure >= "
                f"{1 - c.epsilon2:g} of inputs each spend at most "
                f"{self.unsafe_time_bound:g} time units in the unsafe set "
                f"(confidence >= {1 - c.beta:.15g} per input)"
            )
        else:
            head = (
                f"time spent in the unsafe set is at most "
                f"{self.unsafe_time_bound:g}, with confidence >= {1 - c.beta:.15g}"
            )
        tag = "" if self.kind == "safe-with-budget" else f" [tube contact tau={self.tau:g}]"
        return f"{head} ({self.rigor}){tag}"


# ---------------------------------------------------------------------------
# univariate polynomial range machinery (coefficients in s on [0, 1])


def _poly_eval(coeffs: np.ndarray, s):
    out = np.zeros_like(np.asarray(s, dtype=float))
    for c in coeffs[::-1]:
        out = out * s + c
    return out


def _poly_derivative(coeffs: np.ndarray) -> np.ndarray:
    if coeffs.shape[0] <= 1:
        return np.zeros(1)
    return coeffs[1:] * np.arange(1, coeffs.shape[0])


def _trim(coeffs: np.ndarray) -> np.ndarray:
    nz = np.nonzero(coeffs)[0]
    return coeffs[: nz[-1] + 1] if nz.size else coeffs[:1]


def _bisect_root(coeffs, lo, hi, f_lo, tol):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = float(_poly_eval(coeffs, mid))
        if f_mid == 0.0:
            return mid
        if (f_lo < 0) == (f_mid < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _poly_roots_unit(coeffs: np.ndarray, tol: float) -> list[float]:
    """Real roots of the polynomial in [0, 1] by recursive root isolation.

    Sign changes of the polynomial are bracketed between its critical
    points (the recursively-computed roots of its derivative) and refined
    by bisection to width tol.
    """
    coeffs = _trim(np.asarray(coeffs, dtype=float))
    deg = coeffs.shape[0] - 1
    if deg == 0:
        return []
    if deg == 1:
        r = -coeffs[0] / coeffs[1]
        return [float(r)] if 0.0 <= r <= 1.0 else []
    crit = _poly_roots_unit(_poly_derivative(coeffs), tol)
    knots = sorted({0.0, 1.0, *crit})
    roots: list[float] = []
    for lo, hi in zip(knots[:-1], knots[1:]):
        f_lo = float(_poly_eval(coeffs, lo))
        f_hi = float(_poly_eval(coeffs, hi))
        if f_lo == 0.0:
            roots.append(lo)
        if f_lo * f_hi < 0.0:
            roots.append(_bisect_root(coeffs, lo, hi, f_lo, tol))
    f_end = float(_poly_eval(coeffs, 1.0))
    if f_end == 0.0:
        roots.append(1.0)
    return sorted(set(roots))


def _poly_range_unit(coeffs: np.ndarray) -> tuple[float, float]:
    """Exact min/max of the polynomial on [0, 1] via critical points."""
    crit = _poly_roots_unit(_poly_derivative(_trim(coeffs)), 1e-13)
    candidates = np.array([0.0, 1.0, *crit])
    vals = _poly_eval(np.asarray(coeffs, dtype=float), candidates)
    return float(vals.min()), float(vals.max())


def _model_time_poly(model: LearnedModel, x0=None) -> np.ndarray | None:
    """Coefficients of z as a univariate polynomial in s, or None."""
    tpl = model.template
    if isinstance(tpl, PolynomialTemplate):
        if tpl.input_dimension == 0:
            return tpl.time_coefficients(model.coefficients)
        if x0 is not None:
            return tpl.time_coefficients(model.coefficients, x0)
        return None
    if isinstance(tpl, FrozenTemplate) and isinstance(tpl.base, PolynomialTemplate):
        scale = float(model.coefficients[0])
        base = tpl.base
        if base.input_dimension == 0:
            return scale * base.time_coefficients(tpl.base_coefficients)
        if x0 is not None:
            return scale * base.time_coefficients(tpl.base_coefficients, x0)
    return None


# ---------------------------------------------------------------------------
# interval arithmetic over a box, for input-dependent polynomial models


def _interval_power(lo: float, hi: float, p: int) -> tuple[float, float]:
    if p == 0:
        return 1.0, 1.0
    a, b = lo**p, hi**p
    if p % 2 == 0 and lo < 0.0 < hi:
        return 0.0, max(a, b)
    return min(a, b), max(a, b)


def _monomial_bounds(exps: np.ndarray, c: np.ndarray, box: np.ndarray):
    """Interval of sum_l c_l * prod_v x_v^e over the box (n_vars x 2)."""
    lo_tot, hi_tot = 0.0, 0.0
    for l in range(exps.shape[0]):
        m_lo, m_hi = 1.0, 1.0
        for v in range(exps.shape[1]):
            p = int(exps[l, v])
            if p == 0:
                continue
            p_lo, p_hi = _interval_power(box[v, 0], box[v, 1], p)
            cand = (m_lo * p_lo, m_lo * p_hi, m_hi * p_lo, m_hi * p_hi)
            m_lo, m_hi = min(cand), max(cand)
        cl = float(c[l])
        if cl >= 0:
            lo_tot += cl * m_lo
            hi_tot += cl * m_hi
        else:
            lo_tot += cl * m_hi
            hi_tot += cl * m_lo
    return lo_tot, hi_tot


def _interval_extremum(exps, c, box0: np.ndarray, maximize: bool):
    """Branch-and-bound extremum of the polynomial over a box.

    Dyadic subdivision of the widest axis, refining the box that attains
    the current bound, until the bound improves by less than SUBDIV_GAIN
    or the box has been split SUBDIV_DEPTH times. The result is always a
    one-sided enclosure (>= true max / <= true min).
    """
    sign = -1.0 if maximize else 1.0

    def bound_of(box):
        lo, hi = _monomial_bounds(exps, c, box)
        return hi if maximize else lo

    heap = [(sign * bound_of(box0), 0, 0, box0)]
    counter = 1
    current = bound_of(box0)
    while True:
        top_bound, depth, _, box = heap[0]
        if depth >= SUBDIV_DEPTH:
            break
        heapq.heappop(heap)
        widths = box[:, 1] - box[:, 0]
        axis = int(np.argmax(widths))
        if widths[axis] <= 0:
            heapq.heappush(heap, (top_bound, SUBDIV_DEPTH, counter, box))
            counter += 1
            continue
        mid = 0.5 * (box[axis, 0] + box[axis, 1])
        for half in ((box[axis, 0], mid), (mid, box[axis, 1])):
            child = box.copy()
            child[axis] = half
            heapq.heappush(heap, (sign * bound_of(child), depth + 1, counter, child))
            counter += 1
        new_bound = sign * heap[0][0]
        if abs(current - new_bound) < SUBDIV_GAIN:
            current = new_bound
            break
        current = new_bound
    return sign * heap[0][0]


# ---------------------------------------------------------------------------
# tube ranges


def _grid_inputs(input_set: InputSet, count: int) -> np.ndarray:
    rng = rng_stream(0, Stream.GRID)
    return input_set.sample(rng, count)


def _grid_range(model: LearnedModel, inputs: np.ndarray | None, T: float):
    ts = np.linspace(0.0, T, GRID_TIMES)
    if inputs is None or model.template.input_dimension == 0:
        z = model.predict(None, ts)
        return float(np.min(z)), float(np.max(z))
    lo, hi = math.inf, -math.inf
    for x0 in inputs:
        z = model.predict(x0, ts)
        lo = min(lo, float(np.min(z)))
        hi = max(hi, float(np.max(z)))
    return lo, hi


def tube_range(model: LearnedModel, input_scope, T: float) -> TubeRange:
    """Enclosure of the tube over [0, T] and the given input scope.

    input_scope: None (input-independent model), a single input vector, or
    an InputSet. Conservatism is permitted; unsoundness is not (in
    certified mode).
    """
    tpl = model.template
    single = input_scope is None or isinstance(
        input_scope, (list, tuple, np.ndarray)
    )
    if single:
        x0 = None if input_scope is None else np.asarray(input_scope, dtype=float)
        poly = _model_time_poly(model, x0)
        if poly is not None:
            lo, hi = _poly_range_unit(poly)
            return TubeRange(lo - model.xi, hi + model.xi, "certified")
        ts = np.linspace(0.0, T, GRID_TIMES)
        z = model.predict(x0, ts)
        return TubeRange(
            float(np.min(z)) - model.xi, float(np.max(z)) + model.xi,
            "grid-approximate",
        )

    input_set: InputSet = input_scope
    if tpl.input_dimension == 0:
        poly = _model_time_poly(model)
        if poly is not None:
            lo, hi = _poly_range_unit(poly)
            return TubeRange(lo - model.xi, hi + model.xi, "certified")
        lo, hi = _grid_range(model, None, T)
        return TubeRange(lo - model.xi, hi + model.xi, "grid-approximate")

    base_poly = None
    scale = 1.0
    if isinstance(tpl, PolynomialTemplate):
        base_poly, coeffs = tpl, model.coefficients
    elif isinstance(tpl, FrozenTemplate) and isinstance(tpl.base, PolynomialTemplate):
        base_poly, coeffs = tpl.base, tpl.base_coefficients
        scale = float(model.coefficients[0])
    if base_poly is not None and isinstance(input_set, (Box, Ball, PointSet)):
        bb = input_set.bounding_box()
        box = np.column_stack([bb.lower, bb.upper]).astype(float)
        box = np.vstack([box, [0.0, 1.0]])  # time axis, already scaled
        c = scale * np.asarray(coeffs, dtype=float)
        hi = _interval_extremum(base_poly.exponents, c, box, maximize=True)
        lo = _interval_extremum(base_poly.exponents, c, box, maximize=False)
        return TubeRange(lo - model.xi, hi + model.xi, "certified")

    inputs = _grid_inputs(input_set, GRID_INPUTS)
    lo, hi = _grid_range(model, inputs, T)
    return TubeRange(lo - model.xi, hi + model.xi, "grid-approximate")


# ---------------------------------------------------------------------------
# contact-time budget and verdicts


def unsafe_time_budget(
    model: LearnedModel, uns: UnsafeSet, T: float, epsilon: float, x0=None
) -> tuple[float, float]:
    """Over-approximate tube/unsafe contact time tau; returns (tau, eps*T + tau).

    For polynomial-in-time models the contact set {t : z(t) in Uns inflated
    by xi} is measured by isolating the boundary crossings of z; isolation
    interval widths are added to tau so it stays an over-approximation.
    """
    if uns.is_empty:
        return 0.0, epsilon * T
    inflated = uns.inflate(model.xi)
    poly = _model_time_poly(model, x0)
    if poly is not None:
        tol_s = ROOT_TOL / max(T, 1.0)
        tau = 0.0
        slack = 0.0
        for a, b in inflated.intervals:
            knots = {0.0, 1.0}
            for threshold in (a, b):
                if math.isfinite(threshold):
                    shifted = poly.copy()
                    shifted[0] -= threshold
                    rts = _poly_roots_unit(shifted, tol_s)
                    knots.update(rts)
                    slack += len(rts) * tol_s
            pts = sorted(knots)
            for lo, hi in zip(pts[:-1], pts[1:]):
                mid = 0.5 * (lo + hi)
                v = float(_poly_eval(poly, mid))
                if a <= v <= b:
                    tau += hi - lo
        tau = min((tau + slack) * T, T)
        return tau, epsilon * T + tau
    # grid fallback: fraction of grid steps in contact, plus one-step slack
    ts = np.linspace(0.0, T, GRID_TIMES)
    z = np.asarray(model.predict(x0, ts), dtype=float)
    hit = inflated.contains_value(z)
    step = T / (GRID_TIMES - 1)
    tau = min(float(np.count_nonzero(hit)) * step + step, T)
    return tau, epsilon * T + tau


def _statement_for(budget, scope: str) -> ConfidenceStatement:
    if scope == "all-inputs":
        if not isinstance(budget, TwoLevelBudget):
            raise ProvenanceMismatchError(
                "all-inputs verdicts need a two-level budget"
            )
        return ConfidenceStatement(
            scope=scope,
            epsilon=budget.epsilon1,
            beta=budget.beta1,
            epsilon2=budget.epsilon2,
            beta2=budget.beta2,
        )
    if scope in ("one-trajectory", "listed-inputs"):
        if isinstance(budget, PacBudget):
            return ConfidenceStatement(
                scope=scope, epsilon=budget.epsilon, beta=budget.beta
            )
        if isinstance(budget, TwoLevelBudget):
            # per-input statement uses the time-level pair only
            return ConfidenceStatement(
                scope=scope, epsilon=budget.epsilon1, beta=budget.beta1
            )
        raise ProvenanceMismatchError(f"unsupported budget: {budget!r}")
    raise ValueError(f"unknown scope: {scope!r}")


def check_safety(
    model: LearnedModel,
    uns: UnsafeSet,
    scope,
    budget=None,
    T: float | None = None,
) -> Verdict:
    """Safety verdict for the model's tube against the unsafe set.

    scope: None or a single input vector (one-trajectory), a list of input
    vectors (listed-inputs), or an InputSet (all-inputs). The budget
    defaults to the model's provenance budget and must match the scope.
    """
    if budget is None:
        if model.provenance is None or model.provenance.budget is None:
            raise ProvenanceMismatchError(
                "model carries no budget; pass one explicitly"
            )
        budget = model.provenance.budget
    if T is None:
        T = model.template.horizon

    if isinstance(scope, InputSet):
        scope_name = "all-inputs"
        rng = tube_range(model, scope, T)
        x0_for_tau = None
    elif scope is not None and np.ndim(scope) == 2:
        scope_name = "listed-inputs"
        ranges = [tube_range(model, x0, T) for x0 in np.asarray(scope, dtype=float)]
        rigor = (
            "certified"
            if all(r.rigor == "certified" for r in ranges)
            else "grid-approximate"
        )
        rng = TubeRange(
            min(r.low for r in ranges), max(r.high for r in ranges), rigor
        )
        x0_for_tau = np.asarray(scope, dtype=float)[0]
    else:
        scope_name = "one-trajectory"
        rng = tube_range(model, scope, T)
        x0_for_tau = None if scope is None else np.asarray(scope, dtype=float)

    stmt = _statement_for(budget, scope_name)
    if uns.is_empty or not uns.intersects(rng.low, rng.high):
        return Verdict(
            kind="safe-with-budget",
            unsafe_time_bound=stmt.epsilon * T,
            confidence=stmt,
            rigor=rng.rigor,
            tube=rng,
            unsafe=uns,
            horizon=T,
        )

    if scope_name == "all-inputs":
        # worst contact time over a deterministic input grid
        inputs = _grid_inputs(scope, min(GRID_INPUTS, 200))
        tau = max(
            unsafe_time_budget(model, uns, T, stmt.epsilon, x0)[0] for x0 in inputs
        )
        bound = stmt.epsilon * T + tau
        rigor = "grid-approximate"
    else:
        tau, bound = unsafe_time_budget(model, uns, T, stmt.epsilon, x0_for_tau)
        rigor = rng.rigor
    return Verdict(
        kind="budgeted-with-tau",
        unsafe_time_bound=min(bound, T + tau),
        confidence=stmt,
        rigor=rigor,
        tau=tau,
        tube=rng,
        unsafe=uns,
        horizon=T,
    )
