"""Scenario linear programs and their deterministic simplex solver.

The fitting problem is a minimax fit: choose coefficients c and half-width
xi minimizing xi subject to |w(c, x0_i, t_j) - y_ij| <= xi at every datum,
with box bounds |c_l| <= U_c and 0 <= xi <= U_xi. The constraint matrix has
2*N*M rows and k+1 columns; rows vastly outnumber columns, so the solver is
a revised bounded-variable primal simplex that keeps the slack part of the
basis implicit: at any iteration at most k+1 slacks are nonbasic, and every
linear solve reduces to a (k+1)-sized system on those "tight" rows. Bland's
smallest-index rule makes the pivot sequence deterministic and cycle-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import PacBudget, TwoLevelBudget, min_samples
from .sampling import Dataset, InputSet, Stream, collect_dataset, sample_inputs, sample_times
from .templates import FrozenTemplate, LearnedModel, ModelTemplate, Provenance

__all__ = [
    "LinearProgram",
    "LpSolution",
    "ModelDomainError",
    "InsufficientSamplesError",
    "SolverStallError",
    "build_lp",
    "solve_lp",
    "learn",
    "staged_learn",
]

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-10


class ModelDomainError(ValueError):
    """A basis function evaluated to a non-finite value at a data point."""


class InsufficientSamplesError(ValueError):
    """Dataset smaller than the sample bound required by the budget."""


class SolverStallError(RuntimeError):
    """Simplex exceeded its iteration cap."""


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """min xi over (c, xi) s.t. +/-(phi_ij . c - y_ij) <= xi, box bounds.

    phi: (N*M, k) basis values, i-major row order; y: (N*M,) observations.
    The materialized constraint matrix interleaves rows per datum, '+'
    before '-'.
    """

    phi: np.ndarray
    y: np.ndarray
    U_c: float
    U_xi: float
    # per-coefficient box, |c_l| <= c_bounds[l]; defaults to a uniform U_c box
    c_bounds: np.ndarray | None = None

    def coefficient_bounds(self) -> np.ndarray:
        if self.c_bounds is None:
            return np.full(self.num_coefficients, self.U_c)
        return np.asarray(self.c_bounds, dtype=float)

    @property
    def num_coefficients(self) -> int:
        return self.phi.shape[1]

    @property
    def num_rows(self) -> int:
        return 2 * self.phi.shape[0]

    @property
    def num_variables(self) -> int:
        return self.num_coefficients + 1

    def constraint_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """(A, b) with A x <= b over x = (c, xi); rows interleaved +,-."""
        p, k = self.phi.shape
        A = np.empty((2 * p, k + 1))
        A[0::2, :k] = self.phi
        A[1::2, :k] = -self.phi
        A[:, k] = -1.0
        b = np.empty(2 * p)
        b[0::2] = self.y
        b[1::2] = -self.y
        return A, b


@dataclass(frozen=True, eq=False)
class LpSolution:
    coefficients: np.ndarray
    xi: float
    status: str  # "optimal" | "bound-infeasible"
    iterations: int
    max_residual: float


def build_lp(
    ds: Dataset, template: ModelTemplate, U_c: float, U_xi: float
) -> LinearProgram:
    """Assemble the scenario LP from a dataset and a template."""
    if U_c <= 0 or U_xi <= 0:
        raise ValueError("U_c and U_xi must be positive")
    if template.input_dimension not in (0, ds.input_dimension):
        raise ValueError(
            f"template input dimension {template.input_dimension} does not "
            f"match dataset dimension {ds.input_dimension}"
        )
    phi = template.design_matrix(ds.inputs, ds.times)
    if not np.all(np.isfinite(phi)):
        flat = int(np.argwhere(~np.isfinite(phi))[0, 0])
        l_bad = int(np.argwhere(~np.isfinite(phi))[0, 1])
        i_bad, j_bad = divmod(flat, ds.num_times)
        raise ModelDomainError(
            f"basis function {l_bad} non-finite at input {i_bad}, time index {j_bad}"
        )
    return LinearProgram(
        phi=phi,
        y=ds.values.reshape(-1),
        U_c=U_c,
        U_xi=U_xi,
        c_bounds=U_c * template.coefficient_scales(),
    )


def solve_lp(lp: LinearProgram, max_iterations: int | None = None) -> LpSolution:
    """Bounded-variable primal simplex with Bland's rule.

    Coefficients are free variables (their boxes become explicit constraint
    rows, so free basics never have to leave the basis); only xi carries
    variable bounds. The xi upper bound is relaxed internally so the
    all-slack start at c = 0 is feasible; if the optimum then exceeds U_xi
    the program is reported bound-infeasible (the only way these LPs can be
    infeasible).
    """
    A, b = lp.constraint_matrix()
    k = lp.num_coefficients
    n = k + 1
    cb = lp.coefficient_bounds()
    if k:
        # box rows: +c_l <= B_l and -c_l <= B_l, zero in the xi column
        box = np.zeros((2 * k, n))
        box[0::2, :k] = np.eye(k)
        box[1::2, :k] = -np.eye(k)
        A = np.vstack([A, box])
        b = np.concatenate([b, np.repeat(cb, 2)])
    m = A.shape[0]
    if max_iterations is None:
        max_iterations = 50 * m

    lower = np.full(n, -np.inf)
    upper = np.full(n, np.inf)
    free_var = np.ones(n, dtype=bool)
    lower[k] = 0.0
    # relaxed xi cap: large enough that c = 0 is feasible
    upper[k] = max(lp.U_xi, (float(np.max(np.abs(lp.y))) if lp.y.size else 0.0) + 1.0)
    free_var[k] = False
    cost = np.zeros(n)
    cost[k] = 1.0

    # nonbasic structural start: coefficients free at zero, xi at its cap
    x_struct = np.zeros(n)
    x_struct[k] = upper[k]
    at_upper = np.zeros(n, dtype=bool)
    at_upper[k] = True

    basis = np.arange(n, n + m)  # all slacks basic; slack r has index n + r
    is_basic_struct = np.zeros(n, dtype=bool)
    slack_basic = np.ones(m, dtype=bool)
    x_basic = b - A @ x_struct  # slack values

    def tight_rows_and_struct():
        rows = np.where(~slack_basic)[0]
        positions = np.where(basis < n)[0]
        return rows, positions

    def small_matrix(rows, positions):
        return A[np.ix_(rows, basis[positions])]

    def recompute_basics(rows, positions):
        """Solve for basic values from scratch (numerical refresh)."""
        v = b - A @ np.where(is_basic_struct, 0.0, x_struct * 1.0)
        # structural basics contribute via the small system on tight rows
        if positions.size:
            M_small = small_matrix(rows, positions)
            z_t = np.linalg.solve(M_small, v[rows])
        else:
            z_t = np.zeros(0)
        x_new = np.empty(m)
        w = A[:, basis[positions]] @ z_t if positions.size else np.zeros(m)
        for idx, p in enumerate(positions):
            x_new[p] = z_t[idx]
        slack_positions = np.where(basis >= n)[0]
        slack_rows = basis[slack_positions] - n
        x_new[slack_positions] = v[slack_rows] - w[slack_rows]
        return x_new

    iterations = 0
    refresh_every = 1
    while True:
        if iterations >= max_iterations:
            raise SolverStallError(
                f"simplex exceeded {max_iterations} iterations on "
                f"{m}x{n} program"
            )
        rows, positions = tight_rows_and_struct()
        # dual prices vanish on rows whose slack is basic; solve the small
        # transposed system for the rest
        if positions.size:
            M_small = small_matrix(rows, positions)
            try:
                y_t = np.linalg.solve(M_small.T, cost[basis[positions]])
            except np.linalg.LinAlgError as exc:
                raise SolverStallError(f"singular working basis: {exc}") from exc
        else:
            y_t = np.zeros(0)

        # reduced costs: structural nonbasic, then nonbasic slacks (at 0)
        entering = -1
        direction_sign = 0.0
        red = cost - (A[rows] if rows.size else A[:0]).T @ y_t
        for j in range(n):
            if is_basic_struct[j]:
                continue
            d_j = red[j]
            if free_var[j]:
                if d_j < -FEAS_TOL:
                    entering, direction_sign = j, 1.0
                    break
                if d_j > FEAS_TOL:
                    entering, direction_sign = j, -1.0
                    break
            elif (not at_upper[j]) and d_j < -FEAS_TOL:
                entering, direction_sign = j, 1.0
                break
            elif at_upper[j] and d_j > FEAS_TOL:
                entering, direction_sign = j, -1.0
                break
        if entering < 0 and rows.size:
            d_slack = -y_t  # slack reduced costs on tight rows
            eligible = rows[d_slack < -FEAS_TOL]
            if eligible.size:
                entering = n + int(eligible.min())
                direction_sign = 1.0
        if entering < 0:
            break  # optimal

        # FTRAN: direction z = B^-1 * (column of entering variable)
        if entering < n:
            col = A[:, entering]
            col_rows = col[rows]
        else:
            col = None
            r0 = entering - n
            col_rows = (rows == r0).astype(float)
        if positions.size:
            z_t = np.linalg.solve(small_matrix(rows, positions), col_rows)
            w_full = A[:, basis[positions]] @ z_t
        else:
            z_t = np.zeros(0)
            w_full = np.zeros(m)
        z = np.empty(m)
        for idx, p in enumerate(positions):
            z[p] = z_t[idx]
        slack_positions = np.where(basis >= n)[0]
        slack_rows = basis[slack_positions] - n
        if entering < n:
            z[slack_positions] = col[slack_rows] - w_full[slack_rows]
        else:
            z[slack_positions] = (slack_rows == r0).astype(float) - w_full[slack_rows]

        # ratio test: entering moves by t >= 0; basics move by -sign * t * z
        move = direction_sign * z
        basic_lower = np.where(basis < n, lower[np.minimum(basis, n - 1)], 0.0)
        basic_upper = np.where(basis < n, upper[np.minimum(basis, n - 1)], np.inf)
        limits = np.full(m, np.inf)
        pos_mask = move > PIVOT_TOL
        neg_mask = move < -PIVOT_TOL
        limits[pos_mask] = (x_basic[pos_mask] - basic_lower[pos_mask]) / move[pos_mask]
        limits[neg_mask] = (x_basic[neg_mask] - basic_upper[neg_mask]) / move[neg_mask]
        own_range = (upper[entering] - lower[entering]) if entering < n else np.inf
        t_block = float(limits.min()) if m else np.inf
        t_star = min(max(t_block, 0.0), own_range)
        if not np.isfinite(t_star):
            raise SolverStallError("unbounded direction in a bounded program")

        if own_range <= t_block:
            # bound flip: entering jumps to its opposite bound
            x_basic = x_basic - move * own_range
            at_upper[entering] = not at_upper[entering]
            x_struct[entering] = upper[entering] if at_upper[entering] else lower[entering]
        else:
            blocking = np.where(limits <= t_star + FEAS_TOL)[0]
            leave_pos = int(blocking[np.argmin(basis[blocking])])
            leaving = int(basis[leave_pos])
            x_basic = x_basic - move * t_star
            enter_value = (
                x_struct[entering] + direction_sign * t_star
                if entering < n
                else t_star
            )
            # leaving variable lands on the bound that blocked it
            if leaving < n:
                is_basic_struct[leaving] = False
                at_upper[leaving] = move[leave_pos] < 0
                x_struct[leaving] = (
                    upper[leaving] if at_upper[leaving] else lower[leaving]
                )
            else:
                slack_basic[leaving - n] = False
            if entering < n:
                is_basic_struct[entering] = True
            else:
                slack_basic[entering - n] = True
            basis[leave_pos] = entering
            x_basic[leave_pos] = enter_value

        iterations += 1
        if iterations % refresh_every == 0:
            rows, positions = tight_rows_and_struct()
            x_basic = recompute_basics(rows, positions)

    # read out structural values (after a final numerical refresh)
    x = x_struct.copy()
    rows, positions = tight_rows_and_struct()
    x_basic = recompute_basics(rows, positions)
    for p in positions:
        x[basis[p]] = x_basic[p]
    coeffs = x[:k]
    xi = float(x[k])
    residuals = lp.phi @ coeffs - lp.y
    max_residual = float(np.max(np.abs(residuals))) if residuals.size else 0.0
    status = "optimal" if xi <= lp.U_xi + FEAS_TOL else "bound-infeasible"
    return LpSolution(
        coefficients=coeffs,
        xi=min(xi, lp.U_xi) if status == "optimal" else xi,
        status=status,
        iterations=iterations,
        max_residual=max_residual,
    )


def _required_sizes(budget, decision_dims: int) -> tuple[int, int | None]:
    if isinstance(budget, TwoLevelBudget):
        return (
            min_samples(budget.epsilon1, budget.beta1, decision_dims),
            min_samples(budget.epsilon2, budget.beta2, decision_dims),
        )
    if isinstance(budget, PacBudget):
        return min_samples(budget.epsilon, budget.beta, decision_dims), None
    raise TypeError(f"unsupported budget type: {type(budget).__name__}")


def learn(
    ds: Dataset,
    template: ModelTemplate,
    U_c: float,
    U_xi: float,
    budget,
) -> LearnedModel:
    """Fit the scenario LP and attach the certified budget as provenance.

    Refuses to run if the dataset is smaller than the sample bound the
    budget requires for this template's decision-variable count.
    """
    dims = template.decision_dims
    if budget.decision_dims != dims:
        raise ValueError(
            f"budget declares {budget.decision_dims} decision variables, "
            f"template has {dims}"
        )
    need_m, need_n = _required_sizes(budget, dims)
    if ds.num_times < need_m:
        raise InsufficientSamplesError(
            f"need M >= {need_m} time samples, dataset has {ds.num_times}"
        )
    if need_n is not None and ds.num_inputs < need_n:
        raise InsufficientSamplesError(
            f"need N >= {need_n} input samples, dataset has {ds.num_inputs}"
        )
    lp = build_lp(ds, template, U_c, U_xi)
    sol = solve_lp(lp)
    if sol.status != "optimal":
        raise SolverStallError(
            f"LP bound-infeasible: optimum xi={sol.xi:g} exceeds U_xi={U_xi:g}"
        )
    return LearnedModel(
        template=template,
        coefficients=sol.coefficients,
        xi=sol.xi,
        provenance=Provenance(
            M=ds.num_times,
            N=ds.num_inputs,
            U_c=U_c,
            U_xi=U_xi,
            seed=ds.seed,
            budget=budget,
        ),
    )


def staged_learn(
    oracle,
    input_set: InputSet,
    template: ModelTemplate,
    pilot: tuple[int, int],
    full_budget,
    U_c: float,
    U_xi: float,
    seed: int,
) -> LearnedModel:
    """Freeze-then-recertify: pilot fit, then a fresh one-variable program.

    Phase 1 fits the full template on a small pilot dataset (no certified
    statement attaches to it). Phase 2 freezes the pilot coefficients,
    draws fresh samples sized for a single decision variable from disjoint
    RNG streams, and certifies only the half-width: the one-variable LP
    optimum equals the maximum absolute residual on the fresh data,
    clipped to U_xi.
    """
    pilot_m, pilot_n = pilot
    if pilot_m < 1 or pilot_n < 1:
        raise ValueError("pilot sizes must be >= 1")
    if full_budget.decision_dims != 1:
        raise ValueError("staged certification has exactly 1 decision variable")

    T = float(oracle.horizon)
    pilot_times = sample_times(T, pilot_m, seed, stream=Stream.PILOT_TIMES)
    pilot_inputs = sample_inputs(input_set, pilot_n, seed, stream=Stream.PILOT_INPUTS)
    pilot_ds = collect_dataset(oracle, pilot_inputs, pilot_times, seed=seed)
    pilot_sol = solve_lp(build_lp(pilot_ds, template, U_c, U_xi))
    if pilot_sol.status != "optimal":
        raise SolverStallError("pilot LP bound-infeasible; raise U_xi")

    frozen = template.freeze(pilot_sol.coefficients)
    need_m, need_n = _required_sizes(full_budget, 1)
    if need_n is None:
        need_n = 1
    fresh_times = sample_times(T, need_m, seed, stream=Stream.CERT_TIMES)
    fresh_inputs = sample_inputs(input_set, need_n, seed, stream=Stream.CERT_INPUTS)
    fresh_ds = collect_dataset(oracle, fresh_inputs, fresh_times, seed=seed)

    predictions = frozen.design_matrix(fresh_ds.inputs, fresh_ds.times)[:, 0]
    xi = float(np.max(np.abs(predictions - fresh_ds.values.reshape(-1))))
    xi = min(xi, U_xi)
    return LearnedModel(
        template=frozen,
        coefficients=np.array([1.0]),
        xi=xi,
        provenance=Provenance(
            M=need_m,
            N=need_n,
            U_c=U_c,
            U_xi=U_xi,
            seed=seed,
            budget=full_budget,
            pilot_M=pilot_m,
            pilot_N=pilot_n,
        ),
    )
