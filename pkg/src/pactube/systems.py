"""Trajectory oracles backed by simulated benchmark systems.

An oracle answers the question "where is the system at time t for input x0"
without exposing its internal dynamics. The oracles here simulate known
right-hand sides with classical fixed-step RK4 (method of steps for delayed
systems) and answer point queries by linear interpolation between the
integration nodes. Per-input trajectories are cached, keyed by the exact
input bits, so repeated time queries for one input cost a single
integration.

Right-hand sides are written elementwise over the state coordinates, so a
state array of shape (d, B) integrates B trajectories in one pass; the
batched arithmetic is the same floating-point sequence per column as the
single-trajectory path.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "IntegrationDivergedError",
    "OutOfHorizonError",
    "ConfigurationError",
    "DenseTrajectory",
    "BenchmarkSystem",
    "SimulatedOracle",
    "integrate_ode",
    "integrate_dde",
    "query_state",
    "make_benchmark",
    "make_oracle",
    "BENCHMARK_HORIZONS",
]


class IntegrationDivergedError(RuntimeError):
    """State became non-finite during integration."""

    def __init__(self, time: float):
        super().__init__(f"integration diverged: non-finite state at t={time:g}")
        self.time = time


class OutOfHorizonError(ValueError):
    """Queried time lies outside [0, T]."""


class ConfigurationError(ValueError):
    """Unknown benchmark name or invalid system parameters."""


@dataclass(frozen=True, eq=False)
class DenseTrajectory:
    """Integration nodes and states; queries interpolate linearly.

    nodes: strictly increasing times t_0 = 0 < ... < t_K = T.
    states: array (K+1, d); column `observed_index` is the scalar output.
    """

    nodes: np.ndarray
    states: np.ndarray
    observed_index: int = 0

    @property
    def horizon(self) -> float:
        return float(self.nodes[-1])

    def query(self, t: float) -> float:
        return float(self.query_many(np.array([float(t)]))[0])

    def query_many(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if ts.size and (ts.min() < 0.0 or ts.max() > self.horizon):
            bad = ts[(ts < 0.0) | (ts > self.horizon)][0]
            raise OutOfHorizonError(
                f"t={bad:g} outside [0, {self.horizon:g}]"
            )
        return np.interp(ts, self.nodes, self.states[:, self.observed_index])


def _node_times(T: float, step: float) -> np.ndarray:
    """Uniform nodes k*step on [0, T]; a shorter final step lands on T."""
    n_full = int(math.floor(T / step + 1e-12))
    nodes = np.arange(n_full + 1) * step
    if nodes[-1] < T - 1e-12 * max(1.0, T):
        nodes = np.append(nodes, T)
    else:
        nodes[-1] = T
    return nodes


def _rk4_path(rhs: Callable, x0: np.ndarray, T: float, step: float) -> tuple:
    """Classical RK4 over uniform nodes; returns (nodes, states).

    x0 may be shape (d,) or (d, B); states get shape (K+1,) + x0.shape.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    nodes = _node_times(T, step)
    states = np.empty((nodes.shape[0],) + x0.shape)
    states[0] = x0
    x = x0.astype(float, copy=True)
    for i in range(nodes.shape[0] - 1):
        t, h = nodes[i], nodes[i + 1] - nodes[i]
        k1 = rhs(t, x)
        k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2)
        k4 = rhs(t + h, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise IntegrationDivergedError(float(nodes[i + 1]))
        states[i + 1] = x
    return nodes, states


def _rk4_dde_path(
    rhs: Callable, history: np.ndarray, T: float, step: float, delay: float
) -> tuple:
    """Method of steps: RK4 where delayed terms read the stored solution.

    The step is shrunk to delay / ceil(delay / step) so nodes line up with
    the delay; stage lookups at t - delay interpolate linearly in the
    already-computed part of the solution (constant history for t < 0).
    """
    if delay <= 0:
        raise ValueError("delay must be positive for DDE integration")
    sub = max(1, int(math.ceil(delay / step - 1e-12)))
    h_eff = delay / sub
    nodes = _node_times(T, h_eff)
    states = np.empty((nodes.shape[0],) + history.shape)
    states[0] = history
    x = history.astype(float, copy=True)

    def delayed(t_q: float, upto: int) -> np.ndarray:
        if t_q <= 0.0:
            return history
        idx = np.searchsorted(nodes[: upto + 1], t_q)
        idx = min(max(idx, 1), upto)
        t_lo, t_hi = nodes[idx - 1], nodes[idx]
        w = (t_q - t_lo) / (t_hi - t_lo)
        return (1.0 - w) * states[idx - 1] + w * states[idx]

    for i in range(nodes.shape[0] - 1):
        t, h = nodes[i], nodes[i + 1] - nodes[i]
        k1 = rhs(t, x, delayed(t - delay, i))
        k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1, delayed(t + 0.5 * h - delay, i))
        k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2, delayed(t + 0.5 * h - delay, i))
        k4 = rhs(t + h, x + h * k3, delayed(t + h - delay, i))
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise IntegrationDivergedError(float(nodes[i + 1]))
        states[i + 1] = x
    return nodes, states


# ---------------------------------------------------------------------------
# benchmark right-hand sides


def _vdp_rhs(t, x):
    return np.stack([x[1], (1.0 - x[0] * x[0]) * x[1] - x[0]])


def _bio9_rhs(t, x):
    return np.stack(
        [
            3.0 * x[2] - x[0] * x[5],
            x[3] - x[1] * x[5],
            x[0] * x[5] - 3.0 * x[2],
            x[1] * x[5] - x[3],
            3.0 * x[2] + 5.0 * x[0] - x[4],
            5.0 * x[4] + 3.0 * x[2] + x[3] - x[5] * (x[0] + x[1] + 2.0 * x[7] + 1.0),
            5.0 * x[3] + x[1] - 0.5 * x[6],
            5.0 * x[6] - 2.0 * x[5] * x[7] + x[8] - 0.2 * x[7],
            2.0 * x[5] * x[7] - x[8],
        ]
    )


def _scalable_rhs(l: int):
    def rhs(t, x):
        out = [1.0 + (sum(x[i] for i in range(1, l + 1)) + sum(x[i] for i in range(2, l + 2))) / l]
        for j in range(1, l + 1):
            out.append(x[2 * j] * 1.0)
            out.append(-10.0 * np.sin(x[2 * j - 1]) - x[1])
        return np.stack(out)

    return rhs


_PP_PARAMS = dict(a=0.25, m=200.0, b=-0.01, c=-1.00, d=0.01)


def _predator_prey_rhs(t, x, xd):
    a, m, b, c, d = (
        _PP_PARAMS["a"],
        _PP_PARAMS["m"],
        _PP_PARAMS["b"],
        _PP_PARAMS["c"],
        _PP_PARAMS["d"],
    )
    return np.stack(
        [
            a * x[0] * (1.0 - x[0] / m) + b * x[0] * x[1],
            c * x[1] + d * xd[0] * xd[1],
        ]
    )


@dataclass(frozen=True, eq=False)
class BenchmarkSystem:
    """A named right-hand side with its dimension and (possibly zero) delay."""

    name: str
    rhs: Callable
    state_dimension: int
    delay: float = 0.0
    parameters: dict = field(default_factory=dict)


BENCHMARK_HORIZONS = {
    "van_der_pol": 10.0,
    "bio9": 10.0,
    "scalable": 2.0,
    "predator_prey": 10.0,
}


def benchmark_system(name: str, **params) -> BenchmarkSystem:
    if name == "van_der_pol":
        return BenchmarkSystem("van_der_pol", _vdp_rhs, 2)
    if name == "bio9":
        return BenchmarkSystem("bio9", _bio9_rhs, 9)
    if name == "scalable":
        l = int(params.get("l", 50))
        if l < 1:
            raise ConfigurationError("scalable requires l >= 1")
        return BenchmarkSystem(
            "scalable", _scalable_rhs(l), 2 * l + 1, parameters={"l": l}
        )
    if name == "predator_prey":
        return BenchmarkSystem(
            "predator_prey",
            _predator_prey_rhs,
            2,
            delay=0.1,
            parameters=dict(_PP_PARAMS),
        )
    raise ConfigurationError(f"unknown benchmark system: {name!r}")


# ---------------------------------------------------------------------------
# module-level operations


def integrate_ode(
    system: BenchmarkSystem, x0, T: float, step: float
) -> DenseTrajectory:
    """Fixed-step RK4 integration of a delay-free system over [0, T]."""
    if system.delay != 0.0:
        raise ValueError(f"{system.name} has a delay; use integrate_dde")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape[0] != system.state_dimension:
        raise ValueError(
            f"x0 has dimension {x0.shape[0]}, system needs {system.state_dimension}"
        )
    nodes, states = _rk4_path(system.rhs, x0, T, step)
    return DenseTrajectory(nodes=nodes, states=states)


def integrate_dde(
    system: BenchmarkSystem, constant_history, T: float, step: float
) -> DenseTrajectory:
    """Method-of-steps RK4 for a delayed system with constant history."""
    if system.delay <= 0.0:
        raise ValueError(f"{system.name} has no delay; use integrate_ode")
    h0 = np.asarray(constant_history, dtype=float)
    if h0.shape[0] != system.state_dimension:
        raise ValueError(
            f"history has dimension {h0.shape[0]}, system needs {system.state_dimension}"
        )
    nodes, states = _rk4_dde_path(system.rhs, h0, T, step, system.delay)
    return DenseTrajectory(nodes=nodes, states=states)


def query_state(traj: DenseTrajectory, t: float) -> float:
    """Observed coordinate at time t, linearly interpolated between nodes."""
    return traj.query(t)


class SimulatedOracle:
    """TrajectoryOracle over a simulated system with per-input caching.

    evaluate(x0, t) integrates once per distinct input (cache keyed by the
    exact input bits, safe under concurrent insertion) and answers by linear
    interpolation. The observed output is the first state coordinate unless
    configured otherwise.
    """

    def __init__(
        self,
        system: BenchmarkSystem,
        horizon: float,
        step: float = 1e-4,
        observed_index: int = 0,
    ):
        if horizon <= 0 or step <= 0:
            raise ValueError("horizon and step must be positive")
        self.system = system
        self.horizon = float(horizon)
        self.step = float(step)
        self.observed_index = observed_index
        self._cache: dict[bytes, DenseTrajectory] = {}
        self._lock = threading.Lock()

    @property
    def input_dimension(self) -> int:
        return self.system.state_dimension

    def _integrate(self, x0: np.ndarray) -> DenseTrajectory:
        if self.system.delay > 0:
            traj = integrate_dde(self.system, x0, self.horizon, self.step)
        else:
            traj = integrate_ode(self.system, x0, self.horizon, self.step)
        return DenseTrajectory(traj.nodes, traj.states, self.observed_index)

    def trajectory(self, x0) -> DenseTrajectory:
        x0 = np.asarray(x0, dtype=float)
        key = x0.tobytes()
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        traj = self._integrate(x0)
        with self._lock:
            return self._cache.setdefault(key, traj)

    def evaluate(self, x0, t: float) -> float:
        return self.trajectory(x0).query(t)

    def evaluate_many(self, x0, ts: np.ndarray) -> np.ndarray:
        return self.trajectory(x0).query_many(ts)

    def evaluate_matrix(self, inputs: np.ndarray, times: np.ndarray) -> np.ndarray:
        """Value matrix (N, M) for a grid of inputs x times, batch-integrated.

        All N trajectories advance in one RK4 pass over a (d, N) state
        array; per-column arithmetic is identical to evaluate()'s.
        """
        inputs = np.asarray(inputs, dtype=float)
        times = np.asarray(times, dtype=float)
        if times.size and (times.min() < 0 or times.max() > self.horizon):
            raise OutOfHorizonError("times outside [0, horizon]")
        x0s = inputs.T.copy()  # (d, N)
        if self.system.delay > 0:
            nodes, states = _rk4_dde_path(
                self.system.rhs, x0s, self.horizon, self.step, self.system.delay
            )
        else:
            nodes, states = _rk4_path(self.system.rhs, x0s, self.horizon, self.step)
        observed = states[:, self.observed_index, :]  # (K+1, N)
        out = np.empty((inputs.shape[0], times.shape[0]))
        for i in range(inputs.shape[0]):
            out[i] = np.interp(times, nodes, observed[:, i])
        return out


def make_benchmark(
    name: str,
    horizon: float | None = None,
    step: float = 1e-4,
    **params,
) -> SimulatedOracle:
    """Oracle for one of the bundled benchmark systems.

    Step defaults to 1e-4 for dataset-quality ground truth; coarsen to 1e-3
    for quick desk-scale runs or refine to 1e-5 for validation-grade grids.
    """
    system = benchmark_system(name, **params)
    if horizon is None:
        horizon = BENCHMARK_HORIZONS[system.name]
    return SimulatedOracle(system, horizon=horizon, step=step)


def make_oracle(
    rhs: Callable,
    dimension: int,
    horizon: float,
    step: float = 1e-4,
    delay: float = 0.0,
    observed_index: int = 0,
    name: str = "custom",
) -> SimulatedOracle:
    """Oracle over a user right-hand side.

    For delay == 0, rhs(t, x) -> dx; for delay > 0, rhs(t, x, x_delayed).
    """
    system = BenchmarkSystem(name, rhs, dimension, delay=delay)
    return SimulatedOracle(system, horizon=horizon, step=step, observed_index=observed_index)
