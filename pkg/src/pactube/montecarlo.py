"""Monte-Carlo validation of a learned tube against fresh ground truth.

For each validation input, the ground-truth trajectory is sampled on a
uniform grid j * delta_t and compared pointwise against the model tube; the
violation fraction is the share of grid points escaping the tube. Ensemble
validation draws fresh inputs from an RNG stream disjoint from every
training stream and reports the satisfiability ratio: the fraction of
trajectories whose violation fraction stays at or below a threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sampling import InputSet, Stream, sample_inputs
from .templates import LearnedModel

__all__ = ["ValidationReport", "validate_trajectory", "validate_ensemble", "write_report"]


@dataclass(frozen=True, eq=False)
class ValidationReport:
    inputs: np.ndarray  # (count, n)
    violation_fractions: np.ndarray  # (count,)
    ratio: float
    delta_t: float
    threshold: float
    seed: int | None

    @property
    def count(self) -> int:
        return self.inputs.shape[0]


def _grid_times(T: float, delta_t: float) -> np.ndarray:
    if delta_t <= 0:
        raise ValueError("delta_t must be positive")
    steps = int(math.floor(T / delta_t + 1e-9))
    return np.arange(steps + 1) * delta_t


def validate_trajectory(
    oracle, model: LearnedModel, x0, delta_t: float, T: float | None = None
) -> float:
    """Fraction of grid points j*delta_t where |y - z| exceeds the half-width."""
    if T is None:
        T = float(oracle.horizon)
    ts = _grid_times(T, delta_t)
    y = np.asarray(oracle.evaluate_many(x0, ts), dtype=float)
    z = np.asarray(model.predict(x0, ts), dtype=float)
    return float(np.count_nonzero(np.abs(y - z) > model.xi)) / ts.shape[0]


def validate_ensemble(
    oracle,
    model: LearnedModel,
    input_set: InputSet,
    count: int,
    delta_t: float,
    threshold: float,
    seed: int,
) -> ValidationReport:
    """Violation fractions for `count` fresh inputs and their satisfiability ratio."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if not (0.0 <= threshold <= 1.0):
        raise ValueError("threshold must lie in [0, 1]")
    T = float(oracle.horizon)
    inputs = sample_inputs(input_set, count, seed, stream=Stream.VALIDATION)
    ts = _grid_times(T, delta_t)
    if hasattr(oracle, "evaluate_matrix"):
        ys = oracle.evaluate_matrix(inputs, ts)  # (count, len(ts))
    else:
        ys = np.vstack([oracle.evaluate_many(x0, ts) for x0 in inputs])
    fractions = np.empty(count)
    for i in range(count):
        z = np.asarray(model.predict(inputs[i], ts), dtype=float)
        fractions[i] = np.count_nonzero(np.abs(ys[i] - z) > model.xi) / ts.shape[0]
    ratio = float(np.count_nonzero(fractions <= threshold)) / count
    return ValidationReport(
        inputs=inputs,
        violation_fractions=fractions,
        ratio=ratio,
        delta_t=delta_t,
        threshold=threshold,
        seed=seed,
    )


def write_report(report: ValidationReport, path) -> None:
    """CSV: one row per trajectory, summary block in '#' comments."""
    n = report.inputs.shape[1]
    with open(path, "w") as fh:
        fh.write(f"# count={report.count} delta_t={report.delta_t:.17g}\n")
        fh.write(f"# threshold={report.threshold:.17g} ratio={report.ratio:.17g}\n")
        if report.seed is not None:
            fh.write(f"# seed={report.seed}\n")
        header = ",".join([f"x0_{d + 1}" for d in range(n)] + ["violation_fraction"])
        fh.write(header + "\n")
        for i in range(report.count):
            xi = ",".join(f"{v:.17g}" for v in report.inputs[i])
            fh.write(f"{xi},{report.violation_fractions[i]:.17g}\n")
