"""End-to-end pipeline: sample -> learn -> verify -> validate -> report.

Every stage takes an ExperimentConfig so single-stage CLI invocations and a
full `run` share the same code paths. A full run leaves a self-contained
artifact directory: the effective configuration, the dataset, the learned
model, the safety verdict (human-readable and key/value), the Monte-Carlo
validation table, tube plot data, and a MANIFEST recording completion.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .bounds import PacBudget, TwoLevelBudget
from .config import ConfigError, ExperimentConfig
from .lp import learn, staged_learn
from .montecarlo import ValidationReport, validate_ensemble, write_report
from .sampling import (
    Dataset,
    PointSet,
    Stream,
    collect_dataset,
    sample_inputs,
    sample_times,
    write_dataset,
)
from .systems import make_benchmark
from .templates import LearnedModel
from .verify import Verdict, check_safety
from .model_io import save_model

__all__ = [
    "build_oracle",
    "sample_stage",
    "learn_stage",
    "verify_stage",
    "validate_stage",
    "run_pipeline",
    "write_verdict",
    "RunArtifacts",
]

PLOT_POINTS = 1000


def build_oracle(cfg: ExperimentConfig, step: float | None = None):
    params = {"l": cfg.scalable_l} if cfg.system == "scalable" else {}
    oracle = make_benchmark(
        cfg.system,
        horizon=cfg.horizon,
        step=cfg.step if step is None else step,
        **params,
    )
    if oracle.input_dimension != cfg.input_set.dimension:
        raise ConfigError(
            f"input_set has dimension {cfg.input_set.dimension}, system "
            f"{cfg.system!r} needs {oracle.input_dimension}"
        )
    return oracle


def _planned_sizes(cfg: ExperimentConfig) -> tuple[int, int]:
    """(M, N) to draw: at least the scenario bounds, overridable upward."""
    template = cfg.template()
    budget = cfg.budget(template.decision_dims)
    if isinstance(budget, TwoLevelBudget):
        need_m = budget.time_budget().min_samples()
        need_n = budget.input_budget().min_samples()
    else:
        need_m = budget.min_samples()
        need_n = 1
    m = cfg.M if cfg.M is not None else need_m
    n = cfg.N if cfg.N is not None else need_n
    if m < need_m or n < need_n:
        raise ConfigError(
            f"M/N overrides ({m}, {n}) fall below the required bounds "
            f"({need_m}, {need_n})"
        )
    if cfg.is_single_trajectory and n != 1:
        raise ConfigError("a point input set fixes N = 1")
    return m, n


def sample_stage(cfg: ExperimentConfig, oracle=None) -> Dataset:
    if oracle is None:
        oracle = build_oracle(cfg)
    m, n = _planned_sizes(cfg)
    times = sample_times(cfg.horizon, m, cfg.seed, stream=Stream.TIMES)
    inputs = sample_inputs(cfg.input_set, n, cfg.seed, stream=Stream.INPUTS)
    return collect_dataset(
        oracle, inputs, times, seed=cfg.seed, description=cfg.input_set.describe()
    )


def learn_stage(cfg: ExperimentConfig, ds: Dataset) -> LearnedModel:
    template = cfg.template()
    budget = cfg.budget(template.decision_dims)
    return learn(ds, template, cfg.U_c, cfg.U_xi, budget)


def staged_learn_stage(cfg: ExperimentConfig, oracle=None) -> LearnedModel:
    if oracle is None:
        oracle = build_oracle(cfg)
    template = cfg.template()
    budget = cfg.budget(1)
    return staged_learn(
        oracle,
        cfg.input_set,
        template,
        (cfg.pilot_M, cfg.pilot_N),
        budget,
        cfg.U_c,
        cfg.U_xi,
        cfg.seed,
    )


def verify_stage(cfg: ExperimentConfig, model: LearnedModel) -> Verdict:
    scope = (
        cfg.input_set.point
        if isinstance(cfg.input_set, PointSet)
        else cfg.input_set
    )
    return check_safety(model, cfg.unsafe, scope, T=cfg.horizon)


def _default_threshold(cfg: ExperimentConfig) -> float:
    if cfg.mc_threshold is not None:
        return cfg.mc_threshold
    return cfg.epsilon if cfg.epsilon is not None else cfg.epsilon1


def validate_stage(
    cfg: ExperimentConfig, model: LearnedModel, oracle=None
) -> ValidationReport:
    if oracle is None:
        oracle = build_oracle(cfg, step=cfg.mc_step)
    return validate_ensemble(
        oracle,
        model,
        cfg.input_set,
        count=cfg.mc_count,
        delta_t=cfg.mc_delta_t,
        threshold=_default_threshold(cfg),
        seed=cfg.seed,
    )


# ---------------------------------------------------------------------------
# report rendering


def write_verdict(verdict: Verdict, cfg: ExperimentConfig, path) -> None:
    """Verdict report: one human-readable line plus machine-readable fields."""
    c = verdict.confidence
    lines = [
        f"# config sha256/16 = {cfg.digest()}",
        f"verdict: {verdict.kind}",
        f"statement: {verdict.summary()}",
        f"scope: {c.scope}",
        f"horizon: {verdict.horizon:.17g}",
        f"unsafe_set: {verdict.unsafe.describe() if verdict.unsafe else 'none'}",
        f"unsafe_time_bound: {verdict.unsafe_time_bound:.17g}",
        f"tau: {verdict.tau:.17g}",
        f"epsilon: {c.epsilon:.17g}",
        f"beta: {c.beta:.17g}",
    ]
    if c.epsilon2 is not None:
        lines.append(f"epsilon2: {c.epsilon2:.17g}")
        lines.append(f"beta2: {c.beta2:.17g}")
    if verdict.tube is not None:
        lines.append(f"tube_low: {verdict.tube.low:.17g}")
        lines.append(f"tube_high: {verdict.tube.high:.17g}")
    lines.append(f"rigor: {verdict.rigor}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _representative_input(cfg: ExperimentConfig) -> np.ndarray:
    s = cfg.input_set
    if isinstance(s, PointSet):
        return np.asarray(s.point, dtype=float)
    if hasattr(s, "center"):
        return np.asarray(s.center, dtype=float)
    box = s.bounding_box()
    return 0.5 * (np.asarray(box.lower) + np.asarray(box.upper))


def write_tube_csv(model: LearnedModel, cfg: ExperimentConfig, path) -> None:
    """Plot data: t, model value z, and tube edges z -/+ xi at the center input."""
    x0 = _representative_input(cfg)
    ts = np.linspace(0.0, cfg.horizon, PLOT_POINTS)
    z = np.asarray(model.predict(x0, ts), dtype=float)
    with open(path, "w") as fh:
        fh.write(f"# x0 = {' '.join(f'{v:.17g}' for v in x0)}\n")
        fh.write("t,z,z_low,z_high\n")
        for t, v in zip(ts, z):
            fh.write(
                f"{t:.17g},{v:.17g},{v - model.xi:.17g},{v + model.xi:.17g}\n"
            )


def write_trajectories_csv(
    report: ValidationReport, model: LearnedModel, cfg: ExperimentConfig, path
) -> None:
    """Per-validated-input model series for plotting (t-major columns)."""
    ts = np.linspace(0.0, cfg.horizon, PLOT_POINTS)
    cols = [
        np.asarray(model.predict(report.inputs[i], ts), dtype=float)
        for i in range(min(report.count, 20))
    ]
    with open(path, "w") as fh:
        fh.write("t," + ",".join(f"z_{i + 1}" for i in range(len(cols))) + "\n")
        for j, t in enumerate(ts):
            fh.write(
                f"{t:.17g}," + ",".join(f"{c[j]:.17g}" for c in cols) + "\n"
            )


@dataclass(frozen=True, eq=False)
class RunArtifacts:
    dataset: Dataset | None
    model: LearnedModel
    verdict: Verdict
    report: ValidationReport
    outdir: str


def run_pipeline(cfg: ExperimentConfig, outdir) -> RunArtifacts:
    """Full pipeline; writes every artifact into outdir and a MANIFEST last."""
    os.makedirs(outdir, exist_ok=True)
    manifest: list[str] = []

    def emit(name: str, writer) -> None:
        path = os.path.join(outdir, name)
        writer(path)
        manifest.append(name)

    emit("effective_config.txt", lambda p: open(p, "w").write(cfg.effective_text()))

    oracle = build_oracle(cfg)
    if cfg.is_staged:
        dataset = None
        model = staged_learn_stage(cfg, oracle)
    else:
        dataset = sample_stage(cfg, oracle)
        emit("dataset.csv", lambda p: write_dataset(dataset, p))
        model = learn_stage(cfg, dataset)
    emit("model.txt", lambda p: save_model(model, p))

    verdict = verify_stage(cfg, model)
    emit("verdict.txt", lambda p: write_verdict(verdict, cfg, p))

    mc_oracle = oracle if cfg.mc_step is None else build_oracle(cfg, step=cfg.mc_step)
    report = validate_stage(cfg, model, mc_oracle)
    emit("validation.csv", lambda p: write_report(report, p))
    emit("tube.csv", lambda p: write_tube_csv(model, cfg, p))
    emit("trajectories.csv", lambda p: write_trajectories_csv(report, model, cfg, p))

    with open(os.path.join(outdir, "MANIFEST"), "w") as fh:
        fh.write(f"# config sha256/16 = {cfg.digest()}\n")
        fh.write("status = complete\n")
        for name in manifest:
            fh.write(name + "\n")
    return RunArtifacts(dataset, model, verdict, report, str(outdir))
