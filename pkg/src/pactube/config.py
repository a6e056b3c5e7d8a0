"""Experiment configuration: a flat, commented key = value text format.

Every run is fully described by one file; after defaulting, the effective
configuration is echoed into every artifact so reports are self-describing.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

from .bounds import PacBudget, TwoLevelBudget
from .sampling import InputSet, PointSet, parse_input_set
from .systems import BENCHMARK_HORIZONS
from .templates import poly_input_time_template, poly_time_template
from .verify import UnsafeSet

__all__ = ["ExperimentConfig", "ConfigError", "parse_config", "load_config"]


class ConfigError(ValueError):
    pass


_TEMPLATE_RE = re.compile(
    r"^(poly_time|poly_input_time)\(\s*degree\s*=\s*(\d+)\s*\)$"
)


@dataclass
class ExperimentConfig:
    system: str
    input_set: InputSet
    horizon: float
    template_spec: str
    U_c: float = 100.0
    U_xi: float = 100.0
    unsafe: UnsafeSet = field(default_factory=UnsafeSet.empty)
    seed: int = 0
    step: float = 1e-4
    scalable_l: int = 50
    # single-level or two-level budget (exactly one populated)
    epsilon: float | None = None
    beta: float | None = None
    epsilon1: float | None = None
    beta1: float | None = None
    epsilon2: float | None = None
    beta2: float | None = None
    # optional sample-size overrides (must meet the bounds)
    M: int | None = None
    N: int | None = None
    # staged learning (both set => staged pipeline)
    pilot_M: int | None = None
    pilot_N: int | None = None
    # Monte-Carlo validation settings
    mc_count: int = 200
    mc_delta_t: float = 1e-3
    mc_threshold: float | None = None
    mc_step: float | None = None  # ground-truth integration step; defaults to step

    @property
    def is_single_trajectory(self) -> bool:
        return isinstance(self.input_set, PointSet)

    @property
    def is_staged(self) -> bool:
        return self.pilot_M is not None and self.pilot_N is not None

    def template(self, decision_override: bool = False):
        m = _TEMPLATE_RE.match(self.template_spec.strip())
        if not m:
            raise ConfigError(f"unrecognized template spec: {self.template_spec!r}")
        kind, degree = m.group(1), int(m.group(2))
        if kind == "poly_time":
            return poly_time_template(degree, horizon=self.horizon)
        return poly_input_time_template(
            self.input_set.dimension, degree, horizon=self.horizon
        )

    def budget(self, decision_dims: int):
        single = self.epsilon is not None
        two = self.epsilon1 is not None
        if single == two:
            raise ConfigError(
                "set either (epsilon, beta) or (epsilon1, beta1, epsilon2, beta2)"
            )
        if single:
            if self.beta is None:
                raise ConfigError("epsilon requires beta")
            return PacBudget(self.epsilon, self.beta, decision_dims)
        if None in (self.beta1, self.epsilon2, self.beta2):
            raise ConfigError("two-level budget needs epsilon1, beta1, epsilon2, beta2")
        return TwoLevelBudget(
            self.epsilon1, self.beta1, self.epsilon2, self.beta2, decision_dims
        )

    def effective_text(self) -> str:
        lines = [
            f"system = {self.system}",
            f"input_set = {self.input_set.describe()}",
            f"horizon = {self.horizon:.17g}",
            f"template = {self.template_spec}",
            f"U_c = {self.U_c:.17g}",
            f"U_xi = {self.U_xi:.17g}",
            f"unsafe = {self.unsafe.describe()}",
            f"seed = {self.seed}",
            f"step = {self.step:.17g}",
        ]
        if self.system == "scalable":
            lines.append(f"scalable_l = {self.scalable_l}")
        for key in (
            "epsilon",
            "beta",
            "epsilon1",
            "beta1",
            "epsilon2",
            "beta2",
        ):
            val = getattr(self, key)
            if val is not None:
                lines.append(f"{key} = {val:.17g}")
        for key in ("M", "N", "pilot_M", "pilot_N"):
            val = getattr(self, key)
            if val is not None:
                lines.append(f"{key} = {val}")
        lines.append(f"mc_count = {self.mc_count}")
        lines.append(f"mc_delta_t = {self.mc_delta_t:.17g}")
        if self.mc_threshold is not None:
            lines.append(f"mc_threshold = {self.mc_threshold:.17g}")
        if self.mc_step is not None:
            lines.append(f"mc_step = {self.mc_step:.17g}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.effective_text().encode()).hexdigest()[:16]


def _parse_unsafe(text: str) -> UnsafeSet:
    parts = text.split()
    if not parts or parts[0] == "none":
        return UnsafeSet.empty()
    if parts[0] == "ge" and len(parts) == 2:
        return UnsafeSet.above(float(parts[1]))
    if parts[0] == "le" and len(parts) == 2:
        return UnsafeSet.below(float(parts[1]))
    if parts[0] == "interval" and len(parts) == 3:
        return UnsafeSet.from_intervals([(float(parts[1]), float(parts[2]))])
    raise ConfigError(f"unrecognized unsafe-set spec: {text!r}")


_FLOAT_KEYS = {
    "horizon",
    "U_c",
    "U_xi",
    "step",
    "epsilon",
    "beta",
    "epsilon1",
    "beta1",
    "epsilon2",
    "beta2",
    "mc_delta_t",
    "mc_threshold",
    "mc_step",
}
_INT_KEYS = {"seed", "M", "N", "pilot_M", "pilot_N", "mc_count", "scalable_l"}


def parse_config(text: str) -> ExperimentConfig:
    kv: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        kv[key.strip()] = val.strip()

    for required in ("system", "input_set", "template"):
        if required not in kv:
            raise ConfigError(f"missing required key {required!r}")
    system = kv.pop("system")
    try:
        input_set = parse_input_set(kv.pop("input_set"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    template_spec = kv.pop("template")
    unsafe = _parse_unsafe(kv.pop("unsafe", "none"))
    horizon = float(kv.pop("horizon", BENCHMARK_HORIZONS.get(system, 0.0)))
    if horizon <= 0:
        raise ConfigError("horizon must be positive")

    cfg = ExperimentConfig(
        system=system,
        input_set=input_set,
        horizon=horizon,
        template_spec=template_spec,
        unsafe=unsafe,
    )
    for key, val in kv.items():
        if key in _FLOAT_KEYS:
            setattr(cfg, key, float(val))
        elif key in _INT_KEYS:
            setattr(cfg, key, int(val))
        else:
            raise ConfigError(f"unknown config key {key!r}")
    cfg.budget(1)  # validates the budget keys early (dims checked later)
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())
