"""Learned-model files: a flat key/value text format, stable across platforms.

Floats are rendered at 17 significant digits so a write/read round trip is
bit-exact. Custom (callable-basis) templates are not serializable.
"""

from __future__ import annotations

import numpy as np

from .bounds import PacBudget, TwoLevelBudget
from .templates import (
    FrozenTemplate,
    LearnedModel,
    ModelTemplate,
    PolynomialTemplate,
    Provenance,
)

__all__ = ["save_model", "load_model", "ModelFileError"]


class ModelFileError(ValueError):
    pass


def _fmt_floats(values) -> str:
    return " ".join(f"{float(v):.17g}" for v in np.atleast_1d(values))


def _budget_lines(budget) -> list[str]:
    if budget is None:
        return ["budget_kind: none"]
    if isinstance(budget, PacBudget):
        return [
            "budget_kind: pac",
            f"epsilon: {budget.epsilon:.17g}",
            f"beta: {budget.beta:.17g}",
            f"decision_dims: {budget.decision_dims}",
        ]
    if isinstance(budget, TwoLevelBudget):
        return [
            "budget_kind: two_level",
            f"epsilon1: {budget.epsilon1:.17g}",
            f"beta1: {budget.beta1:.17g}",
            f"epsilon2: {budget.epsilon2:.17g}",
            f"beta2: {budget.beta2:.17g}",
            f"decision_dims: {budget.decision_dims}",
        ]
    raise ModelFileError(f"unsupported budget type: {type(budget).__name__}")


def _template_lines(tpl: ModelTemplate) -> list[str]:
    if isinstance(tpl, PolynomialTemplate):
        return [
            "template: poly",
            f"input_dimension: {tpl.input_dimension}",
            f"degree: {tpl.degree}",
            f"horizon: {tpl.horizon:.17g}",
        ]
    if isinstance(tpl, FrozenTemplate):
        if not isinstance(tpl.base, PolynomialTemplate):
            raise ModelFileError("only polynomial-based frozen templates serialize")
        return [
            "template: frozen_poly",
            f"input_dimension: {tpl.base.input_dimension}",
            f"degree: {tpl.base.degree}",
            f"horizon: {tpl.base.horizon:.17g}",
            f"base_coefficients: {_fmt_floats(tpl.base_coefficients)}",
        ]
    raise ModelFileError(f"template {tpl.description!r} is not serializable")


def save_model(model: LearnedModel, path) -> None:
    lines = [f"# {model.template.description}"]
    lines += _template_lines(model.template)
    lines.append(f"coefficients: {_fmt_floats(model.coefficients)}")
    lines.append(f"xi: {model.xi:.17g}")
    prov = model.provenance
    if prov is not None:
        lines.append(f"M: {prov.M}")
        lines.append(f"N: {prov.N}")
        lines.append(f"U_c: {prov.U_c:.17g}")
        lines.append(f"U_xi: {prov.U_xi:.17g}")
        if prov.seed is not None:
            lines.append(f"seed: {prov.seed}")
        if prov.pilot_M is not None:
            lines.append(f"pilot_M: {prov.pilot_M}")
            lines.append(f"pilot_N: {prov.pilot_N}")
        lines += _budget_lines(prov.budget)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> LearnedModel:
    fields: dict[str, str] = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition(":")
            if not sep:
                raise ModelFileError(f"malformed line in model file: {line!r}")
            fields[key.strip()] = val.strip()

    try:
        kind = fields["template"]
        n = int(fields["input_dimension"])
        degree = int(fields["degree"])
        horizon = float(fields["horizon"])
        base = PolynomialTemplate(input_dimension=n, degree=degree, horizon=horizon)
        if kind == "poly":
            template: ModelTemplate = base
        elif kind == "frozen_poly":
            base_c = np.array(
                [float(v) for v in fields["base_coefficients"].split()]
            )
            template = base.freeze(base_c)
        else:
            raise ModelFileError(f"unknown template kind {kind!r}")
        coefficients = np.array([float(v) for v in fields["coefficients"].split()])
        xi = float(fields["xi"])
    except KeyError as exc:
        raise ModelFileError(f"missing field {exc} in model file") from exc

    provenance = None
    if "M" in fields:
        budget = None
        bk = fields.get("budget_kind", "none")
        if bk == "pac":
            budget = PacBudget(
                float(fields["epsilon"]),
                float(fields["beta"]),
                int(fields["decision_dims"]),
            )
        elif bk == "two_level":
            budget = TwoLevelBudget(
                float(fields["epsilon1"]),
                float(fields["beta1"]),
                float(fields["epsilon2"]),
                float(fields["beta2"]),
                int(fields["decision_dims"]),
            )
        provenance = Provenance(
            M=int(fields["M"]),
            N=int(fields["N"]),
            U_c=float(fields["U_c"]),
            U_xi=float(fields["U_xi"]),
            seed=int(fields["seed"]) if "seed" in fields else None,
            budget=budget,
            pilot_M=int(fields["pilot_M"]) if "pilot_M" in fields else None,
            pilot_N=int(fields["pilot_N"]) if "pilot_N" in fields else None,
        )
    return LearnedModel(
        template=template, coefficients=coefficients, xi=xi, provenance=provenance
    )
