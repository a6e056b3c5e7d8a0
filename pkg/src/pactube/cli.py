"""Command-line interface.

Subcommands mirror the pipeline stages:

  bounds    print the scenario sample bounds for a budget
  sample    draw a dataset from a configured system
  learn     fit a model to a dataset CSV
  verify    safety verdict for a learned model
  validate  Monte-Carlo check of the learned tube
  run       full pipeline into an artifact directory

Exit codes: 0 success, 2 configuration problem, 3 dataset smaller than the
scenario bound, 4 solver failure, 5 a verify/run verdict found tube/unsafe
contact (budgeted-with-tau rather than safe-with-budget).
"""

from __future__ import annotations

import argparse
import sys

from .bounds import PacBudget, TwoLevelBudget
from .config import ConfigError, load_config
from .lp import InsufficientSamplesError, ModelDomainError, SolverStallError
from .model_io import ModelFileError, load_model, save_model
from .pipeline import (
    build_oracle,
    learn_stage,
    run_pipeline,
    sample_stage,
    staged_learn_stage,
    validate_stage,
    verify_stage,
    write_verdict,
)
from .sampling import DatasetParseError, read_dataset, write_dataset
from .montecarlo import write_report
from .systems import ConfigurationError, IntegrationDivergedError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SAMPLES = 3
EXIT_SOLVER = 4
EXIT_VERDICT = 5

_CONFIG_ERRORS = (
    ConfigError,
    ConfigurationError,
    DatasetParseError,
    ModelFileError,
    FileNotFoundError,
    ValueError,
)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pactube",
        description="PAC tube models for black-box continuous-time systems",
    )
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="scenario sample bounds for a budget")
    b.add_argument("--epsilon", type=float, required=True)
    b.add_argument("--beta", type=float, required=True)
    b.add_argument("--dims", type=int, required=True)
    b.add_argument("--epsilon2", type=float, default=None)
    b.add_argument("--beta2", type=float, default=None)

    for name, help_text in (
        ("sample", "draw a dataset CSV"),
        ("learn", "fit a model to a dataset"),
        ("verify", "safety verdict for a model"),
        ("validate", "Monte-Carlo validation of a model"),
        ("run", "full pipeline"),
    ):
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", required=True, help="experiment config file")
        if name == "sample":
            s.add_argument("--out", required=True, help="dataset CSV path")
        elif name == "learn":
            s.add_argument("--data", required=True, help="dataset CSV path")
            s.add_argument("--out", required=True, help="model file path")
        elif name in ("verify", "validate"):
            s.add_argument("--model", required=True, help="model file path")
            s.add_argument("--out", required=True, help="report path")
        else:
            s.add_argument("--outdir", required=True, help="artifact directory")
    return p


def _cmd_bounds(args) -> int:
    if (args.epsilon2 is None) != (args.beta2 is None):
        print("bounds: --epsilon2 and --beta2 go together", file=sys.stderr)
        return EXIT_CONFIG
    if args.epsilon2 is None:
        budget = PacBudget(args.epsilon, args.beta, args.dims)
        print(f"time samples M >= {budget.min_samples()}")
    else:
        budget = TwoLevelBudget(
            args.epsilon, args.beta, args.epsilon2, args.beta2, args.dims
        )
        print(f"time samples M >= {budget.time_budget().min_samples()}")
        print(f"input samples N >= {budget.input_budget().min_samples()}")
    return EXIT_OK


def _cmd_sample(args) -> int:
    cfg = load_config(args.config)
    ds = sample_stage(cfg)
    write_dataset(ds, args.out)
    print(f"wrote {ds.num_inputs} x {ds.num_times} samples to {args.out}")
    return EXIT_OK


def _cmd_learn(args) -> int:
    cfg = load_config(args.config)
    if cfg.is_staged:
        model = staged_learn_stage(cfg)
    else:
        ds = read_dataset(args.data)
        model = learn_stage(cfg, ds)
    save_model(model, args.out)
    print(f"xi = {model.xi:.17g}; model written to {args.out}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    cfg = load_config(args.config)
    model = load_model(args.model)
    verdict = verify_stage(cfg, model)
    write_verdict(verdict, cfg, args.out)
    print(verdict.summary())
    return EXIT_OK if verdict.kind == "safe-with-budget" else EXIT_VERDICT


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    model = load_model(args.model)
    report = validate_stage(cfg, model)
    write_report(report, args.out)
    print(
        f"{report.count} trajectories, satisfiability ratio "
        f"{report.ratio:.17g} at threshold {report.threshold:g}"
    )
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    arts = run_pipeline(cfg, args.outdir)
    print(f"xi = {arts.model.xi:.17g}")
    print(arts.verdict.summary())
    print(
        f"validation ratio {arts.report.ratio:.17g} over {arts.report.count} "
        f"fresh trajectories"
    )
    print(f"artifacts in {arts.outdir}")
    return EXIT_OK if arts.verdict.kind == "safe-with-budget" else EXIT_VERDICT


_COMMANDS = {
    "bounds": _cmd_bounds,
    "sample": _cmd_sample,
    "learn": _cmd_learn,
    "verify": _cmd_verify,
    "validate": _cmd_validate,
    "run": _cmd_run,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except InsufficientSamplesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SAMPLES
    except (SolverStallError, ModelDomainError, IntegrationDivergedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
