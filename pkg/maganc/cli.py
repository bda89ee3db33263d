"""Command-line front end: ``maganc sp-estimate | run | coherence``."""

from __future__ import annotations

import argparse
from collections.abc import Sequence
import logging
from pathlib import Path
import sys

from .config import ExperimentConfig, config_hash, load_config
from .data_models.stage import Stage
from .errors import (
    AncError,
    ConfigError,
    DivergenceError,
    InvalidInputError,
    MissingStageError,
    SettleTimeoutError,
    UnnulledDcError,
)
from .experiment import Experiment
from .utils import provenance_comment

_LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _stage_list(value: str) -> list[Stage]:
    try:
        stages = [Stage(part.strip().lower()) for part in value.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"unknown stage in '{value}'; choose from raw, pid, anc") from exc
    if not stages:
        raise argparse.ArgumentTypeError("at least one stage is required")
    return stages


def _level_list(value: str) -> list[float]:
    try:
        levels = [float(part) for part in value.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid level list '{value}'") from exc
    if not levels:
        raise argparse.ArgumentTypeError("at least one contamination level is required")
    if any(level < 0 for level in levels):
        raise argparse.ArgumentTypeError("contamination levels must be non-negative")
    return levels


def build_arg_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="TOML experiment configuration")
    common.add_argument("--out", type=Path, default=Path("out"), help="Output directory")
    common.add_argument("--seed", type=int, default=None, help="Override the master seed")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")

    parser = argparse.ArgumentParser(
        prog="maganc",
        description="Simulated 3-axis magnetic active noise control with FxLMS.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser(
        "sp-estimate",
        parents=[common],
        help="Pre-null the DC field and identify the secondary path of each axis",
    )
    run = commands.add_parser(
        "run", parents=[common], help="Record the raw, PID and ANC stages and write the report"
    )
    run.add_argument(
        "--stages",
        type=_stage_list,
        default=[Stage.RAW, Stage.PID, Stage.ANC],
        help="Comma list of stages (raw,pid,anc)",
    )
    run.add_argument(
        "--estimate-first",
        action="store_true",
        help="Identify the secondary path before running instead of loading models",
    )
    run.add_argument("--models", type=Path, default=None, help="Model directory, <out>/models by default")
    coherence = commands.add_parser(
        "coherence",
        parents=[common],
        help="Scan reference contamination levels against the coherence ceiling",
    )
    coherence.add_argument(
        "--levels", type=_level_list, default=None, help="Comma list of contamination levels"
    )
    coherence.add_argument(
        "--models", type=Path, default=None, help="Model directory; identified afresh when omitted"
    )
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _load(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {} if args.seed is None else {"seed": args.seed}
    return load_config(args.config, overrides=overrides)


def cmd_sp_estimate(args: argparse.Namespace, experiment: Experiment) -> int:
    stage = experiment.secondary_path.run()
    models = experiment.secondary_path.save(stage, args.out / "models")
    comment = provenance_comment(config_hash(experiment.config), experiment.config.seed)
    taps = experiment.secondary_path.write_taps_csv(stage, args.out / "sp_taps.csv", comment)
    _LOGGER.info("Wrote %d model files and %s", len(models), taps)
    return EXIT_OK


def cmd_run(args: argparse.Namespace, experiment: Experiment) -> int:
    models_dir = args.models or args.out / "models"
    if args.estimate_first:
        sp_stage = experiment.secondary_path.run()
        experiment.secondary_path.save(sp_stage, models_dir)
    else:
        sp_stage = experiment.secondary_path.load(models_dir)
    report, recordings = experiment.run(args.stages, sp_stage)
    experiment.reports.write(report, recordings, args.out, sp_stage)
    return EXIT_OK


def cmd_coherence(args: argparse.Namespace, experiment: Experiment) -> int:
    if args.models is not None:
        sp_stage = experiment.secondary_path.load(args.models)
    else:
        sp_stage = experiment.secondary_path.run()
    result = experiment.coherence.scan(sp_stage, args.levels)
    experiment.coherence.write(result, args.out)
    return EXIT_OK


COMMANDS = {
    "sp-estimate": cmd_sp_estimate,
    "run": cmd_run,
    "coherence": cmd_coherence,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, run one subcommand and map failures to exit codes.

    Exit codes: 0 success, 2 usage or configuration error, 3 numerical
    failure (divergence, unnulled DC, pre-null timeout), 4 I/O error.
    """
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    _configure_logging(args)
    try:
        config = _load(args)
        return COMMANDS[args.command](args, Experiment(config))
    except ConfigError as err:
        where = f" ({err.path})" if err.path else ""
        _LOGGER.error("configuration error%s: %s", where, err.message)
        return EXIT_USAGE
    except (InvalidInputError, MissingStageError) as err:
        _LOGGER.error("%s", err)
        return EXIT_USAGE
    except (DivergenceError, UnnulledDcError, SettleTimeoutError) as err:
        _LOGGER.error("numerical failure: %s", err)
        return EXIT_NUMERICAL
    except OSError as err:
        _LOGGER.error("I/O error: %s", err)
        return EXIT_IO
    except AncError as err:
        _LOGGER.error("%s", err)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
