"""
``cgen`` command line.

Sub-commands follow the pipeline order: ``gen-data`` → ``pretrain`` /
``train-predictor`` / ``train-controllers`` → ``train-cgen`` →
``counterfactual`` / ``robustness``. Every sub-command accepts
``--config FILE`` and repeated ``--set section.key=value``; its own flags are
applied last, as overrides of the matching config keys.

Exit codes: 0 ok, 2 configuration error, 3 I/O or checkpoint error,
4 missing prerequisite.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import TYPE_CHECKING

from pydantic import ValidationError

from cgenlab.cli import commands
from cgenlab.cli.config_loader import load_run_config
from cgenlab.config.constants import (
    EnvName,
    ExitCode,
    NavComplexity,
    PretrainRole,
)
from cgenlab.errors import (
    CheckpointIOError,
    ConfigurationError,
    CorruptCheckpointError,
    DimensionError,
    EmptyDatasetError,
    ImageFormatError,
    MissingPrerequisiteError,
    TensorLengthMismatchError,
    UnsupportedOperationError,
    UnsupportedVersionError,
)
from cgenlab.schemas.settings.runtime import CgenSettings

if TYPE_CHECKING:
    from collections.abc import Sequence

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# flag attribute -> dotted config key it overrides
_BINDINGS = {
    "gen-data": {
        "env": "data.env",
        "count": "data.count",
        "seed": "seed",
        "complexity": "data.complexity",
        "delta": "data.delta",
        "augment": "data.augment",
        "out": "paths.out",
    },
    "pretrain": {"data": "paths.data", "out": "paths.out"},
    "train-predictor": {"data": "paths.data", "out": "paths.out"},
    "train-controllers": {"out": "paths.out"},
    "train-cgen": {"data": "paths.data", "out": "paths.out"},
    "counterfactual": {"out": "paths.out"},
    "robustness": {
        "controllers": "paths.controllers",
        "scenarios": "paths.scenarios",
        "goals": "robustness.goals_deg",
        "out": "paths.out",
    },
}


def _goal_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        msg = f"goal list must be comma-separated degrees, got '{text}'"
        raise argparse.ArgumentTypeError(msg) from exc


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one sub-parser per pipeline stage."""
    parser = argparse.ArgumentParser(
        prog="cgen",
        description="Counterfactual generation and controller robustness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run config")
    common.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one config key (repeatable)",
    )
    common.add_argument("--out", help="output directory")

    gen = sub.add_parser("gen-data", parents=[common], help="render a dataset")
    gen.add_argument("--env", choices=[e.value for e in EnvName])
    gen.add_argument("--count", type=int)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--complexity", choices=[c.value for c in NavComplexity])
    gen.add_argument("--delta", type=float)
    gen.add_argument("--augment", action=argparse.BooleanOptionalAction)

    pre = sub.add_parser("pretrain", parents=[common], help="pre-train a network")
    pre.add_argument(
        "--role",
        choices=[r.value for r in PretrainRole],
        default=PretrainRole.GENERATOR.value,
    )
    pre.add_argument("--data", help="dataset directory")

    pred = sub.add_parser(
        "train-predictor",
        parents=[common],
        help="fit a surrogate controller",
    )
    pred.add_argument("--data", help="dataset directory")

    ctl = sub.add_parser(
        "train-controllers",
        parents=[common],
        help="train controllers a/b/c from identical initial weights",
    )
    ctl.add_argument("--datasets", nargs="+", required=True, metavar="DIR")

    cg = sub.add_parser("train-cgen", parents=[common], help="adversarial training")
    cg.add_argument("--data", help="dataset directory")

    cf = sub.add_parser(
        "counterfactual",
        parents=[common],
        help="counterfactual of one image",
    )
    cf.add_argument("--model", required=True, help="trained model directory")
    cf.add_argument("--input", required=True, help="input PGM image")
    cf.add_argument(
        "--goal",
        required=True,
        help="class:<0|1>, angle:<deg> or vector:<v1,...,vm>",
    )
    cf.add_argument("--latent", action="store_true", help="search the VAE latent")

    rb = sub.add_parser("robustness", parents=[common], help="compare controllers")
    rb.add_argument("--controllers", nargs="+", metavar="CKPT")
    rb.add_argument("--scenarios", help="scenario dataset directory")
    rb.add_argument("--goals", type=_goal_list, help="comma-separated degrees")
    return parser


def flag_overrides(args: argparse.Namespace) -> list[str]:
    """``--set`` style overrides for every flag given on the command line."""
    overrides: list[str] = []
    for attr, key in _BINDINGS[args.command].items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides.append(f"{key}={json.dumps(value)}")
    return overrides


def run(args: argparse.Namespace, settings: CgenSettings) -> int:
    """Dispatch one parsed command line."""
    config = load_run_config(args.config, [*args.set, *flag_overrides(args)])
    match args.command:
        case "gen-data":
            return commands.gen_data(config, settings)
        case "pretrain":
            return commands.pretrain(PretrainRole(args.role), config, settings)
        case "train-predictor":
            return commands.train_predictor_cmd(config, settings)
        case "train-controllers":
            return commands.train_controllers(args.datasets, config, settings)
        case "train-cgen":
            return commands.train_cgen(config, settings)
        case "counterfactual":
            return commands.counterfactual(
                args.model,
                args.input,
                args.goal,
                config,
                settings,
                latent=args.latent,
            )
        case "robustness":
            return commands.robustness(config, settings)
    msg = f"unknown command {args.command}"
    raise ConfigurationError(msg)


def _fail(code: ExitCode, exc: BaseException) -> int:
    sys.stderr.write(f"cgen: {exc}\n")
    logger.debug("command failed", exc_info=exc)
    return int(code)


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point of the ``cgen`` console script."""
    args = build_parser().parse_args(argv)
    settings = CgenSettings()
    logging.basicConfig(level=settings.log_level.upper(), format=LOG_FORMAT)
    try:
        return int(run(args, settings))
    except MissingPrerequisiteError as exc:
        return _fail(ExitCode.MISSING_PREREQUISITE, exc)
    except (
        CheckpointIOError,
        CorruptCheckpointError,
        UnsupportedVersionError,
        TensorLengthMismatchError,
        ImageFormatError,
    ) as exc:
        return _fail(ExitCode.IO_ERROR, exc)
    except (
        ValidationError,
        ConfigurationError,
        DimensionError,
        EmptyDatasetError,
        UnsupportedOperationError,
    ) as exc:
        return _fail(ExitCode.CONFIG_ERROR, exc)
    except OSError as exc:
        return _fail(ExitCode.IO_ERROR, exc)


if __name__ == "__main__":
    raise SystemExit(main())
