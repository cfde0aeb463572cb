# Copyright 2025 John Brosnihan
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""
Command-line entry point.

    homogenization-lab <command> --config run.toml [--out DIR]

Exit codes: 0 when every report passed, 1 on a computational failure or a
failed criterion, 2 on configuration, precondition or range errors.
"""

import argparse
import sys
from collections.abc import Callable, Sequence
from pathlib import Path

from homogenization_lab import __version__
from homogenization_lab.cli.commands import (
    cmd_classify,
    cmd_estimate_hbar,
    cmd_homogenize,
    cmd_metric,
    cmd_surgery_check,
)
from homogenization_lab.cli.context import RunContext, run_context
from homogenization_lab.errors import (
    ConfigurationError,
    DomainRangeError,
    LabError,
    PreconditionViolation,
)
from homogenization_lab.logging import configure_logging, get_logger
from homogenization_lab.models.run_config import RunConfig, load_run_config

logger = get_logger(__name__)

EXIT_PASS = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

Command = Callable[[RunConfig, RunContext], None]

COMMANDS: dict[str, tuple[Command, str]] = {
    "estimate-hbar": (cmd_estimate_hbar, "Estimate the effective Hamiltonian on a p-lattice"),
    "classify": (cmd_classify, "Classify gradients by the geometry of the effective sublevel sets"),
    "metric": (cmd_metric, "Metric scaling, zero-cost ray and subsolution checks"),
    "homogenize": (cmd_homogenize, "Compare u^eps with the effective solution"),
    "surgery-check": (cmd_surgery_check, "Check discounted solutions under a modified Hamiltonian"),
}

_CONFIG_ERRORS = (ConfigurationError, PreconditionViolation, DomainRangeError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homogenization-lab",
        description="Numerical lab for stochastic homogenization of Hamilton-Jacobi equations.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, type=Path, help="Run config (.toml) or manifest (.json)")
        cmd.add_argument("--out", type=Path, default=None, help="Output directory (default: runs/<command>)")
    return parser


def run(command: str, config_path: Path, out_dir: Path | None = None) -> int:
    """
    Execute one subcommand and return its exit code.

    Nothing is written when the config does not validate.
    """
    try:
        config = load_run_config(config_path)
    except ConfigurationError as e:
        logger.error("invalid_config", path=str(config_path), error=str(e))
        return EXIT_CONFIG

    handler, _ = COMMANDS[command]
    target = out_dir if out_dir is not None else Path("runs") / command
    with run_context(command, config, target) as ctx:
        logger.info("run_started", out=str(target))
        try:
            handler(config, ctx)
        except _CONFIG_ERRORS as e:
            logger.error("run_rejected", error_type=type(e).__name__, error=str(e))
            return EXIT_CONFIG
        except LabError as e:
            logger.error("run_failed", error_type=type(e).__name__, error=str(e))
            ctx.write_manifest(EXIT_FAILURE)
            return EXIT_FAILURE
        code = EXIT_PASS if ctx.passed else EXIT_FAILURE
        ctx.write_manifest(code)
        logger.info("run_finished", exit_code=code, reports=[f"{r.name}:{r.status}" for r in ctx.reports])
        return code


def main(argv: Sequence[str] | None = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    return run(args.command, args.config, args.out)


if __name__ == "__main__":
    sys.exit(main())
