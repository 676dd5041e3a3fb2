"""Command line: the tool handlers behind argparse subcommands.

Exit status is 0 on success, 2 for configuration errors, 3 for data errors,
4 for numerical errors and 1 otherwise. Failures print one JSON line to stderr.
"""

import argparse
import asyncio
import json
import sys
from typing import Any, Dict, List, Optional

from fieldgen import __version__
from fieldgen.config import settings
from fieldgen.tools._core import analyze, audit, compare, fit, plot, provider_for, recover, simulate
from fieldgen.tools._core.base import ToolResult

EXIT_CODES = {
    "config_error": 2,
    "invalid_input": 3,
    "missing_data": 3,
    "data_format": 3,
    "empty_dataset": 3,
    "mismatched_dataset": 3,
    "data_error": 3,
    "audit_failed": 3,
    "protocol_error": 3,
    "not_found": 3,
    "divergence": 4,
    "numerical_error": 4,
}

COMMANDS = {
    "simulate": simulate,
    "audit": audit,
    "analyze": analyze,
    "fit": fit,
    "compare": compare,
    "recover": recover,
    "plot": plot,
}


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON experiment config")
    parser.add_argument("--out", help="output directory")
    parser.add_argument(
        "--jobs",
        type=int,
        default=settings.jobs,
        help="worker processes (default: FIELDGEN_JOBS or 1)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fieldgen", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("simulate", "simulate the protocol for one group or all eight"),
        ("audit", "check generated schedules"),
    ):
        p = sub.add_parser(name, help=help_text)
        _common(p)
        p.add_argument("--group", type=int, help="training direction (deg); all groups when omitted")
        p.add_argument("--seed", type=int, help="protocol seed")
        if name == "simulate":
            p.add_argument("--baselines", help="measured baseline paths CSV for the impedance model")
            p.add_argument(
                "--check-step",
                dest="check_step",
                action="store_true",
                help="re-run one training clamp per group at half the step",
            )

    p = sub.add_parser("analyze", help="trial CSVs to indices, curves and asymmetries")
    _common(p)
    p.add_argument("inputs", nargs="*", help="trial CSV files or directories")
    p.add_argument("--phase", choices=["baseline", "post"], default="post")
    p.add_argument("--sign", type=int, choices=[1, -1], default=1)

    p = sub.add_parser("fit", help="fit a model to an index CSV")
    _common(p)
    p.add_argument("--indices", help="index CSV (default: <out>/indices.csv)")
    p.add_argument("--model", choices=["standard", "impedance"], required=True)
    p.add_argument("--phase", choices=["baseline", "post"], default="post")
    p.add_argument("--response", help="cached impedance response JSON")
    p.add_argument("--baselines", help="measured baseline paths CSV for the impedance model")

    p = sub.add_parser("compare", help="rank fits by AICc")
    _common(p)
    p.add_argument("fits", nargs="+", help="FitResult JSON files")
    p.add_argument("--sign", type=int, choices=[1, -1], default=1)

    p = sub.add_parser("recover", help="synthetic-data recovery study")
    _common(p)
    p.add_argument("--model", choices=["standard", "impedance"], required=True)
    p.add_argument("--seeds", type=int, help="number of synthetic datasets")
    p.add_argument("--noise-sd", dest="noise_sd", type=float)
    p.add_argument("--response", help="cached impedance response JSON")
    p.add_argument("--baselines", help="measured baseline paths CSV for the impedance model")

    p = sub.add_parser("plot", help="SVG figures")
    _common(p)
    p.add_argument("--indices", help="index CSV (default: <out>/indices.csv)")
    p.add_argument("--fits", nargs="*", default=[], help="FitResult JSON files")
    p.add_argument("--phase", choices=["baseline", "post"], default="post")
    p.add_argument("--sign", type=int, choices=[1, -1], default=1)
    return parser


def exit_code(result: ToolResult) -> int:
    if result.success:
        return 0
    return EXIT_CODES.get(result.error or "", 1)


def _report(command: str, result: ToolResult) -> None:
    if result.success:
        data = result.data or {}
        if command == "compare":
            print(data.get("report", ""))
        else:
            print(json.dumps(data, indent=2, default=str))
    else:
        line = {"error": result.error, "message": result.message}
        if result.data:
            line["data"] = result.data
        print(json.dumps(line, default=str), file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    arguments: Dict[str, Any] = {k: v for k, v in vars(args).items() if k != "command"}
    result = asyncio.run(COMMANDS[args.command](arguments, provider_for(arguments)))
    _report(args.command, result)
    return exit_code(result)


if __name__ == "__main__":
    sys.exit(main())
