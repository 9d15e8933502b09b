import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from core.commands import hiermon_commands
from core.config import LOG_LEVEL
from core.descriptor import parse, parse_bindings, render, resolve
from core.errors import HiermonError
from core.scenario import load_scenario, render_text, run, verify

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hiermon",
                                     description="Hierarchical autonomic management on a simulated network")
    parser.add_argument("--log-level", default=LOG_LEVEL, help="DEBUG, INFO, WARNING or ERROR")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in hiermon_commands:
        subparser = subparsers.add_parser(command["id"], help=command["description"],
                                          description=command["description"])
        for argument in command["arguments"]:
            options = {k: v for k, v in argument.items() if k != "name"}
            subparser.add_argument(argument["name"], **options)
    return parser


def run_scenario(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario, overrides=args.overrides, seed=args.seed, duration=args.duration,
                             bindings=parse_bindings(args.bindings))
    report, _ = run(scenario, Path(args.out) if args.out else None)
    print(render_text(report))
    print(f"Output written to {report.out_dir}")
    return 0 if report.passed else 1


def verify_trace(args: argparse.Namespace) -> int:
    results = verify(Path(args.trace), args.oracle)
    for result in results:
        print(result)
    return 0 if all(r.passed for r in results) else 1


def parse_descriptor(args: argparse.Namespace) -> int:
    descriptor = parse(Path(args.file).read_text(encoding="utf-8"))
    if not args.bindings:
        print(render(descriptor), end="")
        return 0
    plan = resolve(descriptor, parse_bindings(args.bindings))
    print(json.dumps({"targets": plan.targets, "launchers": plan.launchers, "bindings": plan.bindings,
                      "command": plan.command}, indent=2))
    return 0


HANDLERS = {
    "run": run_scenario,
    "verify": verify_trace,
    "parse-descriptor": parse_descriptor,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return HANDLERS[args.command](args)
    except HiermonError as e:
        logger.error(f"{e}")
        return 2
    except OSError as e:
        logger.error(f"Cannot read input: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
