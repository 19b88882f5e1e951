"""Command line: ``ripple-sim run`` and ``ripple-sim sweep``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from .engine import run
from .export import sweep_row, write_report, write_summary, write_sweep_summary
from .scenario import InvalidScenario, Scenario

log = logging.getLogger("ripple_sim")

AXES = {"horizon": "horizon", "alpha": "alpha"}


def _seeds(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("seed list is empty")
    return seeds


def _values(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"values must be comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ripple-sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario for each seed")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("-o", "--output", type=Path, required=True)
    p_run.add_argument("--seeds", type=_seeds, help="override sim.seeds, e.g. 1,2,3")

    p_sweep = sub.add_parser("sweep", help="repeat a scenario over values of one parameter")
    p_sweep.add_argument("config", type=Path)
    p_sweep.add_argument("--axis", choices=sorted(AXES), required=True)
    p_sweep.add_argument("--values", type=_values, required=True)
    p_sweep.add_argument("-o", "--output", type=Path, required=True)
    p_sweep.add_argument("--seeds", type=_seeds)
    return parser


def run_scenario(scenario: Scenario, out: Path) -> list:
    """Simulate every seed of ``scenario`` into ``out/seed_<n>/`` and write ``out/summary.csv``."""
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for seed in scenario.seeds:
        log.info("seed %d: policy=%s h=%g alpha=%g T=%g", seed, scenario.policy, scenario.horizon,
                 scenario.alpha, scenario.duration)
        report = run(scenario, seed)
        write_report(report, out / f"seed_{seed}")
        reports.append((seed, report))
    write_summary(reports, out)
    return reports


def _value_dir(axis: str, value: float) -> str:
    return f"{axis}_{value!r}"


def sweep(scenario: Scenario, axis: str, values: Sequence[float], out: Path) -> None:
    if not values:
        raise InvalidScenario("sweep needs at least one value")
    field = AXES[axis]
    variants = []
    for value in values:
        variant = dataclasses.replace(scenario, **{field: value})
        try:
            variant.validate()
        except InvalidScenario as exc:
            raise InvalidScenario(f"{axis}={value!r}: {exc}") from None
        variants.append((value, variant))
    rows = []
    for value, variant in variants:
        reports = run_scenario(variant, out / _value_dir(axis, value))
        rows.append(sweep_row(axis, value, [rep for _, rep in reports]))
    write_sweep_summary(rows, out)


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("RIPPLE_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        scenario = Scenario.load(args.config)
        if args.seeds:
            scenario = dataclasses.replace(scenario, seeds=args.seeds)
        if args.command == "run":
            run_scenario(scenario, args.output)
        else:
            sweep(scenario, args.axis, args.values, args.output)
    except FileNotFoundError as exc:
        print(f"ripple-sim: cannot read {exc.filename}", file=sys.stderr)
        return 2
    except (InvalidScenario, ValueError) as exc:
        print(f"ripple-sim: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
