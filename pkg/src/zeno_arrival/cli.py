"""Command-line entry point writing CSV results for scenarios."""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import TYPE_CHECKING, Any, NoReturn

import numpy as np
import pandas as pd

from .analysis import bound_couplings, default_ladder, log_ladder, sweep_base
from .const import (
    CSV_FLOAT_FORMAT,
    CSV_SCHEMA,
    LOGGER,
    ExitCode,
    MeasurementModel,
)
from .distributions import (
    ideal_distributions,
    normalize_record,
    zeno_ideal_distribution,
)
from .exceptions import (
    BoundaryLeakError,
    BoundViolationError,
    ScenarioError,
    ZenoArrivalError,
)
from .harness import ZenoHarness
from .measurement import run_measurement
from .models import RunManifest, Scenario
from .packets import packet_diagnostics
from .scenario import check_model, load_scenario

if TYPE_CHECKING:
    from collections.abc import Callable, Mapping, Sequence

    from .analysis import BoundSeries, SweepResult
    from .distributions import TimeDistribution

VERSION = metadata.version(__package__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


class _ArgumentParser(argparse.ArgumentParser):
    """Argument parser exiting with the usage status on bad arguments."""

    def error(self, message: str) -> NoReturn:
        """Print the usage and exit."""
        self.print_usage(sys.stderr)
        self.exit(ExitCode.USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        msg = f"{value} is not a positive integer"
        raise argparse.ArgumentTypeError(msg)
    return number


def build_parser() -> argparse.ArgumentParser:
    """Return the parser of every subcommand."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--scenario",
        required=True,
        help="Scenario file, or the name of a shipped scenario.",
    )
    common.add_argument(
        "--out",
        type=Path,
        default=Path("zeno-output"),
        help="Output directory.",
    )
    common.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Edit a scenario value before validation (repeatable).",
    )
    common.add_argument("--log-level", choices=LOG_LEVELS, default="WARNING")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument(
        "--model",
        choices=[member.value for member in MeasurementModel],
        help="Measurement model; defaults to the scenario's.",
    )
    workers = argparse.ArgumentParser(add_help=False)
    workers.add_argument("--workers", type=_positive_int, default=1)

    parser = _ArgumentParser(
        prog="zeno-arrival",
        description="Simulate time-of-arrival measurements in the Zeno regime.",
    )
    parser.add_argument("--version", action="version", version=VERSION)
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser(
        "run",
        parents=[common, model],
        help="Run one measurement and write its record.",
    )
    commands.add_parser(
        "ideal",
        parents=[common],
        help="Write the flux, Kijowski and Zeno-limit distributions.",
    )
    commands.add_parser(
        "sweep",
        parents=[common, model, workers],
        help="Sweep the coupling and fit the delay law.",
    )
    commands.add_parser(
        "bounds",
        parents=[common, workers],
        help="Track the commutator bound for a ladder of V0.",
    )
    commands.add_parser(
        "validate",
        parents=[common],
        help="Check the scenario without simulating.",
    )
    return parser


def _format(value: Any) -> str:
    if isinstance(value, float):
        return CSV_FLOAT_FORMAT % value
    if isinstance(value, MeasurementModel):
        return value.value
    return str(value)


@dataclass
class ResultWriter:
    """Writes versioned CSV tables and the manifest into one directory."""

    directory: Path
    written: list[Path] = field(default_factory=list)

    def _open(self, name: str) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.directory / name
        self.written.append(path)
        return path

    def write_table(
        self,
        name: str,
        frame: pd.DataFrame,
        footer: Mapping[str, Any] | None = None,
    ) -> Path:
        """Write a table with the schema line and optional footer metadata."""
        path = self._open(name)
        with path.open("w", encoding="utf-8", newline="") as handle:
            handle.write(f"{CSV_SCHEMA}\n")
            frame.to_csv(
                handle,
                index=False,
                float_format=CSV_FLOAT_FORMAT,
                lineterminator="\n",
            )
            for key, value in (footer or {}).items():
                handle.write(f"# {key}={_format(value)}\n")
        LOGGER.debug("Wrote %s", path)
        return path

    def write_manifest(self, manifest: RunManifest) -> Path:
        """Write the manifest listing every table written so far."""
        for path in self.written:
            manifest.add_output(path)
        path = self._open("manifest.json")
        path.write_text(
            json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        return path

    def discard(self) -> None:
        """Delete every file written by this writer."""
        for path in self.written:
            path.unlink(missing_ok=True)
        self.written.clear()


def _distribution_frame(distribution: TimeDistribution, scale: float) -> pd.DataFrame:
    return pd.DataFrame(
        {"t": distribution.t_values * scale, "density": distribution.density / scale},
    )


def _model(args: argparse.Namespace, scenario: Scenario) -> MeasurementModel:
    return MeasurementModel(args.model) if args.model else scenario.schedule.model


def run_record(
    args: argparse.Namespace,
    scenario: Scenario,
    writer: ResultWriter,
) -> None:
    """Run one measurement and write the record and its normalized density."""
    grid = scenario.spatial_grid()
    schedule = check_model(scenario, _model(args, scenario))
    record = run_measurement(
        scenario.free_state().wave_function(grid, scenario.t_start),
        schedule,
    )
    scale = scenario.units.microseconds(1.0)
    footer = {
        "model": schedule.model,
        "delta_t_us": schedule.delta_t * scale,
        "v0_hbar_per_us": (schedule.v0 or 0.0) / scale,
        "detected_fraction": record.detected_fraction,
        "escaped": record.escaped,
        "reflection_flag": record.reflection_flag,
    }
    writer.write_table(
        "record.csv",
        pd.DataFrame(
            {
                "t_bin_end": record.t_bins * scale,
                "removed": record.removed,
                "survival": record.survival,
            },
        ),
        footer,
    )
    writer.write_table(
        "dist_operational.csv",
        _distribution_frame(normalize_record(record), scale),
        footer,
    )


def run_ideal(
    _args: argparse.Namespace,
    scenario: Scenario,
    writer: ResultWriter,
) -> None:
    """Write the three ideal distributions of the free state."""
    scale = scenario.units.microseconds(1.0)
    distributions = ideal_distributions(
        scenario.free_state(),
        scenario.spatial_grid(),
        scenario.outputs.time_axis(),
        scenario.outputs.refine,
    )
    for kind, distribution in distributions.items():
        footer = {"integral": distribution.integral(), **distribution.metadata}
        writer.write_table(
            f"dist_{kind.value}.csv",
            _distribution_frame(distribution, scale),
            footer,
        )


def _sweep_frame(result: SweepResult, scale: float) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "abscissa": [row.abscissa * scale for row in result.rows],
            "V0": [(row.v0 or 0.0) / scale for row in result.rows],
            "mean_t": [row.mean_t * scale for row in result.rows],
            "detected_fraction": [row.detected_fraction for row in result.rows],
            "reflected": [int(row.reflection_flag) for row in result.rows],
            "l1_to_zeno": [row.l1_to_zeno_ideal for row in result.rows],
            "residual": [row.residual * scale for row in result.rows],
        },
    )


def run_sweep(
    args: argparse.Namespace,
    scenario: Scenario,
    writer: ResultWriter,
) -> None:
    """Sweep the coupling of one model and write the delay-law table."""
    model = _model(args, scenario)
    grid = scenario.spatial_grid()
    state = scenario.free_state()
    t_start = scenario.t_start
    configured = scenario.sweep.bounds(model)
    if configured is None:
        diagnostics = packet_diagnostics(state.wave_function(grid, t_start))
        ladder = default_ladder(diagnostics, scenario.sweep.per_decade)
    else:
        ladder = log_ladder(*configured, scenario.sweep.per_decade)
    zeno = zeno_ideal_distribution(
        state,
        grid,
        scenario.outputs.time_axis(),
        refine=scenario.outputs.refine,
    )
    base = sweep_base(
        model,
        scenario.schedule.t_end,
        float(ladder[0]),
        reporting_dt=scenario.schedule.delta_t,
        alpha=scenario.schedule.alpha,
    )

    async def sweep() -> SweepResult:
        async with ZenoHarness(workers=args.workers) as harness:
            return await harness.delay_sweep(state, grid, base, ladder, t_start, zeno)

    result = asyncio.run(sweep())
    scale = scenario.units.microseconds(1.0)
    writer.write_table(
        "sweep.csv",
        _sweep_frame(result, scale),
        {
            "model": model,
            "slope": result.slope,
            "slope_stderr": result.slope_stderr,
            "expected_slope": result.expected_slope,
            "intercept_us": result.intercept * scale,
            "zeno_mean_us": result.zeno_mean * scale,
            "zeno_width_us": result.zeno_width * scale,
            "fitted_rows": result.fitted_rows,
        },
    )


def _bounds_frame(series: Sequence[BoundSeries], scale: float) -> pd.DataFrame:
    return pd.concat(
        [
            pd.DataFrame(
                {
                    "V0": np.full(len(item.times), item.v0 / scale),
                    "t": item.times * scale,
                    "dH0_over_V0": item.ratio_dh0_v0,
                    "comm_lhs": item.commutator_lhs,
                    "bound_rhs": item.bound_rhs,
                    "N_plus": item.n_plus,
                },
            )
            for item in series
        ],
        ignore_index=True,
    )


def run_bounds(
    args: argparse.Namespace,
    scenario: Scenario,
    writer: ResultWriter,
) -> None:
    """Track the commutator bound for the configured V0 ladder."""
    if scenario.bounds is None:
        msg = f"Scenario {scenario.name!r} has no [bounds] section."
        raise ScenarioError(msg)
    bounds = scenario.bounds
    grid = scenario.spatial_grid()
    state = scenario.free_state()
    t_start = scenario.t_start
    couplings = bound_couplings(state, grid, t_start, bounds.factors)

    async def ladder() -> list[BoundSeries]:
        async with ZenoHarness(workers=args.workers) as harness:
            return await harness.bound_ladder(
                state,
                grid,
                couplings,
                bounds.sample_dt,
                t_start,
                bounds.t_end or scenario.schedule.t_end,
            )

    series = asyncio.run(ladder())
    if failed := [item.v0 for item in series if not item.holds]:
        msg = (
            "The commutator bound is violated for V0 = "
            + ", ".join(f"{v0:.6g}" for v0 in failed)
            + " (natural units)."
        )
        raise BoundViolationError(msg)
    writer.write_table(
        "bounds.csv",
        _bounds_frame(series, scenario.units.microseconds(1.0)),
        {
            "bound_holds": True,
            **{f"max_ratio_{index}": item.max_ratio for index, item in enumerate(series)},
        },
    )


def report_validation(scenario: Scenario) -> str:
    """Return a readable summary of the validation checks."""
    report = scenario.validation
    if report is None:
        msg = f"Scenario {scenario.name!r} was not validated."
        raise ScenarioError(msg)
    scale = scenario.units.microseconds(1.0)
    diagnostics = report.diagnostics
    lines = [
        f"scenario: {scenario.name}",
        f"hash: {scenario.scenario_hash}",
        f"time unit: {scale:.6g} us",
        f"t_start: {report.t_start * scale:.6g} us",
        f"k0: {diagnostics.k0:.6g}",
        f"mean_H0: {diagnostics.mean_H0:.6g}",
        f"delta_H0: {diagnostics.delta_H0:.6g}",
        f"e_max_99: {diagnostics.e_max_99:.6g}",
        f"neg_k_fraction: {diagnostics.neg_k_fraction:.3g}",
        f"right_norm at t_start: {report.right_norm_start:.3g}",
        f"boundary density: {report.boundary_density:.3g}",
    ]
    lines.extend(
        f"packet {index}: {clearance:.3g} spreads from x = 0,"
        f" {margin:.3g} spreads from the left edge"
        for index, (clearance, margin) in enumerate(
            zip(report.clearance, report.edge_margin, strict=True),
            start=1,
        )
    )
    return "\n".join(lines) + "\n"


COMMANDS: dict[str, Callable[[argparse.Namespace, Scenario, ResultWriter], None]] = {
    "run": run_record,
    "ideal": run_ideal,
    "sweep": run_sweep,
    "bounds": run_bounds,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Run a subcommand and return its exit status."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    writer = ResultWriter(args.out)
    started = datetime.now(timezone.utc)
    clock = time.perf_counter()
    finished = False
    try:
        scenario = load_scenario(args.scenario, args.override)
        if args.command == "validate":
            sys.stdout.write(report_validation(scenario))
            finished = True
            return ExitCode.OK
        COMMANDS[args.command](args, scenario, writer)
        manifest = RunManifest(
            command=args.command,
            scenario=scenario.name,
            scenario_hash=scenario.scenario_hash,
            version=VERSION,
            parameters={"model": getattr(args, "model", None), **scenario.parameters()},
            started=started.isoformat(),
            wall_clock=time.perf_counter() - clock,
        )
        writer.write_manifest(manifest)
        finished = True
    except ScenarioError as exception:
        LOGGER.error("Validation failed: %s", exception)  # noqa: TRY400
        return ExitCode.VALIDATION
    except BoundaryLeakError as exception:
        LOGGER.error("Numerical abort: %s", exception)  # noqa: TRY400
        return ExitCode.BOUNDARY_LEAK
    except ZenoArrivalError as exception:
        LOGGER.error("%s", exception)  # noqa: TRY400
        return ExitCode.FAILURE
    finally:
        if not finished:
            writer.discard()
    return ExitCode.OK
