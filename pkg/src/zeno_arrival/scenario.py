"""Scenario files: parsing, overrides, unit conversion and validation."""

from __future__ import annotations

import configparser
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING

from .const import (
    CONSTRUCTION_LEAK_THRESHOLD,
    LOGGER,
    NEGATIVE_MOMENTUM_LIMIT,
    START_TOLERANCE,
)
from .exceptions import ScenarioError, ZenoArrivalError
from .grid import absorber_norm, boundary_density, right_norm
from .models import (
    BoundsConfig,
    GridConfig,
    OutputConfig,
    PacketConfig,
    Scenario,
    ScheduleConfig,
    SweepConfig,
    UnitSystem,
    ValidationReport,
)
from .packets import find_start_time, packet_diagnostics
from .util import MASS_UNITS, parse_quantity, sha256_text

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping

    from .const import MeasurementModel
    from .measurement import MeasurementSchedule

SECTION_KEYS: dict[str, tuple[frozenset[str], frozenset[str]]] = {
    "scenario": (frozenset({"name", "description"}), frozenset({"name"})),
    "particle": (frozenset({"mass"}), frozenset({"mass"})),
    "grid": (GridConfig.KEYS, GridConfig.REQUIRED),
    "schedule": (ScheduleConfig.KEYS, ScheduleConfig.REQUIRED),
    "sweep": (SweepConfig.KEYS, SweepConfig.REQUIRED),
    "bounds": (BoundsConfig.KEYS, BoundsConfig.REQUIRED),
    "outputs": (OutputConfig.KEYS, OutputConfig.REQUIRED),
}
REQUIRED_SECTIONS = ("scenario", "particle", "grid", "schedule", "outputs")


def _is_packet_section(name: str) -> bool:
    base, _, index = name.partition(".")
    return base == "packet" and (not index or index.isdigit())


def _read(text: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(
        interpolation=None,
        inline_comment_prefixes=("#", ";"),
        default_section="__defaults__",
    )
    try:
        parser.read_string(text)
    except configparser.Error as exception:
        msg = f"Malformed scenario document: {exception}"
        raise ScenarioError(msg) from exception
    return parser


def apply_overrides(
    parser: configparser.ConfigParser,
    overrides: Iterable[str],
) -> None:
    """Apply ``section.key=value`` edits to a parsed document."""
    for override in overrides:
        target, separator, value = override.partition("=")
        section, _, key = target.strip().rpartition(".")
        if not separator or not section or not key:
            msg = f"Invalid override {override!r}; expected section.key=value."
            raise ScenarioError(msg)
        if not parser.has_section(section):
            if section not in SECTION_KEYS and not _is_packet_section(section):
                msg = f"Override {override!r} names the unknown section {section!r}."
                raise ScenarioError(msg)
            parser.add_section(section)
        parser.set(section, key.strip(), value.strip())


def canonical_document(parser: configparser.ConfigParser) -> str:
    """Return the document with sorted sections and keys."""
    lines = []
    for section in sorted(parser.sections()):
        lines.append(f"[{section}]")
        lines.extend(
            f"{key} = {' '.join(value.split())}"
            for key, value in sorted(parser.items(section))
        )
    return "\n".join(lines) + "\n"


def _check_keys(parser: configparser.ConfigParser) -> None:
    unknown_sections = [
        section
        for section in parser.sections()
        if section not in SECTION_KEYS and not _is_packet_section(section)
    ]
    if unknown_sections:
        msg = f"Unknown sections: {', '.join(sorted(unknown_sections))}."
        raise ScenarioError(msg)
    missing_sections = [
        section for section in REQUIRED_SECTIONS if not parser.has_section(section)
    ]
    if not any(_is_packet_section(section) for section in parser.sections()):
        missing_sections.append("packet")
    if missing_sections:
        msg = f"Missing sections: {', '.join(missing_sections)}."
        raise ScenarioError(msg)
    for section in parser.sections():
        allowed, required = (
            (PacketConfig.KEYS, PacketConfig.REQUIRED)
            if _is_packet_section(section)
            else SECTION_KEYS[section]
        )
        keys = set(parser[section])
        if unknown := sorted(keys - allowed):
            msg = f"Unknown keys in [{section}]: {', '.join(unknown)}."
            raise ScenarioError(msg)
        if missing := sorted(required - keys):
            msg = f"Missing keys in [{section}]: {', '.join(missing)}."
            raise ScenarioError(msg)


def _packet_sections(parser: configparser.ConfigParser) -> list[Mapping[str, str]]:
    def order(name: str) -> int:
        _, _, index = name.partition(".")
        return int(index) if index else 0

    names = sorted(
        (section for section in parser.sections() if _is_packet_section(section)),
        key=order,
    )
    return [parser[name] for name in names]


def parse_scenario(text: str, overrides: Iterable[str] = ()) -> Scenario:
    """Parse, convert and validate a scenario document."""
    parser = _read(text)
    apply_overrides(parser, overrides)
    _check_keys(parser)
    units = UnitSystem(parse_quantity(parser["particle"]["mass"], MASS_UNITS, "mass"))
    if not units.mass > 0:
        msg = f"Invalid particle mass {units.mass}! Must be positive."
        raise ScenarioError(msg)
    try:
        scenario = Scenario(
            name=parser["scenario"]["name"],
            description=parser["scenario"].get("description", ""),
            units=units,
            packets=[
                PacketConfig.from_config(section, units)
                for section in _packet_sections(parser)
            ],
            grid=GridConfig.from_config(parser["grid"], units),
            schedule=ScheduleConfig.from_config(parser["schedule"], units),
            outputs=OutputConfig.from_config(parser["outputs"], units),
            sweep=SweepConfig.from_config(parser["sweep"], units)
            if parser.has_section("sweep")
            else SweepConfig(),
            bounds=BoundsConfig.from_config(parser["bounds"], units)
            if parser.has_section("bounds")
            else None,
            scenario_hash=sha256_text(canonical_document(parser)),
        )
    except KeyError as exception:
        msg = f"Missing scenario value {exception}."
        raise ScenarioError(msg) from exception
    scenario.validation = validate_scenario(scenario)
    return scenario


def _validate_outputs(scenario: Scenario) -> None:
    outputs = scenario.outputs
    if not outputs.t_max > outputs.t_min:
        msg = "outputs.t_max must exceed outputs.t_min."
        raise ScenarioError(msg)
    if outputs.samples < 2 or outputs.refine < 1:
        msg = "outputs.samples must be at least 2 and outputs.refine at least 1."
        raise ScenarioError(msg)
    if scenario.bounds is not None and not scenario.bounds.sample_dt > 0:
        msg = "bounds.sample_dt must be positive."
        raise ScenarioError(msg)
    if scenario.sweep.per_decade < 1:
        msg = "sweep.per_decade must be at least 1."
        raise ScenarioError(msg)


def check_model(scenario: Scenario, model: MeasurementModel) -> MeasurementSchedule:
    """Return the validated schedule of ``model`` for a single run."""
    try:
        schedule = scenario.schedule.to_schedule(model)
        schedule.validate(scenario.t_start)
    except ZenoArrivalError as exception:
        msg = (
            f"Scenario {scenario.name!r} cannot run the {model.value} model:"
            f" {exception}"
        )
        raise ScenarioError(msg) from exception
    return schedule


def validate_scenario(scenario: Scenario) -> ValidationReport:
    """Check clearance, momentum support and the schedule before simulating."""
    _validate_outputs(scenario)
    try:
        grid = scenario.spatial_grid()
        state = scenario.free_state()
        t_start = scenario.schedule.t_start
        if t_start is None:
            t_start = find_start_time(state, grid)
        psi0 = state.wave_function(grid, t_start)
        scenario.schedule.to_schedule().validate(t_start)
    except ZenoArrivalError as exception:
        msg = f"Scenario {scenario.name!r} failed validation: {exception}"
        raise ScenarioError(msg) from exception

    if (layer_norm := absorber_norm(psi0)) >= CONSTRUCTION_LEAK_THRESHOLD:
        msg = (
            f"Norm {layer_norm:.3g} inside the absorbing layers at t_start violates"
            f" absorber_norm < {CONSTRUCTION_LEAK_THRESHOLD:.0e}."
        )
        raise ScenarioError(msg)
    diagnostics = packet_diagnostics(psi0)
    if diagnostics.neg_k_fraction >= NEGATIVE_MOMENTUM_LIMIT:
        msg = (
            f"neg_k_fraction = {diagnostics.neg_k_fraction:.3g} violates"
            f" neg_k_fraction < {NEGATIVE_MOMENTUM_LIMIT:.0e}."
        )
        raise ScenarioError(msg)
    tolerance = scenario.schedule.start_tolerance or START_TOLERANCE
    norm_right = right_norm(psi0)
    if norm_right >= tolerance:
        msg = (
            f"right_norm at t_start = {norm_right:.3g} violates"
            f" right_norm < {tolerance:.0e}."
        )
        raise ScenarioError(msg)

    report = ValidationReport(
        t_start=t_start,
        right_norm_start=norm_right,
        diagnostics=diagnostics,
        clearance=[-part.center(t_start) / part.spread(t_start) for part in state.parts],
        edge_margin=[
            (part.center(t_start) - grid.x_min) / part.spread(t_start)
            for part in state.parts
        ],
        boundary_density=boundary_density(psi0),
    )
    LOGGER.info(
        "Scenario %s valid: t_start %.6g, neg_k_fraction %.3g",
        scenario.name,
        t_start,
        diagnostics.neg_k_fraction,
    )
    return report


def read_scenario_text(name_or_path: str) -> str:
    """Return the text of a scenario file or of a shipped scenario by name."""
    path = Path(name_or_path)
    if path.is_file():
        return path.read_text(encoding="utf-8")
    shipped = resources.files("zeno_arrival") / "scenarios" / f"{name_or_path}.ini"
    if shipped.is_file():
        return shipped.read_text(encoding="utf-8")
    msg = f"No scenario file or shipped scenario named {name_or_path!r}."
    raise ScenarioError(msg)


def load_scenario(name_or_path: str, overrides: Iterable[str] = ()) -> Scenario:
    """Read and parse a scenario file or shipped scenario."""
    return parse_scenario(read_scenario_text(name_or_path), overrides)
