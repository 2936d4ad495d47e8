"""Scenario configuration and run bookkeeping models."""

from __future__ import annotations

import cmath
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Any, ClassVar

import numpy as np

from .const import HBAR, LENGTH_UNIT, MeasurementModel
from .grid import SpatialGrid, make_grid
from .measurement import MeasurementSchedule
from .packets import FreeState, GaussianSpec, PacketDiagnostics
from .util import (
    LENGTH_UNITS,
    TIME_UNITS,
    VELOCITY_UNITS,
    parse_list,
    parse_number,
    parse_quantity,
    parse_rate,
    sha256_file,
    to_enum,
)

if TYPE_CHECKING:
    from collections.abc import Mapping
    from pathlib import Path
    from typing import Self

    from .grid import RealArray


@dataclass(frozen=True, slots=True)
class UnitSystem:
    """Conversion between SI and natural units for one particle mass.

    Lengths are measured in L0 = 1 um and times in T0 = m L0^2 / hbar, which
    makes hbar = m = 1.
    """

    mass: float

    @property
    def length_scale(self) -> float:
        """Return L0 in metres."""
        return LENGTH_UNIT

    @property
    def time_scale(self) -> float:
        """Return T0 in seconds."""
        return self.mass * LENGTH_UNIT**2 / HBAR

    @property
    def velocity_scale(self) -> float:
        """Return L0 / T0 in metres per second."""
        return self.length_scale / self.time_scale

    def length(self, metres: float) -> float:
        """Convert a length from metres."""
        return metres / self.length_scale

    def time(self, seconds: float) -> float:
        """Convert a time from seconds."""
        return seconds / self.time_scale

    def velocity(self, metres_per_second: float) -> float:
        """Convert a velocity from metres per second."""
        return metres_per_second / self.velocity_scale

    def rate(self, per_second: float) -> float:
        """Convert V0 / hbar from 1/s into the natural-unit V0."""
        return per_second * self.time_scale

    def microseconds(self, time: float) -> float:
        """Convert a natural-unit time to microseconds."""
        return time * self.time_scale / 1e-6


def _length(section: Mapping[str, str], key: str, units: UnitSystem) -> float:
    return units.length(parse_quantity(section[key], LENGTH_UNITS, key))


def _time(section: Mapping[str, str], key: str, units: UnitSystem) -> float:
    return units.time(parse_quantity(section[key], TIME_UNITS, key))


def _optional_time(
    section: Mapping[str, str],
    key: str,
    units: UnitSystem,
) -> float | None:
    return _time(section, key, units) if key in section else None


@dataclass(slots=True)
class PacketConfig:
    """One Gaussian packet of the initial state, in natural units.

    Attributes
    ----------
    x_focus: Centre at the focus time.
    t_focus: Time of minimal uncertainty.
    delta_x: Position spread at the focus.
    velocity: Mean velocity.
    weight: Modulus of the superposition weight.
    phase: Phase of the superposition weight in radians.

    """

    KEYS: ClassVar[frozenset[str]] = frozenset(
        {"x_focus", "t_focus", "delta_x", "velocity", "weight", "phase"},
    )
    REQUIRED: ClassVar[frozenset[str]] = frozenset({"x_focus", "delta_x", "velocity"})

    x_focus: float
    t_focus: float
    delta_x: float
    velocity: float
    weight: float = 1.0
    phase: float = 0.0

    @classmethod
    def from_config(cls, section: Mapping[str, str], units: UnitSystem) -> Self:
        """Initialize from a scenario section."""
        return cls(
            x_focus=_length(section, "x_focus", units),
            t_focus=_optional_time(section, "t_focus", units) or 0.0,
            delta_x=_length(section, "delta_x", units),
            velocity=units.velocity(
                parse_quantity(section["velocity"], VELOCITY_UNITS, "velocity"),
            ),
            weight=parse_number(section.get("weight", "1"), "weight"),
            phase=parse_number(section.get("phase", "0"), "phase"),
        )

    def to_spec(self) -> GaussianSpec:
        """Return the analytic packet."""
        return GaussianSpec(
            x_focus=self.x_focus,
            t_focus=self.t_focus,
            delta_x=self.delta_x,
            v_mean=self.velocity,
            weight=cmath.rect(self.weight, self.phase),
        )


@dataclass(slots=True)
class GridConfig:
    """Simulation grid in natural units."""

    KEYS: ClassVar[frozenset[str]] = frozenset(
        {"x_min", "x_max", "n_points", "absorber_width"},
    )
    REQUIRED: ClassVar[frozenset[str]] = frozenset({"x_min", "x_max", "n_points"})

    x_min: float
    x_max: float
    n_points: int
    absorber_width: float = 0.0

    @classmethod
    def from_config(cls, section: Mapping[str, str], units: UnitSystem) -> Self:
        """Initialize from a scenario section."""
        points = parse_number(section["n_points"], "n_points")
        return cls(
            x_min=_length(section, "x_min", units),
            x_max=_length(section, "x_max", units),
            n_points=int(points),
            absorber_width=_length(section, "absorber_width", units)
            if "absorber_width" in section
            else 0.0,
        )

    def build(self) -> SpatialGrid:
        """Return the spatial grid."""
        return make_grid(self.x_min, self.x_max, self.n_points, self.absorber_width)


@dataclass(slots=True)
# pylint: disable-next=too-many-instance-attributes
class ScheduleConfig:
    """Measurement schedule of a scenario in natural units.

    Attributes
    ----------
    model: Default measurement model.
    t_end: End of every run.
    delta_t: Pulse period or reporting interval.
    v0: Imaginary potential strength.
    alpha: Link delta_t = alpha / V0.
    inner_dt: Split-operator step of the continuous model.
    t_start: Explicit start time; found from the packet clearance if unset.
    start_tolerance: Largest norm allowed in x >= 0 at the start time.

    """

    KEYS: ClassVar[frozenset[str]] = frozenset(
        {
            "model",
            "t_end",
            "delta_t",
            "v0",
            "alpha",
            "inner_dt",
            "t_start",
            "start_tolerance",
        },
    )
    REQUIRED: ClassVar[frozenset[str]] = frozenset({"model", "t_end"})

    model: MeasurementModel
    t_end: float
    delta_t: float | None = None
    v0: float | None = None
    alpha: float | None = None
    inner_dt: float | None = None
    t_start: float | None = None
    start_tolerance: float | None = None

    @classmethod
    def from_config(cls, section: Mapping[str, str], units: UnitSystem) -> Self:
        """Initialize from a scenario section."""
        return cls(
            model=to_enum(MeasurementModel, section["model"], "model"),
            t_end=_time(section, "t_end", units),
            delta_t=_optional_time(section, "delta_t", units),
            v0=units.rate(parse_rate(section["v0"], "v0")) if "v0" in section else None,
            alpha=parse_number(section["alpha"], "alpha") if "alpha" in section else None,
            inner_dt=_optional_time(section, "inner_dt", units),
            t_start=_optional_time(section, "t_start", units),
            start_tolerance=parse_number(section["start_tolerance"], "start_tolerance")
            if "start_tolerance" in section
            else None,
        )

    def to_schedule(
        self,
        model: MeasurementModel | None = None,
        *,
        delta_t: float | None = None,
        v0: float | None = None,
    ) -> MeasurementSchedule:
        """Return the schedule for ``model``, optionally with another coupling."""
        model = model or self.model
        if model is MeasurementModel.PROJECTION:
            return MeasurementSchedule.build(
                model,
                t_end=self.t_end,
                delta_t=delta_t or self.delta_t,
            )
        return MeasurementSchedule.build(
            model,
            t_end=self.t_end,
            delta_t=delta_t or self.delta_t,
            v0=v0 or self.v0,
            alpha=None if v0 else self.alpha,
            inner_dt=self.inner_dt,
        )


@dataclass(slots=True)
class SweepConfig:
    """Coupling ladders of delay sweeps in natural units.

    Unset bounds fall back to the ladder around hbar / Delta H0.
    """

    KEYS: ClassVar[frozenset[str]] = frozenset(
        {"delta_t_min", "delta_t_max", "lifetime_min", "lifetime_max", "per_decade"},
    )
    REQUIRED: ClassVar[frozenset[str]] = frozenset()

    delta_t_min: float | None = None
    delta_t_max: float | None = None
    lifetime_min: float | None = None
    lifetime_max: float | None = None
    per_decade: int = 8

    @classmethod
    def from_config(cls, section: Mapping[str, str], units: UnitSystem) -> Self:
        """Initialize from a scenario section."""
        return cls(
            delta_t_min=_optional_time(section, "delta_t_min", units),
            delta_t_max=_optional_time(section, "delta_t_max", units),
            lifetime_min=_optional_time(section, "lifetime_min", units),
            lifetime_max=_optional_time(section, "lifetime_max", units),
            per_decade=int(parse_number(section.get("per_decade", "8"), "per_decade")),
        )

    def bounds(self, model: MeasurementModel) -> tuple[float, float] | None:
        """Return the configured abscissa range for ``model``, if complete."""
        if model is MeasurementModel.CONTINUOUS:
            low, high = self.lifetime_min, self.lifetime_max
        else:
            low, high = self.delta_t_min, self.delta_t_max
        if low is None or high is None:
            return None
        return low, high


@dataclass(slots=True)
class BoundsConfig:
    """Commutator-bound ladder in natural units."""

    KEYS: ClassVar[frozenset[str]] = frozenset({"factors", "sample_dt", "t_end"})
    REQUIRED: ClassVar[frozenset[str]] = frozenset({"sample_dt"})

    sample_dt: float
    factors: list[float] = field(default_factory=lambda: [3.0, 10.0, 30.0])
    t_end: float | None = None

    @classmethod
    def from_config(cls, section: Mapping[str, str], units: UnitSystem) -> Self:
        """Initialize from a scenario section."""
        return cls(
            sample_dt=_time(section, "sample_dt", units),
            factors=parse_list(section.get("factors", "3, 10, 30"), "factors"),
            t_end=_optional_time(section, "t_end", units),
        )


@dataclass(slots=True)
class OutputConfig:
    """Time axis of the ideal distributions in natural units."""

    KEYS: ClassVar[frozenset[str]] = frozenset({"t_min", "t_max", "samples", "refine"})
    REQUIRED: ClassVar[frozenset[str]] = frozenset({"t_min", "t_max"})

    t_min: float
    t_max: float
    samples: int = 2001
    refine: int = 1

    @classmethod
    def from_config(cls, section: Mapping[str, str], units: UnitSystem) -> Self:
        """Initialize from a scenario section."""
        return cls(
            t_min=_time(section, "t_min", units),
            t_max=_time(section, "t_max", units),
            samples=int(parse_number(section.get("samples", "2001"), "samples")),
            refine=int(parse_number(section.get("refine", "1"), "refine")),
        )

    def time_axis(self) -> RealArray:
        """Return the evenly spaced sample times."""
        return np.linspace(self.t_min, self.t_max, self.samples)


@dataclass(slots=True)
# pylint: disable-next=too-many-instance-attributes
class ValidationReport:
    """Checks made on a scenario before any simulation.

    Attributes
    ----------
    t_start: Start time of every run.
    right_norm_start: Norm in x >= 0 at the start time.
    diagnostics: Momentum moments of the initial state.
    clearance: Distance of each packet centre to x = 0, in spreads.
    edge_margin: Distance of each packet centre to the left grid edge, in spreads.
    boundary_density: Density at the grid edges at the start time.

    """

    t_start: float
    right_norm_start: float
    diagnostics: PacketDiagnostics
    clearance: list[float]
    edge_margin: list[float]
    boundary_density: float


@dataclass(slots=True)
# pylint: disable-next=too-many-instance-attributes
class Scenario:
    """Validated scenario with every parameter in natural units."""

    name: str
    description: str
    units: UnitSystem
    packets: list[PacketConfig]
    grid: GridConfig
    schedule: ScheduleConfig
    outputs: OutputConfig
    sweep: SweepConfig = field(default_factory=SweepConfig)
    bounds: BoundsConfig | None = None
    scenario_hash: str = ""
    validation: ValidationReport | None = None

    def free_state(self) -> FreeState:
        """Return the free reference state."""
        return FreeState.from_specs(packet.to_spec() for packet in self.packets)

    def spatial_grid(self) -> SpatialGrid:
        """Return the simulation grid."""
        return self.grid.build()

    @property
    def t_start(self) -> float:
        """Return the validated start time."""
        if self.validation is None:
            return self.schedule.t_start or 0.0
        return self.validation.t_start

    def parameters(self) -> dict[str, Any]:
        """Return the resolved natural-unit parameters."""
        return {
            "mass_kg": self.units.mass,
            "time_unit_s": self.units.time_scale,
            "length_unit_m": self.units.length_scale,
            "t_start": self.t_start,
            "packets": [asdict(packet) for packet in self.packets],
            "grid": asdict(self.grid),
            "schedule": asdict(self.schedule),
            "sweep": asdict(self.sweep),
            "bounds": None if self.bounds is None else asdict(self.bounds),
            "outputs": asdict(self.outputs),
        }


@dataclass(slots=True)
# pylint: disable-next=too-many-instance-attributes
class RunManifest:
    """Provenance of one command invocation."""

    command: str
    scenario: str
    scenario_hash: str
    version: str
    parameters: dict[str, Any]
    started: str
    wall_clock: float = 0.0
    outputs: list[dict[str, str]] = field(default_factory=list)

    def add_output(self, path: Path) -> None:
        """List an output file with its checksum."""
        self.outputs.append({"path": path.name, "sha256": sha256_file(path)})

    def to_dict(self) -> dict[str, Any]:
        """Return a JSON-serializable dictionary."""
        return asdict(self)
