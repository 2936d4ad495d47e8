"""Time-of-arrival measurements of quantum wave packets in the Zeno regime."""

from .analysis import (
    BoundSeries,
    SchulmanMapping,
    SweepResult,
    SweepRow,
    delay_sweep,
    schulman_map,
    zeno_bound_series,
)
from .const import DistributionKind, MeasurementModel
from .distributions import (
    TimeDistribution,
    ideal_flux,
    kijowski_distribution,
    normalize_record,
    zeno_ideal_distribution,
)
from .exceptions import (
    BoundaryLeakError,
    NegativeMomentumError,
    ScenarioError,
    ZenoArrivalError,
)
from .grid import SpatialGrid, WaveFunction, make_grid
from .harness import ZenoHarness
from .measurement import DetectionRecord, MeasurementSchedule, run_measurement
from .models import RunManifest, Scenario
from .packets import FreeState, GaussianSpec, gaussian_packet, superpose
from .scenario import load_scenario, parse_scenario

__all__ = [
    "BoundSeries",
    "BoundaryLeakError",
    "DetectionRecord",
    "DistributionKind",
    "FreeState",
    "GaussianSpec",
    "MeasurementModel",
    "MeasurementSchedule",
    "NegativeMomentumError",
    "RunManifest",
    "Scenario",
    "ScenarioError",
    "SchulmanMapping",
    "SpatialGrid",
    "SweepResult",
    "SweepRow",
    "TimeDistribution",
    "WaveFunction",
    "ZenoArrivalError",
    "ZenoHarness",
    "delay_sweep",
    "gaussian_packet",
    "ideal_flux",
    "kijowski_distribution",
    "load_scenario",
    "make_grid",
    "normalize_record",
    "parse_scenario",
    "run_measurement",
    "schulman_map",
    "superpose",
    "zeno_bound_series",
]
