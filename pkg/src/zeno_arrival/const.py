"""Time-of-arrival measurement simulator in the quantum Zeno regime."""

import logging
from enum import Enum

LOGGER = logging.getLogger(__package__)


class MeasurementModel(str, Enum):
    """Enum holding the operational measurement models."""

    PROJECTION = "projection"
    KICKED = "kicked"
    CONTINUOUS = "continuous"


class DistributionKind(str, Enum):
    """Enum holding the kinds of arrival-time distribution."""

    FLUX = "flux"
    KIJOWSKI = "kijowski"
    ZENO_IDEAL = "zeno_ideal"
    OPERATIONAL = "operational"


IDEAL_KINDS = frozenset(
    {DistributionKind.FLUX, DistributionKind.KIJOWSKI, DistributionKind.ZENO_IDEAL},
)

# Pinned physical constants (SI).
HBAR = 1.054571817e-34
ATOMIC_MASS_UNIT = 1.66053906660e-27
# Length unit of the natural-unit system, in metres.
LENGTH_UNIT = 1e-6

MIN_GRID_POINTS = 16
# Peak edge absorption rate in units of k_max / width; the fastest grid
# momentum crosses a layer with amplitude exp(-ABSORBER_STRENGTH / 3).
ABSORBER_STRENGTH = 45.0
CLEARANCE_SPREADS = 6.0
CONSTRUCTION_LEAK_THRESHOLD = 1e-10
RUN_LEAK_THRESHOLD = 1e-8
START_TOLERANCE = 1e-9
NEGATIVE_MOMENTUM_LIMIT = 1e-6

CONTINUOUS_STEPS_PER_LIFETIME = 20
KICKED_RATIO_WARNING = 10.0
ALPHA_WARNING = 10.0

REFLECTION_THRESHOLD = 0.01
NON_REFLECTIVE_DETECTION = 0.95
MIN_DETECTED_FRACTION = 1e-6

WEAK_DRIVING_RATIO = 0.1
ENERGY_QUANTILE = 0.99

CSV_SCHEMA = "schema=1"
CSV_FLOAT_FORMAT = "%.17g"


class ExitCode(int, Enum):
    """Enum holding the command-line exit statuses."""

    OK = 0
    FAILURE = 1
    VALIDATION = 2
    BOUNDARY_LEAK = 3
    USAGE = 4
