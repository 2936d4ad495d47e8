"""Delay-law sweeps, commutator-bound series and parameter mappings."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy.stats import linregress

from .const import (
    LOGGER,
    MIN_DETECTED_FRACTION,
    NON_REFLECTIVE_DETECTION,
    RUN_LEAK_THRESHOLD,
    WEAK_DRIVING_RATIO,
    MeasurementModel,
)
from .distributions import (
    TimeDistribution,
    distribution_width,
    kijowski_distribution,
    l1_distance,
    mean_arrival,
    normalize_record,
)
from .exceptions import ScheduleError, SweepError
from .measurement import (
    MeasurementSchedule,
    bound_sample,
    operator_normalize,
    run_measurement,
)
from .packets import packet_diagnostics

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from .grid import RealArray, SpatialGrid, WaveFunction
    from .packets import FreeState, PacketDiagnostics

DEFAULT_ALPHA = 20.0


@dataclass(slots=True)
# pylint: disable-next=too-many-instance-attributes
class SweepRow:
    """Outcome of one run in a coupling sweep.

    Attributes
    ----------
    model: Measurement model of the run.
    abscissa: delta_t for pulsed models, hbar / 2 V0 for the continuous one.
    delta_t: Pulse period or reporting interval.
    v0: Imaginary potential strength, if any.
    alpha: V0 * delta_t, if V0 is set.
    mean_t: Mean detection time, NaN when nothing was detected.
    detected_fraction: Norm removed over the run.
    reflection_flag: Whether the run left more than 1% of the norm behind.
    l1_to_zeno_ideal: L1 distance of the normalized record to the Zeno limit.
    residual: mean_t minus the delay law, the Zeno-limit mean plus the expected
     slope times the abscissa. Reflection makes it negative.

    """

    model: MeasurementModel
    abscissa: float
    delta_t: float
    v0: float | None
    alpha: float | None
    mean_t: float
    detected_fraction: float
    reflection_flag: bool
    l1_to_zeno_ideal: float
    residual: float = math.nan

    @property
    def non_reflective(self) -> bool:
        """Return whether the row enters the delay-law fit."""
        return (
            not self.reflection_flag
            and self.detected_fraction > NON_REFLECTIVE_DETECTION
        )


@dataclass(slots=True)
# pylint: disable-next=too-many-instance-attributes
class SweepResult:
    """Rows of a coupling sweep with the fitted delay line."""

    model: MeasurementModel
    rows: list[SweepRow]
    slope: float
    intercept: float
    slope_stderr: float
    zeno_mean: float
    zeno_width: float
    fitted_rows: int

    @property
    def expected_slope(self) -> float:
        """Return the slope predicted by the mean lifetime in x > 0."""
        return delay_law_slope(self.model)

    @property
    def intercept_offset(self) -> float:
        """Return the intercept minus the Zeno-limit mean, in units of its width."""
        return (self.intercept - self.zeno_mean) / self.zeno_width


@dataclass(slots=True)
class BoundSeries:
    """Commutator bound diagnostics along a continuous run."""

    v0: float
    times: RealArray
    ratio_dh0_v0: RealArray
    commutator_lhs: RealArray
    bound_rhs: RealArray
    n_plus: RealArray
    norm: RealArray

    @property
    def holds(self) -> bool:
        """Return whether |<[V, H0]>| stays below its bound at every sample."""
        return bool(
            np.all(self.commutator_lhs <= self.bound_rhs * (1 + 1e-6) + 1e-14),
        )

    @property
    def max_ratio(self) -> float:
        """Return the largest Delta H0 / V0 over the run."""
        return float(self.ratio_dh0_v0.max())

    @property
    def spread_envelope(self) -> RealArray:
        """Return the largest Delta H0 / V0 the absorbing dynamics allow.

        The damped generator never grows, so Delta H0 exceeds its initial
        value only through the lost norm and the spread V0 sqrt(N+ (1 - N+))
        of the potential itself.
        """
        return self.ratio_dh0_v0[0] / np.sqrt(self.norm / self.norm[0]) + np.sqrt(
            self.n_plus * (1 - self.n_plus),
        )


@dataclass(slots=True)
class SchulmanMapping:
    """Pulsed parameters equivalent to a weakly driven decaying transition.

    Attributes
    ----------
    v0: Effective imaginary potential hbar Omega^2 / 2 gamma.
    delta_t: Equivalent pulse period hbar / V0.
    product: delta_t * V0, identically one.
    schulman_delta_t: Period 4 / gamma of the two-level pulsed relation.
    weak_driving: Whether gamma / Omega is small.

    """

    v0: float
    delta_t: float
    product: float
    schulman_delta_t: float
    weak_driving: bool


@dataclass(slots=True)
class ModelComparison:
    """Pulsed against continuous mean times at delta_t = hbar / V0."""

    delta_t: RealArray
    projection_mean: RealArray
    continuous_mean: RealArray
    tolerance: float
    pairs: int = field(init=False)

    def __post_init__(self) -> None:
        """Count matched pairs."""
        self.pairs = len(self.delta_t)

    @property
    def agree(self) -> bool:
        """Return whether every matched pair agrees within the tolerance."""
        return bool(
            np.all(np.abs(self.projection_mean - self.continuous_mean) <= self.tolerance),
        )


@dataclass(slots=True)
class NormalizationClosure:
    """Zeno-limit record of a k-weighted state against the Kijowski density."""

    operational: TimeDistribution
    kijowski: TimeDistribution
    constant: float
    l1: float


def delay_law_slope(model: MeasurementModel) -> float:
    """Return the slope of mean_t against the sweep abscissa in the Zeno limit."""
    return 1.0 if model is MeasurementModel.CONTINUOUS else 0.5


def log_ladder(low: float, high: float, per_decade: int = 8) -> RealArray:
    """Return at least 4 logarithmically spaced abscissae from low to high."""
    if not 0 < low < high:
        msg = f"Invalid ladder range [{low}, {high}]! Need 0 < low < high."
        raise SweepError(msg)
    decades = math.log10(high / low)
    return np.logspace(
        math.log10(low),
        math.log10(high),
        max(round(per_decade * decades) + 1, 4),
    )


def default_ladder(
    diagnostics: PacketDiagnostics,
    per_decade: int = 8,
    span: tuple[float, float] = (0.1, 10.0),
) -> RealArray:
    """Return logarithmic abscissae spanning ``span`` times hbar / Delta H0."""
    low, high = (bound / diagnostics.delta_H0 for bound in span)
    return log_ladder(low, high, per_decade)


def sweep_base(
    model: MeasurementModel,
    t_end: float,
    abscissa: float,
    reporting_dt: float | None = None,
    alpha: float | None = None,
) -> MeasurementSchedule:
    """Return the schedule a sweep starts from at its first abscissa.

    The continuous model reports every ``reporting_dt`` (the abscissa when
    unset); kicks keep ``alpha`` fixed along the ladder.
    """
    if model is MeasurementModel.PROJECTION:
        return MeasurementSchedule.build(model, t_end=t_end, delta_t=abscissa)
    if model is MeasurementModel.KICKED:
        return MeasurementSchedule.build(
            model,
            t_end=t_end,
            delta_t=abscissa,
            alpha=alpha or DEFAULT_ALPHA,
        )
    return MeasurementSchedule.build(
        model,
        t_end=t_end,
        delta_t=reporting_dt or abscissa,
        v0=1 / (2 * abscissa),
    )


def schedule_for(
    base: MeasurementSchedule,
    abscissa: float,
) -> MeasurementSchedule:
    """Return the schedule of one sweep row.

    The abscissa is the pulse period for projections, the pulse period at
    fixed alpha for kicks, and hbar / 2 V0 for the continuous model.
    """
    if base.model is MeasurementModel.PROJECTION:
        return base.with_coupling(delta_t=abscissa)
    if base.model is MeasurementModel.KICKED:
        alpha = base.alpha or base.kick_ratio or DEFAULT_ALPHA
        return MeasurementSchedule.build(
            base.model,
            t_end=base.t_end,
            delta_t=abscissa,
            alpha=alpha,
        )
    return base.with_coupling(v0=1 / (2 * abscissa))


# pylint: disable-next=too-many-arguments
def sweep_row(  # noqa: PLR0913
    state: FreeState,
    grid: SpatialGrid,
    base: MeasurementSchedule,
    abscissa: float,
    t_start: float,
    zeno: TimeDistribution,
    leak_threshold: float = RUN_LEAK_THRESHOLD,
) -> SweepRow:
    """Run one coupling of a sweep."""
    schedule = schedule_for(base, abscissa)
    record = run_measurement(
        state.wave_function(grid, t_start),
        schedule,
        leak_threshold=leak_threshold,
    )
    mean_t = l1 = math.nan
    if record.detected_fraction > MIN_DETECTED_FRACTION:
        operational = normalize_record(record)
        mean_t = mean_arrival(operational)
        l1 = l1_distance(operational, zeno)
    return SweepRow(
        model=schedule.model,
        abscissa=abscissa,
        delta_t=schedule.delta_t,
        v0=schedule.v0,
        alpha=schedule.kick_ratio if schedule.v0 else None,
        mean_t=mean_t,
        detected_fraction=record.detected_fraction,
        reflection_flag=record.reflection_flag,
        l1_to_zeno_ideal=l1,
    )


def fit_delay_law(rows: Sequence[SweepRow]) -> tuple[float, float, float]:
    """Fit mean_t against the abscissa over the non-reflective rows.

    Returns the slope, the intercept and the standard error of the slope.
    """
    fitted = [row for row in rows if row.non_reflective]
    if len(fitted) < 2:
        msg = (
            f"Only {len(fitted)} of {len(rows)} rows are non-reflective;"
            " the delay law cannot be fitted."
        )
        raise SweepError(msg)
    fit = linregress(
        [row.abscissa for row in fitted],
        [row.mean_t for row in fitted],
    )
    return float(fit.slope), float(fit.intercept), float(fit.stderr)


def assemble_sweep(
    model: MeasurementModel,
    rows: Iterable[SweepRow],
    zeno: TimeDistribution,
) -> SweepResult:
    """Sort rows by abscissa, fit the delay line and attach residuals to the law."""
    ordered = sorted(rows, key=lambda row: row.abscissa)
    slope, intercept, stderr = fit_delay_law(ordered)
    zeno_mean = mean_arrival(zeno)
    law_slope = delay_law_slope(model)
    for row in ordered:
        row.residual = row.mean_t - (zeno_mean + law_slope * row.abscissa)
    LOGGER.debug("Delay line for %s: slope %.4g, intercept %.6g", model, slope, intercept)
    return SweepResult(
        model=model,
        rows=ordered,
        slope=slope,
        intercept=intercept,
        slope_stderr=stderr,
        zeno_mean=zeno_mean,
        zeno_width=distribution_width(zeno),
        fitted_rows=sum(row.non_reflective for row in ordered),
    )


# pylint: disable-next=too-many-arguments
def delay_sweep(  # noqa: PLR0913
    state: FreeState,
    grid: SpatialGrid,
    base: MeasurementSchedule,
    ladder: Iterable[float],
    t_start: float,
    zeno: TimeDistribution,
    leak_threshold: float = RUN_LEAK_THRESHOLD,
) -> SweepResult:
    """Run every coupling of ``ladder`` in turn and fit the delay line."""
    abscissae = list(ladder)
    if len(abscissae) < 4:
        msg = f"A sweep needs at least 4 couplings, got {len(abscissae)}."
        raise SweepError(msg)
    rows = [
        sweep_row(state, grid, base, abscissa, t_start, zeno, leak_threshold)
        for abscissa in abscissae
    ]
    return assemble_sweep(base.model, rows, zeno)


def compare_models(
    projection: SweepResult,
    continuous: SweepResult,
) -> ModelComparison:
    """Pair projection rows with continuous runs at hbar / 2 V0 = delta_t / 2."""
    reference = [row for row in continuous.rows if row.non_reflective]
    samples = [row for row in projection.rows if row.non_reflective]
    abscissae = np.array([row.abscissa for row in reference])
    means = np.array([row.mean_t for row in reference])
    matched = [
        row
        for row in samples
        if len(abscissae) and abscissae[0] <= row.abscissa / 2 <= abscissae[-1]
    ]
    residuals = [
        abs(row.residual) for row in (*reference, *samples) if math.isfinite(row.residual)
    ]
    return ModelComparison(
        delta_t=np.array([row.abscissa for row in matched]),
        projection_mean=np.array([row.mean_t for row in matched]),
        continuous_mean=np.interp(
            [row.abscissa / 2 for row in matched],
            abscissae,
            means,
        )
        if matched
        else np.array([]),
        tolerance=2 * max(residuals, default=0.0),
    )


# pylint: disable-next=too-many-arguments
def zeno_bound_series(  # noqa: PLR0913
    state: FreeState,
    grid: SpatialGrid,
    v0: float,
    sample_dt: float,
    t_start: float,
    t_end: float,
    leak_threshold: float = RUN_LEAK_THRESHOLD,
) -> BoundSeries:
    """Track Delta H0 / V0 and the commutator bound along a continuous run."""
    schedule = MeasurementSchedule.build(
        MeasurementModel.CONTINUOUS,
        t_end=t_end,
        delta_t=sample_dt,
        v0=v0,
    )
    times: list[float] = []
    samples = []

    def observe(psi: WaveFunction) -> None:
        times.append(psi.time)
        samples.append(bound_sample(psi, v0))

    run_measurement(
        state.wave_function(grid, t_start),
        schedule,
        leak_threshold=leak_threshold,
        observer=observe,
    )
    return BoundSeries(
        v0=v0,
        times=np.array(times),
        ratio_dh0_v0=np.array([sample.delta_h0 / v0 for sample in samples]),
        commutator_lhs=np.array([sample.lhs for sample in samples]),
        bound_rhs=np.array([sample.rhs for sample in samples]),
        n_plus=np.array([sample.n_plus for sample in samples]),
        norm=np.array([sample.norm for sample in samples]),
    )


def bound_couplings(
    state: FreeState,
    grid: SpatialGrid,
    t_start: float,
    factors: Iterable[float],
) -> list[float]:
    """Return V0 values as multiples of the initial kinetic-energy spread."""
    spread = packet_diagnostics(state.wave_function(grid, t_start)).delta_H0
    return [factor * spread for factor in factors]


def schulman_map(omega: float, gamma: float) -> SchulmanMapping:
    """Map a Rabi frequency and decay rate onto V0 and delta_t."""
    if omega <= 0 or gamma <= 0:
        msg = f"Omega and gamma must be positive, got {omega} and {gamma}."
        raise ScheduleError(msg)
    weak_driving = gamma / omega <= WEAK_DRIVING_RATIO
    if not weak_driving:
        LOGGER.warning(
            "gamma / Omega = %.3g is not small; the effective potential assumes"
            " weak driving",
            gamma / omega,
        )
    v0 = omega**2 / (2 * gamma)
    delta_t = 2 * gamma / omega**2
    return SchulmanMapping(
        v0=v0,
        delta_t=delta_t,
        product=v0 * delta_t,
        schulman_delta_t=4 / gamma,
        weak_driving=weak_driving,
    )


# pylint: disable-next=too-many-arguments
def normalization_closure(  # noqa: PLR0913
    state: FreeState,
    grid: SpatialGrid,
    t_start: float,
    schedule: MeasurementSchedule,
    power: float = -0.5,
    leak_threshold: float = RUN_LEAK_THRESHOLD,
) -> NormalizationClosure:
    """Measure a k**power-weighted state and compare with Kijowski's density.

    With power = -1/2 the Zeno-limit record of the weighted state tends to the
    Kijowski density of the untransformed state, which is evaluated on the
    record's attribution times.
    """
    transformed, constant = operator_normalize(state.wave_function(grid, t_start), power)
    operational = normalize_record(
        run_measurement(transformed, schedule, leak_threshold=leak_threshold),
    )
    kijowski = kijowski_distribution(state, grid, operational.t_values)
    return NormalizationClosure(
        operational=operational,
        kijowski=kijowski,
        constant=constant,
        l1=l1_distance(operational, kijowski),
    )
