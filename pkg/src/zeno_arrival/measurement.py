"""Operational measurement dynamics producing detection records.

Three models remove norm from the detection region x >= 0:

* projection: the region is emptied every ``delta_t`` and the state evolves
  freely in between;
* kicked: the imaginary potential -i V0 Theta(x) acts as an impulse every
  ``delta_t``, damping the region by exp(-V0 delta_t);
* continuous: the imaginary potential acts at all times, integrated with a
  symmetric split-operator step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy import fft

from .const import (
    ALPHA_WARNING,
    CLEARANCE_SPREADS,
    CONTINUOUS_STEPS_PER_LIFETIME,
    KICKED_RATIO_WARNING,
    LOGGER,
    NEGATIVE_MOMENTUM_LIMIT,
    REFLECTION_THRESHOLD,
    RUN_LEAK_THRESHOLD,
    MeasurementModel,
)
from .exceptions import BoundaryLeakError, NegativeMomentumError, ScheduleError
from .grid import (
    RealArray,
    WaveFunction,
    boundary_density,
    damp_edges,
    edge_damping,
    from_momentum,
    right_norm,
    to_momentum,
    total_norm,
)
from .packets import free_evolve, mean_position, packet_diagnostics, position_spread

if TYPE_CHECKING:
    from collections.abc import Callable
    from typing import Self

    from .grid import SpatialGrid


@dataclass(frozen=True, slots=True)
# pylint: disable-next=too-many-instance-attributes
class MeasurementSchedule:
    """Measurement model, coupling and run horizon.

    Attributes
    ----------
    model: Measurement model.
    delta_t: Pulse period, or the reporting interval of the continuous model.
    t_end: Time at which the run stops.
    v0: Strength of the imaginary potential.
    alpha: Optional link delta_t = alpha / v0.
    inner_dt: Split-operator step of the continuous model. A whole number of
     inner steps fits in every reporting interval.

    """

    model: MeasurementModel
    delta_t: float
    t_end: float
    v0: float | None = None
    alpha: float | None = None
    inner_dt: float | None = None

    @classmethod
    # pylint: disable-next=too-many-arguments
    def build(
        cls,
        model: MeasurementModel,
        *,
        t_end: float,
        delta_t: float | None = None,
        v0: float | None = None,
        alpha: float | None = None,
        inner_dt: float | None = None,
    ) -> Self:
        """Resolve the alpha link and the inner step, then validate."""
        if alpha is not None:
            if delta_t is None and v0:
                delta_t = alpha / v0
            elif v0 is None and delta_t:
                v0 = alpha / delta_t
            elif delta_t is not None and v0 is not None:
                if not math.isclose(delta_t * v0, alpha, rel_tol=1e-9):
                    msg = (
                        f"delta_t * V0 = {delta_t * v0:.6g} contradicts"
                        f" alpha = {alpha:.6g}."
                    )
                    raise ScheduleError(msg)
        if delta_t is None:
            msg = "A schedule needs delta_t, or alpha together with V0."
            raise ScheduleError(msg)
        if model is MeasurementModel.CONTINUOUS and v0:
            inner_dt = _resolve_inner_dt(delta_t, v0, inner_dt)
        schedule = cls(
            model=model,
            delta_t=delta_t,
            t_end=t_end,
            v0=v0,
            alpha=alpha,
            inner_dt=inner_dt,
        )
        schedule.validate()
        return schedule

    def validate(self, t_start: float | None = None) -> None:
        """Check the schedule invariants."""
        if not self.delta_t > 0:
            msg = f"Invalid delta_t {self.delta_t}! Must be positive."
            raise ScheduleError(msg)
        if t_start is not None and not self.t_end > t_start:
            msg = f"t_end {self.t_end:.6g} must exceed the start time {t_start:.6g}."
            raise ScheduleError(msg)
        if self.model is MeasurementModel.PROJECTION:
            return
        if self.v0 is None or not self.v0 > 0:
            msg = f"The {self.model.value} model needs a positive V0, got {self.v0}."
            raise ScheduleError(msg)
        if self.alpha is not None and self.alpha < ALPHA_WARNING:
            LOGGER.warning(
                "alpha = %s is not large; the models are only expected to agree"
                " for alpha >> 1",
                self.alpha,
            )
        if self.model is MeasurementModel.KICKED:
            if self.kick_ratio < KICKED_RATIO_WARNING:
                LOGGER.warning(
                    "V0 * delta_t = %.3g; kicks only approximate projections"
                    " when V0 * delta_t >> 1",
                    self.kick_ratio,
                )
            return
        if self.inner_dt is None:
            msg = "The continuous model needs an inner step."
            raise ScheduleError(msg)
        _check_inner_dt(self.inner_dt, self.v0)
        if self.inner_dt > self.delta_t * (1 + 1e-12):
            msg = (
                f"Inner step {self.inner_dt:.6g} exceeds the reporting interval"
                f" {self.delta_t:.6g}."
            )
            raise ScheduleError(msg)

    @property
    def kick_ratio(self) -> float:
        """Return V0 * delta_t, which must be large for kicks to project."""
        return (self.v0 or 0.0) * self.delta_t

    @property
    def substeps(self) -> int:
        """Return the number of inner steps per reporting interval."""
        if self.inner_dt is None:
            return 1
        return max(1, round(self.delta_t / self.inner_dt))

    def with_coupling(
        self,
        *,
        delta_t: float | None = None,
        v0: float | None = None,
    ) -> MeasurementSchedule:
        """Return a copy with a new coupling, re-resolving derived values."""
        return MeasurementSchedule.build(
            self.model,
            t_end=self.t_end,
            delta_t=delta_t if delta_t is not None else self.delta_t,
            v0=v0 if v0 is not None else self.v0,
            inner_dt=None,
        )


def _check_inner_dt(inner_dt: float, v0: float) -> None:
    limit = 1 / (CONTINUOUS_STEPS_PER_LIFETIME * v0)
    if inner_dt > limit * (1 + 1e-12):
        msg = (
            f"Inner step {inner_dt:.6g} exceeds 1 / (20 V0) = {limit:.6g}"
            f" for V0 = {v0:.6g}."
        )
        raise ScheduleError(msg)


def _resolve_inner_dt(delta_t: float, v0: float, inner_dt: float | None) -> float:
    limit = 1 / (CONTINUOUS_STEPS_PER_LIFETIME * v0)
    target = min(limit, delta_t) if inner_dt is None else inner_dt
    if not target > 0:
        msg = f"Invalid inner step {target}! Must be positive."
        raise ScheduleError(msg)
    substeps = math.ceil(delta_t / target * (1 - 1e-12))
    return delta_t / substeps


@dataclass(slots=True)
# pylint: disable-next=too-many-instance-attributes
class DetectionRecord:
    """Norm removed per interval during a measurement run.

    Attributes
    ----------
    t_bins: Right edges of the reporting intervals.
    removed: Norm removed in each interval.
    survival: Norm not detected by each right edge, escaped norm included.
    detected_fraction: 1 - N(t_end).
    schedule: Schedule that produced the record.
    reflection_flag: Whether more than 1% of the norm survived once the free
     packet would have crossed x = 0.
    t_start: Start time of the run.
    initial_norm: Norm of the initial state.
    escaped: Norm taken out by the edge absorber on the x < 0 side.

    """

    t_bins: RealArray
    removed: RealArray
    survival: RealArray
    detected_fraction: float
    schedule: MeasurementSchedule
    reflection_flag: bool
    t_start: float
    initial_norm: float
    escaped: float = 0.0

    @property
    def attribution_times(self) -> RealArray:
        """Return the time each interval's removal is attributed to.

        Pulsed models remove norm at the right edge of an interval; the
        continuous model absorbs throughout it, so its removal is attributed
        to the interval midpoint.
        """
        if self.schedule.model is MeasurementModel.CONTINUOUS:
            return self.t_bins - 0.5 * self.schedule.delta_t
        return self.t_bins


def _damp_right(psi: WaveFunction, factor: float) -> tuple[WaveFunction, float]:
    """Multiply the detection region by ``factor`` and return the norm lost."""
    result = psi.copy()
    split = psi.grid.split_index
    removed = right_norm(psi) * (1 - factor**2)
    result.amplitudes[split:] *= factor
    return result, removed


def project_left(psi: WaveFunction) -> tuple[WaveFunction, float]:
    """Project onto x < 0 and return the state with the removed norm."""
    result = psi.copy()
    removed = right_norm(psi)
    result.amplitudes[psi.grid.split_index :] = 0
    return result, removed


def kick(psi: WaveFunction, v0: float, delta_t: float) -> tuple[WaveFunction, float]:
    """Apply the impulsive imaginary potential exp(-V0 delta_t Theta(x))."""
    result = psi.copy()
    removed = right_norm(psi) * -math.expm1(-2 * v0 * delta_t)
    result.amplitudes[psi.grid.split_index :] *= math.exp(-v0 * delta_t)
    return result, removed


def kicked_step(
    psi: WaveFunction,
    v0: float,
    delta_t: float,
) -> tuple[WaveFunction, float]:
    """Apply one kicked unit: the kick, then free evolution over ``delta_t``."""
    kicked, removed = kick(psi, v0, delta_t)
    return free_evolve(kicked, delta_t), removed


def continuous_step(
    psi: WaveFunction,
    v0: float,
    inner_dt: float,
) -> tuple[WaveFunction, float]:
    """Apply one symmetric split step for the free plus imaginary potential."""
    if v0 > 0:
        _check_inner_dt(inner_dt, v0)
    elif v0 < 0:
        msg = f"Invalid V0 {v0}! Must not be negative."
        raise ScheduleError(msg)
    half = math.exp(-0.5 * v0 * inner_dt)
    psi, first = _damp_right(psi, half)
    psi = free_evolve(psi, inner_dt)
    psi, second = _damp_right(psi, half)
    return psi, first + second


def _window_end(psi: WaveFunction) -> float:
    """Return the time by which the freely moving state has crossed x = 0."""
    diagnostics = packet_diagnostics(psi)
    if diagnostics.k0 <= 0:
        return math.inf
    crossing = max(-mean_position(psi), 0.0) / diagnostics.k0
    reach = CLEARANCE_SPREADS * (position_spread(psi) + diagnostics.delta_k * crossing)
    return psi.time + crossing + reach / diagnostics.k0


def _check_boundary(psi: WaveFunction, threshold: float) -> None:
    density = boundary_density(psi)
    if density > threshold:
        msg = (
            f"Boundary density {density:.3g} exceeds {threshold:.3g}"
            f" at t = {psi.time:.6g}; enlarge the grid or add an absorber."
        )
        raise BoundaryLeakError(msg)


@dataclass(slots=True)
class _EdgeAbsorber:
    """Edge damping applied after every free interval of one fixed duration."""

    damping: RealArray | None
    escaped: float = 0.0

    @classmethod
    def for_interval(cls, grid: SpatialGrid, duration: float) -> _EdgeAbsorber:
        return cls(edge_damping(grid, duration) if grid.has_absorber else None)

    def apply(self, psi: WaveFunction) -> tuple[WaveFunction, float]:
        """Damp the edges and return the norm lost in the detection region."""
        if self.damping is None:
            return psi, 0.0
        psi, left, right = damp_edges(psi, self.damping)
        self.escaped += left
        return psi, right


def _pulse(
    schedule: MeasurementSchedule,
) -> Callable[[WaveFunction], tuple[WaveFunction, float]]:
    if schedule.model is MeasurementModel.PROJECTION:
        return project_left
    v0 = schedule.v0 or 0.0
    return lambda psi: kick(psi, v0, schedule.delta_t)


def run_measurement(
    psi0: WaveFunction,
    schedule: MeasurementSchedule,
    *,
    leak_threshold: float = RUN_LEAK_THRESHOLD,
    observer: Callable[[WaveFunction], None] | None = None,
) -> DetectionRecord:
    """Run a measurement from the state's time stamp to ``t_end``.

    Pulsed models repeat the unit pulse-then-evolve and close the run with a
    final pulse at ``t_end``; the pulse at the start time is folded into the
    first interval. On a grid with an absorber the edges are damped after
    every free interval: losses in x >= 0 count as detected, losses in x < 0
    as escaped. ``observer`` is called with the state at every interval edge.
    """
    t_start = psi0.time
    schedule.validate(t_start)
    n_bins = max(1, math.ceil((schedule.t_end - t_start) / schedule.delta_t - 1e-9))
    t_bins = t_start + schedule.delta_t * np.arange(1, n_bins + 1)
    removed = np.zeros(n_bins)
    survival = np.zeros(n_bins)
    initial_norm = total_norm(psi0)
    window_end = _window_end(psi0)
    LOGGER.debug(
        "Running %s model over %d intervals of %.6g",
        schedule.model.value,
        n_bins,
        schedule.delta_t,
    )

    psi = psi0.copy()
    if observer is not None:
        observer(psi)
    if schedule.model is MeasurementModel.CONTINUOUS:
        v0 = schedule.v0 or 0.0
        inner_dt = schedule.delta_t / schedule.substeps
        absorber = _EdgeAbsorber.for_interval(psi.grid, inner_dt)
        for index in range(n_bins):
            absorbed = 0.0
            for _ in range(schedule.substeps):
                psi, step_removed = continuous_step(psi, v0, inner_dt)
                psi, edge_removed = absorber.apply(psi)
                absorbed += step_removed + edge_removed
            psi.time = float(t_bins[index])
            _check_boundary(psi, leak_threshold)
            removed[index] = absorbed
            survival[index] = total_norm(psi) + absorber.escaped
            if observer is not None:
                observer(psi)
    else:
        pulse = _pulse(schedule)
        absorber = _EdgeAbsorber.for_interval(psi.grid, schedule.delta_t)
        psi, pending = pulse(psi)
        for index in range(n_bins):
            psi = free_evolve(psi, schedule.delta_t)
            psi, edge_removed = absorber.apply(psi)
            psi.time = float(t_bins[index])
            _check_boundary(psi, leak_threshold)
            psi, step_removed = pulse(psi)
            removed[index] = pending + edge_removed + step_removed
            pending = 0.0
            survival[index] = total_norm(psi) + absorber.escaped
            if observer is not None:
                observer(psi)

    final_norm = float(survival[-1])
    reflection_flag = bool(
        final_norm > REFLECTION_THRESHOLD and t_bins[-1] >= window_end,
    )
    LOGGER.debug(
        "Run finished: detected %.6g, surviving %.6g, escaped %.6g",
        1 - final_norm,
        final_norm,
        absorber.escaped,
    )
    return DetectionRecord(
        t_bins=t_bins,
        removed=removed,
        survival=survival,
        detected_fraction=1 - final_norm,
        schedule=schedule,
        reflection_flag=reflection_flag,
        t_start=t_start,
        initial_norm=initial_norm,
        escaped=absorber.escaped,
    )


def operator_normalize(
    psi: WaveFunction,
    power: float = 0.5,
) -> tuple[WaveFunction, float]:
    """Weight momentum amplitudes by k**power and renormalize.

    Negative momenta are discarded. Returns the transformed state together with
    the normalization constant C.
    """
    diagnostics = packet_diagnostics(psi)
    if diagnostics.neg_k_fraction >= NEGATIVE_MOMENTUM_LIMIT:
        msg = (
            f"Negative-momentum fraction {diagnostics.neg_k_fraction:.3g} is not"
            f" below {NEGATIVE_MOMENTUM_LIMIT:.0e}."
        )
        raise NegativeMomentumError(msg)
    k = psi.grid.k_values
    weight = np.zeros_like(k)
    positive = k > 0
    weight[positive] = k[positive] ** power
    transformed = WaveFunction(
        psi.grid,
        from_momentum(psi.grid, to_momentum(psi) * weight),
        psi.time,
    )
    constant = math.sqrt(total_norm(transformed))
    transformed.amplitudes /= constant
    return transformed, constant


def commutator_expectation(psi: WaveFunction, v0: float) -> float:
    """Return <[V, H0]> on the normalized state for V = -i V0 Theta(x)."""
    grid = psi.grid
    restricted = np.zeros_like(psi.amplitudes)
    restricted[grid.split_index :] = psi.amplitudes[grid.split_index :]
    kinetic = fft.ifft(0.5 * grid.k_values**2 * fft.fft(psi.amplitudes))
    overlap = np.vdot(restricted, kinetic) * grid.dx
    return float(2 * v0 * overlap.imag / total_norm(psi))


@dataclass(slots=True)
class BoundSample:
    """Robertson-Schrodinger quantities for one state."""

    norm: float
    n_plus: float
    delta_h0: float
    lhs: float
    rhs: float


def bound_sample(psi: WaveFunction, v0: float) -> BoundSample:
    """Evaluate |<[V, H0]>| and its bound 2 |Delta V_I| Delta H0."""
    norm = total_norm(psi)
    n_plus = min(max(right_norm(psi) / norm, 0.0), 1.0)
    delta_h0 = packet_diagnostics(psi).delta_H0
    return BoundSample(
        norm=norm,
        n_plus=n_plus,
        delta_h0=delta_h0,
        lhs=abs(commutator_expectation(psi, v0)),
        rhs=2 * v0 * math.sqrt(n_plus - n_plus**2) * delta_h0,
    )
