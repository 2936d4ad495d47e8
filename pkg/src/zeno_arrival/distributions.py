"""Ideal and operational arrival-time distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Protocol

import numpy as np
from scipy import fft
from scipy.integrate import trapezoid

from .const import (
    IDEAL_KINDS,
    LOGGER,
    MIN_DETECTED_FRACTION,
    NEGATIVE_MOMENTUM_LIMIT,
    DistributionKind,
)
from .exceptions import DistributionError, NegativeMomentumError, NothingDetectedError
from .grid import ComplexArray, RealArray, SpatialGrid

if TYPE_CHECKING:
    from numpy.typing import ArrayLike

    from .measurement import DetectionRecord


class MomentumState(Protocol):
    """A freely moving reference state known in momentum space."""

    def momentum_amplitude(self, k: ArrayLike, t: float) -> ComplexArray:
        """Return the normalized momentum amplitude at time ``t``."""


@dataclass(slots=True)
class TimeDistribution:
    """Density on a time axis.

    Operational distributions are bin densities: each value holds for one
    reporting interval of width ``bin_width``. Ideal distributions are point
    samples integrated with the trapezoid rule.
    """

    t_values: RealArray
    density: RealArray
    kind: DistributionKind
    detected_fraction: float = 1.0
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def bin_width(self) -> float | None:
        """Return the interval width of an operational distribution."""
        width = self.metadata.get("bin_width")
        return None if width is None else float(width)

    def _weights(self) -> RealArray:
        width = self.bin_width
        if width is not None:
            return np.full_like(self.t_values, width)
        if len(self.t_values) < 2:
            return np.zeros_like(self.t_values)
        gaps = np.diff(self.t_values)
        weights = np.zeros_like(self.t_values)
        weights[:-1] += gaps / 2
        weights[1:] += gaps / 2
        return weights

    def integral(self) -> float:
        """Return the integral of the density over its time axis."""
        return float(np.dot(self._weights(), self.density))

    def moment(self, order: int, about: float = 0.0) -> float:
        """Return the normalized moment of the given order."""
        weights = self._weights() * self.density
        return float(np.dot(weights, (self.t_values - about) ** order) / weights.sum())


def momentum_axis(grid: SpatialGrid, refine: int = 1) -> RealArray:
    """Return the ascending momentum quadrature nodes of ``grid``.

    ``refine`` divides the node spacing while keeping the momentum cutoff.
    """
    points = grid.n_points * refine
    return np.asarray(
        fft.fftshift(2 * math.pi * fft.fftfreq(points, d=grid.dx)),
        dtype=np.float64,
    )


@dataclass(slots=True)
class _ArrivalAmplitudes:
    """Amplitudes at x = 0 of the weighted momentum integrals."""

    value: ComplexArray
    derivative: ComplexArray
    half_power: ComplexArray
    first_power: ComplexArray
    mean_k: float
    neg_k_fraction: float


def _arrival_amplitudes(
    state: MomentumState,
    grid: SpatialGrid,
    t_values: RealArray,
    refine: int,
) -> _ArrivalAmplitudes:
    k = momentum_axis(grid, refine) if refine != 1 else grid.k_values
    dk = grid.dk / refine
    probability = np.abs(state.momentum_amplitude(k, 0.0)) ** 2
    norm = probability.sum()
    root_k = np.sqrt(np.clip(k, 0.0, None))
    scale = dk / math.sqrt(2 * math.pi)
    rows = np.empty((4, len(t_values)), dtype=np.complex128)
    for index, t in enumerate(t_values):
        amplitude = state.momentum_amplitude(k, float(t))
        rows[0, index] = amplitude.sum()
        rows[1, index] = np.dot(1j * k, amplitude)
        rows[2, index] = np.dot(root_k, amplitude)
        rows[3, index] = np.dot(k, amplitude)
    rows *= scale
    return _ArrivalAmplitudes(
        value=rows[0],
        derivative=rows[1],
        half_power=rows[2],
        first_power=rows[3],
        mean_k=float(np.dot(k, probability) / norm),
        neg_k_fraction=float(probability[k < 0].sum() / norm),
    )


def _require_positive_momenta(neg_k_fraction: float) -> None:
    if neg_k_fraction >= NEGATIVE_MOMENTUM_LIMIT:
        msg = (
            f"Negative-momentum fraction {neg_k_fraction:.3g} is not below"
            f" {NEGATIVE_MOMENTUM_LIMIT:.0e}."
        )
        raise NegativeMomentumError(msg)


def _as_times(t_values: ArrayLike) -> RealArray:
    times = np.asarray(t_values, dtype=np.float64)
    if times.ndim != 1 or np.any(np.diff(times) <= 0):
        msg = "Time values must be a strictly increasing one-dimensional array."
        raise DistributionError(msg)
    return times


def _flux(times: RealArray, amplitudes: _ArrivalAmplitudes) -> TimeDistribution:
    density = np.imag(np.conj(amplitudes.value) * amplitudes.derivative)
    return TimeDistribution(times, density, DistributionKind.FLUX)


def _kijowski(times: RealArray, amplitudes: _ArrivalAmplitudes) -> TimeDistribution:
    _require_positive_momenta(amplitudes.neg_k_fraction)
    density = np.abs(amplitudes.half_power) ** 2
    return TimeDistribution(times, density, DistributionKind.KIJOWSKI)


def _zeno_ideal(
    times: RealArray,
    amplitudes: _ArrivalAmplitudes,
    *,
    renormalize: bool,
) -> TimeDistribution:
    _require_positive_momenta(amplitudes.neg_k_fraction)
    if amplitudes.mean_k <= 0:
        msg = f"Mean momentum {amplitudes.mean_k:.6g} must be positive."
        raise DistributionError(msg)
    density = np.abs(amplitudes.first_power) ** 2 / amplitudes.mean_k
    raw_integral = float(trapezoid(density, times))
    if abs(raw_integral - 1) > 1e-3:
        LOGGER.warning(
            "Zeno-limit density integrates to %.6g over [%.6g, %.6g]",
            raw_integral,
            times[0],
            times[-1],
        )
    if renormalize:
        density = density / raw_integral
    return TimeDistribution(
        times,
        density,
        DistributionKind.ZENO_IDEAL,
        metadata={
            "k0": amplitudes.mean_k,
            "raw_integral": raw_integral,
            "renormalized": renormalize,
        },
    )


def ideal_flux(
    state: MomentumState,
    grid: SpatialGrid,
    t_values: ArrayLike,
    refine: int = 1,
) -> TimeDistribution:
    """Return the probability current J(t) at x = 0 of the free state."""
    times = _as_times(t_values)
    return _flux(times, _arrival_amplitudes(state, grid, times, refine))


def kijowski_distribution(
    state: MomentumState,
    grid: SpatialGrid,
    t_values: ArrayLike,
    refine: int = 1,
) -> TimeDistribution:
    """Return the Kijowski distribution from k^(1/2)-weighted amplitudes."""
    times = _as_times(t_values)
    return _kijowski(times, _arrival_amplitudes(state, grid, times, refine))


def zeno_ideal_distribution(
    state: MomentumState,
    grid: SpatialGrid,
    t_values: ArrayLike,
    *,
    renormalize: bool = False,
    refine: int = 1,
) -> TimeDistribution:
    """Return the Zeno-limit distribution from k-weighted amplitudes.

    The density carries the 1/k0 prefactor with k0 the mean momentum. The
    raw trapezoid integral is kept in the metadata; with ``renormalize`` the
    density is also divided by it.
    """
    times = _as_times(t_values)
    return _zeno_ideal(
        times,
        _arrival_amplitudes(state, grid, times, refine),
        renormalize=renormalize,
    )


def ideal_distributions(
    state: MomentumState,
    grid: SpatialGrid,
    t_values: ArrayLike,
    refine: int = 1,
) -> dict[DistributionKind, TimeDistribution]:
    """Return the flux, Kijowski and Zeno-limit distributions together."""
    times = _as_times(t_values)
    amplitudes = _arrival_amplitudes(state, grid, times, refine)
    return {
        DistributionKind.FLUX: _flux(times, amplitudes),
        DistributionKind.KIJOWSKI: _kijowski(times, amplitudes),
        DistributionKind.ZENO_IDEAL: _zeno_ideal(times, amplitudes, renormalize=False),
    }


def normalize_record(record: DetectionRecord) -> TimeDistribution:
    """Normalize removed norm per interval into a detection-time density."""
    if record.detected_fraction <= MIN_DETECTED_FRACTION:
        msg = (
            f"Detected fraction {record.detected_fraction:.3g} is too small"
            " to normalize."
        )
        raise NothingDetectedError(msg)
    width = record.schedule.delta_t
    return TimeDistribution(
        t_values=record.attribution_times,
        density=record.removed / (width * record.detected_fraction),
        kind=DistributionKind.OPERATIONAL,
        detected_fraction=record.detected_fraction,
        metadata={
            "bin_width": width,
            "model": record.schedule.model.value,
            "v0": record.schedule.v0,
        },
    )


def mean_arrival(distribution: TimeDistribution) -> float:
    """Return the mean arrival time."""
    return distribution.moment(1)


def distribution_width(distribution: TimeDistribution) -> float:
    """Return the standard deviation of the arrival time."""
    mean = distribution.moment(1)
    return math.sqrt(max(distribution.moment(2, about=mean), 0.0))


def l1_distance(first: TimeDistribution, second: TimeDistribution) -> float:
    """Return the integral of |first - second| on a merged time axis.

    Both densities are linearly interpolated onto the union of their nodes
    and taken as zero outside their own axis.
    """
    start = max(first.t_values[0], second.t_values[0])
    stop = min(first.t_values[-1], second.t_values[-1])
    if start > stop:
        msg = (
            f"Time axes [{first.t_values[0]:.6g}, {first.t_values[-1]:.6g}] and"
            f" [{second.t_values[0]:.6g}, {second.t_values[-1]:.6g}] do not overlap."
        )
        raise DistributionError(msg)
    times = np.union1d(first.t_values, second.t_values)
    difference = np.interp(
        times,
        first.t_values,
        first.density,
        left=0.0,
        right=0.0,
    ) - np.interp(times, second.t_values, second.density, left=0.0, right=0.0)
    return float(trapezoid(np.abs(difference), times))


def is_ideal(distribution: TimeDistribution) -> bool:
    """Return whether the distribution is computed from the free state."""
    return distribution.kind in IDEAL_KINDS
