"""Analytic Gaussian wave packets and exact free evolution."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np
from scipy import fft
from scipy.optimize import brentq

from .const import (
    CLEARANCE_SPREADS,
    CONSTRUCTION_LEAK_THRESHOLD,
    ENERGY_QUANTILE,
)
from .exceptions import PacketError
from .grid import (
    ComplexArray,
    RealArray,
    SpatialGrid,
    WaveFunction,
    boundary_density,
    to_momentum,
    total_norm,
)

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from numpy.typing import ArrayLike


@dataclass(frozen=True, slots=True)
class GaussianSpec:
    """Minimum-uncertainty Gaussian described by its focus.

    Attributes
    ----------
    x_focus: Position of the packet centre at the focus time.
    t_focus: Time at which the packet has minimal uncertainty.
    delta_x: Position spread at the focus.
    v_mean: Mean velocity, equal to the mean wavenumber in natural units.
    weight: Complex weight of the packet inside a superposition.

    """

    x_focus: float
    t_focus: float
    delta_x: float
    v_mean: float
    weight: complex = 1.0

    def __post_init__(self) -> None:
        """Validate the position spread."""
        if not self.delta_x > 0:
            msg = f"Invalid packet spread {self.delta_x}! Must be positive."
            raise PacketError(msg)

    @property
    def sigma_k(self) -> float:
        """Return the momentum spread."""
        return 1 / (2 * self.delta_x)

    def center(self, t: float) -> float:
        """Return the packet centre at time ``t``."""
        return self.x_focus + self.v_mean * (t - self.t_focus)

    def spread(self, t: float) -> float:
        """Return the position spread at time ``t``."""
        tau = (t - self.t_focus) / (2 * self.delta_x**2)
        return self.delta_x * math.sqrt(1 + tau**2)

    def position_amplitude(self, x: ArrayLike, t: float) -> ComplexArray:
        """Evaluate the freely evolved packet in position space."""
        offset = np.asarray(x, dtype=np.float64) - self.x_focus
        elapsed = t - self.t_focus
        width = 1 + 1j * elapsed / (2 * self.delta_x**2)
        exponent = (
            -((offset - self.v_mean * elapsed) ** 2) / (4 * self.delta_x**2 * width)
            + 1j * self.v_mean * offset
            - 0.5j * self.v_mean**2 * elapsed
        )
        prefactor = (2 * math.pi * self.delta_x**2) ** -0.25 / cmath.sqrt(width)
        return np.asarray(prefactor * np.exp(exponent), dtype=np.complex128)

    def momentum_amplitude(self, k: ArrayLike, t: float) -> ComplexArray:
        """Evaluate the freely evolved packet in momentum space."""
        k = np.asarray(k, dtype=np.float64)
        sigma = self.sigma_k
        exponent = (
            -((k - self.v_mean) ** 2) / (4 * sigma**2)
            - 1j * k * self.x_focus
            - 0.5j * k**2 * (t - self.t_focus)
        )
        prefactor = (2 * math.pi * sigma**2) ** -0.25
        return np.asarray(prefactor * np.exp(exponent), dtype=np.complex128)

    def overlap(self, other: GaussianSpec) -> complex:
        """Return <self|other> for the unweighted packets."""
        s1, s2 = self.sigma_k, other.sigma_k
        quadratic = (
            1 / (4 * s1**2)
            + 1 / (4 * s2**2)
            + 0.5j * (self.t_focus - other.t_focus)
        )
        linear = (
            self.v_mean / (2 * s1**2)
            + other.v_mean / (2 * s2**2)
            + 1j * (self.x_focus - other.x_focus)
        )
        constant = -(self.v_mean**2) / (4 * s1**2) - other.v_mean**2 / (4 * s2**2)
        prefactor = (2 * math.pi * s1**2) ** -0.25 * (2 * math.pi * s2**2) ** -0.25
        return complex(
            prefactor
            * cmath.sqrt(math.pi / quadratic)
            * cmath.exp(linear**2 / (4 * quadratic) + constant),
        )


@dataclass(slots=True)
class PacketDiagnostics:
    """Momentum-space moments of a state.

    Attributes
    ----------
    k0: Mean momentum.
    delta_k: Standard deviation of the momentum.
    mean_H0: Mean kinetic energy.
    delta_H0: Standard deviation of the kinetic energy.
    neg_k_fraction: Probability of negative momenta.
    e_max_99: Kinetic energy below which 99% of the probability lies.

    """

    k0: float
    delta_k: float
    mean_H0: float  # noqa: N815
    delta_H0: float  # noqa: N815
    neg_k_fraction: float
    e_max_99: float


@dataclass(frozen=True, slots=True)
class FreeState:
    """Freely moving superposition of Gaussian packets."""

    parts: tuple[GaussianSpec, ...]
    normalization: float = field(init=False)

    def __post_init__(self) -> None:
        """Compute the normalization constant from the exact overlaps."""
        if not self.parts:
            msg = "A free state needs at least one packet."
            raise PacketError(msg)
        norm_squared = sum(
            (a.weight.conjugate() * b.weight * a.overlap(b)).real
            for a in self.parts
            for b in self.parts
        )
        if not norm_squared > 0:
            msg = "All packet weights are zero."
            raise PacketError(msg)
        object.__setattr__(self, "normalization", math.sqrt(norm_squared))

    @classmethod
    def from_specs(cls, specs: Iterable[GaussianSpec]) -> FreeState:
        """Initialize from packet specifications."""
        return cls(parts=tuple(specs))

    def momentum_amplitude(self, k: ArrayLike, t: float) -> ComplexArray:
        """Return the normalized momentum amplitude at time ``t``."""
        total = sum(
            (part.weight * part.momentum_amplitude(k, t) for part in self.parts),
            start=np.zeros(np.shape(k), dtype=np.complex128),
        )
        return np.asarray(total / self.normalization)

    def wave_function(self, grid: SpatialGrid, t: float) -> WaveFunction:
        """Return the state sampled on ``grid`` at time ``t``."""
        return superpose(self.parts, grid, t)

    @property
    def mean_velocity(self) -> float:
        """Return the weight-averaged velocity of the parts."""
        weights = np.array([abs(part.weight) ** 2 for part in self.parts])
        velocities = np.array([part.v_mean for part in self.parts])
        return float(np.dot(weights, velocities) / weights.sum())


def _check_support(spec: GaussianSpec, grid: SpatialGrid, t: float) -> None:
    reach = CLEARANCE_SPREADS * spec.spread(t)
    center = spec.center(t)
    if center - reach < grid.x_min or center + reach > grid.x_max:
        msg = (
            f"Packet centred at {center:.6g} with spread {spec.spread(t):.6g}"
            f" does not fit inside the grid [{grid.x_min}, {grid.x_max}]."
        )
        raise PacketError(msg)


def check_leak(psi: WaveFunction, threshold: float) -> None:
    """Raise if the density at the grid edges exceeds ``threshold``."""
    density = boundary_density(psi)
    if density > threshold:
        msg = (
            f"Boundary density {density:.3g} exceeds {threshold:.3g}"
            f" at t = {psi.time:.6g}."
        )
        raise PacketError(msg)


def _normalized(grid: SpatialGrid, amplitudes: ComplexArray, t: float) -> WaveFunction:
    psi = WaveFunction(grid, amplitudes, t)
    norm = total_norm(psi)
    if not norm > 0:
        msg = "Packet has zero norm on the grid."
        raise PacketError(msg)
    psi.amplitudes /= math.sqrt(norm)
    check_leak(psi, CONSTRUCTION_LEAK_THRESHOLD)
    return psi


def gaussian_packet(spec: GaussianSpec, grid: SpatialGrid, t: float) -> WaveFunction:
    """Return the normalized free Gaussian sampled at time ``t``."""
    _check_support(spec, grid, t)
    return _normalized(grid, spec.position_amplitude(grid.x, t), t)


def superpose(
    parts: Sequence[GaussianSpec],
    grid: SpatialGrid,
    t: float,
) -> WaveFunction:
    """Return the renormalized weighted sum of analytic packets."""
    if not parts:
        msg = "A superposition needs at least one packet."
        raise PacketError(msg)
    if all(part.weight == 0 for part in parts):
        msg = "All packet weights are zero."
        raise PacketError(msg)
    amplitudes = np.zeros(grid.n_points, dtype=np.complex128)
    for part in parts:
        if part.weight == 0:
            continue
        _check_support(part, grid, t)
        amplitudes += part.weight * part.position_amplitude(grid.x, t)
    return _normalized(grid, amplitudes, t)


@lru_cache(maxsize=64)
def kinetic_phase(grid: SpatialGrid, dt: float) -> ComplexArray:
    """Return exp(-i k^2 dt / 2) on the momentum grid of ``grid``."""
    return np.exp(-0.5j * grid.k_values**2 * dt)


def free_evolve(psi: WaveFunction, dt: float) -> WaveFunction:
    """Evolve a state freely by ``dt`` (which may be negative)."""
    if dt == 0:
        return psi.copy()
    amplitudes = fft.ifft(fft.fft(psi.amplitudes) * kinetic_phase(psi.grid, dt))
    return WaveFunction(psi.grid, amplitudes, psi.time + dt)


def _momentum_distribution(psi: WaveFunction) -> tuple[RealArray, RealArray]:
    norm = total_norm(psi)
    if not norm > 0:
        msg = "Cannot compute diagnostics of a zero-norm state."
        raise PacketError(msg)
    probability = np.abs(to_momentum(psi)) ** 2 * psi.grid.dk / norm
    return psi.grid.k_values, probability


def packet_diagnostics(psi: WaveFunction) -> PacketDiagnostics:
    """Return momentum-space moments of ``psi``."""
    k, probability = _momentum_distribution(psi)
    energy = 0.5 * k**2
    mean_energy = float(np.dot(probability, energy))
    variance = float(np.dot(probability, energy**2)) - mean_energy**2
    order = np.argsort(energy, kind="stable")
    cumulative = np.cumsum(probability[order])
    quantile_index = min(
        int(np.searchsorted(cumulative, ENERGY_QUANTILE * cumulative[-1])),
        len(order) - 1,
    )
    mean_k = float(np.dot(probability, k))
    return PacketDiagnostics(
        k0=mean_k,
        delta_k=math.sqrt(max(float(np.dot(probability, k**2)) - mean_k**2, 0.0)),
        mean_H0=mean_energy,
        delta_H0=math.sqrt(max(variance, 0.0)),
        neg_k_fraction=float(probability[k < 0].sum()),
        e_max_99=float(energy[order][quantile_index]),
    )


def mean_position(psi: WaveFunction) -> float:
    """Return <x> of the normalized state."""
    density = psi.density
    return float(np.dot(psi.grid.x, density) / density.sum())


def position_spread(psi: WaveFunction) -> float:
    """Return the standard deviation of x."""
    density = psi.density / psi.density.sum()
    mean = float(np.dot(psi.grid.x, density))
    return math.sqrt(max(float(np.dot((psi.grid.x - mean) ** 2, density)), 0.0))


def _part_start_time(part: GaussianSpec, clearance: float) -> float:
    def margin(t: float) -> float:
        return part.center(t) + clearance * part.spread(t)

    if margin(part.t_focus) <= 0:
        return part.t_focus
    if part.v_mean <= clearance * part.sigma_k:
        msg = (
            f"Packet with velocity {part.v_mean:.6g} and momentum spread"
            f" {part.sigma_k:.6g} never clears x = 0 by {clearance} spreads;"
            " give an explicit start time."
        )
        raise PacketError(msg)
    lookback = max(part.delta_x**2, abs(part.x_focus) / part.v_mean, 1e-300)
    while margin(part.t_focus - lookback) > 0:
        lookback *= 2
    return float(brentq(margin, part.t_focus - lookback, part.t_focus))


def find_start_time(
    state: FreeState,
    grid: SpatialGrid,
    clearance: float = CLEARANCE_SPREADS,
) -> float:
    """Return a start time at which every packet sits clear of x = 0."""
    t_start = min(_part_start_time(part, clearance) for part in state.parts)
    for part in state.parts:
        if part.center(t_start) - clearance * part.spread(t_start) < grid.x_min:
            msg = (
                f"Packet centred at {part.center(t_start):.6g} at t = {t_start:.6g}"
                f" is closer than {clearance} spreads to the grid edge {grid.x_min}."
            )
            raise PacketError(msg)
    return t_start


@dataclass(frozen=True, slots=True)
class SampledState:
    """Free reference built from a grid state instead of analytic packets.

    The momentum amplitudes are only known on the grid's own momentum nodes.
    """

    psi: WaveFunction
    amplitudes: ComplexArray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        """Transform and normalize the sampled state once."""
        norm = total_norm(self.psi)
        if not norm > 0:
            msg = "Cannot build a reference from a zero-norm state."
            raise PacketError(msg)
        object.__setattr__(self, "amplitudes", to_momentum(self.psi) / math.sqrt(norm))

    def momentum_amplitude(self, k: ArrayLike, t: float) -> ComplexArray:
        """Return the freely evolved momentum amplitude at time ``t``."""
        k = np.asarray(k, dtype=np.float64)
        if k.shape != self.psi.grid.k_values.shape or not np.array_equal(
            k,
            self.psi.grid.k_values,
        ):
            msg = "A sampled state is only defined on its own momentum grid."
            raise PacketError(msg)
        return np.asarray(self.amplitudes * np.exp(-0.5j * k**2 * (t - self.psi.time)))
