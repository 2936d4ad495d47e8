"""Uniform position grids, wave functions and spectral transforms.

All quantities are in natural units (hbar = m = 1). The momentum amplitude of a
grid state is the sampled continuous transform

    psi(k) = (2 pi)^(-1/2) * sum_j exp(-i k x_j) psi_j dx,

which makes the transform unitary between the position weights ``dx`` and the
momentum weights ``dk``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy import fft

from .const import ABSORBER_STRENGTH, MIN_GRID_POINTS
from .exceptions import GridError

ComplexArray = NDArray[np.complex128]
RealArray = NDArray[np.float64]


@dataclass(frozen=True, slots=True)
class SpatialGrid:
    """Uniform position grid with its conjugate momentum grid.

    Attributes
    ----------
    x_min: Left edge of the grid (first node).
    x_max: Right edge of the periodic cell, not itself a node.
    n_points: Number of nodes, a power of two.
    dx: Node spacing.
    absorber_width: Width of the absorbing layer at each edge, 0 for none.
    split_index: Index of the first node with x >= 0. Nodes from this index on
     form the detection region, so the node at x = 0 counts as detected.
    x: Node positions.
    k_values: Momentum grid in transform (``fftfreq``) order.
    absorption_rate: Edge absorption rate at each node, zero outside the layers.

    """

    x_min: float
    x_max: float
    n_points: int
    absorber_width: float = 0.0
    dx: float = field(init=False)
    split_index: int = field(init=False)
    x: RealArray = field(init=False, compare=False, repr=False)
    k_values: RealArray = field(init=False, compare=False, repr=False)
    origin_phase: ComplexArray = field(init=False, compare=False, repr=False)
    absorption_rate: RealArray = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        """Derive spacing, nodes, the momentum grid and the edge absorber."""
        dx = (self.x_max - self.x_min) / self.n_points
        x = self.x_min + dx * np.arange(self.n_points)
        k_values = 2 * math.pi * fft.fftfreq(self.n_points, d=dx)
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "k_values", k_values)
        object.__setattr__(self, "split_index", int(np.searchsorted(x, 0.0)))
        object.__setattr__(self, "origin_phase", np.exp(-1j * k_values * self.x_min))
        rate = np.zeros(self.n_points)
        width = self.absorber_width
        if width > 0:
            depth = np.maximum(self.x_min + width - x, x - (self.x_max - width))
            peak = ABSORBER_STRENGTH * math.pi / (dx * width)
            rate = peak * (np.clip(depth, 0.0, None) / width) ** 2
        object.__setattr__(self, "absorption_rate", rate)

    @property
    def has_absorber(self) -> bool:
        """Return whether the grid edges absorb."""
        return self.absorber_width > 0

    @property
    def dk(self) -> float:
        """Return the momentum spacing."""
        return 2 * math.pi / (self.n_points * self.dx)

    @property
    def k_ordered(self) -> RealArray:
        """Return the momentum grid in ascending order."""
        return np.asarray(fft.fftshift(self.k_values), dtype=np.float64)


@dataclass(slots=True)
class WaveFunction:
    """Complex amplitudes on a grid at a time stamp."""

    grid: SpatialGrid
    amplitudes: ComplexArray
    time: float = 0.0

    def __post_init__(self) -> None:
        """Validate the amplitude array against the grid."""
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (self.grid.n_points,):
            msg = (
                f"Amplitude array of shape {self.amplitudes.shape} does not match"
                f" a grid of {self.grid.n_points} points."
            )
            raise GridError(msg)

    def copy(self) -> WaveFunction:
        """Return an independent copy of the state."""
        return WaveFunction(self.grid, self.amplitudes.copy(), self.time)

    @property
    def density(self) -> RealArray:
        """Return the position density |psi|^2."""
        return np.abs(self.amplitudes) ** 2


def make_grid(
    x_min: float,
    x_max: float,
    n_points: int,
    absorber_width: float = 0.0,
) -> SpatialGrid:
    """Create a grid enclosing the arrival position x = 0.

    A positive ``absorber_width`` adds an absorbing layer of that width inside
    each edge. Neither layer may reach x = 0.
    """
    if n_points < MIN_GRID_POINTS or n_points & (n_points - 1):
        msg = (
            f"Invalid number of grid points {n_points}!"
            f" Must be a power of two >= {MIN_GRID_POINTS}."
        )
        raise GridError(msg)
    if x_max <= x_min:
        msg = f"Invalid grid extent [{x_min}, {x_max}]! x_max must exceed x_min."
        raise GridError(msg)
    if not x_min < 0 < x_max:
        msg = f"Grid [{x_min}, {x_max}] does not enclose the arrival position x = 0."
        raise GridError(msg)
    if absorber_width < 0 or (
        absorber_width > 0 and not x_min + absorber_width < 0 < x_max - absorber_width
    ):
        msg = (
            f"Invalid absorber width {absorber_width}! Layers inside"
            f" [{x_min}, {x_max}] must not reach x = 0."
        )
        raise GridError(msg)
    return SpatialGrid(
        x_min=float(x_min),
        x_max=float(x_max),
        n_points=n_points,
        absorber_width=float(absorber_width),
    )


def to_momentum(psi: WaveFunction) -> ComplexArray:
    """Return the momentum amplitudes of a state, ordered like ``k_values``."""
    grid = psi.grid
    scale = grid.dx / math.sqrt(2 * math.pi)
    return np.asarray(scale * grid.origin_phase * fft.fft(psi.amplitudes))


def from_momentum(grid: SpatialGrid, amplitudes: ComplexArray) -> ComplexArray:
    """Return position amplitudes for momentum amplitudes on ``grid``."""
    scale = math.sqrt(2 * math.pi) / grid.dx
    return np.asarray(scale * fft.ifft(amplitudes / grid.origin_phase))


def _weighted_sum(amplitudes: ComplexArray, dx: float) -> float:
    return float(np.vdot(amplitudes, amplitudes).real) * dx


def left_norm(psi: WaveFunction) -> float:
    """Return the norm in the region x < 0."""
    return _weighted_sum(psi.amplitudes[: psi.grid.split_index], psi.grid.dx)


def right_norm(psi: WaveFunction) -> float:
    """Return the norm in the detection region x >= 0."""
    return _weighted_sum(psi.amplitudes[psi.grid.split_index :], psi.grid.dx)


def total_norm(psi: WaveFunction) -> float:
    """Return N = <psi|psi> as a Riemann sum over the nodes."""
    return left_norm(psi) + right_norm(psi)


def momentum_norm(grid: SpatialGrid, amplitudes: ComplexArray) -> float:
    """Return the norm of momentum amplitudes, weighted with ``dk``."""
    return _weighted_sum(amplitudes, grid.dk)


def boundary_density(psi: WaveFunction) -> float:
    """Return the larger density of the two edge nodes."""
    return float(max(abs(psi.amplitudes[0]), abs(psi.amplitudes[-1])) ** 2)


def absorber_norm(psi: WaveFunction) -> float:
    """Return the norm inside the absorbing layers."""
    inside = psi.grid.absorption_rate > 0
    return _weighted_sum(psi.amplitudes[inside], psi.grid.dx)


def edge_damping(grid: SpatialGrid, duration: float) -> RealArray:
    """Return the amplitude factors of the edge absorber acting for ``duration``."""
    return np.exp(-grid.absorption_rate * duration)


def damp_edges(
    psi: WaveFunction,
    damping: RealArray,
) -> tuple[WaveFunction, float, float]:
    """Apply edge damping factors.

    Returns the damped state with the norm lost on either side of x = 0.
    """
    result = WaveFunction(psi.grid, psi.amplitudes * damping, psi.time)
    lost = (psi.density - result.density) * psi.grid.dx
    split = psi.grid.split_index
    return result, float(lost[:split].sum()), float(lost[split:].sum())
