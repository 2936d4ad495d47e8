"""Shared states for the Zeno arrival tests."""

import pytest

from zeno_arrival.grid import SpatialGrid, WaveFunction, make_grid
from zeno_arrival.packets import FreeState, GaussianSpec


@pytest.fixture
def grid() -> SpatialGrid:
    """Return a grid holding a packet for about 22 time units.

    The outer 24 length units at each edge absorb.
    """
    return make_grid(-128.0, 128.0, 2048, absorber_width=24.0)


@pytest.fixture
def spec() -> GaussianSpec:
    """Return a packet that reaches x = 0 at t = 10."""
    return GaussianSpec(x_focus=-60.0, t_focus=0.0, delta_x=5.0, v_mean=6.0)


@pytest.fixture
def state(spec: GaussianSpec) -> FreeState:
    """Return the free reference of the packet."""
    return FreeState.from_specs([spec])


@pytest.fixture
def psi0(state: FreeState, grid: SpatialGrid) -> WaveFunction:
    """Return the packet sampled at t = 0."""
    return state.wave_function(grid, 0.0)
