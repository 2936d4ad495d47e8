"""Tests for the Zeno arrival library."""

from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from zeno_arrival import ZenoHarness
from zeno_arrival.analysis import delay_sweep, log_ladder, sweep_base
from zeno_arrival.const import MeasurementModel
from zeno_arrival.distributions import zeno_ideal_distribution
from zeno_arrival.exceptions import BoundaryLeakError, SweepError
from zeno_arrival.grid import SpatialGrid, WaveFunction, make_grid
from zeno_arrival.measurement import MeasurementSchedule, run_measurement
from zeno_arrival.packets import FreeState, GaussianSpec, gaussian_packet


async def test_new_executor(psi0: WaveFunction) -> None:
    """Test that it creates and closes an executor if not given one."""
    schedule = MeasurementSchedule.build(
        MeasurementModel.PROJECTION,
        t_end=22.0,
        delta_t=0.5,
    )
    async with ZenoHarness() as harness:
        assert not harness.executor
        record = await harness.run(psi0, schedule)
        assert harness.executor
    assert not harness.executor
    expected = run_measurement(psi0, schedule)
    np.testing.assert_array_equal(record.removed, expected.removed)
    assert record.detected_fraction == expected.detected_fraction


async def test_own_executor(psi0: WaveFunction) -> None:
    """Test that a given executor is left running."""
    schedule = MeasurementSchedule.build(
        MeasurementModel.PROJECTION,
        t_end=4.0,
        delta_t=0.5,
    )
    with ThreadPoolExecutor(max_workers=2) as executor:
        harness = ZenoHarness(executor=executor)
        await harness.run(psi0, schedule)
        await harness.close()
        assert harness.executor is executor
        assert executor.submit(lambda: 1).result() == 1


async def test_invalid_workers() -> None:
    """Test the worker count must be positive."""
    with pytest.raises(SweepError):
        ZenoHarness(workers=0)


async def test_delay_sweep(state: FreeState, grid: SpatialGrid) -> None:
    """Test a concurrent sweep matches the sequential one."""
    zeno = zeno_ideal_distribution(state, grid, np.linspace(0.0, 25.0, 1001))
    ladder = log_ladder(0.6, 1.6, 4)
    base = sweep_base(MeasurementModel.PROJECTION, 22.0, float(ladder[0]))
    expected = delay_sweep(state, grid, base, ladder, 0.0, zeno)
    async with ZenoHarness() as harness:
        result = await harness.delay_sweep(
            state,
            grid,
            base,
            [*ladder[::-1], ladder[0]],
            0.0,
            zeno,
        )
    assert [row.abscissa for row in result.rows] == list(ladder)
    assert result.slope == expected.slope
    assert result.intercept == expected.intercept
    assert [row.mean_t for row in result.rows] == [
        row.mean_t for row in expected.rows
    ]


async def test_delay_sweep_needs_distinct_couplings(
    state: FreeState,
    grid: SpatialGrid,
) -> None:
    """Test repeated couplings do not count towards the minimum."""
    zeno = zeno_ideal_distribution(state, grid, np.linspace(0.0, 25.0, 101))
    base = sweep_base(MeasurementModel.PROJECTION, 22.0, 0.5)
    async with ZenoHarness() as harness:
        with pytest.raises(SweepError):
            await harness.delay_sweep(
                state,
                grid,
                base,
                [0.5, 0.5, 1.0, 1.5],
                0.0,
                zeno,
            )


async def test_bound_ladder(state: FreeState, grid: SpatialGrid) -> None:
    """Test bound series come back ordered by coupling."""
    async with ZenoHarness() as harness:
        ladder = await harness.bound_ladder(state, grid, [6.0, 2.0], 0.5, 0.0, 12.0)
    assert [series.v0 for series in ladder] == [2.0, 6.0]
    assert all(series.holds for series in ladder)


async def test_leak_threshold(spec: GaussianSpec) -> None:
    """Test the harness passes its leak threshold to every run."""
    grid = make_grid(-96.0, 32.0, 1024)
    schedule = MeasurementSchedule.build(
        MeasurementModel.CONTINUOUS,
        t_end=20.0,
        delta_t=0.5,
        v0=0.01,
    )
    async with ZenoHarness() as harness:
        with pytest.raises(BoundaryLeakError):
            await harness.run(gaussian_packet(spec, grid, 0.0), schedule)
    async with ZenoHarness(leak_threshold=1.0) as harness:
        record = await harness.run(gaussian_packet(spec, grid, 0.0), schedule)
    assert record.detected_fraction < 0.5
