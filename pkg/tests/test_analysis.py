"""Tests for the Zeno arrival library."""

import logging

import numpy as np
import pytest

from zeno_arrival.analysis import (
    ModelComparison,
    SweepRow,
    assemble_sweep,
    bound_couplings,
    compare_models,
    default_ladder,
    delay_sweep,
    fit_delay_law,
    log_ladder,
    normalization_closure,
    schedule_for,
    schulman_map,
    sweep_base,
    zeno_bound_series,
)
from zeno_arrival.const import DistributionKind, MeasurementModel
from zeno_arrival.distributions import (
    TimeDistribution,
    distribution_width,
    l1_distance,
    mean_arrival,
    normalize_record,
    zeno_ideal_distribution,
)
from zeno_arrival.exceptions import ScheduleError, SweepError
from zeno_arrival.grid import SpatialGrid, WaveFunction, make_grid
from zeno_arrival.measurement import MeasurementSchedule, run_measurement
from zeno_arrival.packets import FreeState, GaussianSpec, packet_diagnostics


@pytest.fixture
def zeno(state: FreeState, grid: SpatialGrid) -> TimeDistribution:
    """Return the Zeno-limit density of the shared state."""
    return zeno_ideal_distribution(state, grid, np.linspace(0.0, 25.0, 1001))


def test_log_ladder() -> None:
    """Test ladders are logarithmic with at least four rungs."""
    ladder = log_ladder(1.0, 10.0)
    assert len(ladder) == 9
    assert ladder[0] == pytest.approx(1.0)
    assert ladder[-1] == pytest.approx(10.0)
    np.testing.assert_allclose(ladder[1:] / ladder[:-1], 10 ** (1 / 8))
    assert len(log_ladder(1.0, 1.1)) == 4
    with pytest.raises(SweepError):
        log_ladder(0.0, 1.0)
    with pytest.raises(SweepError):
        log_ladder(2.0, 1.0)


def test_default_ladder(psi0: WaveFunction) -> None:
    """Test the default ladder spans two decades around hbar / Delta H0."""
    diagnostics = packet_diagnostics(psi0)
    ladder = default_ladder(diagnostics)
    assert len(ladder) == 17
    assert ladder[0] == pytest.approx(0.1 / diagnostics.delta_H0)
    assert ladder[-1] == pytest.approx(10 / diagnostics.delta_H0)


def test_schedules_along_ladder() -> None:
    """Test each model's abscissa sets the coupling."""
    projection = sweep_base(MeasurementModel.PROJECTION, 20.0, 0.5)
    assert schedule_for(projection, 0.8).delta_t == 0.8

    kicked = sweep_base(MeasurementModel.KICKED, 20.0, 0.5)
    schedule = schedule_for(kicked, 0.8)
    assert schedule.delta_t == 0.8
    assert schedule.kick_ratio == pytest.approx(20.0)

    continuous = sweep_base(MeasurementModel.CONTINUOUS, 20.0, 0.25)
    assert continuous.v0 == 2.0
    schedule = schedule_for(continuous, 0.5)
    assert schedule.v0 == 1.0
    assert schedule.delta_t == 0.25


def _row(abscissa: float, mean_t: float, *, reflected: bool = False) -> SweepRow:
    return SweepRow(
        model=MeasurementModel.PROJECTION,
        abscissa=abscissa,
        delta_t=abscissa,
        v0=None,
        alpha=None,
        mean_t=mean_t,
        detected_fraction=0.5 if reflected else 1.0,
        reflection_flag=reflected,
        l1_to_zeno_ideal=0.0,
    )


def test_fit_delay_law() -> None:
    """Test the fit skips reflective rows."""
    rows = [
        _row(1.0, 10.5),
        _row(2.0, 11.0),
        _row(3.0, 11.5),
        _row(0.1, 50.0, reflected=True),
    ]
    slope, intercept, stderr = fit_delay_law(rows)
    assert slope == pytest.approx(0.5)
    assert intercept == pytest.approx(10.0)
    assert stderr == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(SweepError):
        fit_delay_law([_row(1.0, 10.5), _row(0.1, 50.0, reflected=True)])


def test_residual_against_delay_law() -> None:
    """Test residuals are taken from the Zeno-limit law, not the fitted line."""
    times = np.linspace(0.0, 20.0, 2001)
    zeno = TimeDistribution(
        times,
        np.exp(-((times - 10.0) ** 2) / 2) / np.sqrt(2 * np.pi),
        DistributionKind.ZENO_IDEAL,
    )
    rows = [
        _row(1.0, 10.7),
        _row(2.0, 11.2),
        _row(3.0, 11.7),
        _row(0.1, 9.6, reflected=True),
    ]
    result = assemble_sweep(MeasurementModel.PROJECTION, rows, zeno)
    assert result.zeno_mean == pytest.approx(10.0, abs=1e-9)
    assert result.intercept == pytest.approx(10.2)
    assert [row.abscissa for row in result.rows] == [0.1, 1.0, 2.0, 3.0]
    assert result.rows[0].residual == pytest.approx(-0.45)
    for row in result.rows[1:]:
        assert row.residual == pytest.approx(0.2)


def test_projection_delay_law(
    state: FreeState,
    grid: SpatialGrid,
    zeno: TimeDistribution,
) -> None:
    """Test projections delay the mean arrival by half the pulse period."""
    ladder = log_ladder(0.6, 1.6, 4)
    base = sweep_base(MeasurementModel.PROJECTION, 22.0, float(ladder[0]))
    result = delay_sweep(state, grid, base, ladder, 0.0, zeno)
    assert len(result.rows) == 4
    assert result.fitted_rows >= 3
    assert result.expected_slope == 0.5
    assert result.slope == pytest.approx(0.5, abs=0.05)
    assert abs(result.intercept_offset) < 0.25
    assert result.zeno_width == pytest.approx(distribution_width(zeno))
    for row in result.rows:
        assert np.isfinite(row.l1_to_zeno_ideal)
        if row.non_reflective:
            assert abs(row.residual) < 0.1


def test_continuous_delay_law(
    state: FreeState,
    grid: SpatialGrid,
    zeno: TimeDistribution,
) -> None:
    """Test absorption delays the mean arrival by the mean lifetime."""
    ladder = log_ladder(0.25, 1.0, 4)
    base = sweep_base(MeasurementModel.CONTINUOUS, 22.0, float(ladder[0]))
    result = delay_sweep(state, grid, base, ladder, 0.0, zeno)
    assert result.expected_slope == 1.0
    assert result.slope == pytest.approx(1.0, abs=0.1)
    assert abs(result.intercept_offset) < 0.25
    assert [row.v0 for row in result.rows] == pytest.approx(1 / (2 * ladder))


def test_models_agree(
    state: FreeState,
    grid: SpatialGrid,
    zeno: TimeDistribution,
) -> None:
    """Test projections match absorption at hbar / 2 V0 = delta_t / 2."""
    projection_ladder = log_ladder(0.6, 1.6, 4)
    continuous_ladder = log_ladder(0.25, 1.0, 4)
    projection = delay_sweep(
        state,
        grid,
        sweep_base(MeasurementModel.PROJECTION, 22.0, float(projection_ladder[0])),
        projection_ladder,
        0.0,
        zeno,
    )
    continuous = delay_sweep(
        state,
        grid,
        sweep_base(MeasurementModel.CONTINUOUS, 22.0, float(continuous_ladder[0])),
        continuous_ladder,
        0.0,
        zeno,
    )
    comparison = compare_models(projection, continuous)
    assert comparison.pairs >= 3
    assert np.max(np.abs(comparison.projection_mean - comparison.continuous_mean)) < 0.1


def test_comparison_tolerance() -> None:
    """Test agreement is judged against the tolerance."""
    comparison = ModelComparison(
        delta_t=np.array([1.0, 2.0]),
        projection_mean=np.array([10.5, 11.0]),
        continuous_mean=np.array([10.52, 11.01]),
        tolerance=0.05,
    )
    assert comparison.pairs == 2
    assert comparison.agree
    comparison.tolerance = 0.01
    assert not comparison.agree


def test_sweep_needs_four_couplings(
    state: FreeState,
    grid: SpatialGrid,
    zeno: TimeDistribution,
) -> None:
    """Test short ladders are rejected before running."""
    base = sweep_base(MeasurementModel.PROJECTION, 22.0, 0.5)
    with pytest.raises(SweepError):
        delay_sweep(state, grid, base, [0.5, 1.0, 1.5], 0.0, zeno)


def test_bound_series(state: FreeState, grid: SpatialGrid) -> None:
    """Test the commutator bound along an absorbing run."""
    spread = packet_diagnostics(state.wave_function(grid, 0.0)).delta_H0
    couplings = bound_couplings(state, grid, 0.0, [3, 10])
    assert couplings == pytest.approx([3 * spread, 10 * spread])
    series = zeno_bound_series(state, grid, couplings[0], 0.5, 0.0, 22.0)
    assert len(series.times) == 45
    assert series.times[0] == 0.0
    assert series.ratio_dh0_v0[0] == pytest.approx(1 / 3)
    assert series.holds
    assert series.n_plus.max() > 0.05
    assert series.max_ratio >= series.ratio_dh0_v0[0]


def test_bound_series_detects_violation(state: FreeState, grid: SpatialGrid) -> None:
    """Test a bound below the commutator is reported."""
    series = zeno_bound_series(state, grid, 2.0, 0.5, 0.0, 12.0)
    series.bound_rhs = series.bound_rhs / 10
    assert not series.holds


def test_schulman_map() -> None:
    """Test the mapping of a weakly driven transition."""
    mapping = schulman_map(10.0, 0.5)
    assert mapping.v0 == pytest.approx(100.0)
    assert mapping.delta_t == pytest.approx(0.01)
    assert mapping.product == pytest.approx(1.0)
    assert mapping.schulman_delta_t == pytest.approx(8.0)
    assert mapping.weak_driving


def test_schulman_map_strong_driving(caplog: pytest.LogCaptureFixture) -> None:
    """Test strong driving is flagged."""
    with caplog.at_level(logging.WARNING):
        mapping = schulman_map(10.0, 5.0)
    assert not mapping.weak_driving
    assert "weak driving" in caplog.text
    with pytest.raises(ScheduleError):
        schulman_map(0.0, 1.0)
    with pytest.raises(ScheduleError):
        schulman_map(1.0, -1.0)


def test_normalization_closure() -> None:
    """Test a k^(-1/2)-weighted state measured in the Zeno regime."""
    grid = make_grid(-128.0, 64.0, 4096, absorber_width=32.0)
    state = FreeState.from_specs(
        [GaussianSpec(x_focus=-60.0, t_focus=0.0, delta_x=5.0, v_mean=2.0)],
    )
    coarse, closure = (
        normalization_closure(
            state,
            grid,
            0.0,
            MeasurementSchedule.build(
                MeasurementModel.PROJECTION,
                t_end=45.0,
                delta_t=delta_t,
            ),
        )
        for delta_t in (0.04, 0.01)
    )
    assert closure.constant**2 == pytest.approx(0.5, rel=1e-2)
    assert closure.operational.integral() == pytest.approx(1.0, rel=1e-9)
    np.testing.assert_array_equal(
        closure.kijowski.t_values,
        closure.operational.t_values,
    )
    assert closure.l1 < coarse.l1
    assert closure.l1 < 0.08


def test_bound_ratio_falls_with_coupling(state: FreeState, grid: SpatialGrid) -> None:
    """Test stronger absorbers keep Delta H0 / V0 smaller throughout the crossing."""
    couplings = bound_couplings(state, grid, 0.0, [3, 10, 30])
    ratios = [
        zeno_bound_series(state, grid, v0, 0.5, 0.0, 14.0).max_ratio for v0 in couplings
    ]
    assert ratios[0] > ratios[1] > ratios[2]


def test_bound_ratio_envelope(state: FreeState, grid: SpatialGrid) -> None:
    """Test Delta H0 / V0 stays inside its envelope while the packet is absorbed.

    The absorbed part of the state adds V0 sqrt(N+ (1 - N+)) to Delta H0 during
    the crossing, so the ratio rises above its free value before falling back.
    """
    (v0,) = bound_couplings(state, grid, 0.0, [100])
    series = zeno_bound_series(state, grid, v0, 0.5, 0.0, 14.0)
    ratio = series.ratio_dh0_v0
    assert series.holds
    assert np.all(ratio <= series.spread_envelope * (1 + 1e-2) + 1e-9)
    assert series.spread_envelope[0] == pytest.approx(ratio[0], rel=1e-6)
    assert series.max_ratio > 2 * ratio[0]
    assert ratio[-1] < 2 * ratio[0]


def test_kicks_approach_continuous_absorption(
    state: FreeState,
    grid: SpatialGrid,
) -> None:
    """Test kicked and continuous records converge as V0 grows at fixed alpha."""
    psi = state.wave_function(grid, 4.0)
    distances = []
    for v0 in bound_couplings(state, grid, 0.0, [30, 100, 300]):
        kicked = normalize_record(
            run_measurement(
                psi,
                MeasurementSchedule.build(
                    MeasurementModel.KICKED,
                    t_end=17.0,
                    v0=v0,
                    alpha=20.0,
                ),
            ),
        )
        continuous = normalize_record(
            run_measurement(
                psi,
                MeasurementSchedule.build(
                    MeasurementModel.CONTINUOUS,
                    t_end=17.0,
                    delta_t=20.0 / v0,
                    v0=v0,
                ),
            ),
        )
        assert mean_arrival(kicked) > mean_arrival(continuous)
        distances.append(l1_distance(kicked, continuous))
    assert distances[0] > distances[1] > distances[2]
    assert distances[-1] < 0.1
