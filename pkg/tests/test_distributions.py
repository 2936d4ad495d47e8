"""Tests for the Zeno arrival library."""

import numpy as np
import pytest

from zeno_arrival.const import DistributionKind, MeasurementModel
from zeno_arrival.distributions import (
    TimeDistribution,
    distribution_width,
    ideal_distributions,
    ideal_flux,
    is_ideal,
    kijowski_distribution,
    l1_distance,
    mean_arrival,
    normalize_record,
    zeno_ideal_distribution,
)
from zeno_arrival.exceptions import (
    DistributionError,
    NegativeMomentumError,
    NothingDetectedError,
)
from zeno_arrival.grid import SpatialGrid, WaveFunction, make_grid
from zeno_arrival.measurement import (
    MeasurementSchedule,
    operator_normalize,
    run_measurement,
)
from zeno_arrival.packets import FreeState, GaussianSpec, SampledState

TIMES = np.linspace(0.0, 25.0, 1001)


def test_ideal_distributions(state: FreeState, grid: SpatialGrid) -> None:
    """Test the three ideal densities of a fast Gaussian."""
    distributions = ideal_distributions(state, grid, TIMES)
    assert set(distributions) == {
        DistributionKind.FLUX,
        DistributionKind.KIJOWSKI,
        DistributionKind.ZENO_IDEAL,
    }
    for distribution in distributions.values():
        assert is_ideal(distribution)
        assert distribution.integral() == pytest.approx(1.0, abs=1e-3)
        assert mean_arrival(distribution) == pytest.approx(10.0, rel=1e-2)
        assert np.all(distribution.density >= -1e-12)
    zeno = distributions[DistributionKind.ZENO_IDEAL]
    assert zeno.metadata["k0"] == pytest.approx(6.0, rel=1e-6)
    assert zeno.metadata["raw_integral"] == pytest.approx(1.0, abs=1e-3)
    assert not zeno.metadata["renormalized"]


def test_single_distributions_match_bundle(state: FreeState, grid: SpatialGrid) -> None:
    """Test the individual builders agree with the bundled ones."""
    bundle = ideal_distributions(state, grid, TIMES)
    np.testing.assert_allclose(
        ideal_flux(state, grid, TIMES).density,
        bundle[DistributionKind.FLUX].density,
    )
    np.testing.assert_allclose(
        kijowski_distribution(state, grid, TIMES).density,
        bundle[DistributionKind.KIJOWSKI].density,
    )
    np.testing.assert_allclose(
        zeno_ideal_distribution(state, grid, TIMES).density,
        bundle[DistributionKind.ZENO_IDEAL].density,
    )


def test_refined_quadrature(state: FreeState, grid: SpatialGrid) -> None:
    """Test a finer momentum quadrature leaves a resolved density unchanged."""
    coarse = kijowski_distribution(state, grid, TIMES)
    fine = kijowski_distribution(state, grid, TIMES, refine=4)
    assert l1_distance(coarse, fine) < 1e-8


def test_renormalized_zeno_limit(state: FreeState, grid: SpatialGrid) -> None:
    """Test renormalization divides by the raw integral."""
    times = np.linspace(8.5, 11.5, 301)
    raw = zeno_ideal_distribution(state, grid, times)
    renormalized = zeno_ideal_distribution(state, grid, times, renormalize=True)
    assert raw.metadata["raw_integral"] < 0.99
    assert renormalized.metadata["renormalized"]
    np.testing.assert_allclose(
        renormalized.density * raw.metadata["raw_integral"],
        raw.density,
    )
    assert renormalized.integral() == pytest.approx(1.0, rel=1e-12)


def test_interfering_packets() -> None:
    """Test two interfering packets give a negative flux but positive densities."""
    grid = make_grid(-32.0, 32.0, 2048)
    state = FreeState.from_specs(
        [
            GaussianSpec(x_focus=0.0, t_focus=0.0, delta_x=0.5, v_mean=16.7),
            GaussianSpec(x_focus=0.0, t_focus=0.0, delta_x=0.5, v_mean=5.5),
        ],
    )
    distributions = ideal_distributions(state, grid, np.linspace(-1.0, 1.0, 4001))
    assert distributions[DistributionKind.FLUX].density.min() < 0
    assert np.all(distributions[DistributionKind.KIJOWSKI].density >= 0)
    assert np.all(distributions[DistributionKind.ZENO_IDEAL].density >= 0)
    assert (
        l1_distance(
            distributions[DistributionKind.ZENO_IDEAL],
            distributions[DistributionKind.KIJOWSKI],
        )
        > 0.05
    )


def test_negative_momenta_rejected(grid: SpatialGrid) -> None:
    """Test only the flux is defined for states with negative momenta."""
    state = FreeState.from_specs(
        [GaussianSpec(x_focus=-60.0, t_focus=0.0, delta_x=5.0, v_mean=0.2)],
    )
    ideal_flux(state, grid, TIMES)
    with pytest.raises(NegativeMomentumError):
        kijowski_distribution(state, grid, TIMES)
    with pytest.raises(NegativeMomentumError):
        zeno_ideal_distribution(state, grid, TIMES)


def test_time_axis_must_increase(state: FreeState, grid: SpatialGrid) -> None:
    """Test the time axis must be strictly increasing."""
    with pytest.raises(DistributionError):
        ideal_flux(state, grid, [0.0, 2.0, 1.0])


def test_weighted_state_reaches_kijowski(
    state: FreeState,
    grid: SpatialGrid,
    psi0: WaveFunction,
) -> None:
    """Test the Zeno limit of the k^(-1/2)-weighted state is Kijowski's density."""
    transformed, _ = operator_normalize(psi0, -0.5)
    zeno = zeno_ideal_distribution(
        SampledState(transformed),
        grid,
        TIMES,
        renormalize=True,
    )
    kijowski = kijowski_distribution(state, grid, TIMES)
    expected = kijowski.density / kijowski.integral()
    np.testing.assert_allclose(zeno.density, expected, atol=1e-8 * expected.max())
    reference = TimeDistribution(TIMES, expected, DistributionKind.KIJOWSKI)
    assert l1_distance(zeno, reference) < 1e-6

    weighted, _ = operator_normalize(psi0, 0.5)
    other = zeno_ideal_distribution(
        SampledState(weighted),
        grid,
        TIMES,
        renormalize=True,
    )
    assert l1_distance(other, reference) > 1e-3


def test_normalize_record(psi0: WaveFunction) -> None:
    """Test the operational density integrates to one over its bins."""
    record = run_measurement(
        psi0,
        MeasurementSchedule.build(MeasurementModel.PROJECTION, t_end=22.0, delta_t=0.5),
    )
    operational = normalize_record(record)
    assert operational.kind is DistributionKind.OPERATIONAL
    assert not is_ideal(operational)
    assert operational.bin_width == 0.5
    assert operational.integral() == pytest.approx(1.0, rel=1e-9)
    assert operational.detected_fraction == record.detected_fraction
    assert operational.metadata["model"] == "projection"
    assert mean_arrival(operational) == pytest.approx(10.25, abs=0.3)


def test_nothing_detected(psi0: WaveFunction) -> None:
    """Test a run that ends before the arrival cannot be normalized."""
    record = run_measurement(
        psi0,
        MeasurementSchedule.build(MeasurementModel.PROJECTION, t_end=1.0, delta_t=0.5),
    )
    with pytest.raises(NothingDetectedError):
        normalize_record(record)


def test_moments() -> None:
    """Test point-sampled moments use the trapezoid rule."""
    times = np.linspace(-10.0, 10.0, 2001)
    density = np.exp(-(times**2) / 2) / np.sqrt(2 * np.pi)
    distribution = TimeDistribution(times, density, DistributionKind.FLUX)
    assert distribution.bin_width is None
    assert distribution.integral() == pytest.approx(1.0, abs=1e-9)
    assert mean_arrival(distribution) == pytest.approx(0.0, abs=1e-12)
    assert distribution_width(distribution) == pytest.approx(1.0, rel=1e-6)


def test_l1_distance() -> None:
    """Test L1 distances on different and disjoint axes."""
    first = TimeDistribution(
        np.array([0.0, 1.0, 2.0]),
        np.array([0.0, 1.0, 0.0]),
        DistributionKind.FLUX,
    )
    second = TimeDistribution(
        np.array([0.0, 0.5, 1.0, 1.5, 2.0]),
        np.array([0.0, 0.5, 1.0, 0.5, 0.0]),
        DistributionKind.KIJOWSKI,
    )
    assert l1_distance(first, second) == pytest.approx(0.0, abs=1e-15)
    assert l1_distance(first, first) == 0.0
    disjoint = TimeDistribution(
        np.array([3.0, 4.0]),
        np.array([1.0, 1.0]),
        DistributionKind.FLUX,
    )
    with pytest.raises(DistributionError):
        l1_distance(first, disjoint)


def test_zeno_limit_convergence() -> None:
    """Test frequent projections approach the Zeno limit while detecting less."""
    grid = make_grid(-128.0, 64.0, 4096, absorber_width=32.0)
    state = FreeState.from_specs(
        [GaussianSpec(x_focus=-60.0, t_focus=0.0, delta_x=5.0, v_mean=2.0)],
    )
    zeno = zeno_ideal_distribution(state, grid, np.linspace(0.0, 45.0, 901))
    distances = []
    detected = []
    for delta_t in (0.04, 0.02, 0.01):
        record = run_measurement(
            state.wave_function(grid, 0.0),
            MeasurementSchedule.build(
                MeasurementModel.PROJECTION,
                t_end=45.0,
                delta_t=delta_t,
            ),
        )
        detected.append(record.detected_fraction)
        distances.append(l1_distance(normalize_record(record), zeno))
    assert distances[0] > distances[1] > distances[2]
    assert distances[-1] <= 0.05
    assert detected[0] > detected[1] > detected[2]


def test_quasi_monochromatic_agreement(grid: SpatialGrid) -> None:
    """Test the ideal densities coincide for a narrow momentum distribution."""
    state = FreeState.from_specs(
        [GaussianSpec(x_focus=-60.0, t_focus=0.0, delta_x=10.0, v_mean=6.0)],
    )
    distributions = list(ideal_distributions(state, grid, TIMES).values())
    for first in distributions:
        for second in distributions:
            assert l1_distance(first, second) < 0.01


def test_disjoint_densities() -> None:
    """Test densities with disjoint support are at the largest distance."""
    times = np.linspace(0.0, 4.0, 401)
    first = TimeDistribution(times, np.where(times < 1.0, 1.0, 0.0), DistributionKind.FLUX)
    second = TimeDistribution(
        times,
        np.where((times > 2.0) & (times < 3.0), 1.0, 0.0),
        DistributionKind.FLUX,
    )
    assert l1_distance(first, second) == pytest.approx(2.0, abs=0.02)
