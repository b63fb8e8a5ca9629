import dataclasses

import numpy as np
import pytest

from mabo.box import Box
from mabo.platoon import (
    DEFAULT_NOMINAL, FleetConfig, FuelModel, fuel_consumption, has_unique_minimum, platoon_cost, sample_fleet,
    true_platoon_optimum,
)
from oracles import brute_grid_argmin

CUBE_ROOT_500K = 79.37005259840998  # stationarity -b/x^2 + 2dx = 0 with b=1000, d=0.001


def test_fuel_value():
    m = FuelModel(100.0, 2000.0, -1.0, 0.01)
    assert fuel_consumption(m, 60.0) == pytest.approx(109.33333333333333, rel=1e-13)


def test_degenerate_constant_model():
    m = FuelModel(42.0, 0.0, 0.0, 0.0)
    assert np.all(fuel_consumption(m, np.array([1.0, 50.0, 300.0])) == 42.0)


def test_non_positive_speed_rejected():
    with pytest.raises(ValueError):
        fuel_consumption(DEFAULT_NOMINAL, 0.0)


def test_stationary_point_confirmed_by_grid():
    m = FuelModel(0.0, 1000.0, 0.0, 0.001)
    ref, h = brute_grid_argmin(lambda g: fuel_consumption(m, g), 40.0, 120.0)
    assert abs(ref - CUBE_ROOT_500K) <= h
    x, _ = true_platoon_optimum([m], Box((40.0,), (120.0,)))
    assert x == pytest.approx(CUBE_ROOT_500K, abs=1e-4)


def test_two_identical_models_same_optimum():
    m = FuelModel(0.0, 1000.0, 0.0, 0.001)
    dom = Box((40.0,), (120.0,))
    assert true_platoon_optimum([m, m], dom)[0] == pytest.approx(true_platoon_optimum([m], dom)[0], abs=1e-6)


def test_zero_perturbation_returns_nominal():
    fleet = sample_fleet(FleetConfig(perturbation=0.0, seed=5))
    assert all(m == DEFAULT_NOMINAL for m in fleet)


@pytest.mark.parametrize("seed", range(5))
def test_perturbed_parameters_within_band(seed):
    nom = np.array(dataclasses.astuple(DEFAULT_NOMINAL))
    for m in sample_fleet(FleetConfig(seed=seed)):
        v = np.array(dataclasses.astuple(m))
        assert np.all(np.abs(v - nom) <= 0.2 * np.abs(nom) + 1e-12)


def test_fleet_deterministic():
    assert sample_fleet(FleetConfig(seed=9)) == sample_fleet(FleetConfig(seed=9))
    assert sample_fleet(FleetConfig(seed=9)) != sample_fleet(FleetConfig(seed=10))


def test_fleet_config_validation():
    with pytest.raises(ValueError):
        FleetConfig(perturbation=1.0)
    with pytest.raises(ValueError):
        FleetConfig(domain=Box((0.0,), (10.0,)))


def test_unimodality_check():
    dom = Box((40.0,), (90.0,))
    assert has_unique_minimum(DEFAULT_NOMINAL, dom)
    assert not has_unique_minimum(FuelModel(0.0, 0.0, 10.0, -0.1), dom)  # concave


@pytest.mark.parametrize("seed", range(10))
def test_sum_optimum_between_individual_optima(seed):
    fleet = sample_fleet(FleetConfig(seed=seed))
    dom = Box((40.0,), (90.0,))
    singles = [true_platoon_optimum([m], dom)[0] for m in fleet]
    x, fx = true_platoon_optimum(fleet, dom)
    assert min(singles) - 1e-6 <= x <= max(singles) + 1e-6
    grid = np.linspace(40, 90, 100_001)
    assert fx <= platoon_cost(fleet, grid).min() + 1e-9


def test_default_nominal_strictly_convex_on_domain():
    v = np.linspace(40, 90, 1001)
    m = DEFAULT_NOMINAL
    assert np.all(2 * m.b / v**3 + 2 * m.d > 0)
