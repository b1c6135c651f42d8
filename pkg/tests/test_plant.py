import numpy as np
import pytest

from intake_ctrl.exceptions import IntegrationFault, TrimError
from intake_ctrl.plant.gas import BoundaryConditions
from intake_ctrl.plant.plant import (PlantParams, control_effectiveness,
                                     initial_state, is_equilibrium,
                                     plant_step, rk4_step, total_mass,
                                     trim_openings)
from intake_ctrl.validation import rk4_convergence_order, sealed_mass_drift


def test_rk4_step_on_exponential():

    y = np.array([1.0])

    for _ in range(100):
        y = rk4_step(lambda x: -x, y, 0.01)

    assert np.isclose(y[0], np.exp(-1.0), rtol=0, atol=1e-10)


def test_trim_gives_equilibrium():

    params = PlantParams()
    bc = BoundaryConditions(mdot_out=780.0)

    trim = trim_openings(130e3, 65e3, 780.0, bc, params)

    assert all(0 < x < 1 for x in trim)
    assert trim[1] == trim[2]

    state = initial_state(130e3, bc.T_in, 65e3, bc.T_in, trim, params, 0.01)

    assert is_equilibrium(state, bc, params)

    for k in range(100):
        state = plant_step(state, trim, bc, 0.01, params, t=k * 0.01)

    assert abs(state.chamber1.P - 130e3) < 1e-3
    assert abs(state.chamber2.P - 65e3) < 1e-3


def test_trim_rejects_reversed_pressures():

    params = PlantParams()
    bc = BoundaryConditions(mdot_out=780.0)

    with pytest.raises(TrimError):
        trim_openings(65e3, 130e3, 780.0, bc, params)


def test_trim_rejects_unreachable_flow():

    params = PlantParams()
    bc = BoundaryConditions(mdot_out=5000.0)

    with pytest.raises(TrimError):
        trim_openings(130e3, 65e3, 5000.0, bc, params)


def test_control_effectiveness_signs():

    params = PlantParams()
    bc = BoundaryConditions(mdot_out=780.0)

    effect = control_effectiveness(130e3, 65e3, bc, params)

    assert effect.shape == (2, 3)
    assert np.all(effect[0] < 0)
    assert effect[1, 0] == 0.0
    assert np.all(effect[1, 1:] > 0)


def test_rk4_order():

    orders = rk4_convergence_order()

    assert len(orders) == 1
    assert 3.5 <= orders[0] <= 4.5


def test_sealed_chambers_conserve_mass():

    assert sealed_mass_drift() < 1e-6


def test_heat_changes_temperature_not_mass():

    params = PlantParams(supply_area=0.0)
    bc = BoundaryConditions(Q1=5e5, mdot_out=0.0)
    closed = (0.0, 0.0, 0.0)

    state = initial_state(130e3, 253.0, 65e3, 253.0, closed, params, 0.01)
    m0 = total_mass(state, params)

    for _ in range(100):
        state = plant_step(state, closed, bc, 0.01, params)

    assert state.chamber1.T > 253.0
    assert np.allclose(total_mass(state, params), m0, rtol=1e-9)


def test_plant_step_is_bit_identical():

    params = PlantParams()
    bc = BoundaryConditions(mdot_out=780.0)
    trim = trim_openings(130e3, 65e3, 780.0, bc, params)
    start = initial_state(130e3, 253.0, 65e3, 253.0, trim, params, 0.01)

    np.random.seed(2)
    commands = np.random.uniform(0.0, 1.0, (200, 3))

    runs = []

    for _ in range(2):
        state = start
        for k, cmd in enumerate(commands):
            state = plant_step(state, tuple(cmd), bc, 0.01, params,
                               t=k * 0.01)
        runs.append(state)

    assert runs[0] == runs[1]
    assert runs[0] != start


def test_nonphysical_state_raises_fault():

    params = PlantParams(v2_volume=1.0, supply_area=0.0)
    bc = BoundaryConditions(mdot_out=1000.0)
    closed = (0.0, 0.0, 0.0)

    state = initial_state(130e3, 253.0, 1e3, 253.0, closed, params, 0.01)

    with pytest.raises(IntegrationFault) as info:
        plant_step(state, closed, bc, 0.01, params, t=3.0)

    assert info.value.t >= 3.0
