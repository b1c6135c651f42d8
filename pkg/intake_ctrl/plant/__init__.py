from intake_ctrl.plant.gas import (BoundaryConditions, ChamberFlows,
                                   ChamberState, FlowResult, GasConstants,
                                   LinearizedCoeffs, chamber_rates,
                                   linearized_coeffs)
from intake_ctrl.plant.valves import (ValveUnit, flow_coefficient, make_valve,
                                      valve_actuation_step, valve_area,
                                      valve_mass_flow)
from intake_ctrl.plant.plant import (PlantParams, PlantState, compute_flows,
                                     control_effectiveness, initial_state,
                                     plant_step, trim_openings)
