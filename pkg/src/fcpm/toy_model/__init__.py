"""Two-dimensional fractured poroelastic model that produces block Jacobians."""

from fcpm.toy_model.assembly import BoundaryConditions, ModelState, ToyModel
from fcpm.toy_model.grid import MDGrid, build_grid
from fcpm.toy_model.newton import (
    NewtonError,
    NewtonOpts,
    NewtonReport,
    SimulationResult,
    newton_solve,
    simulate,
)
from fcpm.toy_model.params import ContactInputs, MaterialParams
from fcpm.toy_model.scenarios import SCENARIOS, Scenario, apply_scenario

__all__ = [
    "BoundaryConditions",
    "ContactInputs",
    "MDGrid",
    "MaterialParams",
    "ModelState",
    "NewtonError",
    "NewtonOpts",
    "NewtonReport",
    "SCENARIOS",
    "Scenario",
    "SimulationResult",
    "ToyModel",
    "apply_scenario",
    "build_grid",
    "newton_solve",
    "simulate",
]
