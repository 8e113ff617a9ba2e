"""Named experiment setups."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from fcpm.toy_model.assembly import BoundaryConditions, ToyModel
from fcpm.toy_model.grid import build_grid
from fcpm.toy_model.params import DAY, MaterialParams

F_SWEEP = (0.1, 0.577, 0.8)
KN_SWEEP = (0.0, 1.2e5, 1.2e9, 1.2e13, 1.2e17, 1.2e20)
REFINEMENT_LADDER = (8, 16, 32, 64)

COMPRESSION = 5e6  # Pa, normal load on north, east and west sides
SHEAR = 5e5  # Pa, tangential load on the north side


@dataclass
class Scenario:
    """Everything needed to set up runs of one experiment.

    Attributes:
        name: scenario identifier.
        material: parameters (SI).
        bc: boundary data.
        dt: time step (s).
        n_steps: number of time steps.
        grids: ``(nx, ny)`` pairs to run.
        sweep: parameter name -> values, crossed with each other.
        fracture: whether the grid carries the fracture.
        lx, ly: domain size (m).
        prestress: start from mechanical equilibrium under the loads; when
            false the loads are switched on at the first step (undrained
            loading followed by consolidation).
    """

    name: str
    material: MaterialParams
    bc: BoundaryConditions
    dt: float = 0.5 * DAY
    n_steps: int = 6
    grids: tuple = ((16, 16),)
    sweep: dict = field(default_factory=dict)
    fracture: bool = True
    lx: float = 1000.0
    ly: float = 1000.0
    prestress: bool = True

    def initial_state(self, model: ToyModel):
        return model.equilibrium_state() if self.prestress else model.initial_state()

    def build(self, nx: int, ny: int, material: MaterialParams | None = None) -> ToyModel:
        grid = build_grid(nx, ny, fracture=self.fracture, lx=self.lx, ly=self.ly)
        return ToyModel(grid, material or self.material, self.bc, self.dt)


def _fractured_bc(east_factor: float, p0: float) -> BoundaryConditions:
    return BoundaryConditions(
        traction={
            "north": (SHEAR, -COMPRESSION),
            "east": (-COMPRESSION, 0.0),
            "west": (COMPRESSION, 0.0),
        },
        fixed={"south": (0, 1)},
        pressure={"west": p0, "east": east_factor * p0},
    )


SCENARIOS = ("single_frac_richardson", "single_frac_gmres", "refinement", "biot_column")


def apply_scenario(name: str, **overrides) -> Scenario:
    """Scenario by name; keyword overrides replace :class:`Scenario` fields.

    Raises:
        ValueError: for an unknown name.
    """
    mat = MaterialParams()
    if name == "single_frac_richardson":
        sc = Scenario(name, mat, _fractured_bc(10.0, mat.p0),
                      sweep={"F": F_SWEEP, "K_n": KN_SWEEP})
    elif name == "single_frac_gmres":
        sc = Scenario(name, mat.with_contact(F=0.577, K_n=1.2e9),
                      _fractured_bc(13.0, mat.p0), grids=((8, 8), (16, 16)))
    elif name == "refinement":
        sc = Scenario(name, mat.with_contact(F=0.577, K_n=1.2e9),
                      _fractured_bc(13.0, mat.p0),
                      grids=tuple((n, n) for n in REFINEMENT_LADDER))
    elif name == "biot_column":
        # drained top under a surface load, rollers on the sides
        bc = BoundaryConditions(
            traction={"north": (0.0, -COMPRESSION)},
            fixed={"south": (0, 1), "west": (0,), "east": (0,)},
            pressure={"north": mat.p0},
        )
        sc = Scenario(name, mat, bc, dt=0.05 * DAY, n_steps=4, grids=((4, 16),),
                      fracture=False, lx=250.0, ly=1000.0, prestress=False)
    else:
        raise ValueError(f"unknown scenario {name!r}; expected one of {SCENARIOS}")
    return replace(sc, **overrides) if overrides else sc
