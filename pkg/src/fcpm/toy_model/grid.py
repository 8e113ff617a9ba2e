"""Structured grid with one horizontal fracture.

The domain is a square of side ``length`` split into ``nx`` by ``ny``
rectangular cells. The fracture lies on the horizontal node row
``jf = ny / 2`` and covers the faces with column index in ``[i0, i1)``.
Its interior nodes are doubled: the original node belongs to the cells
below, the copy to the cells above. Each doubled node carries one contact
point. The two tip nodes stay shared, so the jump vanishes there.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np


def round_half_up(x: float) -> int:
    return int(Decimal(repr(x)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class MDGrid:
    """Topology of the fractured grid.

    Attributes:
        nx, ny: cell counts.
        lx, ly: domain size (m).
        jf: node row of the fracture.
        i0, i1: fracture face columns ``[i0, i1)``; empty if unfractured.
        elem_nodes: (n_cells, 4) node-copy ids, counterclockwise from the
            lower left; ids ``>= n_nodes`` are upper copies of doubled nodes.
    """

    nx: int
    ny: int
    lx: float
    ly: float
    jf: int
    i0: int
    i1: int
    elem_nodes: np.ndarray

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_frac(self) -> int:
        """Fracture cells (faces of the matrix grid)."""
        return self.i1 - self.i0

    @property
    def n_contact(self) -> int:
        """Contact points, one per doubled node."""
        return max(self.n_frac - 1, 0)

    @property
    def n_copies(self) -> int:
        return self.n_nodes + self.n_contact

    def node(self, i: int, j: int) -> int:
        return j * (self.nx + 1) + i

    def cell(self, i: int, j: int) -> int:
        return j * self.nx + i

    @property
    def doubled_nodes(self) -> np.ndarray:
        """Lower-copy ids of the doubled nodes, in contact-point order."""
        return np.array([self.node(i, self.jf) for i in range(self.i0 + 1, self.i1)],
                        dtype=np.int64)

    @property
    def upper_copies(self) -> np.ndarray:
        return self.n_nodes + np.arange(self.n_contact)

    @property
    def frac_cells_below(self) -> np.ndarray:
        return np.array([self.cell(i, self.jf - 1) for i in range(self.i0, self.i1)],
                        dtype=np.int64)

    @property
    def frac_cells_above(self) -> np.ndarray:
        return np.array([self.cell(i, self.jf) for i in range(self.i0, self.i1)],
                        dtype=np.int64)

    def node_coords(self) -> np.ndarray:
        """(n_copies, 2) coordinates; copies share their original's position."""
        ii, jj = np.meshgrid(np.arange(self.nx + 1), np.arange(self.ny + 1))
        xy = np.column_stack([ii.ravel() * self.hx, jj.ravel() * self.hy])
        return np.vstack([xy, xy[self.doubled_nodes]])

    def cell_centers(self) -> np.ndarray:
        ii, jj = np.meshgrid(np.arange(self.nx), np.arange(self.ny))
        return np.column_stack([(ii.ravel() + 0.5) * self.hx, (jj.ravel() + 0.5) * self.hy])


def build_grid(nx: int, ny: int, length: float = 1000.0, fracture: bool = True,
               lx: float | None = None, ly: float | None = None,
               x_start: float = 0.2, x_extent: float = 0.6) -> MDGrid:
    """Build the grid.

    The fracture starts at column ``round_half_up(x_start * nx)`` and spans
    ``round_half_up(x_extent * nx)`` cells, so with the defaults ``nx = 10``
    gives 6 fracture cells over x in [200, 800] m.

    Raises:
        ValueError: if ``nx`` or ``ny`` is below 4, ``ny`` is odd, or the
            fracture would touch the domain boundary or be empty.
    """
    lx = float(length if lx is None else lx)
    ly = float(length if ly is None else ly)
    if nx < 1 or ny < 1:
        raise ValueError("cell counts must be positive")
    jf = ny // 2
    i0 = i1 = 0
    if fracture:
        if nx < 4 or ny < 4:
            raise ValueError(f"fractured grid needs nx, ny >= 4, got {nx} x {ny}")
        if ny % 2:
            raise ValueError(f"ny must be even to place the fracture on a face row, got {ny}")
        i0 = round_half_up(x_start * nx)
        i1 = i0 + round_half_up(x_extent * nx)
        if i1 - i0 < 2 or i0 < 1 or i1 > nx - 1:
            raise ValueError("fracture cannot be aligned with the grid")

    nn = (nx + 1) * (ny + 1)
    ie, je = np.meshgrid(np.arange(nx), np.arange(ny))
    ie, je = ie.ravel(), je.ravel()
    base = je * (nx + 1) + ie
    elem = np.column_stack([base, base + 1, base + nx + 2, base + nx + 1]).astype(np.int64)
    if fracture:
        # cells just above the fracture use the upper copies of doubled nodes
        first_doubled = i0 + 1
        for k, i in enumerate(range(first_doubled, i1)):
            lower = jf * (nx + 1) + i
            above = (je == jf)
            for col in (0, 1):
                hit = above & (elem[:, col] == lower)
                elem[hit, col] = nn + k
    return MDGrid(nx, ny, lx, ly, jf, i0, i1, elem)
