"""Residual and block Jacobian of the fractured poroelastic toy model.

Discretization:

* mechanics: bilinear quadrilaterals, plane strain, 2 x 2 Gauss quadrature,
  with doubled nodes along the fracture;
* contact: one point per doubled node with tributary length ``hx``; local
  normal is +y, the jump is upper copy minus lower copy;
* matrix flow: two-point fluxes, implicit Euler, linearized density;
* fracture flow: two-point fluxes along the fracture with aperture
  ``a0 + jump_n``; interface fluxes tie each fracture cell to the matrix
  cells on either side. The interface law is written as
  ``v / T_I - (p_matrix - p_fracture) = 0``, which keeps its rows O(1)
  even though ``T_I`` is very large.

All quantities are held in internal units (see :mod:`fcpm.toy_model.params`).
The unknown vector is ordered by block group: scaled contact tractions
``[n, t]`` per point, interface displacements ``[lower x, lower y, upper x,
upper y]`` per point, remaining free displacements node by node, interface
fluxes ``[below, above]`` per fracture cell, matrix pressures, fracture
pressures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from fcpm.block_system import (
    CONTACT,
    FLUX,
    FORCE,
    MASS,
    MOMENTUM,
    BlockLayout,
    BlockMatrix5,
)
from fcpm.contact import (
    ContactParams,
    ContactState,
    classify,
    complementarity_residual,
    linearize_cell,
)
from fcpm.precond import FixedStressData, FixedStressParams, fixed_stress_coefficients
from fcpm.toy_model.grid import MDGrid
from fcpm.toy_model.params import PRESSURE_UNIT, InternalParams, MaterialParams

SIDES = ("south", "north", "west", "east")


class ConstitutiveError(FloatingPointError):
    """A constitutive evaluation produced NaN or Inf."""


@dataclass
class BoundaryConditions:
    """Boundary data in SI units.

    Attributes:
        traction: side -> applied total traction vector ``(t_x, t_y)`` (Pa).
        fixed: side -> displacement components held at zero (0 = x, 1 = y).
        pressure: side -> Dirichlet pressure (Pa); absent sides are no-flow.
    """

    traction: dict = field(default_factory=dict)
    fixed: dict = field(default_factory=lambda: {"south": (0, 1)})
    pressure: dict = field(default_factory=dict)

    def __post_init__(self):
        for d in (self.traction, self.fixed, self.pressure):
            bad = set(d) - set(SIDES)
            if bad:
                raise ValueError(f"unknown boundary side(s): {sorted(bad)}")


@dataclass
class ModelState:
    """Named views into a state vector."""

    lam: np.ndarray
    u_lower: np.ndarray
    u_upper: np.ndarray
    u: np.ndarray
    v: np.ndarray
    p: np.ndarray
    p_f: np.ndarray


def _q1_element(hx: float, hy: float, G: float, lam: float):
    """Element stiffness (8 x 8) and divergence integrals (8,)."""
    xi_a = np.array([-1.0, 1.0, 1.0, -1.0])
    eta_a = np.array([-1.0, -1.0, 1.0, 1.0])
    C = np.array([[lam + 2 * G, lam, 0.0], [lam, lam + 2 * G, 0.0], [0.0, 0.0, G]])
    g = 1.0 / np.sqrt(3.0)
    detJ = hx * hy / 4.0
    Ke = np.zeros((8, 8))
    be = np.zeros(8)
    for xi in (-g, g):
        for eta in (-g, g):
            dNx = xi_a * (1 + eta_a * eta) / 4.0 * (2.0 / hx)
            dNy = eta_a * (1 + xi_a * xi) / 4.0 * (2.0 / hy)
            B = np.zeros((3, 8))
            B[0, 0::2] = dNx
            B[1, 1::2] = dNy
            B[2, 0::2] = dNy
            B[2, 1::2] = dNx
            Ke += B.T @ C @ B * detJ
            be += (B[0] + B[1]) * detJ
    return Ke, be


class ToyModel:
    """Fractured poroelastic model on an :class:`MDGrid`.

    Args:
        grid: the grid.
        material: parameters in SI units.
        bc: boundary data.
        dt: time step (s).
    """

    def __init__(self, grid: MDGrid, material: MaterialParams | None = None,
                 bc: BoundaryConditions | None = None, dt: float = 43200.0):
        if not dt > 0:
            raise ValueError("time step must be positive")
        self.grid = grid
        self.material = material or MaterialParams()
        self.bc = bc or BoundaryConditions()
        self.dt = float(dt)
        self.ip = InternalParams.from_si(self.material)
        self._build_contact_params()
        self._number_dofs()
        self._build_mechanics()
        self._build_flow()
        self.reset()

    # -- setup ---------------------------------------------------------------

    def _build_contact_params(self):
        ci = self.material.contact
        ip = self.ip
        E = ip.young
        h = min(self.grid.hx, self.grid.hy)
        self.c_si = ci.c_factor * self.material.G / h
        # tractions are scaled by E, so every stress-like parameter is too
        self.contact = ContactParams(
            F=ci.F,
            c=ci.c_factor * ip.G / h / E,
            K_n=ci.K_n / PRESSURE_UNIT / E,
            du_max=ci.du_max,
            theta=ci.theta,
            g0=ci.g0,
            eps_open=ci.eps_open_factor,
        )

    def _number_dofs(self):
        g = self.grid
        nc, nf = g.n_contact, g.n_frac
        copy_dof = np.full((g.n_copies, 2), -1, dtype=np.int64)
        fixed = np.zeros((g.n_nodes, 2), dtype=bool)
        ii, jj = np.meshgrid(np.arange(g.nx + 1), np.arange(g.ny + 1))
        ii, jj = ii.ravel(), jj.ravel()
        side_mask = {
            "south": jj == 0, "north": jj == g.ny, "west": ii == 0, "east": ii == g.nx,
        }
        for side, comps in self.bc.fixed.items():
            for c in comps:
                fixed[side_mask[side], int(c)] = True
        doubled = g.doubled_nodes
        for k in range(nc):
            copy_dof[doubled[k]] = [4 * k, 4 * k + 1]
            copy_dof[g.n_nodes + k] = [4 * k + 2, 4 * k + 3]
        n2 = 4 * nc
        is_doubled = np.zeros(g.n_nodes, dtype=bool)
        is_doubled[doubled] = True
        free = ~fixed & ~is_doubled[:, None]
        idx = np.cumsum(free.ravel()) - 1 + n2
        copy_dof[: g.n_nodes][free] = idx.reshape(-1, 2)[free]
        n3 = int(free.sum())
        self.copy_dof = copy_dof
        self.n_u = n2 + n3
        comps = np.zeros(self.n_u, dtype=np.int64)
        valid = copy_dof >= 0
        comps[copy_dof[valid]] = np.broadcast_to(np.arange(2), copy_dof.shape)[valid]
        self.mech_components = comps
        self.layout = BlockLayout((2 * nc, n2, n3, 2 * nf, g.n_cells + nf), 2, nc)
        L = self.layout
        self.sl_lam = L.slice(CONTACT)
        self.sl_u = slice(L.offsets[FORCE], L.offsets[MOMENTUM + 1])
        self.sl_v = L.slice(FLUX)
        self.sl_p = slice(L.offsets[MASS], L.offsets[MASS] + g.n_cells)
        self.sl_pf = slice(L.offsets[MASS] + g.n_cells, L.size)
        self.side_mask = side_mask

    def _build_mechanics(self):
        g, ip = self.grid, self.ip
        Ke, be = _q1_element(g.hx, g.hy, ip.G, ip.lam)
        dofs = self.copy_dof[g.elem_nodes].reshape(g.n_cells, 8)
        r = np.repeat(dofs, 8, axis=1)
        c = np.tile(dofs, (1, 8))
        v = np.broadcast_to(Ke.ravel(), r.shape)
        ok = (r >= 0) & (c >= 0)
        n_u = self.n_u
        self.K = sps.csr_matrix((v[ok], (r[ok], c[ok])), shape=(n_u, n_u))
        cells = np.broadcast_to(np.arange(g.n_cells)[:, None], dofs.shape)
        bv = np.broadcast_to(be, dofs.shape)
        ok = dofs >= 0
        self.Bdiv = sps.csr_matrix((bv[ok], (dofs[ok], cells[ok])), shape=(n_u, g.n_cells))
        self.BdivT = sps.csr_matrix(self.Bdiv.T)

        # consistent nodal loads from piecewise constant edge tractions
        F = np.zeros(n_u)
        nodes_of = {
            "south": [g.node(i, 0) for i in range(g.nx + 1)],
            "north": [g.node(i, g.ny) for i in range(g.nx + 1)],
            "west": [g.node(0, j) for j in range(g.ny + 1)],
            "east": [g.node(g.nx, j) for j in range(g.ny + 1)],
        }
        for side, t in self.bc.traction.items():
            t = np.asarray(t, dtype=np.float64) / PRESSURE_UNIT
            h = g.hx if side in ("south", "north") else g.hy
            nodes = nodes_of[side]
            for a, b in zip(nodes[:-1], nodes[1:]):
                for node in (a, b):
                    for comp in (0, 1):
                        d = self.copy_dof[node, comp]
                        if d >= 0:
                            F[d] += t[comp] * h / 2.0
        self.F_ext = F

        nc, nf = g.n_contact, g.n_frac
        rows, cols, vals = [], [], []
        for k in range(nc):
            # normal row: uy_up - uy_lo; tangential row: ux_up - ux_lo
            rows += [2 * k, 2 * k, 2 * k + 1, 2 * k + 1]
            cols += [4 * k + 3, 4 * k + 1, 4 * k + 2, 4 * k]
            vals += [1.0, -1.0, 1.0, -1.0]
        self.Gj = sps.csr_matrix((vals, (rows, cols)), shape=(2 * nc, n_u))
        self.GjT = sps.csr_matrix(self.Gj.T)
        self.Gn = sps.csr_matrix(self.Gj[0::2])
        self.w_contact = g.hx
        # fracture pressure load: normal row k gets hx/2 from faces k and k+1
        rows = np.repeat(2 * np.arange(nc), 2)
        cols = np.column_stack([np.arange(nc), np.arange(nc) + 1]).ravel()
        self.Nf = sps.csr_matrix((np.full(2 * nc, g.hx / 2.0), (rows, cols)), shape=(2 * nc, nf))
        # face aperture: mean of the end-node normal jumps, tips have zero jump
        rows = np.concatenate([np.arange(nc), np.arange(nc) + 1])
        cols = np.concatenate([np.arange(nc), np.arange(nc)])
        self.Af = sps.csr_matrix((np.full(2 * nc, 0.5), (rows, cols)), shape=(nf, nc))

    def _build_flow(self):
        g, ip = self.grid, self.ip
        km = ip.K_m / ip.mu
        nx, ny = g.nx, g.ny
        n = g.n_cells
        rows, cols, vals = [], [], []
        Tx = km * g.hy / g.hx
        Ty = km * g.hx / g.hy

        def connect(a, b, T):
            rows.extend([a, a, b, b])
            cols.extend([a, b, b, a])
            vals.extend([T, -T, T, -T])

        for j in range(ny):
            for i in range(nx - 1):
                connect(g.cell(i, j), g.cell(i + 1, j), Tx)
        frac_cols = set(range(g.i0, g.i1))
        for j in range(ny - 1):
            for i in range(nx):
                if g.n_frac and j == g.jf - 1 and i in frac_cols:
                    continue
                connect(g.cell(i, j), g.cell(i, j + 1), Ty)
        bc_diag = np.zeros(n)
        bc_rhs = np.zeros(n)
        edge_cells = {
            "south": ([g.cell(i, 0) for i in range(nx)], km * g.hx / (g.hy / 2)),
            "north": ([g.cell(i, ny - 1) for i in range(nx)], km * g.hx / (g.hy / 2)),
            "west": ([g.cell(0, j) for j in range(ny)], km * g.hy / (g.hx / 2)),
            "east": ([g.cell(nx - 1, j) for j in range(ny)], km * g.hy / (g.hx / 2)),
        }
        for side, p_bc in self.bc.pressure.items():
            if p_bc is None:
                continue
            cells, T = edge_cells[side]
            bc_diag[cells] += T
            bc_rhs[cells] += T * p_bc / PRESSURE_UNIT
        self.Lap = sps.csr_matrix((vals, (rows, cols)), shape=(n, n)) + sps.diags(bc_diag)
        self.Lap = sps.csr_matrix(self.Lap)
        self.bc_rhs = bc_rhs
        self.bc_diag = bc_diag

        nf = g.n_frac
        cells = np.empty(2 * nf, dtype=np.int64)
        cells[0::2] = g.frac_cells_below
        cells[1::2] = g.frac_cells_above
        self.intf_cells = cells
        self.S = sps.csr_matrix((np.ones(2 * nf), (cells, np.arange(2 * nf))), shape=(n, 2 * nf))
        self.E2 = sps.csr_matrix(
            (np.ones(2 * nf), (np.arange(2 * nf), np.repeat(np.arange(nf), 2))), shape=(2 * nf, nf)
        )
        K_I = ip.a0**2 / 12.0 if ip.cubic_law else ip.K_f
        self.T_I = K_I / ip.mu * (2.0 / ip.a0) * g.hx
        self.V = g.hx * g.hy

    # -- state handling --------------------------------------------------------

    def initial_state(self) -> np.ndarray:
        x = np.zeros(self.layout.size)
        x[self.sl_p] = self.ip.p0
        x[self.sl_pf] = self.ip.p0
        return x

    def equilibrium_state(self, tol: float = 1e-10, max_iter: int = 30) -> np.ndarray:
        """Mechanical equilibrium under the boundary loads at reference pressure.

        Solves the contact and momentum rows with pressures held at ``p0`` and
        zero interface flux, so the first time step starts from loaded,
        closed fractures instead of the unloaded reference state.

        Raises:
            RuntimeError: if the semi-smooth Newton loop does not converge.
        """
        x = self.initial_state()
        self.begin_step(x)
        mech = self.layout.indices(CONTACT, FORCE, MOMENTUM)
        r0 = None
        for _ in range(max_iter):
            cells = self.classify(x)
            R = self.residual(x, cells)[mech]
            res = float(np.linalg.norm(R))
            r0 = res if r0 is None else r0
            if res <= tol * max(r0, 1e-300) or res == 0.0:
                self.begin_step(x)
                return x
            A = self.jacobian(x, cells).sub((CONTACT, FORCE, MOMENTUM),
                                            (CONTACT, FORCE, MOMENTUM))
            x[mech] -= spla.spsolve(A.tocsc(), R)
        raise RuntimeError(f"initial equilibrium did not converge in {max_iter} iterations")

    def reset(self, x: np.ndarray | None = None) -> None:
        """Set the previous-time-step data from ``x`` (default: initial state)."""
        self.begin_step(self.initial_state() if x is None else x)

    def begin_step(self, x: np.ndarray) -> None:
        """Store accumulation and tangential jump of the converged state ``x``."""
        self.m_prev = self._matrix_content(x)
        self.mf_prev = self._fracture_content(x)
        self.jt_prev = self.jumps(x)[:, 1].copy()

    def unpack(self, x: np.ndarray) -> ModelState:
        u = x[self.sl_u]
        nc = self.grid.n_contact
        iface = u[: 4 * nc].reshape(nc, 4)
        return ModelState(
            lam=x[self.sl_lam].reshape(nc, 2) * self.ip.young * PRESSURE_UNIT,
            u_lower=iface[:, :2],
            u_upper=iface[:, 2:],
            u=u,
            v=x[self.sl_v],
            p=x[self.sl_p] * PRESSURE_UNIT,
            p_f=x[self.sl_pf] * PRESSURE_UNIT,
        )

    def displacements(self, x: np.ndarray) -> np.ndarray:
        """(n_copies, 2) displacement of every node copy (m)."""
        u = x[self.sl_u]
        out = np.zeros(self.copy_dof.shape)
        ok = self.copy_dof >= 0
        out[ok] = u[self.copy_dof[ok]]
        return out

    def jumps(self, x: np.ndarray) -> np.ndarray:
        """(n_contact, 2) displacement jump ``[n, t]`` per contact point."""
        return (self.Gj @ x[self.sl_u]).reshape(-1, 2)

    def apertures(self, x: np.ndarray) -> np.ndarray:
        """Hydraulic aperture per fracture cell."""
        return self.ip.a0 + self.Af @ self.jumps(x)[:, 0]

    # -- constitutive pieces -----------------------------------------------------

    def _rho(self, p):
        return self.ip.rho0 * (1.0 + self.ip.c_f * (p - self.ip.p0))

    def _porosity(self, x):
        ip = self.ip
        div = self.BdivT @ x[self.sl_u] / self.V
        return ip.phi0 + ip.alpha * div + ip.inv_M * (x[self.sl_p] - ip.p0)

    def _matrix_content(self, x):
        phi = self._porosity(x)
        m = self._rho(x[self.sl_p]) * phi
        bad = np.flatnonzero(~np.isfinite(m))
        if bad.size:
            raise ConstitutiveError(f"non-finite fluid content in matrix cell {int(bad[0])}")
        return m

    def _fracture_content(self, x):
        if self.grid.n_frac == 0:
            return np.zeros(0)
        m = self._rho(x[self.sl_pf]) * self.apertures(x)
        bad = np.flatnonzero(~np.isfinite(m))
        if bad.size:
            raise ConstitutiveError(f"non-finite fluid content in fracture cell {int(bad[0])}")
        return m

    def _frac_transmissibility(self, a_node):
        """Transmissibility between neighboring fracture cells and its derivative."""
        ip, hx = self.ip, self.grid.hx
        if ip.cubic_law:
            return a_node**3 / (12.0 * ip.mu * hx), a_node**2 / (4.0 * ip.mu * hx)
        return ip.K_f * a_node / (ip.mu * hx), np.full_like(a_node, ip.K_f / (ip.mu * hx))

    def _frac_laplacian(self, T):
        nf = self.grid.n_frac
        k = np.arange(T.size)
        rows = np.concatenate([k, k, k + 1, k + 1])
        cols = np.concatenate([k, k + 1, k + 1, k])
        vals = np.concatenate([T, -T, T, -T])
        return sps.csr_matrix((vals, (rows, cols)), shape=(nf, nf))

    # -- contact ---------------------------------------------------------------------

    def classify(self, x: np.ndarray) -> list:
        """Contact branch per point at state ``x``."""
        lam = x[self.sl_lam].reshape(-1, 2)
        jump = self.jumps(x)
        du_t = jump[:, 1] - self.jt_prev
        return [
            classify(lam[k], jump[k], du_t[k : k + 1], self.contact)
            for k in range(self.grid.n_contact)
        ]

    def state_counts(self, cells) -> dict:
        out = {s.value: 0 for s in ContactState}
        for c in cells:
            out[c.state.value] += 1
        return out

    # -- residual and Jacobian -------------------------------------------------------

    def residual(self, x: np.ndarray, cells=None) -> np.ndarray:
        """Residual at ``x``; contact branches from ``cells`` or from ``x``."""
        if cells is None:
            cells = self.classify(x)
        ip = self.ip
        g = self.grid
        R = np.zeros(self.layout.size)
        lam = x[self.sl_lam]
        u = x[self.sl_u]
        v = x[self.sl_v]
        p = x[self.sl_p]
        pf = x[self.sl_pf]

        jump = self.jumps(x)
        du_t = jump[:, 1] - self.jt_prev
        lam2 = lam.reshape(-1, 2)
        Rc = np.zeros((g.n_contact, 2))
        for k, cell in enumerate(cells):
            Rc[k] = complementarity_residual(cell, lam2[k], jump[k], du_t[k : k + 1], self.contact)
        R[self.sl_lam] = Rc.ravel()

        R[self.sl_u] = (
            self.K @ u
            - ip.alpha * (self.Bdiv @ (p - ip.p0))
            - self.F_ext
            + self.w_contact * ip.young * (self.GjT @ lam)
            - self.GjT @ (self.Nf @ (pf - ip.p0))
        )
        R[self.sl_v] = v / self.T_I - (self.S.T @ p - self.E2 @ pf)
        flux_scale = self.dt * ip.rho0
        R[self.sl_p] = (
            self.V * (self._matrix_content(x) - self.m_prev)
            + flux_scale * (self.Lap @ p - self.bc_rhs + self.S @ v)
        )
        if g.n_frac:
            a_node = ip.a0 + jump[:, 0]
            T, _ = self._frac_transmissibility(a_node)
            R[self.sl_pf] = (
                g.hx * (self._fracture_content(x) - self.mf_prev)
                + flux_scale * (self._frac_laplacian(T) @ pf - self.E2.T @ v)
            )
        return R

    def jacobian(self, x: np.ndarray, cells=None) -> BlockMatrix5:
        """Block Jacobian at ``x`` with contact branches frozen in ``cells``."""
        if cells is None:
            cells = self.classify(x)
        ip, g, L = self.ip, self.grid, self.layout
        nc, nf = g.n_contact, g.n_frac
        n2 = L.group_sizes[FORCE]
        p = x[self.sl_p]
        pf = x[self.sl_pf]
        flux_scale = self.dt * ip.rho0
        blocks = {}

        # contact rows
        if nc:
            Ablk = np.zeros((nc, 2, 2))
            Bblk = np.zeros((nc, 2, 2))
            for k, cell in enumerate(cells):
                Ablk[k], Bblk[k] = linearize_cell(cell, self.contact)
            blocks[CONTACT, CONTACT] = sps.block_diag(list(Ablk), format="csr")
            dC_du = sps.block_diag(list(Bblk), format="csr") @ self.Gj
            blocks[CONTACT, FORCE] = dC_du[:, :n2]
            blocks[FORCE, CONTACT] = (self.w_contact * ip.young * self.GjT)[:n2]

        # momentum and interface force rows
        K = self.K
        blocks[FORCE, FORCE] = K[:n2, :n2]
        blocks[FORCE, MOMENTUM] = K[:n2, n2:]
        blocks[MOMENTUM, FORCE] = K[n2:, :n2]
        blocks[MOMENTUM, MOMENTUM] = K[n2:, n2:]
        dRu_dp = -ip.alpha * self.Bdiv
        dRu_dpf = -(self.GjT @ self.Nf)
        dRu_dmass = sps.hstack([dRu_dp, dRu_dpf], format="csr")
        blocks[FORCE, MASS] = dRu_dmass[:n2]
        blocks[MOMENTUM, MASS] = dRu_dmass[n2:]

        # interface flux rows
        if nf:
            blocks[FLUX, FLUX] = sps.identity(2 * nf, format="csr") / self.T_I
            blocks[FLUX, MASS] = sps.hstack([-self.S.T, self.E2], format="csr")

        # mass rows
        rho = self._rho(p)
        phi = self._porosity(x)
        dm_du = sps.diags(ip.alpha * rho) @ self.BdivT
        dm_dp = sps.diags(self.V * (ip.rho0 * ip.c_f * phi + rho * ip.inv_M)) + flux_scale * self.Lap
        dm_dv = flux_scale * self.S
        if nf:
            jn = self.jumps(x)[:, 0]
            a_node = ip.a0 + jn
            T, dT = self._frac_transmissibility(a_node)
            a_face = ip.a0 + self.Af @ jn
            rho_f = self._rho(pf)
            dflux = dT * (pf[:-1] - pf[1:])
            k = np.arange(nc)
            dLf_djn = sps.csr_matrix(
                (np.concatenate([dflux, -dflux]), (np.concatenate([k, k + 1]), np.concatenate([k, k]))),
                shape=(nf, nc),
            )
            df_du = (sps.diags(g.hx * rho_f) @ self.Af + flux_scale * dLf_djn) @ self.Gn
            df_dpf = sps.diags(g.hx * ip.rho0 * ip.c_f * a_face) + flux_scale * self._frac_laplacian(T)
            df_dv = -flux_scale * self.E2.T
            dmass_du = sps.vstack([dm_du, df_du], format="csr")
            blocks[MASS, FLUX] = sps.vstack([dm_dv, df_dv], format="csr")
            blocks[MASS, MASS] = sps.block_diag([dm_dp, df_dpf], format="csr")
        else:
            dmass_du = sps.csr_matrix(dm_du)
            blocks[MASS, MASS] = sps.csr_matrix(dm_dp)
        blocks[MASS, FORCE] = dmass_du[:, :n2]
        blocks[MASS, MOMENTUM] = dmass_du[:, n2:]
        J = BlockMatrix5(L, {k: v for k, v in blocks.items() if v.shape[0] and v.shape[1]})
        for key in list(J.blocks):
            J.blocks[key].eliminate_zeros()
            if J.blocks[key].nnz == 0:
                del J.blocks[key]
        return J

    def assemble(self, x: np.ndarray, cells=None):
        """``(residual, Jacobian)`` at ``x`` with a common branch selection."""
        if cells is None:
            cells = self.classify(x)
        return self.residual(x, cells), self.jacobian(x, cells)

    # -- fixed stress --------------------------------------------------------------

    def fixed_stress_params(self) -> FixedStressParams:
        ip = self.ip
        return FixedStressParams(G=ip.G, lam=ip.lam, alpha=ip.alpha, c_f=ip.c_f,
                                 phi0=ip.phi0, dim=2, a0=ip.a0)

    def fixed_stress(self, x: np.ndarray) -> FixedStressData:
        """Stabilization matched to the accumulation scaling of the mass rows."""
        g, ip = self.grid, self.ip
        jn_face = self.Af @ self.jumps(x)[:, 0] if g.n_frac else np.zeros(0)
        return fixed_stress_coefficients(
            self.fixed_stress_params(),
            jn_face,
            g.n_cells,
            matrix_weights=self.V * ip.rho0,
            fracture_weights=g.hx * ip.rho0,
        )
