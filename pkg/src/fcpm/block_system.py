"""Five-group block container for contact poromechanics Jacobians.

Row and column groups, in order:

    0  CONTACT          contact traction unknowns / complementarity rows
    1  FORCE            interface displacements / interface force balance
    2  MOMENTUM         matrix displacements / momentum balance
    3  FLUX             interface fluxes / interface Darcy law
    4  MASS             matrix then fracture pressures / mass balance

Systems are stored on disk as ``<name>.mtx`` (Matrix Market coordinate),
``<name>.blocks.json`` (layout metadata) and ``<name>.rhs.txt`` (one value
per line).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sps

from fcpm.sparse_core import as_csr

CONTACT, FORCE, MOMENTUM, FLUX, MASS = range(5)
GROUP_NAMES = ("contact", "interface_force", "momentum", "interface_flux", "mass")

# Blocks that must be empty in an untransformed Jacobian: contact rows couple
# only to interface displacements, contact unknowns appear only in the contact
# and interface force rows, and interface fluxes ignore all mechanics.
FORBIDDEN_BLOCKS = frozenset(
    {
        (CONTACT, MOMENTUM), (CONTACT, FLUX), (CONTACT, MASS),
        (MOMENTUM, CONTACT), (FLUX, CONTACT), (MASS, CONTACT),
        (FORCE, FLUX), (MOMENTUM, FLUX),
        (FLUX, FORCE), (FLUX, MOMENTUM),
    }
)


class SystemFileError(ValueError):
    """A system file is missing, malformed or inconsistent."""


@dataclass(frozen=True)
class BlockLayout:
    """Sizes of the five row/column groups.

    Attributes:
        group_sizes: number of rows in each group, ordered as ``GROUP_NAMES``.
        spatial_dim: D, the size of the per-cell contact and displacement blocks.
        fracture_cells: number of contact cells; the contact group holds
            ``fracture_cells * spatial_dim`` unknowns.
    """

    group_sizes: tuple[int, int, int, int, int]
    spatial_dim: int = 2
    fracture_cells: int | None = None

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.group_sizes)
        if len(sizes) != 5:
            raise ValueError("a layout needs exactly five group sizes")
        if any(s < 0 for s in sizes):
            raise ValueError(f"group sizes must be nonnegative, got {sizes}")
        if sizes[MASS] < 1:
            raise ValueError("the mass group must contain at least one row")
        if self.spatial_dim < 1:
            raise ValueError("spatial_dim must be positive")
        D = self.spatial_dim
        if sizes[CONTACT] % D or sizes[FORCE] % D:
            raise ValueError("contact and interface force groups must hold D-blocks")
        n_f = self.fracture_cells
        if n_f is None:
            n_f = sizes[CONTACT] // D
        elif sizes[CONTACT] != n_f * D:
            raise ValueError(
                f"contact group size {sizes[CONTACT]} != fracture_cells * D "
                f"= {n_f * D}"
            )
        object.__setattr__(self, "group_sizes", sizes)
        object.__setattr__(self, "fracture_cells", int(n_f))

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.group_sizes)])

    @property
    def size(self) -> int:
        return int(sum(self.group_sizes))

    def slice(self, group: int) -> slice:
        off = self.offsets
        return slice(int(off[group]), int(off[group + 1]))

    def indices(self, *groups: int) -> np.ndarray:
        off = self.offsets
        if not groups:
            return np.arange(self.size)
        return np.concatenate(
            [np.arange(off[g], off[g + 1]) for g in sorted(groups)]
        ).astype(np.int64)

    def split(self, x: np.ndarray) -> list[np.ndarray]:
        return [x[self.slice(g)] for g in range(5)]

    def to_json(self) -> dict:
        return {
            "group_sizes": list(self.group_sizes),
            "spatial_dim": self.spatial_dim,
            "fracture_cells": self.fracture_cells,
        }


@dataclass
class BlockMatrix5:
    """A 5 x 5 grid of optional CSR blocks sharing one :class:`BlockLayout`."""

    layout: BlockLayout
    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (i, j), blk in self.blocks.items():
            if blk is None:
                continue
            blk = as_csr(blk)
            shape = (self.layout.group_sizes[i], self.layout.group_sizes[j])
            if blk.shape != shape:
                raise ValueError(
                    f"block ({GROUP_NAMES[i]}, {GROUP_NAMES[j]}) has shape "
                    f"{blk.shape}, layout expects {shape}"
                )
            clean[(i, j)] = blk
        self.blocks = clean

    def __getitem__(self, ij: tuple[int, int]) -> sps.csr_matrix:
        """Block ``(i, j)``; absent blocks come back as empty matrices."""
        blk = self.blocks.get(ij)
        if blk is None:
            i, j = ij
            return sps.csr_matrix(
                (self.layout.group_sizes[i], self.layout.group_sizes[j])
            )
        return blk

    def __setitem__(self, ij: tuple[int, int], blk) -> None:
        if blk is None:
            self.blocks.pop(ij, None)
            return
        blk = as_csr(blk)
        i, j = ij
        shape = (self.layout.group_sizes[i], self.layout.group_sizes[j])
        if blk.shape != shape:
            raise ValueError(
                f"block ({GROUP_NAMES[i]}, {GROUP_NAMES[j]}) has shape "
                f"{blk.shape}, layout expects {shape}"
            )
        self.blocks[ij] = blk

    def present(self, i: int, j: int) -> bool:
        blk = self.blocks.get((i, j))
        return blk is not None and blk.count_nonzero() > 0

    def pattern(self) -> np.ndarray:
        """5 x 5 boolean array of structurally nonzero blocks."""
        return np.array([[self.present(i, j) for j in range(5)] for i in range(5)])

    def sub(self, rows, cols) -> sps.csr_matrix:
        """Assemble the blocks for the given row and column groups."""
        grid = [[self[i, j] for j in cols] for i in rows]
        n_r = sum(self.layout.group_sizes[i] for i in rows)
        n_c = sum(self.layout.group_sizes[j] for j in cols)
        if n_r == 0 or n_c == 0:
            return sps.csr_matrix((n_r, n_c))
        return sps.csr_matrix(sps.bmat(grid, format="csr"))

    def copy(self) -> "BlockMatrix5":
        return BlockMatrix5(self.layout, {k: v.copy() for k, v in self.blocks.items()})


def validate_pattern(M: BlockMatrix5) -> None:
    """Reject block placements inconsistent with an untransformed Jacobian."""
    bad = [ij for ij in sorted(FORBIDDEN_BLOCKS) if M.present(*ij)]
    if bad:
        names = ", ".join(f"({GROUP_NAMES[i]}, {GROUP_NAMES[j]})" for i, j in bad)
        raise ValueError(f"blocks must be empty in the Jacobian pattern: {names}")


def assemble_monolithic(M: BlockMatrix5) -> sps.csr_matrix:
    """Stack the blocks into one CSR matrix in group order."""
    n = M.layout.size
    sizes = M.layout.group_sizes
    for (i, j), blk in M.blocks.items():
        if blk.shape != (sizes[i], sizes[j]):
            raise ValueError(
                f"block ({GROUP_NAMES[i]}, {GROUP_NAMES[j]}) has wrong shape {blk.shape}"
            )
    if not M.blocks:
        return sps.csr_matrix((n, n))
    off = M.layout.offsets
    rows, cols, vals = [], [], []
    for (i, j), blk in M.blocks.items():
        coo = blk.tocoo()
        rows.append(coo.row + off[i])
        cols.append(coo.col + off[j])
        vals.append(coo.data)
    A = sps.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    A.sort_indices()
    return A


def split_blocks(A, layout: BlockLayout) -> BlockMatrix5:
    """Inverse of :func:`assemble_monolithic`; empty blocks are dropped."""
    A = as_csr(A)
    if A.shape != (layout.size, layout.size):
        raise ValueError(
            f"matrix of shape {A.shape} does not match layout size {layout.size}"
        )
    blocks = {}
    for i in range(5):
        ri = A[layout.slice(i)]
        for j in range(5):
            blk = sps.csr_matrix(ri[:, layout.slice(j)])
            if blk.nnz:
                blk.sort_indices()
                blocks[(i, j)] = blk
    return BlockMatrix5(layout, blocks)


def _stem(path) -> Path:
    p = Path(path)
    for suffix in (".mtx", ".blocks.json", ".rhs.txt"):
        if p.name.endswith(suffix):
            return p.with_name(p.name[: -len(suffix)])
    return p


def write_system(M: BlockMatrix5, rhs: np.ndarray, path) -> Path:
    """Write ``<path>.mtx``, ``<path>.blocks.json`` and ``<path>.rhs.txt``.

    Returns the common path stem.
    """
    stem = _stem(path)
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape != (M.layout.size,):
        raise ValueError(f"rhs length {rhs.shape} does not match system size")
    stem.parent.mkdir(parents=True, exist_ok=True)
    A = assemble_monolithic(M)
    scipy.io.mmwrite(
        str(stem.with_name(stem.name + ".mtx")), A, field="real", precision=17
    )
    meta = M.layout.to_json()
    stem.with_name(stem.name + ".blocks.json").write_text(
        json.dumps(meta, indent=2) + "\n", encoding="utf-8"
    )
    stem.with_name(stem.name + ".rhs.txt").write_text(
        "".join(f"{v!r}\n" for v in rhs.tolist()), encoding="utf-8"
    )
    return stem


def _read_rhs(path: Path) -> np.ndarray:
    if not path.exists():
        raise SystemFileError(f"rhs not found: {path}")
    values = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        text = line.strip()
        if not text:
            continue
        try:
            values.append(float(text))
        except ValueError:
            raise SystemFileError(f"{path}:{lineno}: cannot parse {text!r}") from None
    return np.array(values, dtype=np.float64)


def _read_layout(path: Path) -> BlockLayout:
    if not path.exists():
        raise SystemFileError(f"block metadata not found: {path}")
    try:
        meta = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SystemFileError(
            f"{path}:{exc.lineno}:{exc.colno}: malformed JSON ({exc.msg})"
        ) from None
    try:
        return BlockLayout(
            tuple(meta["group_sizes"]),
            spatial_dim=int(meta.get("spatial_dim", 2)),
            fracture_cells=meta.get("fracture_cells"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SystemFileError(f"{path}: invalid layout ({exc})") from None


def read_system(path) -> tuple[BlockMatrix5, np.ndarray]:
    """Read a system written by :func:`write_system`."""
    stem = _stem(path)
    mtx = stem.with_name(stem.name + ".mtx")
    layout = _read_layout(stem.with_name(stem.name + ".blocks.json"))
    if not mtx.exists():
        raise SystemFileError(f"matrix not found: {mtx}")
    try:
        A = scipy.io.mmread(str(mtx))
    except Exception as exc:  # the reader reports line/offset in its message
        raise SystemFileError(f"{mtx}: malformed Matrix Market file ({exc})") from None
    A = as_csr(A)
    if A.shape != (layout.size, layout.size):
        raise SystemFileError(
            f"layout sums to {layout.size} but matrix has shape {A.shape}"
        )
    rhs = _read_rhs(stem.with_name(stem.name + ".rhs.txt"))
    if rhs.shape[0] != layout.size:
        raise SystemFileError(
            f"rhs has {rhs.shape[0]} entries, layout sums to {layout.size}"
        )
    return split_blocks(A, layout), rhs
