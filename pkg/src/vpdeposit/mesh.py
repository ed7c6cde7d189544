"""Uniform block-decomposed Cartesian mesh and its geometry lookups.

Blocks are numbered zero-based in row-major order with axis 0 varying
fastest. Block and cell intervals are half-open ``[lo, hi)`` except on the
upper domain face, which is closed and belongs to the last block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

from .errors import MeshError


@dataclass(frozen=True)
class BlockBounds:
    """Axis-aligned extent of one block.

    ``closed_hi[ax]`` is True when the block's upper face on ``ax`` is the
    (closed) upper domain face.
    """

    lo: tuple
    hi: tuple
    closed_hi: tuple = field(default=())

    def contains(self, point) -> bool:
        for ax, x in enumerate(point):
            if x < self.lo[ax]:
                return False
            if x > self.hi[ax] or (x == self.hi[ax] and not self._closed(ax)):
                return False
        return True

    def _closed(self, ax):
        return bool(self.closed_hi) and self.closed_hi[ax]


@dataclass(frozen=True)
class Mesh:
    ndim: int
    domain_lo: tuple
    domain_hi: tuple
    blocks_per_axis: tuple
    cells_per_block: tuple
    delta: tuple

    @cached_property
    def nblocks(self) -> int:
        return math.prod(self.blocks_per_axis)

    @property
    def extent(self) -> tuple:
        """Domain length per axis."""
        return tuple(h - l for l, h in zip(self.domain_lo, self.domain_hi))

    @cached_property
    def global_cells(self) -> tuple:
        return tuple(b * c for b, c in zip(self.blocks_per_axis, self.cells_per_block))

    def block_index(self, block_id: int) -> tuple:
        """Integer block coordinates of ``block_id`` (axis 0 fastest)."""
        if not 0 <= block_id < self.nblocks:
            raise MeshError(f"block id {block_id} out of range [0, {self.nblocks})")
        idx = []
        for nb in self.blocks_per_axis:
            idx.append(block_id % nb)
            block_id //= nb
        return tuple(idx)

    def block_id(self, index: Sequence[int]) -> int:
        bid = 0
        stride = 1
        for i, nb in zip(index, self.blocks_per_axis):
            if not 0 <= i < nb:
                raise MeshError(f"block index {tuple(index)} outside block grid")
            bid += i * stride
            stride *= nb
        return bid

    @cached_property
    def _edges(self) -> tuple:
        # Block face coordinates per axis; the outermost faces are the domain faces exactly.
        edges = []
        for ax in range(self.ndim):
            nb = self.blocks_per_axis[ax]
            lo, hi = self.domain_lo[ax], self.domain_hi[ax]
            width = (hi - lo) / nb
            e = [lo + i * width for i in range(nb)] + [hi]
            edges.append(tuple(e))
        return tuple(edges)

    @cached_property
    def _bounds(self) -> tuple:
        out = []
        for bid in range(self.nblocks):
            idx = self.block_index(bid)
            lo = tuple(self._edges[ax][i] for ax, i in enumerate(idx))
            hi = tuple(self._edges[ax][i + 1] for ax, i in enumerate(idx))
            closed = tuple(i == nb - 1 for i, nb in zip(idx, self.blocks_per_axis))
            out.append(BlockBounds(lo, hi, closed))
        return tuple(out)


def build_mesh(ndim, domain_lo, domain_hi, blocks_per_axis, cells_per_block) -> Mesh:
    """Validate the layout and return a :class:`Mesh` with its cell size.

    >>> build_mesh(2, (0, 0), (40, 40), (4, 4), (5, 5)).delta
    (2.0, 2.0)
    """
    if ndim not in (2, 3):
        raise MeshError(f"ndim must be 2 or 3, got {ndim}")
    vectors = {
        "domain_lo": domain_lo,
        "domain_hi": domain_hi,
        "blocks_per_axis": blocks_per_axis,
        "cells_per_block": cells_per_block,
    }
    for name, vec in vectors.items():
        if len(vec) != ndim:
            raise MeshError(f"{name} has {len(vec)} entries, expected {ndim}")
    domain_lo = tuple(float(v) for v in domain_lo)
    domain_hi = tuple(float(v) for v in domain_hi)
    blocks = tuple(int(v) for v in blocks_per_axis)
    cells = tuple(int(v) for v in cells_per_block)
    for ax in range(ndim):
        if not (math.isfinite(domain_lo[ax]) and math.isfinite(domain_hi[ax])):
            raise MeshError(f"domain bounds on axis {ax} must be finite")
        if domain_hi[ax] <= domain_lo[ax]:
            raise MeshError(f"domain_hi <= domain_lo on axis {ax}")
        if blocks[ax] < 1:
            raise MeshError(f"blocks_per_axis[{ax}] must be >= 1")
        if cells[ax] < 2:
            raise MeshError(
                f"degenerate block: cells_per_block[{ax}] = {cells[ax]} (need >= 2)"
            )
    delta = tuple(
        (domain_hi[ax] - domain_lo[ax]) / (blocks[ax] * cells[ax]) for ax in range(ndim)
    )
    return Mesh(ndim, domain_lo, domain_hi, blocks, cells, delta)


def block_bounds(mesh: Mesh, block_id: int) -> BlockBounds:
    if not 0 <= block_id < mesh.nblocks:
        raise MeshError(f"block id {block_id} out of range [0, {mesh.nblocks})")
    return mesh._bounds[block_id]


def block_from_point(mesh: Mesh, point) -> Optional[int]:
    """Id of the block containing ``point``, or None outside the closed domain."""
    bid = 0
    stride = 1
    for ax in range(mesh.ndim):
        x = point[ax]
        edges = mesh._edges[ax]
        nb = mesh.blocks_per_axis[ax]
        if not edges[0] <= x <= edges[-1]:
            return None
        width = (edges[-1] - edges[0]) / nb
        i = min(int((x - edges[0]) // width), nb - 1)
        # The division can land one block off next to a face.
        if x < edges[i]:
            i -= 1
        elif x >= edges[i + 1] and i < nb - 1:
            i += 1
        bid += i * stride
        stride *= nb
    return bid


def cell_of_point(mesh: Mesh, block_id: int, point) -> tuple:
    """Block-local cell index of ``point``; may fall outside the block's range."""
    lo = block_bounds(mesh, block_id).lo
    return tuple(
        math.floor((point[ax] - lo[ax]) / mesh.delta[ax]) for ax in range(mesh.ndim)
    )


def cell_center(mesh: Mesh, block_id: int, cell) -> tuple:
    lo = block_bounds(mesh, block_id).lo
    return tuple(lo[ax] + (cell[ax] + 0.5) * mesh.delta[ax] for ax in range(mesh.ndim))
