"""Reference deposition: halo-extended deposit followed by a reverse ghost fill.

This is the classical scheme the virtual-particle path replaces. It exists
to be obviously correct and to provide the communication baseline.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .boundary import BcConfig
from .deposition import DensityField, cic_stencil
from .errors import GeometryError, RoutingError
from .mesh import BlockBounds, Mesh
from .migration import CommStats, RankMap, VALUE_BYTES
from .particles import Particle


@dataclass
class HaloField:
    """Block field padded with one ghost layer; index 0 is cell -1."""

    block: int
    values: np.ndarray


def new_halo_fields(mesh: Mesh) -> List[HaloField]:
    shape = tuple(n + 2 for n in mesh.cells_per_block)
    return [HaloField(b, np.zeros(shape)) for b in range(mesh.nblocks)]


def deposit_with_halo(halo_field: HaloField, particle: Particle,
                      bounds: BlockBounds, delta) -> HaloField:
    if particle.block != halo_field.block:
        raise RoutingError(
            f"particle {particle.pid} belongs to block {particle.block}, "
            f"not {halo_field.block}"
        )
    if particle.is_virtual:
        raise ValueError("the halo scheme deposits real particles only")
    shape = halo_field.values.shape
    for idx, w in cic_stencil(particle.depos_pos, bounds, delta):
        h = tuple(i + 1 for i in idx)
        if any(not 0 <= i < s for i, s in zip(h, shape)):
            raise GeometryError(
                f"stencil cell {idx} of particle {particle.pid} is beyond the halo"
            )
        halo_field.values[h] += w * particle.mass
    return halo_field


def _region(offset, n):
    """Source slice in the padded array and target slice in the neighbour."""
    src, dst = [], []
    for d, c in zip(offset, n):
        if d < 0:
            src.append(slice(0, 1))
            dst.append(slice(c - 1, c))
        elif d > 0:
            src.append(slice(c + 1, c + 2))
            dst.append(slice(0, 1))
        else:
            src.append(slice(1, c + 1))
            dst.append(slice(0, c))
    return tuple(src), tuple(dst)


def neighbor_offsets(ndim: int) -> List[tuple]:
    return [o for o in itertools.product((-1, 0, 1), repeat=ndim) if any(o)]


def reverse_ghost_fill(halo_fields, mesh: Mesh, bc: BcConfig,
                       rank_map: RankMap) -> Tuple[List[DensityField], CommStats, float]:
    """Fold ghost-layer deposits into the interior cells of neighbouring blocks.

    Regions across periodic faces wrap to the opposite side of the domain;
    regions across outflow or reflective faces are discarded. Every region
    headed to a block on another rank counts as one message, whether or not
    it holds any mass.

    Returns the plain fields, the exchange statistics and the discarded mass.
    """
    n = mesh.cells_per_block
    fields = [
        DensityField(h.block, h.values[tuple(slice(1, c + 1) for c in n)].copy())
        for h in halo_fields
    ]
    stats = CommStats()
    discarded = 0.0
    for h in halo_fields:
        bidx = mesh.block_index(h.block)
        for offset in neighbor_offsets(mesh.ndim):
            src, dst = _region(offset, n)
            chunk = h.values[src]
            target = []
            for ax, d in enumerate(offset):
                t = bidx[ax] + d
                nb = mesh.blocks_per_axis[ax]
                if 0 <= t < nb:
                    target.append(t)
                elif bc.periodic(ax):
                    target.append(t % nb)
                else:
                    target = None
                    break
            if target is None:
                discarded += float(chunk.sum())
                continue
            tid = mesh.block_id(target)
            fields[tid].values[dst] += chunk
            if rank_map.owner[tid] != rank_map.owner[h.block]:
                stats.messages += 1
                stats.bytes += chunk.size * VALUE_BYTES
    return fields, stats, discarded
