"""Cloud-in-cell stencils and block-clipped density deposition.

Density is stored as mass per cell (no division by cell volume).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional

import numpy as np

from .boundary import BcConfig
from .errors import GeometryError, RoutingError
from .mesh import BlockBounds, Mesh, block_bounds
from .particles import Particle


@dataclass
class DensityField:
    block: int
    values: np.ndarray


@dataclass(frozen=True)
class DepositResult:
    """Mass that did not land in the field.

    ``clipped`` is everything outside the block (covered by other copies or
    lost); ``lost`` is the part attributed to this copy that left the
    physical domain through a non-periodic face.
    """

    clipped: float
    lost: float


def new_fields(mesh: Mesh) -> List[DensityField]:
    return [
        DensityField(b, np.zeros(mesh.cells_per_block)) for b in range(mesh.nblocks)
    ]


def _axis_weights(x, lo, d):
    i = math.floor((x - lo) / d)
    c = lo + (i + 0.5) * d
    frac = abs(x - c) / d
    neigh = i - 1 if x <= c else i + 1
    return ((i, 1.0 - frac), (neigh, frac))


def _stencil_axes(depos_pos, bounds: BlockBounds, delta) -> list:
    per_axis = []
    for ax, x in enumerate(depos_pos):
        lo, hi, d = bounds.lo[ax], bounds.hi[ax], delta[ax]
        if not lo - d <= x <= hi + d:
            raise GeometryError(
                f"deposition point {tuple(depos_pos)} is more than one cell outside "
                f"block [{bounds.lo}, {bounds.hi}]"
            )
        per_axis.append(_axis_weights(x, lo, d))
    return per_axis


def _tensor(per_axis) -> list:
    out = [((), 1.0)]
    for pairs in per_axis:
        out = [(idx + (i,), w * wi) for idx, w in out for i, wi in pairs]
    return out


def cic_stencil(depos_pos, bounds: BlockBounds, delta) -> list:
    """CIC cells and weights for a particle, in block-local indices.

    Per axis the home cell and the neighbour on the side of the cell centre
    the particle lies toward (low side on a tie) share the weight linearly;
    the full stencil is the tensor product over axes.
    """
    return _tensor(_stencil_axes(depos_pos, bounds, delta))


def deposit_clipped(field: DensityField, particle: Particle, bounds: BlockBounds,
                    delta, mesh: Mesh, bc: Optional[BcConfig] = None) -> DepositResult:
    """Add the in-block part of ``particle``'s stencil to ``field``.

    With ``bc`` given, stencil cells beyond a non-periodic domain face are
    charged to the one copy whose block holds the nearest in-domain cell,
    so summing ``lost`` over a particle's copies counts each loss once.
    """
    if particle.block != field.block:
        raise RoutingError(
            f"particle {particle.pid} belongs to block {particle.block}, "
            f"not {field.block}"
        )
    n = mesh.cells_per_block
    ndim = mesh.ndim
    mass = particle.mass
    values = field.values
    clipped = 0.0
    lost = 0.0
    bidx = mesh.block_index(field.block) if bc is not None else None
    per_axis = _stencil_axes(particle.depos_pos, bounds, delta)
    stencil = _tensor(per_axis)
    if all(0 <= i < m for pairs, m in zip(per_axis, n) for i, _ in pairs):
        for idx, w in stencil:
            values[idx] += w * mass
        return DepositResult(0.0, 0.0)
    for idx, w in stencil:
        if all(0 <= i < m for i, m in zip(idx, n)):
            values[idx] += w * mass
            continue
        clipped += w * mass
        if bc is None:
            continue
        outside = False
        owner = True
        for ax in range(ndim):
            i = idx[ax]
            if bc.periodic(ax):
                owner = owner and 0 <= i < n[ax]
                continue
            g = bidx[ax] * n[ax] + i
            total = mesh.global_cells[ax]
            if g < 0 or g >= total:
                outside = True
                g = min(max(g, 0), total - 1)
            owner = owner and 0 <= g - bidx[ax] * n[ax] < n[ax]
        if outside and owner:
            lost += w * mass
    return DepositResult(clipped, lost)


def deposit_all(particles: Iterable[Particle], fields, mesh: Mesh, owned=None,
                bc: Optional[BcConfig] = None, lost_log: Optional[list] = None) -> float:
    """Deposit every particle (real or virtual) into its block's field.

    Returns the mass lost through non-periodic domain faces; nonzero losses
    are also appended to ``lost_log`` as ``(pid, mass)``.
    """
    lost = 0.0
    for q in particles:
        if owned is not None and q.block not in owned:
            raise RoutingError(f"particle {q.pid} in block {q.block} is not local")
        res = deposit_clipped(
            fields[q.block], q, block_bounds(mesh, q.block), mesh.delta, mesh, bc
        )
        if res.lost and lost_log is not None:
            lost_log.append((q.pid, res.lost))
        lost += res.lost
    return lost


def assemble_global(fields, mesh: Mesh) -> np.ndarray:
    """Stitch per-block fields into one array over the global cell grid."""
    out = np.zeros(mesh.global_cells)
    n = mesh.cells_per_block
    for f in fields:
        bidx = mesh.block_index(f.block)
        sl = tuple(slice(b * c, (b + 1) * c) for b, c in zip(bidx, n))
        out[sl] = f.values
    return out


def total_mass(fields) -> float:
    return math.fsum(float(v) for f in fields for v in f.values.ravel())
