"""Block-face proximity tests and mirror / virtual-particle generation."""

from __future__ import annotations

import enum
import itertools
import math
from typing import List, Sequence

from .errors import CFLViolation
from .mesh import BlockBounds
from .particles import Particle


class Proximity(enum.IntEnum):
    NONE = 0
    LOW = 1
    HIGH = 2


def classify(point, bounds: BlockBounds, delta) -> tuple:
    """Per-axis proximity of ``point`` to the faces of ``bounds``.

    An axis is LOW when the point lies at or below ``lo + delta/2`` and HIGH
    at or above ``hi - delta/2``; points outside the block fall into the
    class of the face they crossed. A point more than one cell outside the
    block breaks the one-cell-per-step assumption and is rejected.
    """
    out = []
    for ax, x in enumerate(point):
        lo, hi, d = bounds.lo[ax], bounds.hi[ax], delta[ax]
        if x < lo - d or x > hi + d:
            raise CFLViolation(
                f"point {tuple(point)} is more than one cell outside block "
                f"[{bounds.lo}, {bounds.hi}] on axis {ax}"
            )
        if x <= lo + 0.5 * d:
            out.append(Proximity.LOW)
        elif x >= hi - 0.5 * d:
            out.append(Proximity.HIGH)
        else:
            out.append(Proximity.NONE)
    return tuple(out)


def mirror_subsets(axes: Sequence[int]) -> List[tuple]:
    """Non-empty subsets of ``axes`` in generation order.

    Single axes first, then pairs, then triples; within a size, subsets of
    adjacent axes come before wider ones, e.g. xy, yz, xz.
    """
    subsets = [
        s for r in range(1, len(axes) + 1) for s in itertools.combinations(axes, r)
    ]
    subsets.sort(key=lambda s: (len(s), s[-1] - s[0], s))
    return subsets


def _reflect(x, ax, prox, bounds):
    if prox is Proximity.LOW:
        face = bounds.lo[ax]
        m = 2.0 * face - x
        if m == face:
            # x sits on lo and belongs to this block; push the mirror below.
            m = math.nextafter(face, -math.inf)
        return m
    face = bounds.hi[ax]
    m = 2.0 * face - x
    if m == face:
        # On a closed domain face x belongs here, so the mirror goes out;
        # on an interior face x belongs to the next block, so it comes in.
        closed = bool(bounds.closed_hi) and bounds.closed_hi[ax]
        m = math.nextafter(face, math.inf if closed else -math.inf)
    return m


def generate_mirrors(point, bounds: BlockBounds, delta) -> List[tuple]:
    """Mirror images of ``point`` across every combination of nearby faces.

    >>> from vpdeposit.mesh import BlockBounds
    >>> b = BlockBounds((0.0, 0.0, 0.0), (10.0, 10.0, 10.0))
    >>> generate_mirrors((3, 1, 9), b, (2.0, 2.0, 2.0))
    [(3.0, -1.0, 9.0), (3.0, 1.0, 11.0), (3.0, -1.0, 11.0)]
    """
    point = tuple(float(x) for x in point)
    prox = classify(point, bounds, delta)
    near = [ax for ax, p in enumerate(prox) if p is not Proximity.NONE]
    if not near:
        return []
    reflected = {ax: _reflect(point[ax], ax, prox[ax], bounds) for ax in near}
    out = []
    for subset in mirror_subsets(near):
        m = list(point)
        for ax in subset:
            m[ax] = reflected[ax]
        out.append(tuple(m))
    return out


def make_virtuals(parent: Particle, mirrors) -> List[Particle]:
    """Virtual copies of ``parent``, one per mirror position.

    Each virtual keeps the parent's coordinates for deposition and records
    which axes it was mirrored across; its block is left for partitioning.
    """
    if parent.is_virtual:
        raise ValueError(f"particle {parent.pid} is virtual and cannot spawn virtuals")
    out = []
    for pos in mirrors:
        mask = 0
        for ax, (m, x) in enumerate(zip(pos, parent.pos)):
            if m != x:
                mask |= 1 << ax
        out.append(Particle(
            pid=parent.pid, pos=tuple(pos), mass=parent.mass, block=parent.block,
            depos_pos=parent.pos, is_virtual=1, parent_pid=parent.pid,
            mirror_axes=mask,
        ))
    return out
