"""Particle records and the local / destination / received buffers.

Attribute order when flattened for exchange with array-based codes:
``pos, depos_pos, mass, block, is_virtual, parent_pid``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, List, Optional

from .errors import GeometryError
from .mesh import Mesh, block_from_point


@dataclass(slots=True)
class Particle:
    pid: int
    pos: tuple
    mass: float
    block: int
    depos_pos: Optional[tuple] = None
    is_virtual: int = 0
    parent_pid: Optional[int] = None
    # Bitmask of axes this copy was mirrored across (virtuals only).
    mirror_axes: int = 0

    def __post_init__(self):
        if self.depos_pos is None:
            self.depos_pos = self.pos
        if self.parent_pid is None:
            self.parent_pid = self.pid

    def copy(self, **changes) -> "Particle":
        p = Particle(
            self.pid, self.pos, self.mass, self.block, self.depos_pos,
            self.is_virtual, self.parent_pid, self.mirror_axes,
        )
        for k, v in changes.items():
            setattr(p, k, v)
        return p


@dataclass
class ParticleBuffers:
    local: List[Particle] = field(default_factory=list)
    destination: List[Particle] = field(default_factory=list)
    received: List[Particle] = field(default_factory=list)

    def all(self) -> List[Particle]:
        return self.local + self.destination + self.received


def partition(buffers: ParticleBuffers, mesh: Mesh, particles: Iterable[Particle],
              owned) -> ParticleBuffers:
    """Recompute each particle's block from ``pos`` and route it.

    Particles landing in a block contained in ``owned`` go to ``local``,
    the rest to ``destination``. Boundary conditions must already have
    brought every position back inside the domain.
    """
    for q in particles:
        b = block_from_point(mesh, q.pos)
        if b is None:
            raise GeometryError(
                f"particle {q.pid} at {q.pos} is outside the domain after boundary conditions"
            )
        q.block = b
        (buffers.local if b in owned else buffers.destination).append(q)
    return buffers


def destroy_virtuals(buffers: ParticleBuffers) -> int:
    removed = 0
    for name in ("local", "destination", "received"):
        kept = [p for p in getattr(buffers, name) if not p.is_virtual]
        removed += len(getattr(buffers, name)) - len(kept)
        setattr(buffers, name, kept)
    return removed


_AXES = "xyz"


def particle_header(ndim: int) -> list:
    return (
        ["pid", "parent_pid", "is_virtual", "block", "mass"]
        + [f"pos_{_AXES[a]}" for a in range(ndim)]
        + [f"depos_pos_{_AXES[a]}" for a in range(ndim)]
    )


def write_particles_csv(path, particles: Iterable[Particle], ndim: int) -> None:
    """Dump particles with ``repr`` floats so reruns are byte-identical."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(particle_header(ndim))
        for p in particles:
            w.writerow(
                [p.pid, p.parent_pid, p.is_virtual, p.block, repr(float(p.mass))]
                + [repr(float(v)) for v in p.pos]
                + [repr(float(v)) for v in p.depos_pos]
            )


def read_particles_csv(path) -> List[Particle]:
    out = []
    with open(path, newline="") as fh:
        rows = csv.DictReader(fh)
        ndim = sum(1 for name in rows.fieldnames if name.startswith("pos_"))
        for row in rows:
            pos = tuple(float(row[f"pos_{_AXES[a]}"]) for a in range(ndim))
            dep = tuple(float(row[f"depos_pos_{_AXES[a]}"]) for a in range(ndim))
            out.append(Particle(
                pid=int(row["pid"]), pos=pos, mass=float(row["mass"]),
                block=int(row["block"]), depos_pos=dep,
                is_virtual=int(row["is_virtual"]), parent_pid=int(row["parent_pid"]),
            ))
    return out
