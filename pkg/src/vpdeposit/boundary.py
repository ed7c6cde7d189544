"""Per-axis physical boundary conditions applied to individual particles."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .errors import CFLViolation, ConfigError
from .mesh import Mesh
from .particles import Particle


class BC(str, enum.Enum):
    PERIODIC = "periodic"
    OUTFLOW = "outflow"
    REFLECTIVE = "reflective"


@dataclass(frozen=True)
class BcConfig:
    axes: tuple

    @classmethod
    def from_names(cls, names: Sequence[str]) -> "BcConfig":
        kinds = []
        for name in names:
            try:
                kinds.append(BC(name))
            except ValueError:
                raise ConfigError(
                    f"unknown boundary condition {name!r}; expected one of "
                    + ", ".join(b.value for b in BC)
                ) from None
        return cls(tuple(kinds))

    @classmethod
    def uniform(cls, kind, ndim: int) -> "BcConfig":
        return cls((BC(kind),) * ndim)

    def periodic(self, ax: int) -> bool:
        return self.axes[ax] is BC.PERIODIC

    @property
    def all_periodic(self) -> bool:
        return all(k is BC.PERIODIC for k in self.axes)


@dataclass(frozen=True)
class BcOutcome:
    """Result of applying boundary conditions to one particle.

    ``particle`` is None when the particle is lost. ``shift`` is the
    periodic displacement applied per axis and ``reflected`` a bitmask of
    the axes on which the particle was reflected.
    """

    particle: Optional[Particle]
    shift: tuple
    reflected: int = 0

    @property
    def lost(self) -> bool:
        return self.particle is None


def apply_bc(particle: Particle, mesh: Mesh, bc: BcConfig) -> BcOutcome:
    """Bring ``particle`` back inside the closed domain, or report it lost."""
    pos = list(particle.pos)
    shift = [0.0] * mesh.ndim
    reflected = 0
    lost = False
    for ax in range(mesh.ndim):
        x = pos[ax]
        lo, hi = mesh.domain_lo[ax], mesh.domain_hi[ax]
        if lo <= x <= hi:
            continue
        length = hi - lo
        if x < lo - length or x > hi + length:
            raise CFLViolation(
                f"particle {particle.pid} overshoots the domain by a full period on axis {ax}",
                pid=particle.pid,
            )
        kind = bc.axes[ax]
        if kind is BC.PERIODIC:
            s = length if x < lo else -length
            # x + s can round one ulp past the opposite face.
            pos[ax] = min(max(x + s, lo), hi)
            shift[ax] = s
        elif kind is BC.OUTFLOW:
            lost = True
        elif particle.is_virtual:
            lost = True
        else:
            pos[ax] = 2.0 * lo - x if x < lo else 2.0 * hi - x
            reflected |= 1 << ax
    if lost:
        return BcOutcome(None, tuple(shift), reflected)
    if shift == [0.0] * mesh.ndim and not reflected:
        return BcOutcome(particle, tuple(shift), 0)
    pos = tuple(pos)
    moved = particle.copy(pos=pos) if particle.is_virtual else particle.copy(pos=pos, depos_pos=pos)
    return BcOutcome(moved, tuple(shift), reflected)


def sync_virtual_deposition(virtual: Particle, parent_outcome: BcOutcome,
                            own_shift) -> Particle:
    """Fix a surviving virtual's deposition coordinates after BCs.

    ``virtual.depos_pos`` must still hold the parent's pre-BC position, as
    set by ``make_virtuals``. It is moved by the virtual's own periodic
    shift so it sits next to the block the virtual was routed to; on axes
    where the parent was reflected the parent's new coordinate is used.
    """
    parent = parent_outcome.particle
    reflected = parent_outcome.reflected
    depos = tuple(
        parent.pos[ax] if reflected >> ax & 1 else x + s
        for ax, (x, s) in enumerate(zip(virtual.depos_pos, own_shift))
    )
    return virtual.copy(depos_pos=depos)


def resolve_copies(parent: Particle, virtuals: List[Particle], mesh: Mesh,
                   bc: BcConfig) -> Tuple[BcOutcome, List[Particle]]:
    """Apply boundary conditions to a real particle and all of its virtuals.

    Virtuals of a lost parent are dropped. When the parent is reflected,
    the virtual mirrored across exactly the reflected axes lands on the
    reflected parent and is dropped as well; the virtuals that survive
    reflection on those axes take the parent's reflected coordinates.
    """
    outcome = apply_bc(parent, mesh, bc)
    if outcome.lost:
        return outcome, []
    kept = []
    for v in virtuals:
        vo = apply_bc(v, mesh, bc)
        if vo.lost:
            continue
        if outcome.reflected and v.mirror_axes == outcome.reflected:
            continue
        kept.append(sync_virtual_deposition(vo.particle, outcome, vo.shift))
    return outcome, kept
