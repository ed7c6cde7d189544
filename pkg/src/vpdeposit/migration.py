"""In-process simulated ranks with deterministic message accounting."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, fields as dc_fields
from typing import Dict, List, Sequence, Tuple

from .errors import ConfigError, RoutingError
from .particles import Particle

VALUE_BYTES = 8


def record_bytes(ndim: int) -> int:
    """Wire size of one particle: pos, depos_pos, mass, block (8 bytes each) + flags."""
    return (2 * ndim + 2) * VALUE_BYTES + 8


@dataclass(frozen=True)
class RankMap:
    owner: tuple
    nranks: int

    def __post_init__(self):
        if self.nranks < 1:
            raise ConfigError("need at least one rank")
        seen = set(self.owner)
        if any(not 0 <= r < self.nranks for r in seen):
            raise ConfigError("rank map refers to a rank outside 0..nranks-1")
        if len(seen) != self.nranks:
            raise ConfigError("every rank must own at least one block")

    @classmethod
    def contiguous(cls, nblocks: int, nranks: int) -> "RankMap":
        """Split block ids into ``nranks`` contiguous, near-equal runs."""
        if not 1 <= nranks <= nblocks:
            raise ConfigError(f"ranks must be between 1 and {nblocks}, got {nranks}")
        return cls(tuple(b * nranks // nblocks for b in range(nblocks)), nranks)

    def blocks_of(self, rank: int) -> frozenset:
        return frozenset(b for b, r in enumerate(self.owner) if r == rank)

    def rank_of(self, block: int) -> int:
        if not 0 <= block < len(self.owner):
            raise RoutingError(f"block {block} has no owning rank")
        return self.owner[block]


@dataclass
class CommStats:
    messages: int = 0
    bytes: int = 0
    particles_moved: int = 0
    virtuals_moved: int = 0

    def __add__(self, other: "CommStats") -> "CommStats":
        return CommStats(*(getattr(self, f.name) + getattr(other, f.name)
                           for f in dc_fields(self)))

    def as_row(self) -> list:
        return [self.messages, self.bytes, self.particles_moved, self.virtuals_moved]


def move_particles(destinations: Dict[int, Sequence[Particle]], rank_map: RankMap,
                   ndim: int) -> Tuple[Dict[int, List[Particle]], CommStats]:
    """Deliver each rank's outgoing particles to the ranks owning their blocks.

    ``destinations`` maps source rank to its destination buffer. Each
    non-empty (source, target) pair with distinct ranks costs one message;
    same-rank transfers are free. Every rank's received list is ordered by
    source rank, then pid.
    """
    rsize = record_bytes(ndim)
    batches = defaultdict(list)
    for src in sorted(destinations):
        for q in destinations[src]:
            batches[(src, rank_map.rank_of(q.block))].append(q)
    stats = CommStats()
    received = {r: [] for r in range(rank_map.nranks)}
    for (src, dst), batch in sorted(batches.items()):
        if src != dst:
            stats.messages += 1
            stats.bytes += len(batch) * rsize
            for q in batch:
                if q.is_virtual:
                    stats.virtuals_moved += 1
                else:
                    stats.particles_moved += 1
        received[dst].extend(sorted(batch, key=lambda q: q.pid))
    return received, stats


def compare_comm(state, mesh=None, rank_map=None, bc=None):
    """Run one step under both strategies from the same state.

    Returns ``{"baseline": CommStats, "virtual": CommStats}``; the baseline count
    includes the reverse ghost fill, the virtual count is migration only.
    Optional arguments override the state's mesh, rank map and BCs.
    """
    from .driver import step_baseline, step_virtual

    changes = {k: v for k, v in (("mesh", mesh), ("rank_map", rank_map), ("bc", bc))
               if v is not None}
    s = state.replace(**changes)
    base = step_baseline(s)
    virt = step_virtual(s)
    return {"baseline": base.stats, "virtual": virt.stats}
