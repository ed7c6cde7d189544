"""Step pipelines for the virtual-particle and halo strategies."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .boundary import BcConfig, apply_bc, resolve_copies
from .deposition import DensityField, deposit_all, new_fields
from .errors import CFLViolation, GeometryError, RoutingError
from .halo import deposit_with_halo, new_halo_fields, reverse_ghost_fill
from .mesh import Mesh, block_bounds
from .migration import CommStats, RankMap, move_particles
from .mirrors import generate_mirrors, make_virtuals
from .particles import Particle, ParticleBuffers, destroy_virtuals, partition

STRATEGIES = ("virtual", "baseline")


@dataclass
class SimState:
    mesh: Mesh
    bc: BcConfig
    rank_map: RankMap
    particles: List[Particle]
    velocities: Dict[int, tuple]
    dt: float
    step: int = 0

    def replace(self, **changes) -> "SimState":
        return dataclasses.replace(self, **changes)


@dataclass
class StepResult:
    state: SimState
    fields: List[DensityField]
    stats: CommStats
    initial_mass: float
    # (pid, mass, reason); pid is -1 for losses not tied to one particle.
    lost_log: List[tuple] = field(default_factory=list)
    virtuals_created: int = 0
    virtuals_destroyed: int = 0

    @property
    def lost(self) -> float:
        return math.fsum(m for _, m, _ in self.lost_log)


def advance_particles(particles, velocities, dt, mesh: Mesh) -> List[Particle]:
    """Move every particle by ``velocity * dt``, refusing moves over one cell."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    out = []
    for p in particles:
        v = velocities.get(p.pid)
        if v is None:
            raise ValueError(f"no velocity for particle {p.pid}")
        for ax in range(mesh.ndim):
            if abs(v[ax]) * dt > mesh.delta[ax]:
                raise CFLViolation(
                    f"particle {p.pid} would move {abs(v[ax]) * dt:g} along axis {ax}, "
                    f"more than one cell ({mesh.delta[ax]:g}) per step",
                    pid=p.pid,
                )
        pos = tuple(x + vx * dt for x, vx in zip(p.pos, v))
        out.append(p.copy(pos=pos, depos_pos=pos))
    return out


def _flip(velocities, pid, reflected, ndim):
    if reflected:
        v = velocities[pid]
        velocities[pid] = tuple(-v[ax] if reflected >> ax & 1 else v[ax]
                                for ax in range(ndim))


def _finish(state, buffers, velocities, fields, stats, initial, lost_log,
            created=0, destroyed=0) -> StepResult:
    survivors = sorted(
        (p for b in buffers.values() for p in b.local + b.received), key=lambda p: p.pid
    )
    live = {p.pid for p in survivors}
    new_state = state.replace(
        particles=survivors,
        velocities={k: v for k, v in velocities.items() if k in live},
        step=state.step + 1,
    )
    return StepResult(new_state, fields, stats, initial, lost_log, created, destroyed)


def step_virtual(state: SimState) -> StepResult:
    """One step of advance, mirroring, BCs, migration and clipped deposition."""
    mesh, bc, ranks = state.mesh, state.bc, state.rank_map
    initial = math.fsum(p.mass for p in state.particles)
    particles = advance_particles(state.particles, state.velocities, state.dt, mesh)
    velocities = dict(state.velocities)
    owned = {r: ranks.blocks_of(r) for r in range(ranks.nranks)}
    buffers = {r: ParticleBuffers() for r in range(ranks.nranks)}
    lost_log = []
    created = 0
    for p in particles:
        r = ranks.rank_of(p.block)
        mirrors = generate_mirrors(p.pos, block_bounds(mesh, p.block), mesh.delta)
        virtuals = make_virtuals(p, mirrors)
        created += len(virtuals)
        outcome, kept = resolve_copies(p, virtuals, mesh, bc)
        if outcome.lost:
            lost_log.append((p.pid, p.mass, "boundary"))
            continue
        _flip(velocities, p.pid, outcome.reflected, mesh.ndim)
        partition(buffers[r], mesh, [outcome.particle] + kept, owned[r])
    received, stats = move_particles(
        {r: b.destination for r, b in buffers.items()}, ranks, mesh.ndim
    )
    fields = new_fields(mesh)
    destroyed = 0
    for r, b in buffers.items():
        b.destination = []
        b.received = received[r]
        clip_log = []
        deposit_all(b.local + b.received, fields, mesh, owned[r], bc, lost_log=clip_log)
        lost_log.extend((pid, m, "domain face") for pid, m in clip_log)
        destroyed += destroy_virtuals(b)
    return _finish(state, buffers, velocities, fields, stats, initial, lost_log,
                   created, destroyed)


def step_baseline(state: SimState) -> StepResult:
    """One step of advance, BCs, migration, halo deposition and reverse fill."""
    mesh, bc, ranks = state.mesh, state.bc, state.rank_map
    initial = math.fsum(p.mass for p in state.particles)
    particles = advance_particles(state.particles, state.velocities, state.dt, mesh)
    velocities = dict(state.velocities)
    owned = {r: ranks.blocks_of(r) for r in range(ranks.nranks)}
    buffers = {r: ParticleBuffers() for r in range(ranks.nranks)}
    lost_log = []
    for p in particles:
        r = ranks.rank_of(p.block)
        outcome = apply_bc(p, mesh, bc)
        if outcome.lost:
            lost_log.append((p.pid, p.mass, "boundary"))
            continue
        _flip(velocities, p.pid, outcome.reflected, mesh.ndim)
        partition(buffers[r], mesh, [outcome.particle], owned[r])
    received, stats = move_particles(
        {r: b.destination for r, b in buffers.items()}, ranks, mesh.ndim
    )
    halos = new_halo_fields(mesh)
    for r, b in buffers.items():
        b.destination = []
        b.received = received[r]
        for q in b.local + b.received:
            if q.block not in owned[r]:
                raise RoutingError(f"particle {q.pid} in block {q.block} is not local")
            deposit_with_halo(halos[q.block], q, block_bounds(mesh, q.block), mesh.delta)
    fields, fill_stats, discarded = reverse_ghost_fill(halos, mesh, bc, ranks)
    if discarded:
        lost_log.append((-1, discarded, "ghost fill"))
    return _finish(state, buffers, velocities, fields, stats + fill_stats, initial,
                   lost_log)


STEP_FUNCTIONS = {"virtual": step_virtual, "baseline": step_baseline}


def check_step_postconditions(state: SimState) -> None:
    """Raise if a virtual survived or a particle sits outside its block."""
    for p in state.particles:
        if p.is_virtual:
            raise GeometryError(f"virtual copy of particle {p.parent_pid} survived the step")
        if not block_bounds(state.mesh, p.block).contains(p.pos):
            raise GeometryError(f"particle {p.pid} at {p.pos} is not inside block {p.block}")


def random_particles(mesh: Mesh, count: int, seed: int, mass_range=(0.5, 1.5),
                     snap: Optional[float] = None) -> List[Particle]:
    """Uniformly scattered particles; ``snap`` rounds positions to a lattice of
    ``snap * delta`` to provoke exact face and centre ties."""
    from .mesh import block_from_point

    rng = np.random.default_rng(seed)
    lo = np.array(mesh.domain_lo)
    hi = np.array(mesh.domain_hi)
    pos = rng.uniform(lo, hi, size=(count, mesh.ndim))
    if snap:
        step = np.array(mesh.delta) * snap
        pos = lo + np.round((pos - lo) / step) * step
        pos = np.clip(pos, lo, hi)
    masses = rng.uniform(*mass_range, size=count)
    out = []
    for pid in range(count):
        x = tuple(float(v) for v in pos[pid])
        out.append(Particle(pid, x, float(masses[pid]), block_from_point(mesh, x)))
    return out


def random_velocities(particles, ndim: int, vmax, seed: int) -> Dict[int, tuple]:
    rng = np.random.default_rng(seed)
    vmax = np.broadcast_to(np.asarray(vmax, dtype=float), (ndim,))
    vel = rng.uniform(-vmax, vmax, size=(len(particles), ndim))
    return {p.pid: tuple(float(v) for v in vel[i]) for i, p in enumerate(particles)}


def run_steps(state: SimState, strategy: str, steps: int, check: bool = True):
    """Advance ``steps`` times with one strategy; yields each StepResult."""
    fn = STEP_FUNCTIONS[strategy]
    for _ in range(steps):
        res = fn(state)
        if check:
            check_step_postconditions(res.state)
        yield res
        state = res.state


@dataclass
class ScenarioRun:
    results: Dict[str, List[StepResult]]
    diffs: list
    ledgers: list

    @property
    def max_diff(self) -> float:
        return max((d.max_abs for _, d in self.diffs), default=0.0)


def simulate(scenario, strategies=None, ranks: Optional[int] = None) -> ScenarioRun:
    """Run a scenario fully in memory under each requested strategy."""
    from .report import diff_fields, mass_ledger

    strategies = tuple(strategies or scenario.strategies)
    results = {}
    for strategy in strategies:
        state = scenario.initial_state(ranks)
        results[strategy] = list(run_steps(state, strategy, scenario.steps))
    diffs = []
    if "virtual" in results and "baseline" in results:
        for i, (a, b) in enumerate(zip(results["virtual"], results["baseline"]), 1):
            diffs.append((i, diff_fields(a.fields, b.fields)))
    ledgers = [
        (i, strategy, mass_ledger(r.fields, r.initial_mass, r.lost_log))
        for strategy in strategies
        for i, r in enumerate(results[strategy], 1)
    ]
    return ScenarioRun(results, diffs, ledgers)


def run_scenario(config, out_dir=None, strategies=None) -> ScenarioRun:
    """Simulate a scenario, then write all artifacts.

    Nothing is written unless every step of every strategy succeeds.
    Layout under ``out_dir``: ``<strategy>/step_NNNN/density/`` dumps and
    ``<strategy>/step_NNNN/particles.csv``, plus ``stats.csv``,
    ``ledger.csv``, ``summary.txt`` and, when both strategies ran,
    ``equivalence.csv``.
    """
    from pathlib import Path

    from .dumps import write_density_dump
    from .particles import write_particles_csv
    from .report import (summary_text, write_equivalence_csv, write_ledger_csv,
                         write_stats_csv)

    if not hasattr(config, "initial_state"):
        from .config import load_config

        config = load_config(config)
    run = simulate(config, strategies)
    out = Path(out_dir if out_dir is not None else (config.output or "out"))
    ndim = config.mesh.ndim
    stats_rows = []
    out.mkdir(parents=True, exist_ok=True)
    for strategy, results in run.results.items():
        for i, res in enumerate(results, 1):
            step_dir = out / strategy / f"step_{i:04d}"
            write_density_dump(step_dir / "density", res.fields)
            write_particles_csv(step_dir / "particles.csv", res.state.particles, ndim)
    for i in range(config.steps):
        for strategy, results in run.results.items():
            stats_rows.append((strategy, results[i].stats))
    write_stats_csv(out / "stats.csv", stats_rows)
    write_ledger_csv(out / "ledger.csv", run.ledgers)
    if run.diffs:
        write_equivalence_csv(out / "equivalence.csv", run.diffs)
    (out / "summary.txt").write_text(summary_text(stats_rows, run.diffs, run.ledgers))
    return run
