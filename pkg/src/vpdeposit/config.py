"""TOML scenario files.

Example::

    [mesh]
    ndim = 2
    domain_lo = [0.0, 0.0]
    domain_hi = [40.0, 40.0]
    blocks = [4, 4]
    cells = [5, 5]

    [bc]
    axes = ["periodic", "periodic"]

    [particles]
    count = 1000
    seed = 7
    mass = [0.5, 1.5]

    [mover]
    kind = "random"     # "uniform", "random" or "explicit"
    vmax = 4.0
    seed = 11

    [run]
    steps = 3
    dt = 0.4
    ranks = 16
    strategies = ["virtual", "baseline"]
    output = "out/periodic_2d"
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import tomli

from .boundary import BcConfig
from .driver import STRATEGIES, SimState, random_particles, random_velocities
from .errors import ConfigError, MeshError
from .mesh import Mesh, block_from_point, build_mesh
from .migration import RankMap
from .particles import Particle


@dataclass
class Scenario:
    mesh: Mesh
    bc: BcConfig
    ranks: int
    particles: List[Particle]
    velocities: dict
    dt: float
    steps: int
    strategies: tuple
    output: Optional[Path]

    def initial_state(self, ranks: Optional[int] = None) -> SimState:
        rank_map = RankMap.contiguous(self.mesh.nblocks, ranks or self.ranks)
        return SimState(self.mesh, self.bc, rank_map, [p.copy() for p in self.particles],
                        dict(self.velocities), self.dt)


def _get(table, key, where, kind=None, default=...):
    if key not in table:
        if default is ...:
            raise ConfigError(f"{where}.{key}: missing required field")
        return default
    value = table[key]
    if kind is not None and not _is(value, kind):
        raise ConfigError(f"{where}.{key}: expected {kind}, got {value!r}")
    return value


def _is(value, kind):
    if kind == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == "number":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind == "str":
        return isinstance(value, str)
    if kind == "table":
        return isinstance(value, dict)
    if kind.startswith("list["):
        inner = kind[5:-1]
        return isinstance(value, list) and all(_is(v, inner) for v in value)
    raise AssertionError(kind)


def _vector(table, key, where, ndim, kind="number"):
    v = _get(table, key, where, f"list[{kind}]")
    if len(v) != ndim:
        raise ConfigError(f"{where}.{key}: expected {ndim} entries, got {len(v)}")
    return v


def load_config(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, base_dir=path.parent)


def parse_config(data: dict, base_dir=None) -> Scenario:
    mesh_t = _get(data, "mesh", "config", "table")
    ndim = _get(mesh_t, "ndim", "mesh", "int")
    if ndim not in (2, 3):
        raise ConfigError(f"mesh.ndim: must be 2 or 3, got {ndim}")
    try:
        mesh = build_mesh(
            ndim,
            _vector(mesh_t, "domain_lo", "mesh", ndim),
            _vector(mesh_t, "domain_hi", "mesh", ndim),
            _vector(mesh_t, "blocks", "mesh", ndim, "int"),
            _vector(mesh_t, "cells", "mesh", ndim, "int"),
        )
    except MeshError as exc:
        raise ConfigError(f"mesh: {exc}") from None

    bc_t = _get(data, "bc", "config", "table")
    bc = BcConfig.from_names(_vector(bc_t, "axes", "bc", ndim, "str"))

    run_t = _get(data, "run", "config", "table", {})
    steps = _get(run_t, "steps", "run", "int", 1)
    if steps < 1:
        raise ConfigError("run.steps: must be >= 1")
    dt = float(_get(run_t, "dt", "run", "number"))
    if not dt > 0:
        raise ConfigError("run.dt: must be positive")
    ranks = _get(run_t, "ranks", "run", "int", mesh.nblocks)
    if not 1 <= ranks <= mesh.nblocks:
        raise ConfigError(f"run.ranks: must be between 1 and {mesh.nblocks}")
    strategies = tuple(_get(run_t, "strategies", "run", "list[str]", list(STRATEGIES)))
    bad = [s for s in strategies if s not in STRATEGIES]
    if bad or not strategies:
        raise ConfigError(f"run.strategies: unknown or empty {bad}; use {list(STRATEGIES)}")
    output = _get(run_t, "output", "run", "str", None)
    if output is not None:
        output = Path(output)
        if base_dir is not None and not output.is_absolute():
            output = Path(base_dir) / output

    particles, explicit_vel = _particles(_get(data, "particles", "config", "table"), mesh)
    velocities = _velocities(_get(data, "mover", "config", "table"), particles,
                             explicit_vel, ndim)
    return Scenario(mesh, bc, ranks, particles, velocities, dt, steps, strategies, output)


def _particles(table, mesh):
    ndim = mesh.ndim
    if "explicit" in table:
        rows = _get(table, "explicit", "particles")
        if not isinstance(rows, list):
            raise ConfigError("particles.explicit: expected an array of tables")
        out, vel = [], {}
        for i, row in enumerate(rows):
            where = f"particles.explicit[{i}]"
            if not isinstance(row, dict):
                raise ConfigError(f"{where}: expected a table")
            pos = tuple(float(v) for v in _vector(row, "pos", where, ndim))
            mass = float(_get(row, "mass", where, "number", 1.0))
            block = block_from_point(mesh, pos)
            if block is None:
                raise ConfigError(f"{where}.pos: {pos} lies outside the domain")
            out.append(Particle(i, pos, mass, block))
            if "velocity" in row:
                vel[i] = tuple(float(v) for v in _vector(row, "velocity", where, ndim))
        return out, vel
    count = _get(table, "count", "particles", "int")
    if count < 0:
        raise ConfigError("particles.count: must be >= 0")
    seed = _get(table, "seed", "particles", "int", 0)
    mass = _get(table, "mass", "particles", "list[number]", [1.0, 1.0])
    if len(mass) != 2 or mass[0] > mass[1] or mass[0] < 0:
        raise ConfigError("particles.mass: expected [low, high] with 0 <= low <= high")
    snap = _get(table, "snap", "particles", "number", None)
    return random_particles(mesh, count, seed, tuple(mass), snap), {}


def _velocities(table, particles, explicit, ndim):
    kind = _get(table, "kind", "mover", "str")
    if kind == "uniform":
        v = tuple(float(x) for x in _vector(table, "velocity", "mover", ndim))
        return {p.pid: v for p in particles}
    if kind == "random":
        vmax = _get(table, "vmax", "mover")
        if _is(vmax, "number"):
            vmax = [vmax] * ndim
        elif not (_is(vmax, "list[number]") and len(vmax) == ndim):
            raise ConfigError(f"mover.vmax: expected a number or {ndim} numbers")
        seed = _get(table, "seed", "mover", "int", 0)
        return random_velocities(particles, ndim, vmax, seed)
    if kind == "explicit":
        missing = [p.pid for p in particles if p.pid not in explicit]
        if missing:
            raise ConfigError(
                f"mover.kind: explicit mover needs particles.explicit[{missing[0]}].velocity"
            )
        return dict(explicit)
    raise ConfigError(f"mover.kind: unknown mover {kind!r}; use uniform, random or explicit")
