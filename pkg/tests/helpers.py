"""Scenario builders shared by several test modules."""

from vpdeposit.boundary import BcConfig
from vpdeposit.driver import SimState, random_particles, random_velocities
from vpdeposit.migration import RankMap


def make_state(mesh, bcs, count=200, seed=0, ranks=None, dt=0.4, snap=None):
    particles = random_particles(mesh, count, seed, snap=snap)
    vmax = [0.999 * d / dt for d in mesh.delta]
    vel = random_velocities(particles, mesh.ndim, vmax, seed + 1000)
    rank_map = RankMap.contiguous(mesh.nblocks, ranks or mesh.nblocks)
    return SimState(mesh, BcConfig.from_names(bcs), rank_map, particles, vel, dt)


ACCEPTANCE = []


class criterion:
    """Record a pass/fail line for an acceptance criterion."""

    def __init__(self, number, text):
        self.number = number
        self.text = text

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        ACCEPTANCE.append(f"[{status}] criterion {self.number}: {self.text}")
        return False
