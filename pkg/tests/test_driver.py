import textwrap
from pathlib import Path

import numpy as np
import pytest

from helpers import make_state
from oracle import global_deposit
from vpdeposit import cli
from vpdeposit.boundary import BcConfig
from vpdeposit.config import load_config, parse_config
from vpdeposit.deposition import assemble_global, total_mass
from vpdeposit.driver import (SimState, advance_particles, check_step_postconditions,
                              random_particles, run_scenario, step_baseline, step_virtual)
from vpdeposit.dumps import read_density_dump
from vpdeposit.errors import CFLViolation, ConfigError
from vpdeposit.mesh import build_mesh
from vpdeposit.migration import RankMap
from vpdeposit.particles import Particle

SCENARIOS = Path(__file__).resolve().parents[1] / "src" / "vpdeposit" / "scenarios"


def test_advance_accepts_sub_cell_moves(grid_mesh):
    (p,) = advance_particles([Particle(0, (5.0, 5.0), 1.0, 0)], {0: (1.0, 0.0)}, 0.4, grid_mesh)
    assert p.pos == (5.4, 5.0)


def test_advance_rejects_more_than_one_cell(grid_mesh):
    with pytest.raises(CFLViolation, match="particle 3") as info:
        advance_particles([Particle(3, (5.0, 5.0), 1.0, 0)], {3: (6.0, 0.0)}, 0.5, grid_mesh)
    assert info.value.pid == 3


def test_advance_zero_velocity(grid_mesh):
    (p,) = advance_particles([Particle(0, (5.0, 5.0), 1.0, 0)], {0: (0.0, 0.0)}, 0.4, grid_mesh)
    assert p.pos == (5.0, 5.0)


def _state(mesh, particles, vel=None, bcs=("periodic", "periodic")):
    vel = vel or {p.pid: (0.0,) * mesh.ndim for p in particles}
    return SimState(mesh, BcConfig.from_names(bcs), RankMap.contiguous(mesh.nblocks, mesh.nblocks),
                    particles, vel, 0.4)


@pytest.mark.parametrize("step", [step_virtual, step_baseline])
def test_step_empty(grid_mesh, step):
    res = step(_state(grid_mesh, []))
    assert total_mass(res.fields) == 0.0
    if step is step_virtual:
        assert res.stats.messages == 0


@pytest.mark.parametrize("step", [step_virtual, step_baseline])
def test_step_one_interior_particle(grid_mesh, step):
    res = step(_state(grid_mesh, [Particle(0, (15.3, 15.2), 1.0, 5)], {0: (1.0, 1.0)}))
    assert total_mass(res.fields) == pytest.approx(1.0, abs=1e-15)
    if step is step_virtual:
        assert res.stats.messages == 0
    check_step_postconditions(res.state)


@pytest.mark.parametrize("bcs", [["periodic"] * 2, ["outflow"] * 2, ["reflective"] * 2,
                                 ["reflective", "periodic"]])
def test_random_scenario_matches_baseline_and_oracle(grid_mesh, bcs):
    state = make_state(grid_mesh, bcs, count=1000, seed=4)
    a = step_virtual(state)
    b = step_baseline(state)
    ga = assemble_global(a.fields, grid_mesh)
    assert np.abs(ga - assemble_global(b.fields, grid_mesh)).max() <= 1e-12
    # independent global-grid deposit of the surviving particles
    pos = [p.pos for p in a.state.particles]
    mass = [p.mass for p in a.state.particles]
    grid, _ = global_deposit(pos, mass, (0, 0), grid_mesh.delta, (20, 20),
                             [k.value == "periodic" for k in state.bc.axes])
    assert np.abs(ga - grid).max() <= 1e-12
    assert [p.pos for p in a.state.particles] == [p.pos for p in b.state.particles]


def test_step_removes_virtuals_and_conserves_count(grid_mesh):
    state = make_state(grid_mesh, ["periodic"] * 2, count=500, seed=8)
    res = step_virtual(state)
    assert res.virtuals_created > 0
    assert res.virtuals_destroyed <= res.virtuals_created
    assert len(res.state.particles) == 500
    assert sorted(p.pid for p in res.state.particles) == list(range(500))
    check_step_postconditions(res.state)


def test_reflection_flips_velocity(grid_mesh):
    state = _state(grid_mesh, [Particle(0, (0.2, 5.0), 1.0, 0)], {0: (-1.0, 0.5)},
                   ("reflective", "periodic"))
    res = step_virtual(state)
    assert res.state.particles[0].pos == pytest.approx((0.2, 5.2))
    assert res.state.velocities[0] == (1.0, 0.5)


CONFIG_TEMPLATE = """
[mesh]
ndim = 2
domain_lo = [0.0, 0.0]
domain_hi = [40.0, 40.0]
blocks = [4, 4]
cells = [5, 5]
[bc]
axes = ["{bcx}", "periodic"]
[particles]
count = 200
seed = 1
[mover]
kind = "{kind}"
vmax = 4.0
velocity = [6.0, 0.0]
seed = 2
[run]
steps = 2
dt = {dt}
ranks = 4
"""


def write_cfg(tmp_path, bcx="periodic", kind="random", dt=0.4, name="s.toml"):
    path = tmp_path / name
    path.write_text(CONFIG_TEMPLATE.format(bcx=bcx, kind=kind, dt=dt))
    return path


def test_bundled_periodic_scenario(tmp_path):
    run = run_scenario(SCENARIOS / "periodic_2d.toml", tmp_path / "out")
    assert run.max_diff <= 1e-12
    for name in ("stats.csv", "ledger.csv", "equivalence.csv", "summary.txt"):
        assert (tmp_path / "out" / name).exists()
    fields = read_density_dump(tmp_path / "out" / "virtual" / "step_0003" / "density")
    assert len(fields) == 16
    assert total_mass(fields) == pytest.approx(total_mass(run.results["virtual"][-1].fields))


def test_mixed_bc_scenario(tmp_path):
    run = run_scenario(SCENARIOS / "mixed_bc.toml", tmp_path / "out")
    assert run.max_diff <= 1e-12
    assert all(lg.balanced() for _, _, lg in run.ledgers)


def test_stats_csv_layout(tmp_path):
    run_scenario(load_config(write_cfg(tmp_path)), tmp_path / "o")
    lines = (tmp_path / "o" / "stats.csv").read_text().splitlines()
    assert lines[0] == "strategy,messages,bytes,particles_moved,virtuals_moved"
    assert [l.split(",")[0] for l in lines[1:]] == ["virtual", "baseline"] * 2


def test_config_errors_name_the_field(tmp_path):
    with pytest.raises(ConfigError, match="mover.kind"):
        load_config(write_cfg(tmp_path, kind="teleport"))
    with pytest.raises(ConfigError, match="unknown boundary"):
        load_config(write_cfg(tmp_path, bcx="sticky"))
    bad = tmp_path / "bad.toml"
    bad.write_text("[mesh\nndim = 2\n")
    with pytest.raises(ConfigError, match="line 1"):
        load_config(bad)
    with pytest.raises(ConfigError, match="mesh.cells"):
        parse_config({"mesh": {"ndim": 2, "domain_lo": [0, 0], "domain_hi": [1, 1],
                               "blocks": [1, 1]}})


def test_explicit_particles_and_mover():
    cfg = parse_config({
        "mesh": {"ndim": 2, "domain_lo": [0, 0], "domain_hi": [40, 40],
                 "blocks": [4, 4], "cells": [5, 5]},
        "bc": {"axes": ["outflow", "outflow"]},
        "particles": {"explicit": [{"pos": [9.5, 9.5], "mass": 2.0, "velocity": [1.0, 0.0]},
                                   {"pos": [0.5, 20.0], "velocity": [-2.0, 0.0]}]},
        "mover": {"kind": "explicit"},
        "run": {"dt": 0.5, "steps": 1},
    })
    assert [p.block for p in cfg.particles] == [0, 8]
    assert cfg.velocities == {0: (1.0, 0.0), 1: (-2.0, 0.0)}
    res = step_virtual(cfg.initial_state())
    # particle 1 leaves through the outflow face
    assert [p.pid for p in res.state.particles] == [0]
    assert res.lost == pytest.approx(1.0)


def test_cli_compare_ok(tmp_path, capsys):
    rc = cli.main(["compare", str(write_cfg(tmp_path, bcx="reflective")), "-o", str(tmp_path / "o")])
    assert rc == 0
    assert "max |virtual - baseline|" in capsys.readouterr().out


def test_cli_config_error_writes_nothing(tmp_path):
    out = tmp_path / "o"
    rc = cli.main(["run", str(write_cfg(tmp_path, kind="teleport")), "-o", str(out)])
    assert rc == cli.EXIT_CONFIG
    assert not out.exists()
    assert cli.main(["run", str(tmp_path / "missing.toml")]) == cli.EXIT_CONFIG


def test_cli_cfl_violation(tmp_path):
    out = tmp_path / "o"
    rc = cli.main(["run", str(write_cfg(tmp_path, kind="uniform", dt=0.5)), "-o", str(out)])
    assert rc == cli.EXIT_CFL
    assert not out.exists()


def test_cli_mismatch_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "EQUIVALENCE_TOL", -1.0)
    rc = cli.main(["compare", str(write_cfg(tmp_path)), "-o", str(tmp_path / "o")])
    assert rc == cli.EXIT_MISMATCH


def test_cli_mirrors_from_args(capsys):
    rc = cli.main(["mirrors", "--lo", "0", "0", "0", "--hi", "10", "10", "10",
                   "--delta", "2", "2", "2", "--point", "3", "1", "9"])
    assert rc == 0
    assert capsys.readouterr().out.strip() == \
        "<3,1,9> has 3 mirrors: <3,-1,9>, <3,1,11>, <3,-1,11>"


def test_cli_mirrors_from_stdin(capsys, monkeypatch):
    import io
    monkeypatch.setattr("sys.stdin", io.StringIO("<1,3,3>\n5 5 5\n"))
    rc = cli.main(["mirrors", "--lo", "0", "0", "0", "--hi", "10", "10", "10",
                   "--delta", "2", "2", "2"])
    assert rc == 0
    assert capsys.readouterr().out.splitlines() == [
        "<1,3,3> has 1 mirror: <-1,3,3>",
        "<5,5,5> has 0 mirrors: none",
    ]


def test_repeat_runs_are_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path, bcx="outflow")
    cli.main(["run", str(cfg), "-o", str(tmp_path / "a")])
    cli.main(["run", str(cfg), "-o", str(tmp_path / "b")])
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.csv"))
    assert files
    for rel in files:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


TIE_SUITES = [["periodic"] * 3, ["outflow"] * 3, ["reflective"] * 3,
              ["reflective", "periodic", "outflow"], ["periodic", "reflective", "outflow"]]


@pytest.mark.parametrize("ndim", [2, 3])
@pytest.mark.parametrize("nblocks", [4, 1])
@pytest.mark.parametrize("bcs", TIE_SUITES, ids=lambda b: "-".join(b))
def test_lattice_ties_match_baseline_over_steps(ndim, nblocks, bcs):
    # quarter-cell lattice: positions land exactly on centres and faces
    hi = 10.0 * nblocks
    mesh = build_mesh(ndim, (0,) * ndim, (hi,) * ndim, (nblocks,) * ndim, (5,) * ndim)
    bc = BcConfig.from_names(bcs[:ndim])
    for seed in range(4):
        parts = random_particles(mesh, 200, seed, snap=0.25)
        rng = np.random.default_rng(seed)
        vel = {p.pid: tuple(float(v) for v in rng.integers(-4, 5, ndim)) for p in parts}
        state = SimState(mesh, bc, RankMap.contiguous(mesh.nblocks, mesh.nblocks), parts, vel, 0.5)
        for _ in range(3):
            a, b = step_virtual(state), step_baseline(state)
            check_step_postconditions(a.state)
            diff = np.abs(assemble_global(a.fields, mesh) - assemble_global(b.fields, mesh))
            assert diff.max() <= 1e-12
            for res in (a, b):
                assert total_mass(res.fields) + res.lost == pytest.approx(res.initial_mass, rel=1e-12)
            assert [p.pos for p in a.state.particles] == [p.pos for p in b.state.particles]
            state = a.state
