import pytest

from vpdeposit.mesh import BlockBounds, build_mesh


@pytest.fixture
def grid_mesh():
    return build_mesh(2, (0, 0), (40, 40), (4, 4), (5, 5))


@pytest.fixture
def mesh3d():
    return build_mesh(3, (0, 0, 0), (40, 40, 40), (4, 4, 4), (5, 5, 5))


@pytest.fixture
def cube_block():
    return BlockBounds((0.0, 0.0, 0.0), (10.0, 10.0, 10.0)), (2.0, 2.0, 2.0)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
