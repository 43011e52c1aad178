import numpy as np
import pytest

from tamed_ns.spectral import GridSpec, SpectralVelocity


@pytest.fixture
def grid16():
    return GridSpec(16)


@pytest.fixture
def grid32():
    return GridSpec(32)


def velocity(grid, fn):
    """SpectralVelocity from a callable (x, y, z) -> (u, v, w)."""
    x, y, z = grid.mesh()
    return SpectralVelocity.from_physical(grid, np.stack(fn(x, y, z)))


# -- acceptance reporting ------------------------------------------------------

_ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record the verdict of one acceptance criterion; returns the verdict."""

    def record(number, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d} ({title}): {detail}"
        _ACCEPTANCE.setdefault(number, []).append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    ran = any(
        "test_acceptance.py::" in getattr(r, "nodeid", "")
        for reports in terminalreporter.stats.values()
        for r in reports
    )
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 13):
        entries = _ACCEPTANCE.get(number)
        if not entries:
            terminalreporter.write_line(f"FAIL criterion {number:2d}: did not run to completion")
            continue
        for line in entries:
            terminalreporter.write_line(line)
