import math

import numpy as np
import pytest

from randsep.subspace import Subspace


def line(*coords) -> Subspace:
    return Subspace.from_vectors(np.asarray(coords, dtype=float))


def plane_pair_with_angles(d, angles):
    """Two r-dim subspaces of R^d whose principal angles are exactly ``angles``."""
    r = len(angles)
    e = np.eye(d)
    u1 = e[:, :r]
    u2 = np.column_stack([math.cos(t) * e[:, i] + math.sin(t) * e[:, r + i]
                          for i, t in enumerate(angles)])
    return Subspace(u1), Subspace(u2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for text in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(text)
