import math

import numpy as np
import pytest
from hypothesis import strategies as st

from rdars.channel import ChannelSet


def cn(rng, *shape):
    """Unit-variance circularly-symmetric complex Gaussian draws."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def gaussian_uplink(rng, M, N) -> ChannelSet:
    return ChannelSet(G=cn(rng, N, M), h_d=cn(rng, M), h_r=cn(rng, N))


def gaussian_isac(rng, M, N) -> ChannelSet:
    return ChannelSet(G=cn(rng, N, M), u_d=cn(rng, M), u_r=cn(rng, N),
                      t_d=cn(rng, M), t_r=cn(rng, N))


def rel_err(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
