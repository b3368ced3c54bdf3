import numpy as np
import pytest

from spectral_t.fourier_core import FourierGrid, TimeSeries


def direct_dft(x):
    """O(N^2) reference: X_k = sum_j x_j exp(-2 pi i j k / N)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    jk = np.outer(np.arange(n), np.arange(n))
    return (x[None, :] * np.exp(-2j * np.pi * jk / n)).sum(axis=1)


def direct_synthesis(a, b, n, dt):
    """Reference real-coefficient synthesis by explicit trigonometric sums."""
    t = np.arange(n) * dt
    f = np.arange(len(a)) / (n * dt)
    arg = 2 * np.pi * f[None, :] * t[:, None]
    return (a * np.cos(arg) + b * np.sin(arg)).sum(axis=1) / np.sqrt(n * dt)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def grid100():
    return FourierGrid(100, 0.01)


@pytest.fixture
def random_series(rng):
    return TimeSeries(rng.normal(size=100), 0.01)


# one summary line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
