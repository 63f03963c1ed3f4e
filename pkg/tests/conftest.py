import numpy as np
import pytest

_ACCEPTANCE = []


def brute_interval(f, n, horizon, driven="left"):
    """Plain-list leapfrog on one interval; the driven end follows ``f``.

    Kept deliberately separate from the package stepper so the closed forms
    are checked against an independent recursion. Returns ``u[t + 1][j]``.
    """
    sig = lambda t: f[t] if 0 <= t < len(f) else 0.0  # noqa: E731
    end = 0 if driven == "left" else n
    prev = [0.0] * (n + 1)
    cur = [0.0] * (n + 1)
    cur[end] = sig(0)
    out = [prev, cur]
    for t in range(horizon):
        nxt = [0.0] * (n + 1)
        for j in range(1, n):
            nxt[j] = cur[j + 1] + cur[j - 1] - prev[j]
        nxt[end] = sig(t + 1)
        out.append(nxt)
        prev, cur = cur, nxt
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
