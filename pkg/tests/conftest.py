import numpy as np
import pytest

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def brute_concordance(x, y):
    """O(n^2) count of concordant and discordant index pairs."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    s = np.sign(x[:, None] - x[None, :]) * np.sign(y[:, None] - y[None, :])
    upper = np.triu(s, 1)
    return int((upper > 0).sum()), int((upper < 0).sum())


def brute_tau(x, y):
    c, d = brute_concordance(x, y)
    n = len(x)
    return (c - d) / (n * (n - 1) // 2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record_criterion():
    def _record(name: str, ok: bool, detail: str = ""):
        ACCEPTANCE_RESULTS.append((name, bool(ok), detail))
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
