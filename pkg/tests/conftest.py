import os

# several numba threads even on a single-core box, so worker-count
# independence is exercised for real; must happen before numba is imported
os.environ.setdefault("NUMBA_NUM_THREADS", "8")

import numpy as np  # noqa: E402
import pytest  # noqa: E402


def brute_force_distance(segments, pts):
    """Nearest segment by scanning every segment (lowest id wins ties)."""
    ax, ay, bx, by = (segments[:, i][None, :] for i in range(4))
    px = pts[:, 0][:, None]
    py = pts[:, 1][:, None]
    dx = bx - ax
    dy = by - ay
    t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)
    tc = np.minimum(np.maximum(t, 0.0), 1.0)
    qx = ax + tc * dx - px
    qy = ay + tc * dy - py
    d = np.sqrt(qx * qx + qy * qy)
    ids = np.argmin(d, axis=1)
    return d[np.arange(len(pts)), ids], ids


@pytest.fixture(scope="session")
def saw_1e4():
    from flightlab.fractalgen import SawConfig, saw_generate
    return saw_generate(SawConfig(n_steps=10_000, n_pivot_attempts=100_000, seed=0))


@pytest.fixture(scope="session")
def koch6():
    from flightlab.fractalgen import KochConfig, koch_generate
    return koch_generate(KochConfig(iterations=6))


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one PASS/FAIL line per acceptance criterion; the lines are
    echoed immediately and repeated in the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def log(label: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
        lines.append(line)
        print(line)
        return passed

    return log


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
