import numpy as np
import pytest

from skgeom.curves import ParametricCurve


def helix(r=1.0, c=0.5, analytic=True, domain=(-6.0, 6.0)):
    """Circular helix ``(r cos t, r sin t, c t)``."""
    f = lambda t: np.array([r * np.cos(t), r * np.sin(t), c * t])  # noqa: E731
    if not analytic:
        return ParametricCurve(f, domain)
    return ParametricCurve(
        f, domain,
        d1_func=lambda t: np.array([-r * np.sin(t), r * np.cos(t), c]),
        d2_func=lambda t: np.array([-r * np.cos(t), -r * np.sin(t), 0.0]),
        d3_func=lambda t: np.array([r * np.sin(t), -r * np.cos(t), 0.0]),
    )


def circle(rho=1.0, domain=(0.0, np.pi)):
    return ParametricCurve(
        lambda t: np.array([rho * np.cos(t), rho * np.sin(t), 0.0]), domain,
        d1_func=lambda t: np.array([-rho * np.sin(t), rho * np.cos(t), 0.0]),
        d2_func=lambda t: np.array([-rho * np.cos(t), -rho * np.sin(t), 0.0]),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    """Store a one-line verdict for the terminal summary and return ``ok``."""
    ACCEPTANCE_LINES.append(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} | {detail}")
    print(ACCEPTANCE_LINES[-1])
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
