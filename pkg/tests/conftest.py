import numpy as np
import pytest


def wls_oracle(x, y, h, x0, exclude=None):
    """Intercept of a Gaussian-weighted straight-line fit centred at x0."""
    keep = np.ones(x.size, bool)
    if exclude is not None:
        keep[exclude] = False
    xs, ys = x[keep], y[keep]
    sw = np.sqrt(np.exp(-0.5 * ((xs - x0) / h) ** 2))
    X = np.column_stack([np.ones(xs.size), xs - x0])
    coef, *_ = np.linalg.lstsq(X * sw[:, None], ys * sw, rcond=None)
    return coef[0]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the test session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
