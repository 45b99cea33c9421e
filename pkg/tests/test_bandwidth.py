import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ciaudit import InputError
from ciaudit.bandwidth import (CAP_FACTOR, build_grid, cv_criterion, dpi_bandwidth,
                               n_max_blocks, select_cv, select_dpi)
from conftest import wls_oracle


# -- grid --------------------------------------------------------------------

@pytest.mark.parametrize("rc, a, b, top", [
    ("unit", 0.01, 25.0, 1.01),
    ("ten", 0.05, 1.0, 25.05),
    ("hundred", 0.05, 1.0, 25.05),
    ("custom(0,2)", 0.01, 25.0, 1.01),
    ("custom(-3,3)", 0.05, 1.0, 25.05),
])
def test_grid_presets(rc, a, b, top):
    grid = build_grid(rc)
    assert (grid.a, grid.b) == (a, b)
    assert len(grid) == 50
    assert np.all(np.diff(grid.h_values) > 0)
    assert grid.h_values[-1] == top
    np.testing.assert_allclose(grid.u_values, np.linspace(0.1, 5, 50))


def test_grid_lower_ends():
    assert build_grid("unit").h_values[0] > 0.01
    assert build_grid("hundred").h_values[0] > 0.06


# -- cross-validation --------------------------------------------------------

def test_cv_zero_on_lines(rng):
    x = rng.uniform(0.01, 1, 60)
    y = 0.5 + 2 * x
    for h in build_grid("unit").h_values[::7]:
        assert cv_criterion(x, y, h) < 1e-14


def test_cv_matches_refits(rng):
    x = rng.uniform(0, 1, 15)
    y = np.cos(3 * x) + rng.normal(0, 0.1, 15)
    loo = np.array([wls_oracle(x, y, 0.4, x[j], exclude=j) for j in range(15)])
    expected = np.mean((y - loo) ** 2)
    assert abs(cv_criterion(x, y, 0.4, positive_only=False) - expected) < 1e-12


def _press(x, y):
    X = np.column_stack([np.ones_like(x), x])
    hat = X @ np.linalg.solve(X.T @ X, X.T)
    resid = y - hat @ y
    return np.sum((resid / (1 - np.diag(hat))) ** 2)


def test_cv_large_bandwidth_is_press(rng):
    x = rng.uniform(0.05, 1, 80)
    y = 1 + x + rng.normal(0, 0.05, 80)
    press = _press(x, y) / x.size
    np.testing.assert_allclose(cv_criterion(x, y, 1e6), press, rtol=1e-8)
    # the right end of the unit grid is already close to the linear limit
    top = build_grid("unit").h_values[-1]
    np.testing.assert_allclose(cv_criterion(x, y, top), press, rtol=0.05)


def test_cv_uses_positive_subsample(rng):
    x = np.concatenate([np.zeros(20), rng.uniform(0.1, 1, 30)])
    y = np.concatenate([rng.normal(5, 1, 20), x[20:] ** 2])
    pos = x > 0
    assert cv_criterion(x, y, 0.3) == cv_criterion(x[pos], y[pos], 0.3, positive_only=False)
    with pytest.raises(InputError, match="x > 0"):
        cv_criterion(-np.abs(x) - 1, y, 0.3)


def test_select_cv_interior_for_curved_data():
    x = np.linspace(0.005, 1, 200)
    sel = select_cv(x, np.sin(6 * x), build_grid("unit"))
    assert not sel.boundary_hit
    assert sel.h_cv < build_grid("unit").h_values[-1]
    assert sel.cv_curve.shape == (50, 2)
    assert sel.h_cv in sel.cv_curve[:, 0]


def test_select_cv_boundary_for_linear_data(rng):
    x = rng.uniform(0.01, 1, 150)
    y = 0.2 + 0.6 * x + rng.normal(0, 0.01, 150)
    sel = select_cv(x, y, build_grid("unit"))
    assert sel.boundary_hit
    assert sel.h_cv == 1.01


def test_select_cv_constant_response_ties_to_largest(rng):
    x = rng.uniform(0.01, 1, 40)
    grid = build_grid("unit")
    sel = select_cv(x, np.full(40, 3.0), grid)
    assert np.all(sel.cv_curve[:, 1] < 1e-20)
    assert sel.h_cv == grid.h_values[-1]
    assert sel.boundary_hit


@settings(max_examples=25, deadline=None)
@given(y=arrays(float, 12, elements=st.floats(-10, 10)),
       h=st.floats(0.01, 10.0))
def test_cv_is_nonnegative(y, h):
    x = np.linspace(0.1, 1.0, 12)
    assert cv_criterion(x, y, h) >= 0


# -- direct plug-in ----------------------------------------------------------

@pytest.mark.parametrize("n, expected", [(19, 1), (50, 2), (99, 4), (100, 5), (1000, 5)])
def test_n_max_blocks(n, expected):
    assert n_max_blocks(n, 5) == expected


def test_dpi_reports_block_cap(rng):
    x = rng.uniform(0.01, 1, 50)
    res = dpi_bandwidth(x, np.sin(6 * x) + rng.normal(0, 0.1, 50))
    assert res.n_max == 2
    assert res.n_blocks in (1, 2)
    assert res.n_used == 50


def test_dpi_linear_response_is_capped():
    x = np.linspace(0.01, 1, 100)
    res = dpi_bandwidth(x, x.copy())
    assert res.capped
    assert res.h == pytest.approx(CAP_FACTOR * (x[-1] - x[0]))


def test_dpi_is_deterministic(rng):
    x = rng.uniform(0, 1, 300)
    y = np.sin(6 * x) + rng.normal(0, 0.1, 300)
    first = select_dpi(x, y)
    assert first == select_dpi(x.copy(), y.copy())
    assert np.isfinite(first) and first > 0


def test_dpi_order_invariant(rng):
    x = rng.uniform(0, 1, 200)
    y = np.sin(6 * x) + rng.normal(0, 0.1, 200)
    perm = rng.permutation(200)
    assert select_dpi(x[perm], y[perm]) == pytest.approx(select_dpi(x, y), rel=1e-10)


def test_dpi_scales_with_x(rng):
    # the plug-in rule is equivariant: stretching x by c stretches h by c
    x = rng.uniform(0, 1, 200)
    y = np.sin(6 * x) + rng.normal(0, 0.1, 200)
    assert select_dpi(10 * x, y) == pytest.approx(10 * select_dpi(x, y), rel=1e-6)


def test_dpi_less_noise_smaller_bandwidth(rng):
    x = rng.uniform(0, 1, 400)
    e = rng.normal(0, 1, 400)
    quiet = select_dpi(x, np.sin(6 * x) + 0.02 * e)
    loud = select_dpi(x, np.sin(6 * x) + 0.2 * e)
    assert quiet < loud


def test_dpi_rejects_bad_input(rng):
    x = rng.uniform(0, 1, 30)
    with pytest.raises(InputError, match="alpha"):
        dpi_bandwidth(x, x, alpha=0.6)
    with pytest.raises(InputError):
        dpi_bandwidth(x[:4], x[:4])
