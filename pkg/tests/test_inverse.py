import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ciaudit import InputError, NumericalError
from ciaudit.inverse import (forward_ratios, solve_inverse, solve_inverse_from_ratios,
                             squared_system_solutions, uniqueness_check, z_from_ratios)


def _spd(rng, k):
    A = rng.normal(size=(k, k))
    return A @ A.T + 0.5 * np.eye(k)


def test_identity_equal_targets():
    for k in range(2, 7):
        sol = solve_inverse(np.eye(k), np.ones(k))
        np.testing.assert_allclose(sol.w_star, np.full(k, 1 / k), atol=1e-15)
        assert sol.attainable
        assert sol.g[0] == 1.0
        assert sol.label == "linear-case inverse"


def test_forward_ratios_diagonal_case():
    h = forward_ratios(np.eye(2), [2 / 3, 1 / 3])
    np.testing.assert_allclose(h, [1.0, 0.25])


def test_forward_ratio_of_reference_is_one(rng):
    sigma = _spd(rng, 4)
    assert forward_ratios(sigma, rng.dirichlet(np.ones(4)))[0] == 1.0
    with pytest.raises(NumericalError):
        forward_ratios(np.eye(2), [0.0, 1.0])


def test_roundtrip_k5(rng):
    sigma = _spd(rng, 5)
    ratios = rng.uniform(0.2, 3, 4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sol = solve_inverse_from_ratios(sigma, ratios)
    np.testing.assert_allclose(sol.achieved_ratios[1:], ratios, rtol=1e-10)
    np.testing.assert_allclose(forward_ratios(sigma, sol.w_star)[1:], ratios, rtol=1e-10)
    assert abs(sol.w_star.sum() - 1) < 1e-12
    np.testing.assert_allclose(sol.g, z_from_ratios(ratios) * np.sqrt(np.diag(sigma) / sigma[0, 0]))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), k=st.integers(2, 6),
       c=st.floats(1e-3, 1e3))
def test_scale_invariance(seed, k, c):
    rng = np.random.default_rng(seed)
    sigma = _spd(rng, k)
    z = np.r_[1.0, rng.uniform(0.3, 2, k - 1)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        a = solve_inverse(sigma, z).w_star
        b = solve_inverse(c * sigma, z).w_star
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)


def test_continuity_in_targets(rng):
    sigma = _spd(rng, 4)
    z = np.r_[1.0, rng.uniform(0.5, 1.5, 3)]
    base = solve_inverse(sigma, z).w_star
    for _ in range(20):
        dz = np.r_[0.0, rng.uniform(-1e-6, 1e-6, 3)]
        moved = solve_inverse(sigma, z + dz).w_star
        assert np.linalg.norm(moved - base) < 1e-4


def test_negative_weight_flags_unattainable():
    sigma = np.array([[1.0, 0.8, 0.0], [0.8, 1.0, 0.0], [0.0, 0.0, 1.0]])
    sol = solve_inverse_from_ratios(sigma, [0.1, 1.0])
    assert sol.w_star.min() < 0
    assert not sol.attainable


def test_input_errors():
    with pytest.raises(InputError):
        solve_inverse(np.eye(2), [1.0, -1.0])
    with pytest.raises(InputError):
        solve_inverse(np.eye(2), [2.0, 1.0])
    with pytest.raises(InputError):
        solve_inverse(np.eye(3), [1.0, 1.0])
    with pytest.raises(InputError):
        solve_inverse([[1.0, 2.0], [2.0, 1.0]], [1.0, 1.0])
    with pytest.raises(InputError):
        z_from_ratios([1.0, 0.0])


def test_normalization_impossible():
    # Sigma (1, -1)' = (2.5, 0.5)' is positive, so g = (1, 0.2) with
    # z_2 = 0.2 / sqrt(1/4) = 0.4 gives Sigma^-1 g proportional to (1, -1)
    sigma = np.array([[4.0, 1.5], [1.5, 1.0]])
    with pytest.raises(NumericalError, match="numerically zero"):
        solve_inverse(sigma, [1.0, 0.4])


def test_negative_normalizer_warns():
    # Sigma (1, -2)' = (6, 1)': g = (1, 1/6) solves to weights summing to -1
    sigma = np.array([[10.0, 2.0], [2.0, 0.5]])
    z2 = (1 / 6) / np.sqrt(0.05)
    with pytest.warns(RuntimeWarning, match="flips every sign"):
        sol = solve_inverse(sigma, [1.0, z2])
    assert sol.warnings
    np.testing.assert_allclose(sol.w_star, [-1.0, 2.0], atol=1e-12)
    np.testing.assert_allclose(sol.achieved_ratios[1], z2 ** 2, rtol=1e-10)


def test_squared_system_has_sign_flipped_roots(rng):
    sigma = _spd(rng, 3)
    z = np.r_[1.0, 0.7, 1.3]
    roots = squared_system_solutions(sigma, z)
    assert len(roots) == 4
    np.testing.assert_allclose(roots[0], solve_inverse(sigma, z).w_star)
    for w in roots:
        assert abs(w.sum() - 1) < 1e-12
        np.testing.assert_allclose(forward_ratios(sigma, w), z ** 2, rtol=1e-9)


def test_uniqueness_symmetric_pair():
    rec = uniqueness_check(np.eye(2), [1.0, 1.0], trials=100_000, seed=2, tol=1e-3)
    np.testing.assert_allclose(rec.w_star, [0.5, 0.5])
    assert rec.n_near > 0
    assert rec.max_near_distance < 1e-3
    np.testing.assert_allclose(rec.best_w, [0.5, 0.5], atol=1e-4)


def test_uniqueness_random_k3():
    rng = np.random.default_rng(7)
    sigma = _spd(rng, 3)
    z = np.r_[1.0, np.sqrt(rng.uniform(0.2, 2, 2))]
    rec = uniqueness_check(sigma, z, trials=1_000_000, seed=1, tol=1e-2)
    assert rec.n_near > 0
    assert rec.max_near_distance < 0.05
    assert np.linalg.norm(rec.best_w - rec.w_star) < 0.01
