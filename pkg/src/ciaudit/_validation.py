"""Exceptions and array validation shared by every module."""

from __future__ import annotations

import numpy as np


class CIAuditError(Exception):
    """Base class for errors raised by this package."""


class InputError(CIAuditError, ValueError):
    """Invalid user input (malformed data, bad weights, bad config)."""


class NumericalError(CIAuditError, ArithmeticError):
    """A computation could not be carried out reliably."""


def as_vector(a, name: str, min_len: int = 1) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_len:
        raise InputError(f"{name} needs at least {min_len} entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite values")
    return arr


def as_matrix(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise InputError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite values")
    return arr


def check_pair(x, y, min_len: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Validate a regressor/response pair of equal length."""
    x = as_vector(x, "x", min_len)
    y = as_vector(y, "y", min_len)
    if x.shape != y.shape:
        raise InputError(f"x and y lengths differ: {x.size} != {y.size}")
    return x, y


def check_bandwidth(h) -> float:
    h = float(h)
    if not (np.isfinite(h) and h > 0):
        raise InputError(f"bandwidth must be positive and finite, got {h}")
    return h


def check_weights(w, k: int | None = None, tol: float = 1e-12) -> np.ndarray:
    """Nominal weights: nonnegative, summing to one, at least one positive."""
    w = as_vector(w, "weights")
    if k is not None and w.size != k:
        raise InputError(f"expected {k} weights, got {w.size}")
    if np.any(w < 0):
        raise InputError("weights must be nonnegative")
    if not np.any(w > 0):
        raise InputError("at least one weight must be positive")
    if abs(w.sum() - 1.0) > tol:
        raise InputError(f"weights must sum to 1 (sum is {w.sum():.15g})")
    return w


def check_spd(sigma, name: str = "sigma") -> np.ndarray:
    """Return ``sigma`` as a symmetric positive definite matrix or raise."""
    sigma = as_matrix(sigma, name)
    if sigma.shape[0] != sigma.shape[1]:
        raise InputError(f"{name} must be square, got shape {sigma.shape}")
    scale = max(np.abs(sigma).max(), np.finfo(float).tiny)
    if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12 * scale):
        raise InputError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise InputError(f"{name} is not positive definite") from None
    return 0.5 * (sigma + sigma.T)
