"""Local-linear Gaussian-kernel regression of a response on one regressor.

The smoother is linear in the response, so every fit is represented by its
smoother matrix ``S`` (fitted values ``S @ y``).  Rows where the local-linear
normal equations are numerically singular fall back to a Nadaraya-Watson
(local mean) row, and, when every kernel weight vanishes, to the mean of the
other observations.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import InputError, as_vector, check_bandwidth, check_pair

WEIGHT_FLOOR = 1e-300
COND_LIMIT = 1e12


class Fallback(IntEnum):
    LOCALLINEAR = 0
    NADARAYA_WATSON = 1
    LOO_MEAN = 2


@dataclass
class SmootherFit:
    h: float
    fitted: np.ndarray
    smoother_rows: np.ndarray
    fallback_flags: np.ndarray

    def counts(self) -> dict[str, int]:
        """Number of rows produced by each rule."""
        return {f.name.lower(): int(np.sum(self.fallback_flags == f)) for f in Fallback}


def gaussian_weights(x_eval, x, h: float) -> np.ndarray:
    """Unnormalized Gaussian kernel weights, one row per evaluation point.

    Weights below ``WEIGHT_FLOOR`` are set to exactly zero.
    """
    t = (np.asarray(x)[None, :] - np.asarray(x_eval)[:, None]) / h
    K = np.exp(-0.5 * t * t)
    K[K < WEIGHT_FLOOR] = 0.0
    return K


def _rows_from_weights(x_eval, x, K):
    """Local-linear rows for every evaluation point, with fallback flags.

    Works in the form centred at the local weighted mean of x, which is
    algebraically identical to the textbook ``(s2 - d s1) / (s0 s2 - s1^2)``
    but avoids cancellation at the boundaries.  ``off`` is x0 minus that mean.
    """
    m, n = K.shape
    s0 = K.sum(axis=1)
    L = np.zeros((m, n))
    flags = np.full(m, Fallback.LOCALLINEAR, dtype=np.int8)

    empty = s0 <= 0
    live = ~empty
    safe_s0 = np.where(live, s0, 1.0)
    # coordinates relative to the heaviest point of each row: its own term in
    # the weighted mean is then exactly zero, so the mean stays accurate when
    # one point dominates the kernel (nearly isolated evaluation points)
    pivot = x[np.argmax(K, axis=1)]
    d = x[None, :] - pivot[:, None]
    mean_d = np.einsum("ij,ij->i", K, d) / safe_s0
    dx = d - mean_d[:, None]
    V = np.einsum("ij,ij->i", K, dx * dx) / safe_s0
    off = (x_eval - pivot) - mean_d
    # condition number of the equilibrated 2x2 normal matrix: (1+r)/(1-r),
    # r = |corr| between the columns 1 and (x - x0) under the kernel weights
    denom = V + off * off
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(denom > 0, np.abs(off) / np.sqrt(denom), 1.0)
        cond = np.where(r < 1.0, (1.0 + r) / (1.0 - r), np.inf)
    ll = live & (V > 0) & (cond <= COND_LIMIT)

    if np.any(ll):
        Kl = K[ll]
        L[ll] = (Kl / s0[ll, None]) * (1.0 + off[ll, None] * dx[ll] / V[ll, None])
    nw = live & ~ll
    if np.any(nw):
        L[nw] = K[nw] / s0[nw, None]
        flags[nw] = Fallback.NADARAYA_WATSON
    flags[empty] = Fallback.LOO_MEAN
    return L, flags, empty


def _mean_row(n: int, exclude: int | None) -> np.ndarray:
    if exclude is None:
        return np.full(n, 1.0 / n)
    row = np.full(n, 1.0 / (n - 1))
    row[exclude] = 0.0
    return row


def smoother_matrix(x, h: float, x_eval=None, leave_one_out: bool = False):
    """Smoother rows and flags for evaluation points ``x_eval`` (default ``x``).

    With ``leave_one_out`` the evaluation points must be the sample itself and
    row j ignores observation j.
    """
    x = np.asarray(x, dtype=float)
    h = check_bandwidth(h)
    same = x_eval is None
    x_eval = x if same else np.asarray(x_eval, dtype=float)
    if leave_one_out and not same:
        raise InputError("leave-one-out rows are only defined at the sample points")
    K = gaussian_weights(x_eval, x, h)
    if leave_one_out:
        np.fill_diagonal(K, 0.0)
    L, flags, empty = _rows_from_weights(x_eval, x, K)
    for j in np.flatnonzero(empty):
        L[j] = _mean_row(x.size, j if same else None)
    return L, flags


def locallinear_fit(x, y, h: float) -> SmootherFit:
    """Local-linear fit evaluated at the sample points."""
    x, y = check_pair(x, y, 3)
    L, flags = smoother_matrix(x, h)
    return SmootherFit(float(h), L @ y, L, flags)


def loo_smoother_matrix(x, h: float):
    x = as_vector(x, "x", 4)
    return smoother_matrix(x, h, leave_one_out=True)


def loo_fit(x, y, h: float) -> np.ndarray:
    """Leave-one-out fitted values: entry j omits observation j."""
    x, y = check_pair(x, y, 4)
    L, _ = smoother_matrix(x, h, leave_one_out=True)
    return L @ y


def fallback_row(x, y, h: float, j: int, leave_one_out: bool = True):
    """Degenerate-row replacement at sample point ``j``.

    Returns ``(row, flag)``: the Nadaraya-Watson row, or the mean of the other
    observations when every kernel weight is zero.  ``y`` is accepted for
    signature symmetry with the fitting functions; rows do not depend on it.
    """
    x, _ = check_pair(x, y, 3)
    h = check_bandwidth(h)
    K = gaussian_weights(x[j:j + 1], x, h)[0]
    if leave_one_out:
        K[j] = 0.0
    s0 = K.sum()
    if s0 > 0:
        return K / s0, Fallback.NADARAYA_WATSON
    return _mean_row(x.size, j), Fallback.LOO_MEAN


def ols_fit(x, y) -> np.ndarray:
    """Fitted values of the least-squares line."""
    xc = x - x.mean()
    beta = np.dot(xc, y - y.mean()) / np.dot(xc, xc)
    return y.mean() + beta * xc


class LocalLinearRegression(RegressorMixin, BaseEstimator):
    """Scikit-learn wrapper around the local-linear Gaussian smoother.

    Parameters
    ----------
    bandwidth : float
        Kernel standard deviation, in the units of ``X``.
    """

    def __init__(self, bandwidth: float = 1.0):
        self.bandwidth = bandwidth

    def fit(self, X, y):
        x = _single_column(X)
        x, y = check_pair(x, y, 3)
        check_bandwidth(self.bandwidth)
        self.x_ = x
        self.y_ = y
        self.n_features_in_ = 1
        fit = locallinear_fit(x, y, self.bandwidth)
        self.fitted_ = fit.fitted
        self.fallback_flags_ = fit.fallback_flags
        return self

    def predict(self, X):
        check_is_fitted(self, "x_")
        x_new = _single_column(X)
        L, _ = smoother_matrix(self.x_, self.bandwidth, x_eval=x_new)
        return L @ self.y_


def _single_column(X) -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise InputError(f"expected a single regressor, got {arr.shape[1]} columns")
        arr = arr[:, 0]
    return as_vector(arr, "X")
