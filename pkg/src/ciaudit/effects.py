"""Main effects (correlation ratios), effective weights and a linearity test."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._validation import InputError, as_vector, check_pair, check_spd, check_weights
from .bandwidth import BandwidthGrid, select_cv, select_dpi
from .dataset import CompositeSeries, NormalizedMatrix
from .smoother import SmootherFit, locallinear_fit, ols_fit, smoother_matrix

# residual sums of squares below this fraction of sum(y**2) count as zero
_RSS_ZERO = 1e-20


def _centered_ss(v: np.ndarray) -> float:
    d = v - v.mean()
    return float(d @ d)


def main_effect(y, fit) -> float:
    """Sample variance of the fitted values over the sample variance of y."""
    y = as_vector(y, "y", 2)
    fitted = fit.fitted if isinstance(fit, SmootherFit) else as_vector(fit, "fitted")
    if fitted.shape != y.shape:
        raise InputError("fitted values and y differ in length")
    tss = _centered_ss(y)
    if tss <= 0:
        raise InputError("constant y: main effect undefined")
    return _centered_ss(fitted) / tss


def main_effect_linear(x, y) -> float:
    """Squared sample correlation of x and y."""
    x, y = check_pair(x, y, 2)
    xc, yc = x - x.mean(), y - y.mean()
    sxx, syy = float(xc @ xc), float(yc @ yc)
    if sxx <= 0 or syy <= 0:
        raise InputError("constant input: correlation undefined")
    return float(xc @ yc) ** 2 / (sxx * syy)


def effective_weights(x, w, y=None) -> np.ndarray:
    """cov(y, w_i x_i) / var(y) for every column i."""
    scores = x.x if isinstance(x, NormalizedMatrix) else np.asarray(x, dtype=float)
    w = check_weights(w, scores.shape[1])
    if y is None:
        y = scores @ w
    elif isinstance(y, CompositeSeries):
        y = y.y
    y = as_vector(y, "y")
    yc = y - y.mean()
    vy = float(yc @ yc)
    if vy <= 0:
        raise InputError("constant y: effective weights undefined")
    return w * ((scores - scores.mean(axis=0)).T @ yc) / vy


def effective_weight(x, w, y, i: int) -> float:
    return float(effective_weights(x, w, y)[i])


def population_main_effects(sigma, w) -> np.ndarray:
    """Linear-case main effects from a covariance matrix (no sampling).

    For jointly Gaussian scores these are exact: S_i = cov(y, x_i)**2 /
    (var(x_i) var(y)) with cov(y, x) = sigma @ w and var(y) = w' sigma w.
    """
    sigma = check_spd(sigma)
    w = as_vector(w, "w")
    cov = sigma @ w
    return cov ** 2 / (np.diag(sigma) * float(w @ cov))


def population_effective_weights(sigma, w) -> np.ndarray:
    sigma = check_spd(sigma)
    w = as_vector(w, "w")
    cov = sigma @ w
    return w * cov / float(w @ cov)


@dataclass
class MainEffectEstimate:
    indicator: int
    s_curve: np.ndarray
    s_lin: float
    s_cv: float
    s_dpi: float
    s_min: float
    s_max: float
    h_cv: float
    h_dpi: float


def main_effect_at(x, y, h: float) -> float:
    return main_effect(y, locallinear_fit(x, y, h))


def main_effect_curve(x, y, grid: BandwidthGrid, h_cv: float | None = None,
                      h_dpi: float | None = None, indicator: int = 0,
                      positive_only: bool = True) -> MainEffectEstimate:
    """S(h) over the grid plus the values at the CV, DPI and linear choices.

    Effects use every observation; the bandwidths, when not supplied, are
    selected on the x > 0 subsample (see :mod:`ciaudit.bandwidth`).  The DPI
    value is evaluated at the exact DPI bandwidth, which need not be a grid
    point.
    """
    x, y = check_pair(x, y, 3)
    if h_cv is None:
        h_cv = select_cv(x, y, grid, positive_only).h_cv
    if h_dpi is None:
        h_dpi = select_dpi(x, y, positive_only=positive_only)
    s = np.array([main_effect_at(x, y, h) for h in grid.h_values])
    curve = np.column_stack([grid.h_values, s])
    return MainEffectEstimate(
        indicator=indicator,
        s_curve=curve,
        s_lin=main_effect_linear(x, y),
        s_cv=main_effect_at(x, y, h_cv),
        s_dpi=main_effect_at(x, y, h_dpi),
        s_min=float(s.min()),
        s_max=float(s.max()),
        h_cv=float(h_cv),
        h_dpi=float(h_dpi),
    )


@dataclass
class LinearityTest:
    f_obs: float
    p_value: float
    moments: tuple[float, float, float]
    rss0: float
    rss1: float
    degenerate: str | None = None


def quadratic_form_moments(C) -> tuple[float, float, float]:
    """(a, b, c) such that a*chi2_b + c matches three cumulants of z'Cz."""
    lam = np.linalg.eigvalsh(0.5 * (C + C.T))
    k1 = float(lam.sum())
    k2 = 2.0 * float(lam @ lam)
    k3 = 8.0 * float(np.sum(lam ** 3))
    if k2 <= 0:
        return 0.0, np.inf, k1
    if k3 == 0:
        return 0.0, np.inf, k1
    a = k3 / (4.0 * k2)
    b = 8.0 * k2 ** 3 / k3 ** 2
    return a, b, k1 - a * b


def quadratic_form_sf(C) -> float:
    """Approximate P(z'Cz > 0) for standard Gaussian z."""
    a, b, c = quadratic_form_moments(C)
    if not np.isfinite(b):
        # symmetric (or null) form: normal limit of the matched distribution
        lam = np.linalg.eigvalsh(0.5 * (C + C.T))
        sd = np.sqrt(2.0 * float(lam @ lam))
        return 0.5 if sd == 0 else float(stats.norm.cdf(lam.sum() / sd))
    q = -c / a
    if a > 0:
        return float(stats.chi2.sf(q, b)) if q > 0 else 1.0
    return float(stats.chi2.cdf(q, b)) if q > 0 else 0.0


def linearity_matrix(x, y, h: float):
    """The matrix C of the test and the observed statistics (F, RSS0, RSS1)."""
    x, y = check_pair(x, y, 5)
    n = x.size
    S, _ = smoother_matrix(x, h)
    r1 = y - S @ y
    r0 = y - ols_fit(x, y)
    rss1, rss0 = float(r1 @ r1), float(r0 @ r0)
    X = np.column_stack([np.ones(n), x])
    M = np.eye(n) - X @ np.linalg.solve(X.T @ X, X.T)
    IS = np.eye(n) - S
    A = IS.T @ IS
    return M, A, rss0, rss1


def linearity_pvalue(x, y, h: float) -> LinearityTest:
    """F-type test of a linear mean against the local-linear smoother at ``h``.

    The p-value is P(z'Cz > 0), C = M (I - (1 + F) A) M, approximated by a
    scaled and shifted chi-square matched on three cumulants.
    """
    x, y = check_pair(x, y, 5)
    M, A, rss0, rss1 = linearity_matrix(x, y, h)
    zero = _RSS_ZERO * max(float(y @ y), np.finfo(float).tiny)
    if rss1 <= zero:
        if rss0 <= zero:
            return LinearityTest(0.0, 1.0, (np.nan, np.nan, np.nan), rss0, rss1,
                                 "both_exact")
        return LinearityTest(np.inf, 0.0, (np.nan, np.nan, np.nan), rss0, rss1,
                             "smoother_exact")
    f_obs = (rss0 - rss1) / rss1
    n = x.size
    C = M @ (np.eye(n) - (1.0 + f_obs) * A) @ M
    return LinearityTest(f_obs, quadratic_form_sf(C), quadratic_form_moments(C),
                         rss0, rss1)
