"""Bandwidth grids and bandwidth selection for the local-linear smoother.

Two selectors are provided: least-squares cross-validation over a fixed
50-point grid, and the direct plug-in rule of Ruppert, Sheather and Wand
(1995) for the local-linear Gaussian smoother.  Both only use pairs with
``x > 0`` unless told otherwise, so that a mass of zero scores at the bottom
of an indicator's range does not drive the choice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._validation import InputError, NumericalError, check_pair
from .dataset import RangeClass
from .smoother import gaussian_weights, smoother_matrix

GRID_SIZE = 50
U_MIN, U_MAX = 0.1, 5.0
# (a, b) with h = a + u**2 / b
PRESETS = {"unit": (0.01, 25.0), "ten": (0.05, 1.0), "hundred": (0.05, 1.0)}

THETA22_FLOOR = 1e-12
CAP_FACTOR = 10.0
BLOCK_DEGREE = 4
_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class BandwidthGrid:
    a: float
    b: float
    u_values: np.ndarray
    h_values: np.ndarray
    preset: str

    def __len__(self) -> int:
        return self.h_values.size


def build_grid(range_class="unit") -> BandwidthGrid:
    """The 50-point grid h = a + u**2/b, u regular on [0.1, 5]."""
    preset = RangeClass.parse(range_class).preset
    a, b = PRESETS[preset]
    u = np.linspace(U_MIN, U_MAX, GRID_SIZE)
    return BandwidthGrid(a, b, u, a + u ** 2 / b, preset)


def selection_subset(x, y, positive_only: bool = True, min_len: int = 4):
    """Pairs used for bandwidth choice: those with x > 0 by default."""
    x, y = check_pair(x, y, 1)
    if positive_only:
        keep = x > 0
        x, y = x[keep], y[keep]
    if x.size < min_len:
        raise InputError(f"bandwidth selection needs at least {min_len} "
                         f"observations{' with x > 0' if positive_only else ''}, "
                         f"got {x.size}")
    return x, y


def cv_criterion(x, y, h: float, positive_only: bool = True) -> float:
    """Mean squared leave-one-out prediction error at bandwidth ``h``."""
    x, y = selection_subset(x, y, positive_only)
    L, _ = smoother_matrix(x, h, leave_one_out=True)
    resid = y - L @ y
    return float(np.mean(resid * resid))


class CVSelection(NamedTuple):
    h_cv: float
    cv_curve: np.ndarray
    boundary_hit: bool


def select_cv(x, y, grid: BandwidthGrid, positive_only: bool = True,
              rtol: float = 1e-12) -> CVSelection:
    """Grid minimizer of the CV criterion.

    Values within ``rtol`` times the response's mean square of the minimum
    count as ties; ties go to the largest bandwidth.
    """
    x, y = selection_subset(x, y, positive_only)
    cv = np.array([cv_criterion(x, y, h, positive_only=False) for h in grid.h_values])
    scale = max(float(np.mean((y - y.mean()) ** 2)), float(np.mean(y * y)))
    tol = rtol * scale
    best = int(np.flatnonzero(cv <= cv.min() + tol)[-1])
    curve = np.column_stack([grid.h_values, cv])
    return CVSelection(float(grid.h_values[best]), curve, best == len(grid) - 1)


@dataclass
class DPIResult:
    h: float
    n_blocks: int
    n_max: int
    n_star: int
    theta24: float
    theta22: float
    sigma2_blocks: float
    sigma2: float
    g: float
    lam: float
    capped: bool
    n_used: int


def n_max_blocks(n: int, n_star: int = 5, divisor: int = 20) -> int:
    return max(min(n // divisor, n_star), 1)


def _trim_mask(x, alpha: float) -> np.ndarray:
    lo, hi = np.quantile(x, [alpha, 1.0 - alpha])
    return (x >= lo) & (x <= hi)


def _block_fits(x, y, n_blocks: int):
    """Quartic least squares on ``n_blocks`` equal-count blocks of sorted x.

    Returns (rss, second derivative, fourth derivative, ok) at every point.
    """
    m2 = np.empty_like(x)
    m4 = np.empty_like(x)
    rss = 0.0
    for idx in np.array_split(np.arange(x.size), n_blocks):
        xb, yb = x[idx], y[idx]
        center = 0.5 * (xb[0] + xb[-1])
        scale = 0.5 * (xb[-1] - xb[0])
        if idx.size <= BLOCK_DEGREE or scale <= 0:
            return np.nan, m2, m4, False
        t = (xb - center) / scale
        V = np.vander(t, BLOCK_DEGREE + 1, increasing=True)
        coef, res, rank, sv = np.linalg.lstsq(V, yb, rcond=None)
        if rank < BLOCK_DEGREE + 1 or sv[0] / sv[-1] > 1e12:
            return np.nan, m2, m4, False
        c0, c1, c2, c3, c4 = coef
        m2[idx] = (2 * c2 + 6 * c3 * t + 12 * c4 * t * t) / scale ** 2
        m4[idx] = 24 * c4 / scale ** 4
        r = yb - V @ coef
        rss += float(r @ r)
    return rss, m2, m4, True


def _local_cubic_curvature(x, y, x_eval, g: float) -> np.ndarray:
    """Second-derivative estimates from a local cubic fit (NaN where singular)."""
    K = gaussian_weights(x_eval, x, g)
    t = (x[None, :] - x_eval[:, None]) / g
    powers = np.stack([t ** r for r in range(7)])  # (7, m, n)
    mom = np.einsum("rmn,mn->mr", powers, K)
    rhs = np.einsum("rmn,mn,n->mr", powers[:4], K, y)
    A = np.stack([mom[:, p:p + 4] for p in range(4)], axis=1)  # (m, 4, 4)
    out = np.full(x_eval.size, np.nan)
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(A)
    ok = np.isfinite(cond) & (cond < 1e12)
    if np.any(ok):
        beta = np.linalg.solve(A[ok], rhs[ok][..., None])[..., 0]
        out[ok] = 2.0 * beta[:, 2] / g ** 2
    return out


def _dpi_once(x, y, n_star: int, alpha: float):
    n = x.size
    span = float(x[-1] - x[0])
    n_max = n_max_blocks(n, n_star)
    fits = {N: _block_fits(x, y, N) for N in range(1, n_max + 1)}
    unstable = any(not f[3] for f in fits.values())
    stable = [N for N, f in fits.items() if f[3] and n - 5 * N > 0]
    if not stable:
        raise NumericalError("all candidate quartic block fits are singular")
    N_ref = max(stable)
    s2_ref = fits[N_ref][0] / (n - 5 * N_ref)
    if s2_ref > 0:
        cp = {N: fits[N][0] / s2_ref - (n - 10 * N) for N in stable}
        n_blocks = min(cp, key=lambda N: (cp[N], N))
    else:
        n_blocks = min(stable)
    rss, m2, m4, _ = fits[n_blocks]
    trim = _trim_mask(x, alpha)
    sigma2_q = rss / (n - 5 * n_blocks)
    theta24 = float(np.mean(m2[trim] * m4[trim]))
    if sigma2_q < 0:
        unstable = True

    g_floor = 2.0 * float(np.max(np.diff(x))) if n > 1 else span
    if theta24 != 0 and np.isfinite(theta24):
        gam = sigma2_q * span / (abs(theta24) * n)
        const = 3.0 / (8.0 * _SQRT_PI) if theta24 < 0 else 15.0 / (16.0 * _SQRT_PI)
        g = (const * gam) ** (1.0 / 7.0)
    else:
        g = span
    g = float(np.clip(g, g_floor, span))

    curv = _local_cubic_curvature(x, y, x[trim], g)
    curv = curv[np.isfinite(curv)]
    if curv.size == 0:
        raise NumericalError("local cubic pilot fit is singular at every point")
    theta22 = float(np.mean(curv * curv))
    cap = CAP_FACTOR * span
    result = dict(n_blocks=n_blocks, n_max=n_max, n_star=n_star, theta24=theta24,
                  theta22=theta22, sigma2_blocks=float(sigma2_q), g=g, n_used=n)
    if theta22 < THETA22_FLOOR:
        return DPIResult(h=cap, sigma2=float(sigma2_q), lam=float("nan"),
                         capped=True, **result), unstable

    c3k = (4.0 * (0.5 + 2.0 * math.sqrt(2.0) - (4.0 / 3.0) * math.sqrt(3.0))
           / math.sqrt(2.0 * math.pi)) ** (1.0 / 9.0)
    lam = c3k * (sigma2_q ** 2 * span / (theta22 * n) ** 2) ** (1.0 / 9.0)
    lam = float(np.clip(lam, g_floor, cap))
    S, _ = smoother_matrix(x, lam)
    resid = y - S @ y
    dof = n - 2.0 * np.trace(S) + float(np.sum(S * S))
    sigma2 = float(resid @ resid) / dof if dof > 0 else float("nan")
    if not (np.isfinite(sigma2) and sigma2 >= 0):
        unstable = True
        sigma2 = float(sigma2_q)
    h = (sigma2 * span / (2.0 * _SQRT_PI * theta22 * n)) ** 0.2
    capped = not (np.isfinite(h) and h <= cap)
    return DPIResult(h=cap if capped else float(h), sigma2=sigma2, lam=lam,
                     capped=capped, **result), unstable


def dpi_bandwidth(x, y, n_star: int = 5, alpha: float = 0.05,
                  positive_only: bool = True) -> DPIResult:
    """Direct plug-in bandwidth with its pilot quantities.

    Stages: blocked quartic fits (number of blocks by Mallows' Cp) give the
    curvature functional theta24 and a variance estimate; these set a pilot
    bandwidth g for a local cubic estimate of theta22; a local-linear fit at a
    second pilot bandwidth re-estimates the variance; the AMISE-optimal
    bandwidth combines the two.  Curvature functionals are averaged over the
    points between the alpha and 1-alpha quantiles of x.  If any stage is
    numerically unstable with ``n_star`` blocks the whole pipeline is rerun
    with ``n_star - 1`` blocks.
    """
    x, y = selection_subset(x, y, positive_only, min_len=BLOCK_DEGREE + 2)
    if not 0 <= alpha < 0.5:
        raise InputError("alpha must lie in [0, 0.5)")
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    if x[-1] <= x[0]:
        raise InputError("x has zero range")
    result, unstable = _dpi_once(x, y, n_star, alpha)
    if unstable and n_star > 1:
        result, _ = _dpi_once(x, y, n_star - 1, alpha)
    return result


def select_dpi(x, y, n_star: int = 5, alpha: float = 0.05,
               positive_only: bool = True) -> float:
    return dpi_bandwidth(x, y, n_star, alpha, positive_only).h
