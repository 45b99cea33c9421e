"""Weights that produce stated relative importances (linear case).

In the linear case the relative importance of indicator i with respect to the
reference indicator 1 is the ratio of squared correlations with the index,

    H_i(w) = (e_i' S w)**2 s_11 / ((e_1' S w)**2 s_ii),

for covariance matrix S.  Asking for H_i(w) = z_i**2 with all correlations of
the same sign as the reference and 1'w = 1 has the unique solution
w* = S^-1 g / (1' S^-1 g), g_i = z_i sqrt(s_ii / s_11).  A negative entry in
w* therefore means the targets cannot be met with nonnegative weights.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ._validation import InputError, NumericalError, as_vector, check_spd

COND_WARN = 1e12
NEG_TOL = 1e-12


@dataclass
class InverseSolution:
    w_star: np.ndarray
    g: np.ndarray
    attainable: bool
    achieved_ratios: np.ndarray
    condition_number: float
    warnings: list[str] = field(default_factory=list)
    label: str = "linear-case inverse"


def forward_ratios(sigma, w) -> np.ndarray:
    """H_i(w) for every i; the first entry is 1 by construction."""
    sigma = np.asarray(sigma, dtype=float)
    w = as_vector(w, "w")
    cov = sigma @ w
    if cov[0] == 0:
        raise NumericalError("reference indicator is uncorrelated with the index")
    d = np.diag(sigma)
    return cov ** 2 * d[0] / (cov[0] ** 2 * d)


def z_from_ratios(ratios) -> np.ndarray:
    """Root-ratios z from stated importance ratios of indicators 2..k."""
    r = as_vector(ratios, "targets")
    if np.any(r <= 0):
        raise InputError("target ratios must be positive")
    return np.concatenate([[1.0], np.sqrt(r)])


def _solve(sigma, g):
    factor = linalg.cho_factor(sigma)
    return linalg.cho_solve(factor, g)


def solve_inverse(sigma, z) -> InverseSolution:
    """Unique sum-one weights whose ratios H_i(w) equal z_i**2.

    ``z`` holds positive root-ratios with ``z[0] == 1``.
    """
    sigma = check_spd(sigma)
    z = as_vector(z, "z")
    k = sigma.shape[0]
    if z.size != k:
        raise InputError(f"expected {k} target root-ratios, got {z.size}")
    if np.any(z <= 0):
        raise InputError("target root-ratios must be positive")
    if z[0] != 1.0:
        raise InputError("the reference root-ratio z[0] must equal 1")
    d = np.diag(sigma)
    g = z * np.sqrt(d / d[0])
    notes = []
    cond = float(np.linalg.cond(sigma))
    if cond > COND_WARN:
        notes.append(f"covariance condition number {cond:.3g} exceeds {COND_WARN:g}")
    u = _solve(sigma, g)
    total = float(u.sum())
    if abs(total) <= 1e-12 * float(np.abs(u).sum()):
        raise NumericalError("1' inv(sigma) g is numerically zero; cannot normalize")
    if total < 0:
        notes.append("1' inv(sigma) g is negative; normalization flips every sign")
    w = u / total
    for msg in notes:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    achieved = forward_ratios(sigma, w)
    return InverseSolution(
        w_star=w,
        g=g,
        attainable=bool(w.min() >= -NEG_TOL),
        achieved_ratios=achieved,
        condition_number=cond,
        warnings=notes,
    )


def solve_inverse_from_ratios(sigma, ratios) -> InverseSolution:
    return solve_inverse(sigma, z_from_ratios(ratios))


def squared_system_solutions(sigma, z) -> list[np.ndarray]:
    """Every sum-one solution of H_i(w) = z_i**2, one per sign pattern.

    The squared system does not fix the sign of each correlation with the
    index; flipping the sign of g_i (i > 1) yields further roots whenever the
    normalization is possible.  The positive pattern is :func:`solve_inverse`.
    """
    sigma = check_spd(sigma)
    z = as_vector(z, "z")
    d = np.diag(sigma)
    g = z * np.sqrt(d / d[0])
    factor = linalg.cho_factor(sigma)
    out = []
    for signs in itertools.product((1.0, -1.0), repeat=g.size - 1):
        u = linalg.cho_solve(factor, g * np.concatenate([[1.0], signs]))
        total = float(u.sum())
        if abs(total) > 1e-12 * float(np.abs(u).sum()):
            out.append(u / total)
    return out


@dataclass
class UniquenessRecord:
    trials: int
    w_star: np.ndarray
    best_w: np.ndarray
    best_residual: float
    n_near: int
    max_near_distance: float


def _signed_residual(sigma, z, W):
    """max_i |corr-ratio_i(w) - z_i| with signs kept, for rows of W."""
    cov = W @ sigma  # rows are (sigma w)'
    d = np.diag(sigma)
    ratio = cov / cov[:, :1] * np.sqrt(d[0] / d)
    return np.max(np.abs(ratio - z), axis=1)


def uniqueness_check(sigma, z, trials: int = 100_000, seed: int = 0,
                     tol: float = 1e-6, radius: float | None = None,
                     batch: int = 100_000) -> UniquenessRecord:
    """Random search of the sum-one hyperplane for other solutions.

    Points are drawn uniformly from a box of half-width ``radius`` (default
    twice the largest |w*_i| plus one) and projected onto 1'w = 1.  Every
    point whose signed residual is below ``tol`` must lie near w*; the record
    reports how many such points there were and how far the farthest one was,
    together with the best point found.  Intended as a test oracle.
    """
    sigma = check_spd(sigma)
    z = as_vector(z, "z")
    k = sigma.shape[0]
    w_star = solve_inverse(sigma, z).w_star
    if radius is None:
        radius = 2.0 * float(np.abs(w_star).max()) + 1.0
    rng = np.random.default_rng(seed)
    best_res, best_w = np.inf, None
    n_near, far = 0, 0.0
    done = 0
    while done < trials:
        m = min(batch, trials - done)
        W = rng.uniform(-radius, radius, size=(m, k))
        W += (1.0 - W.sum(axis=1, keepdims=True)) / k
        with np.errstate(divide="ignore", invalid="ignore"):
            res = _signed_residual(sigma, z, W)
        res = np.where(np.isfinite(res), res, np.inf)
        j = int(np.argmin(res))
        if res[j] < best_res:
            best_res, best_w = float(res[j]), W[j].copy()
        near = res < tol
        if np.any(near):
            n_near += int(near.sum())
            far = max(far, float(np.max(np.linalg.norm(W[near] - w_star, axis=1))))
        done += m
    return UniquenessRecord(trials, w_star, best_w, best_res, n_near, far)
