"""Nominal weights versus estimated main effects.

Pure functions compare target relative importances with realized relative
main effects; :class:`CompositeIndicatorAudit` runs the whole analysis on a
panel of indicators as a scikit-learn style estimator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import CIAuditError, InputError, as_vector, check_weights
from .bandwidth import build_grid, dpi_bandwidth, select_cv
from .dataset import (AGGREGATIONS, NORMALIZATIONS, DataMatrix, RangeClass,
                      compute_index, normalize)
from .effects import (effective_weights, linearity_pvalue, main_effect_curve)
from .inverse import InverseSolution, solve_inverse_from_ratios
from .smoother import Fallback, smoother_matrix

MAX_ENUMERATION_K = 20


def select_reference(w, s_dpi, atol: float = 1e-12) -> int:
    """Indicator with the largest weight; ties go to the largest S(h_DPI).

    Remaining ties go to the lowest index.
    """
    w = as_vector(w, "w")
    s = as_vector(s_dpi, "s_dpi")
    if s.shape != w.shape:
        raise InputError("weights and effects differ in length")
    tied = np.flatnonzero(np.isclose(w, w.max(), rtol=0, atol=atol))
    return int(tied[np.argmax(s[tied])])


def target_ratios(w, reference: int, stated=None) -> np.ndarray:
    """zeta_i^2: stated target importances, or w_i / w_ref when none are given."""
    base = as_vector(w if stated is None else stated, "targets")
    if base[reference] <= 0:
        raise InputError("reference target must be positive")
    return base / base[reference]


def discrepancy(zeta, s, reference: int) -> float:
    """Largest |zeta_i^2 - S_i / S_ref| over the non-reference indicators."""
    zeta = as_vector(zeta, "zeta")
    s = as_vector(s, "s")
    if s[reference] <= 0:
        raise InputError("reference main effect must be positive")
    gap = np.abs(zeta - s / s[reference])
    gap[reference] = 0.0
    return float(gap.max())


def discrepancy_bounds(zeta, s_min, s_max, reference: int):
    """Min and max of d_m over every choice of S_i in {S_i,min, S_i,max}.

    Returns ``(None, None)`` when k exceeds ``MAX_ENUMERATION_K``.
    """
    zeta = as_vector(zeta, "zeta")
    lo = as_vector(s_min, "s_min")
    hi = as_vector(s_max, "s_max")
    k = zeta.size
    if k > MAX_ENUMERATION_K:
        return None, None
    if lo[reference] <= 0:
        raise InputError("reference main effect must be positive")
    bits = (np.arange(2 ** k)[:, None] >> np.arange(k)) & 1
    S = np.where(bits == 1, hi, lo)
    gap = np.abs(zeta - S / S[:, [reference]])
    gap[:, reference] = 0.0
    d = gap.max(axis=1)
    return float(d.min()), float(d.max())


def normalize_effects(s, s_min=None, s_max=None):
    """S_i / sum(S) with the bounds divided by the same constant."""
    s = as_vector(s, "s")
    c = float(s.sum())
    if c <= 0:
        raise InputError("all main effects are zero")
    lo = None if s_min is None else as_vector(s_min, "s_min") / c
    hi = None if s_max is None else as_vector(s_max, "s_max") / c
    return s / c, lo, hi


@dataclass
class DiscrepancyReport:
    reference: int
    zeta: np.ndarray
    d_dpi: float
    d_cv: float
    d_lin: float
    d_min: float | None
    d_max: float | None
    s_star: np.ndarray
    s_star_lo: np.ndarray
    s_star_hi: np.ndarray
    target_mode: str = "revealed"


def discrepancy_report(w, s_lin, s_cv, s_dpi, s_min, s_max,
                       stated=None) -> DiscrepancyReport:
    """Discrepancies at every bandwidth choice and the CV-normalized effects.

    Only weight ratios enter, so published (rounded) weights need not sum to 1.
    """
    w = as_vector(w, "w")
    if np.any(w < 0) or not np.any(w > 0):
        raise InputError("weights must be nonnegative with at least one positive")
    ref = select_reference(w, s_dpi)
    zeta = target_ratios(w, ref, stated)
    d_min, d_max = discrepancy_bounds(zeta, s_min, s_max, ref)
    s_star, lo, hi = normalize_effects(s_cv, s_min, s_max)
    return DiscrepancyReport(
        reference=ref, zeta=zeta,
        d_dpi=discrepancy(zeta, s_dpi, ref),
        d_cv=discrepancy(zeta, s_cv, ref),
        d_lin=discrepancy(zeta, s_lin, ref),
        d_min=d_min, d_max=d_max,
        s_star=s_star, s_star_lo=lo, s_star_hi=hi,
        target_mode="revealed" if stated is None else "stated",
    )


@dataclass
class IndicatorResult:
    label: str
    w: float
    h_cv: float
    h_dpi: float
    h_dpi_capped: bool
    n_star: int
    boundary_hit: bool
    p_cv: float
    p_dpi: float
    s_lin: float
    s_cv: float
    s_dpi: float
    s_min: float
    s_max: float
    epsilon: float
    n_used: int
    fallback_counts: dict
    cv_curve: np.ndarray
    s_curve: np.ndarray


class IndicatorError(CIAuditError):
    """Failure while analysing one indicator; carries its label."""

    def __init__(self, label: str, cause: Exception):
        super().__init__(f"indicator {label!r}: {cause}")
        self.label = label
        self.cause = cause


class CompositeIndicatorAudit(BaseEstimator):
    """Main-effect audit of a composite indicator.

    Parameters
    ----------
    weights : array-like of shape (k,)
        Nominal weights, nonnegative with unit sum.
    normalization : {'minmax', 'standardize', 'none'}
    aggregation : {'linear', 'geometric'}
    range_class : str or None
        Bandwidth-grid preset for every indicator ('unit', 'ten', 'hundred'
        or 'custom(lo,hi)').  None picks it from the normalized scores.
    positive_only : bool or 'auto'
        Restrict bandwidth selection to x > 0.  'auto' does so unless the
        scores are standardized (which centres them at zero).
    targets : array-like or None
        Stated target importances; None uses the revealed w_i / w_ref.
    inverse_targets : array-like or None
        Importance ratios of indicators 2..k for the weight inversion.
    n_star, alpha : DPI block cap and trimming fraction.

    After ``fit(X, y=None)`` the results are in ``indicators_``,
    ``discrepancy_``, ``inverse_`` and ``normalized_``.  ``X`` is a
    :class:`~ciaudit.dataset.DataMatrix` or an array of raw scores; ``y`` an
    externally supplied index, otherwise it is computed from the weights.
    """

    def __init__(self, weights=None, normalization="minmax", aggregation="linear",
                 range_class=None, positive_only="auto", targets=None,
                 inverse_targets=None, n_star=5, alpha=0.05):
        self.weights = weights
        self.normalization = normalization
        self.aggregation = aggregation
        self.range_class = range_class
        self.positive_only = positive_only
        self.targets = targets
        self.inverse_targets = inverse_targets
        self.n_star = n_star
        self.alpha = alpha

    def _validate(self, X):
        if not isinstance(X, DataMatrix):
            arr = np.asarray(X, dtype=float)
            if arr.ndim != 2:
                raise InputError("X must be a DataMatrix or a 2-d array")
            X = DataMatrix([str(j) for j in range(arr.shape[0])],
                           [f"x{i + 1}" for i in range(arr.shape[1])], arr)
        if self.normalization not in NORMALIZATIONS:
            raise InputError(f"unknown normalization {self.normalization!r}")
        if self.aggregation not in AGGREGATIONS:
            raise InputError(f"unknown aggregation {self.aggregation!r}")
        if self.weights is None:
            raise InputError("weights are required")
        return X, check_weights(self.weights, X.k)

    def fit(self, X, y=None):
        data, w = self._validate(X)
        norm = normalize(data, self.normalization)
        if y is None:
            y = compute_index(norm, w, self.aggregation).y
        else:
            y = as_vector(y, "y")
            if y.size != data.n:
                raise InputError("y length does not match the number of units")
        positive = self.positive_only
        if positive == "auto":
            positive = self.normalization != "standardize"
        eps = effective_weights(norm.x, w, y)

        results = []
        for i, label in enumerate(norm.indicators):
            try:
                results.append(self._analyse(i, label, norm, y, w, eps, bool(positive)))
            except CIAuditError as exc:
                raise IndicatorError(label, exc) from exc

        s = {key: np.array([getattr(r, key) for r in results])
             for key in ("s_lin", "s_cv", "s_dpi", "s_min", "s_max")}
        self.discrepancy_ = discrepancy_report(w, stated=self.targets, **s)
        self.inverse_: InverseSolution | None = None
        if self.inverse_targets is not None:
            ratios = as_vector(self.inverse_targets, "inverse_targets")
            if ratios.size != data.k - 1:
                raise InputError(f"inverse targets need {data.k - 1} ratios, got {ratios.size}")
            self.inverse_ = solve_inverse_from_ratios(norm.sigma, ratios)
        self.indicators_ = results
        self.normalized_ = norm
        self.index_ = y
        self.positive_only_ = bool(positive)
        self.n_dropped_ = data.n_dropped
        self.n_features_in_ = data.k
        return self

    def _grid(self, norm, i):
        rc = self.range_class if self.range_class is not None else norm.range_class[i]
        return build_grid(RangeClass.parse(rc))

    def _analyse(self, i, label, norm, y, w, eps, positive):
        x = norm.x[:, i]
        grid = self._grid(norm, i)
        cv = select_cv(x, y, grid, positive)
        dpi = dpi_bandwidth(x, y, self.n_star, self.alpha, positive)
        est = main_effect_curve(x, y, grid, cv.h_cv, dpi.h, indicator=i)
        counts = {}
        for name, h, loo in (("cv_loo", cv.h_cv, True), ("h_cv", cv.h_cv, False),
                             ("h_dpi", dpi.h, False)):
            _, flags = smoother_matrix(x, h, leave_one_out=loo)
            counts[name] = {f.name.lower(): int(np.sum(flags == f)) for f in Fallback}
        return IndicatorResult(
            label=label, w=float(w[i]),
            h_cv=cv.h_cv, h_dpi=dpi.h, h_dpi_capped=dpi.capped, n_star=dpi.n_star,
            boundary_hit=cv.boundary_hit,
            p_cv=linearity_pvalue(x, y, cv.h_cv).p_value,
            p_dpi=linearity_pvalue(x, y, dpi.h).p_value,
            s_lin=est.s_lin, s_cv=est.s_cv, s_dpi=est.s_dpi,
            s_min=est.s_min, s_max=est.s_max,
            epsilon=float(eps[i]), n_used=dpi.n_used,
            fallback_counts=counts,
            cv_curve=cv.cv_curve, s_curve=est.s_curve,
        )
