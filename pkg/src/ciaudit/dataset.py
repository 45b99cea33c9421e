"""Indicator panels: ingestion, normalization, aggregation and synthetic data.

Raw panels are held in :class:`DataMatrix` (units by indicators).  The two
normalizations used by composite indicator builders are available both as
scikit-learn transformers (:class:`MinMaxNormalizer`, :class:`Standardizer`)
and as functions returning a :class:`NormalizedMatrix` that also carries the
sample mean vector and covariance matrix of the normalized scores.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import InputError, as_matrix, check_spd, check_weights

NORMALIZATIONS = ("minmax", "standardize", "none")
AGGREGATIONS = ("linear", "geometric")

# span boundary between the unit preset and the 0-10 / 0-100 preset
_UNIT_SPAN_LIMIT = math.sqrt(10.0)


@dataclass(frozen=True)
class RangeClass:
    """Nominal range of an indicator column.

    ``kind`` is one of ``unit`` (0-1), ``ten`` (0-10), ``hundred`` (0-100) or
    ``custom`` with explicit ``lo``/``hi``.
    """

    kind: str
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if self.kind not in ("unit", "ten", "hundred", "custom"):
            raise InputError(f"unknown range class {self.kind!r}")

    @classmethod
    def parse(cls, value) -> "RangeClass":
        if isinstance(value, RangeClass):
            return value
        if isinstance(value, str):
            if value.startswith("custom"):
                # custom(lo,hi)
                inner = value[len("custom"):].strip("() ")
                try:
                    lo, hi = (float(v) for v in inner.split(","))
                except ValueError:
                    raise InputError(f"cannot parse range class {value!r}") from None
                return cls("custom", lo, hi)
            bounds = {"unit": 1.0, "ten": 10.0, "hundred": 100.0}
            if value not in bounds:
                raise InputError(f"unknown range class {value!r}")
            return cls(value, 0.0, bounds[value])
        if isinstance(value, (list, tuple)) and len(value) == 2:
            return cls("custom", float(value[0]), float(value[1]))
        raise InputError(f"cannot parse range class {value!r}")

    @property
    def preset(self) -> str:
        """Name of the bandwidth-grid preset this class maps to."""
        if self.kind != "custom":
            return self.kind
        return "unit" if (self.hi - self.lo) <= _UNIT_SPAN_LIMIT else "ten"

    def __str__(self) -> str:
        if self.kind == "custom":
            return f"custom({self.lo:g},{self.hi:g})"
        return self.kind


def infer_range_class(column) -> RangeClass:
    """Smallest standard range containing the column, else a custom range."""
    col = np.asarray(column, dtype=float)
    lo, hi = float(col.min()), float(col.max())
    if lo >= 0:
        for kind, bound in (("unit", 1.0), ("ten", 10.0), ("hundred", 100.0)):
            if hi <= bound:
                return RangeClass(kind, 0.0, bound)
    return RangeClass("custom", lo, hi)


@dataclass
class DataMatrix:
    """Raw n-by-k panel of indicator values."""

    units: list[str]
    indicators: list[str]
    values: np.ndarray
    range_class: list[RangeClass] = field(default_factory=list)
    n_dropped: int = 0

    def __post_init__(self):
        self.values = as_matrix(self.values, "values")
        n, k = self.values.shape
        if len(self.units) != n or len(self.indicators) != k:
            raise InputError("label counts do not match the value matrix")
        if n < 3:
            raise InputError(f"need at least 3 complete rows, got {n}")
        if k < 2:
            raise InputError(f"need at least 2 indicators, got {k}")
        if len(set(self.indicators)) != k:
            raise InputError("duplicate indicator labels")
        for label, col in zip(self.indicators, self.values.T):
            if np.ptp(col) == 0:
                raise InputError(f"constant column {label!r}")
        if not self.range_class:
            self.range_class = [infer_range_class(c) for c in self.values.T]
        else:
            self.range_class = [RangeClass.parse(r) for r in self.range_class]
            if len(self.range_class) != k:
                raise InputError("one range class per indicator is required")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]


@dataclass
class NormalizedMatrix:
    """Normalized scores with their sample moments (n-1 divisor)."""

    x: np.ndarray
    method: str
    mu: np.ndarray
    sigma: np.ndarray
    indicators: list[str]
    range_class: list[RangeClass]

    @classmethod
    def from_scores(cls, x, method, indicators, range_class) -> "NormalizedMatrix":
        x = np.asarray(x, dtype=float)
        sigma = np.cov(x, rowvar=False, ddof=1)
        return cls(x, method, x.mean(axis=0), 0.5 * (sigma + sigma.T),
                   list(indicators), list(range_class))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def k(self) -> int:
        return self.x.shape[1]


@dataclass
class CompositeSeries:
    y: np.ndarray
    aggregation: str


class MinMaxNormalizer(TransformerMixin, BaseEstimator):
    """Rescale each column to [0, 1] by its observed minimum and maximum."""

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        self.data_min_ = X.min(axis=0)
        self.data_range_ = X.max(axis=0) - self.data_min_
        if np.any(self.data_range_ <= 0):
            bad = int(np.flatnonzero(self.data_range_ <= 0)[0])
            raise InputError(f"zero-range column at position {bad}")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "data_min_")
        X = check_array(X, dtype=float)
        return (X - self.data_min_) / self.data_range_


class Standardizer(TransformerMixin, BaseEstimator):
    """Center each column and scale it to unit sample variance.

    Uses the n-1 divisor, so the training columns come out with sample
    variance exactly one under ``np.var(..., ddof=1)``.
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if X.shape[0] < 2:
            raise InputError("standardization needs at least two rows")
        self.mean_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0, ddof=1)
        if np.any(self.scale_ <= 0):
            bad = int(np.flatnonzero(self.scale_ <= 0)[0])
            raise InputError(f"zero-variance column at position {bad}")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X, dtype=float)
        return (X - self.mean_) / self.scale_


def minmax_normalize(d: DataMatrix) -> NormalizedMatrix:
    x = MinMaxNormalizer().fit_transform(d.values)
    return NormalizedMatrix.from_scores(x, "minmax", d.indicators,
                                        [RangeClass("unit")] * d.k)


def standardize(d: DataMatrix) -> NormalizedMatrix:
    x = Standardizer().fit_transform(d.values)
    classes = [RangeClass("custom", float(c.min()), float(c.max())) for c in x.T]
    return NormalizedMatrix.from_scores(x, "standardize", d.indicators, classes)


def no_normalization(d: DataMatrix) -> NormalizedMatrix:
    return NormalizedMatrix.from_scores(d.values.copy(), "none", d.indicators,
                                        d.range_class)


def normalize(d: DataMatrix, method: str = "minmax") -> NormalizedMatrix:
    funcs = {"minmax": minmax_normalize, "standardize": standardize,
             "none": no_normalization}
    if method not in funcs:
        raise InputError(f"unknown normalization {method!r}; "
                         f"expected one of {NORMALIZATIONS}")
    return funcs[method](d)


def compute_index(x, w, aggregation: str = "linear") -> CompositeSeries:
    """Aggregate normalized scores into a composite index.

    Linear aggregation is the weighted arithmetic mean; geometric aggregation
    is the weighted geometric mean ``exp(sum_i w_i log x_i)``, which is the
    plain cube root of the product for three equally weighted columns.
    """
    scores = x.x if isinstance(x, NormalizedMatrix) else as_matrix(x, "x")
    w = check_weights(w, scores.shape[1])
    if aggregation == "linear":
        y = scores @ w
    elif aggregation == "geometric":
        if np.any(scores <= 0):
            raise InputError("geometric aggregation requires strictly positive scores")
        y = np.exp(np.log(scores) @ w)
    else:
        raise InputError(f"unknown aggregation {aggregation!r}; "
                         f"expected one of {AGGREGATIONS}")
    return CompositeSeries(y, aggregation)


def gen_gaussian_dataset(n: int, mu, sigma, seed: int,
                         indicators: list[str] | None = None) -> DataMatrix:
    """Draw ``n`` units from N(mu, sigma) reproducibly."""
    sigma = check_spd(sigma)
    k = sigma.shape[0]
    mu = np.zeros(k) if mu is None else np.asarray(mu, dtype=float)
    if mu.shape != (k,):
        raise InputError(f"mu must have length {k}")
    if n < k + 1:
        raise InputError(f"n must be at least k+1 = {k + 1}")
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(sigma)
    values = mu + rng.standard_normal((n, k)) @ chol.T
    width = len(str(n))
    units = [f"u{j + 1:0{width}d}" for j in range(n)]
    labels = indicators or [f"x{i + 1}" for i in range(k)]
    return DataMatrix(units, list(labels), values)


def load_csv(path, missing: str | tuple[str, ...] = "NA",
             delimiter: str = ",") -> DataMatrix:
    """Read a panel: header row, unit labels in the first column.

    Rows with any missing cell are dropped; the count is kept in
    ``DataMatrix.n_dropped``.  Empty cells always count as missing.
    """
    markers = {missing} if isinstance(missing, str) else set(missing)
    markers.add("")
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh, delimiter=delimiter) if r]
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise InputError(f"{path} is empty")
    header = [c.strip() for c in rows[0]]
    indicators = header[1:]
    if len(set(indicators)) != len(indicators):
        raise InputError("duplicate indicator labels")
    units, values, dropped = [], [], 0
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise InputError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        cells = [c.strip() for c in row[1:]]
        if any(c in markers for c in cells):
            dropped += 1
            continue
        try:
            values.append([float(c) for c in cells])
        except ValueError:
            raise InputError(f"line {lineno}: non-numeric value") from None
        units.append(row[0].strip())
    if len(values) < 3:
        raise InputError(f"fewer than 3 complete rows in {path}")
    arr = np.array(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"non-finite values in {path}")
    return DataMatrix(units, indicators, arr, n_dropped=dropped)


def write_csv(d: DataMatrix, path) -> None:
    """Write a panel in the format :func:`load_csv` reads (full precision)."""
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["unit", *d.indicators])
        for unit, row in zip(d.units, d.values):
            writer.writerow([unit, *(repr(float(v)) for v in row)])
