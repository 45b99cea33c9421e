"""JSON-compatible serialization of audit and inversion results."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .audit import CompositeIndicatorAudit
from .inverse import InverseSolution

SCHEMA_VERSION = 1

TABLE_COLUMNS = ("label", "w", "h_cv", "p_cv", "h_dpi", "p_dpi", "n_used",
                 "boundary_hit", "h_dpi_capped", "s_lin", "s_cv", "s_dpi",
                 "s_min", "s_max", "epsilon")


def _clean(value):
    """Recursively convert numpy values to JSON types; non-finite -> None."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    return value


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def inverse_dict(sol: InverseSolution | None, labels=None):
    if sol is None:
        return None
    return _clean({
        "label": sol.label,
        "indicators": labels,
        "w_star": sol.w_star,
        "g": sol.g,
        "attainable": sol.attainable,
        "achieved_ratios": sol.achieved_ratios,
        "condition_number": sol.condition_number,
        "warnings": sol.warnings,
    })


def audit_dict(audit: CompositeIndicatorAudit, provenance: dict) -> dict:
    disc = audit.discrepancy_
    labels = [r.label for r in audit.indicators_]
    indicators = []
    for r in audit.indicators_:
        rec = {c: getattr(r, c) for c in TABLE_COLUMNS}
        rec["n_star"] = r.n_star
        rec["fallback_counts"] = r.fallback_counts
        indicators.append(rec)
    return _clean({
        "schema_version": SCHEMA_VERSION,
        "n_units": int(audit.index_.size),
        "n_dropped": audit.n_dropped_,
        "normalization": audit.normalized_.method,
        "positive_only": audit.positive_only_,
        "indicators": indicators,
        "discrepancy": {
            "reference": disc.reference,
            "reference_label": labels[disc.reference],
            "target_mode": disc.target_mode,
            "zeta": disc.zeta,
            "d_dpi": disc.d_dpi,
            "d_cv": disc.d_cv,
            "d_lin": disc.d_lin,
            "d_min": disc.d_min,
            "d_max": disc.d_max,
            "bounds_computed": disc.d_min is not None,
            "s_star": disc.s_star,
            "s_star_lo": disc.s_star_lo,
            "s_star_hi": disc.s_star_hi,
        },
        "inverse": inverse_dict(audit.inverse_, labels),
        "provenance": provenance,
    })


def provenance(data_path, config: dict, seed=None) -> dict:
    return {
        "input_sha256": file_digest(data_path) if data_path else None,
        "config": config,
        "seed": seed,
        "tool_version": __version__,
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(doc: dict, path) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def write_table(audit: CompositeIndicatorAudit, path) -> None:
    """Flat per-indicator table, one row per indicator."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        for r in audit.indicators_:
            writer.writerow([_fmt(getattr(r, c)) for c in TABLE_COLUMNS])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v
