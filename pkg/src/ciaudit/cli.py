"""Command-line interface: ``ciaudit {audit,invert,plotdata,gen}``.

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import report
from ._validation import CIAuditError, InputError, NumericalError, check_spd
from .audit import CompositeIndicatorAudit, IndicatorError
from .bandwidth import build_grid, cv_criterion, dpi_bandwidth, select_cv
from .dataset import (RangeClass, compute_index, gen_gaussian_dataset, load_csv,
                      normalize, write_csv)
from .effects import linearity_pvalue, main_effect_at
from .inverse import solve_inverse_from_ratios
from .smoother import ols_fit, smoother_matrix

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2

DEFAULTS = {
    "normalization": "minmax",
    "aggregation": "linear",
    "range_class": None,
    "positive_only": "auto",
    "missing": "NA",
    "seed": None,
    "targets": None,
    "inverse_targets": None,
    "n_star": 5,
    "alpha": 0.05,
}
KNOWN_KEYS = set(DEFAULTS) | {"weights", "n", "mu", "sigma", "indicators"}
DENSE_POINTS = 200


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _read_config(path) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise InputError("config must be a JSON object")
    unknown = sorted(set(cfg) - KNOWN_KEYS)
    if unknown:
        raise InputError(f"unknown config key(s): {', '.join(unknown)}")
    return cfg


def _effective(args, required=("weights",)) -> dict:
    """Config file values, overridden by command-line flags."""
    cfg = {**DEFAULTS, **_read_config(getattr(args, "config", None))}
    for key in ("normalization", "aggregation", "seed"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    for key in required:
        if cfg.get(key) is None:
            raise InputError(f"missing config key: {key}")
    return cfg


def _parse_ratios(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"cannot parse targets {text!r}") from None


def _fit_audit(data, cfg) -> CompositeIndicatorAudit:
    return CompositeIndicatorAudit(
        weights=cfg["weights"], normalization=cfg["normalization"],
        aggregation=cfg["aggregation"], range_class=cfg["range_class"],
        positive_only=cfg["positive_only"], targets=cfg["targets"],
        inverse_targets=cfg["inverse_targets"], n_star=cfg["n_star"],
        alpha=cfg["alpha"],
    ).fit(data)


def cmd_audit(args) -> int:
    cfg = _effective(args)
    data = load_csv(args.data, missing=cfg["missing"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        audit = _fit_audit(data, cfg)
    doc = report.audit_dict(audit, report.provenance(args.data, cfg, cfg["seed"]))
    report.write_json(doc, args.out)
    if args.table:
        report.write_table(audit, args.table)
    d = audit.discrepancy_
    print(f"audited {data.k} indicators on {data.n} units "
          f"({data.n_dropped} incomplete rows dropped)")
    print(f"d_m: dpi={d.d_dpi:.4f} cv={d.d_cv:.4f} lin={d.d_lin:.4f}")
    return EXIT_OK


def _load_sigma(path) -> np.ndarray:
    p = Path(path)
    try:
        if p.suffix.lower() == ".json":
            obj = json.loads(p.read_text(encoding="utf-8"))
            mat = obj["sigma"] if isinstance(obj, dict) else obj
        else:
            with open(p, newline="", encoding="utf-8") as fh:
                mat = [[float(c) for c in row] for row in csv.reader(fh) if row]
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read covariance {path}: {exc}") from None
    return check_spd(np.asarray(mat, dtype=float))


def cmd_invert(args) -> int:
    if (args.data is None) == (args.sigma is None):
        raise InputError("give exactly one of --data or --sigma")
    cfg = _effective(args, required=())
    if args.data is not None:
        data = load_csv(args.data, missing=cfg["missing"])
        norm = normalize(data, cfg["normalization"])
        sigma, labels, source = norm.sigma, norm.indicators, args.data
    else:
        sigma = _load_sigma(args.sigma)
        labels = [f"x{i + 1}" for i in range(sigma.shape[0])]
        source = args.sigma
    if args.targets is not None:
        ratios = _parse_ratios(args.targets)
    elif cfg.get("inverse_targets") is not None:
        ratios = list(cfg["inverse_targets"])
    else:
        raise InputError("missing targets: pass --targets or set inverse_targets")
    k = sigma.shape[0]
    if len(ratios) != k - 1:
        raise InputError(f"expected {k - 1} target ratios (indicators 2..{k}), "
                         f"got {len(ratios)}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sol = solve_inverse_from_ratios(sigma, ratios)
    doc = {
        "schema_version": report.SCHEMA_VERSION,
        "targets": ratios,
        "inverse": report.inverse_dict(sol, labels),
        "provenance": report.provenance(source, cfg, cfg["seed"]),
    }
    if args.out:
        report.write_json(report._clean(doc), args.out)
    print("w* = " + ", ".join(f"{lab}={w:.6f}" for lab, w in zip(labels, sol.w_star)))
    if not sol.attainable:
        print("targets not attainable with nonnegative weights")
    for msg in sol.warnings:
        print(f"warning: {msg}")
    return EXIT_OK


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                             for v in row])


def cmd_plotdata(args) -> int:
    cfg = _effective(args)
    data = load_csv(args.data, missing=cfg["missing"])
    norm = normalize(data, cfg["normalization"])
    if args.indicator not in norm.indicators:
        raise InputError(f"unknown indicator {args.indicator!r}")
    i = norm.indicators.index(args.indicator)
    y = compute_index(norm, cfg["weights"], cfg["aggregation"]).y
    x = norm.x[:, i]
    positive = cfg["positive_only"]
    if positive == "auto":
        positive = cfg["normalization"] != "standardize"
    rc = cfg["range_class"] if cfg["range_class"] is not None else norm.range_class[i]
    grid = build_grid(RangeClass.parse(rc))
    cv = select_cv(x, y, grid, positive)
    h_dpi = dpi_bandwidth(x, y, cfg["n_star"], cfg["alpha"], positive).h
    markers = (("h_cv", cv.h_cv), ("h_dpi", h_dpi))

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = ("kind", "h", "value")
    cv_rows = [("grid", h, v) for h, v in cv.cv_curve]
    cv_rows += [(name, h, cv_criterion(x, y, h, positive)) for name, h in markers]
    _write_rows(out / "cv_curve.csv", header, cv_rows)

    p_rows = [("grid", h, linearity_pvalue(x, y, h).p_value) for h in grid.h_values]
    p_rows += [(name, h, linearity_pvalue(x, y, h).p_value) for name, h in markers]
    _write_rows(out / "pvalue_curve.csv", header, p_rows)

    s_rows = [("grid", h, main_effect_at(x, y, h)) for h in grid.h_values]
    s_rows += [(name, h, main_effect_at(x, y, h)) for name, h in markers]
    _write_rows(out / "s_curve.csv", header, s_rows)

    dense = np.linspace(x.min(), x.max(), DENSE_POINTS)
    xc = x - x.mean()
    slope = float(xc @ (y - y.mean()) / (xc @ xc))
    fits = {}
    for name, h in markers:
        fits[name] = (smoother_matrix(x, h)[0] @ y,
                      smoother_matrix(x, h, x_eval=dense)[0] @ y)
    lin = ols_fit(x, y)
    rows = [("data", x[j], y[j], lin[j], fits["h_dpi"][0][j], fits["h_cv"][0][j])
            for j in range(x.size)]
    rows += [("grid", dense[j], None, y.mean() + slope * (dense[j] - x.mean()),
              fits["h_dpi"][1][j], fits["h_cv"][1][j]) for j in range(DENSE_POINTS)]
    _write_rows(out / "scatter.csv", ("kind", "x", "y", "linear", "fit_dpi", "fit_cv"), rows)
    print(f"wrote plot data for {args.indicator!r} to {out}")
    return EXIT_OK


def cmd_gen(args) -> int:
    cfg = _effective(args, required=("sigma", "n"))
    seed = cfg["seed"] if cfg["seed"] is not None else 0
    sigma = np.asarray(cfg["sigma"], dtype=float)
    d = gen_gaussian_dataset(int(cfg["n"]), cfg.get("mu"), sigma, int(seed),
                             cfg.get("indicators"))
    write_csv(d, args.out)
    print(f"seed={seed}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ciaudit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, data_required=True):
        p.add_argument("--data", required=data_required, help="indicator panel CSV")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--normalization", choices=("minmax", "standardize", "none"))
        p.add_argument("--aggregation", choices=("linear", "geometric"))

    p = sub.add_parser("audit", help="run a full main-effect audit")
    common(p)
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--table", help="optional flat CSV of the per-indicator table")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("invert", help="weights reaching stated importance ratios")
    common(p, data_required=False)
    p.add_argument("--sigma", help="covariance matrix (CSV or JSON)")
    p.add_argument("--targets", help="ratios r2,...,rk relative to indicator 1")
    p.add_argument("--out", help="JSON output path")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("plotdata", help="tidy CSV files for the four-panel plot")
    common(p)
    p.add_argument("--indicator", required=True)
    p.add_argument("--out-dir", "--out", dest="out_dir", required=True)
    p.set_defaults(func=cmd_plotdata)

    p = sub.add_parser("gen", help="write a synthetic Gaussian panel")
    p.add_argument("--config", required=True, help="JSON with n, sigma, optional mu/seed")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)
    return parser


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, IndicatorError):
        exc = exc.cause
    return EXIT_NUMERICAL if isinstance(exc, NumericalError) else EXIT_INPUT


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CIAuditError as exc:
        print(f"ciaudit {args.command}: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"ciaudit {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
