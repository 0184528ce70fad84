"""Command-line interface.

Subcommands cover the full workflow: ``fit`` (CSV to model JSON),
``summary`` (Wald-test table for a stored model), ``pce`` (partial
covariate effects as CSV and/or SVG), ``select`` (BIC and
cross-validation sweep over widths), ``diagram`` (significance-annotated
DOT graph), and ``simulate`` (Monte Carlo scenario to report CSVs).

Exit codes: 0 on success, 2 on input problems (bad files, unknown
columns, malformed flags), 3 on numerical failure — typically a
covariance estimate that is not positive definite, reported together
with the standard remediation of refitting with a larger ridge penalty.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .effects import PceConfig, PceCurve, pce_curve, to_original_scale
from .exceptions import (DataError, FitError, NotPositiveDefiniteError,
                         ShapeError, SingularMatrixError)
from .fit import FitConfig, evaluate_at, fit
from .inference import sandwich_covariance, summarize
from .likelihood import LikelihoodSpec, observed_information
from .model import Architecture, Dataset
from .plots import pce_plot_svg, selection_plot_svg
from .preprocess import dataset_from_meta, ingest
from .report import (emit_diagram, emit_summary, estimates_csv, overview_csv,
                     pce_csv, rejections_csv, sweep_csv)
from .selection import fit_linear, sweep
from .serialize import (atomic_write_text, load_model, load_scenario,
                        model_document, save_model)
from .simgen import run_scenario

_LAMBDA_HINT = ("refit with a larger ridge penalty (--lambda) to obtain a "
                "positive definite covariance")


def _fit_flags(parser):
    parser.add_argument("--lambda", dest="lam", type=float, default=0.01,
                        help="ridge penalty (default 0.01)")
    parser.add_argument("--seed", type=int, default=0,
                        help="random seed for restarts (default 0)")
    parser.add_argument("--restarts", type=int, default=10,
                        help="number of random restarts (default 10)")
    parser.add_argument("--family", choices=("gaussian", "bernoulli"),
                        default="gaussian",
                        help="likelihood family (default gaussian)")
    parser.add_argument("--init-scale", type=float, default=0.5,
                        help="half-width of the uniform initializer "
                             "(default 0.5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statnn",
        description="Feedforward networks as statistical models: "
                    "penalized fitting, Wald inference, covariate "
                    "effects, and simulation studies.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p_fit = sub.add_parser("fit", help="fit a network to a CSV file")
    p_fit.add_argument("csv", help="input CSV (UTF-8, header row)")
    p_fit.add_argument("--response", required=True,
                       help="name of the response column")
    p_fit.add_argument("--q", type=int, required=True,
                       help="number of hidden nodes")
    p_fit.add_argument("--out", required=True, help="model JSON output path")
    p_fit.add_argument("--schema",
                       help="JSON file overriding per-column actions")
    _fit_flags(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_sum = sub.add_parser("summary",
                           help="Wald-test summary of a stored model")
    p_sum.add_argument("model", help="model JSON file")
    p_sum.add_argument("csv", help="data CSV to evaluate on")
    p_sum.add_argument("--format", choices=("text", "json", "csv"),
                       default="text")
    p_sum.add_argument("--out", help="write here instead of stdout")
    p_sum.set_defaults(func=cmd_summary)

    p_pce = sub.add_parser("pce", help="partial covariate effect curve")
    p_pce.add_argument("model", help="model JSON file")
    p_pce.add_argument("csv", help="data CSV to average over")
    p_pce.add_argument("--covariate", required=True,
                       help="model column to profile")
    p_pce.add_argument("--d", type=float,
                       help="step size (default: one sample sd)")
    p_pce.add_argument("--by",
                       help="condition on this covariate (dummy: levels "
                            "0 and 1; continuous: mean -/+ one sd)")
    p_pce.add_argument("--grid-points", type=int, default=101)
    p_pce.add_argument("--original-scale", action="store_true",
                       help="report effects in original response units")
    p_pce.add_argument("--linear-reference", action="store_true",
                       help="overlay the linear-model coefficient")
    p_pce.add_argument("--out", help="write curve CSV here instead of stdout")
    p_pce.add_argument("--svg", help="also render an SVG plot to this path")
    p_pce.set_defaults(func=cmd_pce)

    p_sel = sub.add_parser("select",
                           help="BIC / cross-validation sweep over widths")
    p_sel.add_argument("csv", help="input CSV (UTF-8, header row)")
    p_sel.add_argument("--response", required=True,
                       help="name of the response column")
    p_sel.add_argument("--q-max", type=int, default=8,
                       help="largest width; candidates are 0 (linear) "
                            "through this value (default 8)")
    p_sel.add_argument("--q-list",
                       help="comma-separated explicit candidate widths "
                            "(overrides --q-max)")
    p_sel.add_argument("--folds", type=int, default=5)
    p_sel.add_argument("--no-cv", action="store_true",
                       help="skip cross-validation, BIC only")
    p_sel.add_argument("--schema",
                       help="JSON file overriding per-column actions")
    p_sel.add_argument("--out", help="write sweep CSV here instead of stdout")
    p_sel.add_argument("--svg", help="also render an SVG plot to this path")
    _fit_flags(p_sel)
    p_sel.set_defaults(func=cmd_select)

    p_dia = sub.add_parser("diagram",
                           help="DOT diagram with significance styling")
    p_dia.add_argument("model", help="model JSON file")
    p_dia.add_argument("csv", help="data CSV to evaluate on")
    p_dia.add_argument("--out", help="write here instead of stdout")
    p_dia.set_defaults(func=cmd_diagram)

    p_sim = sub.add_parser("simulate",
                           help="run a Monte Carlo scenario from JSON")
    p_sim.add_argument("scenario", help="scenario JSON file")
    p_sim.add_argument("--out-dir", required=True,
                       help="directory for the report CSVs")
    p_sim.add_argument("--jobs", type=int, default=1,
                       help="worker processes (default 1, serial)")
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def _load_schema(path):
    if path is None:
        return None
    with open(path, encoding="utf-8") as fh:
        try:
            schema = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(schema, dict):
        raise DataError(f"{path}: schema top level must be an object")
    return schema


def _emit_or_print(text: str, out_path):
    if out_path is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(out_path, text)


def _build_arch(p: int, q: int, family: str) -> Architecture:
    return Architecture(
        p=p, q=q,
        output_activation="logistic" if family == "bernoulli" else "identity")


def cmd_fit(args) -> int:
    data, _plan = ingest(args.csv, args.response, _load_schema(args.schema))
    if args.family == "bernoulli" and not np.all((data.y == 0)
                                                 | (data.y == 1)):
        raise DataError(
            f"response column {args.response!r} must be 0/1 for the "
            "bernoulli family")
    arch = _build_arch(data.p, args.q, args.family)
    spec = LikelihoodSpec(args.family, args.lam)
    config = FitConfig(n_restarts=args.restarts, seed=args.seed,
                       init_scale=args.init_scale)
    result = fit(arch, data, spec, config)
    save_model(model_document(result, data), args.out)
    sigma_part = ("" if result.sigma_sq_hat is None
                  else f", sigma^2 = {result.sigma_sq_hat:.6g}")
    print(f"fit: n = {data.n}, p = {data.p}, q = {args.q}, "
          f"log-likelihood = {result.loglik:.6g}{sigma_part}, "
          f"converged = {'yes' if result.converged else 'no'}")
    print(f"model written to {args.out}")
    return 0


def _model_and_covariance(model_path, csv_path):
    """Shared summary/pce/diagram preamble: load, evaluate, sandwich."""
    doc = load_model(model_path)
    data = dataset_from_meta(csv_path, doc.column_meta, doc.response_meta)
    spec = LikelihoodSpec(doc.family, doc.lam)
    result = evaluate_at(doc.arch, doc.theta, data, spec)
    info = observed_information(doc.arch, doc.theta, data, spec,
                                sigma_sq=result.sigma_sq_hat)
    cov = sandwich_covariance(info, doc.lam)
    return doc, data, result, cov


def cmd_summary(args) -> int:
    doc, data, result, cov = _model_and_covariance(args.model, args.csv)
    if not cov.positive_definite:
        raise NotPositiveDefiniteError(
            "covariance estimate is not positive definite "
            f"(min eigenvalue {cov.min_eigenvalue:.3g}); {_LAMBDA_HINT}")
    report = summarize(result, cov, doc.arch, data)
    _emit_or_print(emit_summary(report, args.format), args.out)
    return 0


def _conditioning_values(data: Dataset, k: int):
    meta = data.column_meta[k - 1]
    if meta.kind == "dummy":
        return (0.0, 1.0)
    col = data.x[:, k - 1]
    mean = float(np.mean(col))
    sd = float(np.std(col, ddof=1))
    return (mean - sd, mean + sd)


def _linear_reference(data: Dataset, j: int, d: float, original: bool):
    """Linear-model analogue of a d-step effect, on the curve's scale."""
    linear = fit_linear(data)
    beta = float(linear.beta[j])        # beta[0] is the intercept
    ref = beta * d
    if original:
        ref *= data.response_meta.sd
    return ref


def cmd_pce(args) -> int:
    doc, data, _result, cov = _model_and_covariance(args.model, args.csv)
    j = data.column_index(args.covariate) + 1
    meta = data.column_meta[j - 1]
    conditioning = None
    if args.by is not None:
        k = data.column_index(args.by) + 1
        conditioning = (k, _conditioning_values(data, k))
    if meta.kind == "dummy":
        # A dummy's only meaningful effect is the 0 -> 1 switch.
        config = PceConfig(j=j, d=1.0, grid=np.array([0.0]),
                           conditioning=conditioning)
    else:
        grid = None
        if args.grid_points != 101:
            lo = float(np.min(data.x[:, j - 1]))
            hi = float(np.max(data.x[:, j - 1]))
            d_eff = args.d if args.d is not None else float(
                np.std(data.x[:, j - 1], ddof=1))
            grid = np.linspace(lo, hi - d_eff, args.grid_points)
        config = PceConfig(j=j, d=args.d, grid=grid,
                           conditioning=conditioning)
    curves = pce_curve(doc.arch, doc.theta, cov, data, config)
    single = isinstance(curves, PceCurve)
    if args.original_scale:
        if single:
            curves = to_original_scale(curves, data)
        else:
            curves = tuple(to_original_scale(c, data) for c in curves)
    linear_beta = None
    if args.linear_reference:
        d_for_ref = curves.d if single else curves[0].d
        if args.original_scale and meta.kind != "dummy":
            d_for_ref /= meta.sd       # back to the fitted (standardized) step
        linear_beta = _linear_reference(data, j, d_for_ref,
                                        args.original_scale)
    _emit_or_print(pce_csv(curves), args.out)
    if args.svg:
        atomic_write_text(args.svg,
                          pce_plot_svg(curves, linear_beta=linear_beta))
    return 0


def cmd_select(args) -> int:
    data, _plan = ingest(args.csv, args.response, _load_schema(args.schema))
    if args.family == "bernoulli" and not np.all((data.y == 0)
                                                 | (data.y == 1)):
        raise DataError(
            f"response column {args.response!r} must be 0/1 for the "
            "bernoulli family")
    if args.q_list:
        try:
            q_list = tuple(int(tok) for tok in args.q_list.split(","))
        except ValueError as exc:
            raise DataError(
                f"--q-list must be comma-separated integers: {exc}") from exc
    else:
        if args.q_max < 1:
            raise DataError(f"--q-max must be >= 1, got {args.q_max}")
        q_list = tuple(range(0, args.q_max + 1))
    spec = LikelihoodSpec(args.family, args.lam)
    config = FitConfig(n_restarts=args.restarts, seed=args.seed,
                       init_scale=args.init_scale)
    result = sweep(data, q_list, spec, config, folds=args.folds,
                   cv=not args.no_cv)
    _emit_or_print(sweep_csv(result), args.out)
    if args.svg:
        atomic_write_text(args.svg, selection_plot_svg(result))
    best = result.best_bic()
    print(f"best BIC: q = {best.q} (BIC {best.bic:.6g})", file=sys.stderr)
    if not args.no_cv:
        best_cv = result.best_cv()
        print(f"best CV RMSE: q = {best_cv.q} "
              f"(RMSE {best_cv.cv_rmse:.6g})", file=sys.stderr)
    return 0


def cmd_diagram(args) -> int:
    doc, data, result, cov = _model_and_covariance(args.model, args.csv)
    if not cov.positive_definite:
        raise NotPositiveDefiniteError(
            "covariance estimate is not positive definite "
            f"(min eigenvalue {cov.min_eigenvalue:.3g}); {_LAMBDA_HINT}")
    report = summarize(result, cov, doc.arch, data)
    _emit_or_print(emit_diagram(doc.arch, report), args.out)
    return 0


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.jobs < 1:
        raise DataError(f"--jobs must be >= 1, got {args.jobs}")
    report = run_scenario(scenario, n_jobs=args.jobs)
    os.makedirs(args.out_dir, exist_ok=True)
    for name, text in [("overview.csv", overview_csv(report)),
                       ("estimates.csv", estimates_csv(report)),
                       ("rejections.csv", rejections_csv(report))]:
        atomic_write_text(os.path.join(args.out_dir, name), text)
    print(f"simulate: q = {scenario.q}, pattern = {scenario.nz_pattern}, "
          f"n = {scenario.n}, replicates = {report.n_total}")
    print(f"fit failures = {report.n_fit_failed}, "
          f"positive definite = {report.n_pd}/{report.n_total}, "
          f"converged = {report.n_converged}")
    print(f"reports written to {args.out_dir}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse has already printed a message; normalize the code.
        return 0 if exc.code in (0, None) else 2
    try:
        return args.func(args)
    except (DataError, ShapeError, OSError, KeyError, ValueError,
            IndexError) as exc:
        # KeyError wraps its message in quotes; unwrap for readability.
        message = exc.args[0] if (isinstance(exc, KeyError)
                                  and exc.args) else exc
        print(f"error: {message}", file=sys.stderr)
        return 2
    except (FitError, SingularMatrixError, NotPositiveDefiniteError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        if "larger ridge" not in str(exc):
            print(f"hint: {_LAMBDA_HINT}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
