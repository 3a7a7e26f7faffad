"""Command-line front end for PLVC Quantile.

Subcommands fit models, select knots, run the tests, assess fitted
quantile processes, emit plot-ready curves and reproduce the Monte Carlo
studies. JSON goes to stdout unless ``--output`` names a file; CSV output
uses pandas.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any, NoReturn

import numpy as np
import pandas as pd
from pydantic import ValidationError

from plvc_quantile import __version__
from plvc_quantile.audit import record_run
from plvc_quantile.config import settings
from plvc_quantile.data import validate
from plvc_quantile.models.errors import (
    ArgumentError,
    DataError,
    NumericalError,
    ReplicateFailureError,
    SplineError,
)
from plvc_quantile.models.fits import QuantileFit, QuantileProcess
from plvc_quantile.models.inference import TestMethod
from plvc_quantile.models.simulation import SimulationConfig, StudyTest
from plvc_quantile.services.fitting import (
    assess_model,
    constant_spec,
    default_assess_grid,
    eval_alpha,
    fit,
    fit_process,
    select_knots,
)
from plvc_quantile.services.inference import (
    constancy_test,
    hypothesis_table,
    rank_score_beta,
    wald_test,
)
from plvc_quantile.services.shrinkage import shrinkage_constancy
from plvc_quantile.services.simulation import mc_level_power, mc_mse, mc_power_curve
from plvc_quantile.services.workflow import (
    check_tau,
    constant_indices,
    correlation_for,
    load_dataset,
    parse_knots,
    parse_method,
    parse_taus,
    parse_weights,
    resolve_spec,
    split_columns,
    varying_indices,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

DEFAULT_GRID_SIZE = 100


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors print help and raise instead of exiting with status 2."""

    def error(self, message: str) -> NoReturn:
        sys.stderr.write(self.format_help())
        raise ArgumentError(f"{self.prog}: {message}")


# =============================================================================
# Plot data
# =============================================================================


def emit_plot_data(
    fitted: QuantileFit | QuantileProcess, grid_size: int = DEFAULT_GRID_SIZE
) -> pd.DataFrame:
    """
    Evaluate every coefficient curve on a dense grid of the original time scale.

    One row per (t, coefficient, tau), ordered by tau, coefficient, then t.

    Args:
        fitted: A single fit or a quantile process.
        grid_size: Number of equally spaced time points (at least 2).

    Returns:
        DataFrame with columns t, coefficient, tau, alpha.
    """
    if grid_size < 2:
        raise ArgumentError(f"grid size must be at least 2, got {grid_size}")
    fits = fitted.fits if isinstance(fitted, QuantileProcess) else (fitted,)
    tm = fits[0].time_map
    grid = np.linspace(tm.t_min, tm.t_max, grid_size)

    frames = []
    for f in fits:
        for l, name in enumerate(f.varying_names):
            frames.append(
                pd.DataFrame(
                    {
                        "t": grid,
                        "coefficient": name,
                        "tau": f.tau,
                        "alpha": np.asarray(eval_alpha(f, l, grid)),
                    }
                )
            )
    return pd.concat(frames, ignore_index=True)


# =============================================================================
# Output
# =============================================================================


def _write_json(document: Any, output: str | None) -> None:
    text = json.dumps(document, indent=2) + "\n"
    if output:
        path = Path(output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info(f"Wrote {path}")
    else:
        sys.stdout.write(text)


def _write_csv(frame: pd.DataFrame, output: str | None) -> None:
    if output:
        path = Path(output)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, lineterminator="\n")
        logger.info(f"Wrote {path}")
    else:
        sys.stdout.write(frame.to_csv(index=False, lineterminator="\n"))


def _emit(args: argparse.Namespace, document: Any, rows: list[dict[str, Any]]) -> None:
    if args.format == "csv":
        _write_csv(pd.DataFrame(rows), args.output)
    else:
        _write_json(document, args.output)


# =============================================================================
# Subcommands
# =============================================================================


def _dataset(args: argparse.Namespace) -> Any:
    return load_dataset(args.data, args.varying, args.constant, not args.no_intercept)


def _process_spec(args: argparse.Namespace, ds: Any, taus: Sequence[float]) -> Any:
    """Shared spec for a tau grid; SIC runs at the grid point nearest the median."""
    anchor = min(taus, key=lambda t: (abs(t - 0.5), t))
    spec, _ = resolve_spec(ds, anchor, args.knots, args.degree, args.placement, n_jobs=args.threads)
    return spec


def _cmd_validate(args: argparse.Namespace) -> int:
    report = validate(_dataset(args))
    for warning in report.warnings:
        logger.warning(warning)
    _write_json(report.to_dict(), args.output)
    return EXIT_OK


def _cmd_fit(args: argparse.Namespace) -> int:
    ds = _dataset(args)
    taus = parse_taus(args.tau)
    if len(taus) == 1:
        spec, selection = resolve_spec(
            ds, taus[0], args.knots, args.degree, args.placement, n_jobs=args.threads
        )
        document = fit(ds, spec, taus[0]).to_document()
        if selection is not None:
            document.knot_selection = selection
        _write_json(document.to_dict(), args.output)
    else:
        proc = fit_process(ds, _process_spec(args, ds, taus), taus, n_jobs=args.threads)
        _write_json(proc.to_document().to_dict(), args.output)
    return EXIT_OK


def _cmd_select_knots(args: argparse.Namespace) -> int:
    ds = _dataset(args)
    k_range = None if args.k_max is None else range(1, args.k_max + 1)
    _, selection = select_knots(
        ds, check_tau(args.tau), args.degree, k_range, args.placement, n_jobs=args.threads
    )
    rows = [e.model_dump() for e in selection.entries]
    _emit(args, selection.to_dict(), rows)
    return EXIT_OK


def _cmd_test_beta(args: argparse.Namespace) -> int:
    ds = _dataset(args)
    tau = check_tau(args.tau)
    method = parse_method(args.method)
    tested = constant_indices(ds, args.coef)
    spec, _ = resolve_spec(ds, tau, args.knots, args.degree, args.placement, n_jobs=args.threads)
    if method is TestMethod.WALD:
        result = wald_test(ds, spec, tau, tested)
    else:
        result = rank_score_beta(
            ds, spec, tau, tested, correlation_for(method), parse_weights(args.weights)
        )
    _write_json(result.to_dict(), args.output)
    return EXIT_OK


def _cmd_test_constancy(args: argparse.Namespace) -> int:
    ds = _dataset(args)
    tau = check_tau(args.tau)
    method = parse_method(args.method)
    if method is TestMethod.WALD:
        raise ArgumentError("The Wald test applies to constant coefficients only")
    tested = varying_indices(ds, args.coef)
    spec, _ = resolve_spec(ds, tau, args.knots, args.degree, args.placement, n_jobs=args.threads)
    result = constancy_test(
        ds, spec, tau, tested, correlation_for(method), parse_weights(args.weights)
    )
    _write_json(result.to_dict(), args.output)
    return EXIT_OK


def _cmd_shrink(args: argparse.Namespace) -> int:
    ds = _dataset(args)
    tau = check_tau(args.tau)
    tested = varying_indices(ds, args.coef)
    spec, _ = resolve_spec(ds, tau, args.knots, args.degree, args.placement, n_jobs=args.threads)
    grid = None
    if args.lambdas:
        try:
            grid = [float(v) for v in split_columns(args.lambdas)]
        except ValueError:
            raise ArgumentError(f"Could not parse lambda grid {args.lambdas!r}") from None
    result = shrinkage_constancy(ds, spec, tau, tested, grid, n_jobs=args.threads)
    rows = [e.model_dump() for e in result.sic_path]
    _emit(args, result.to_dict(), rows)
    return EXIT_OK


def _cmd_assess(args: argparse.Namespace) -> int:
    ds = _dataset(args)
    taus = parse_taus(args.taus) if args.taus else default_assess_grid().tolist()
    models: list[tuple[str, Any]] = [("plvc", _process_spec(args, ds, taus))]
    if args.compare_lcc:
        models.append(("lcc", constant_spec()))

    documents = []
    rows: list[dict[str, Any]] = []
    for name, spec in models:
        proc = fit_process(ds, spec, taus, n_jobs=args.threads)
        result = assess_model(proc, ds, args.t_star, args.tol, args.draws, args.seed, model=name)
        documents.append(result.to_dict())
        rows.extend({"model": name, **pair.model_dump()} for pair in result.qq)
    _emit(args, documents, rows)
    return EXIT_OK


def _cmd_plot_data(args: argparse.Namespace) -> int:
    ds = _dataset(args)
    taus = parse_taus(args.tau)
    if len(taus) == 1:
        spec, _ = resolve_spec(
            ds, taus[0], args.knots, args.degree, args.placement, n_jobs=args.threads
        )
        fitted: QuantileFit | QuantileProcess = fit(ds, spec, taus[0])
    else:
        fitted = fit_process(ds, _process_spec(args, ds, taus), taus, n_jobs=args.threads)
    _write_csv(emit_plot_data(fitted, args.grid_size), args.output)
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    ds = _dataset(args)
    taus = parse_taus(args.taus)
    k = parse_knots(args.knots)
    spec = None
    if k is not None:
        spec, _ = resolve_spec(ds, taus[0], k, args.degree, args.placement)
    beta_tests = [constant_indices(ds, names) for names in args.beta or []]
    constancy_tests = [varying_indices(ds, names) for names in args.constancy or []]
    if not beta_tests and not constancy_tests:
        raise ArgumentError("report needs at least one --beta or --constancy hypothesis")
    method = parse_method(args.method)
    if method is TestMethod.WALD:
        raise ArgumentError("report uses rank score tests; choose qrs or qrs-delta")

    rows = hypothesis_table(
        ds,
        spec,
        taus,
        beta_tests,
        constancy_tests,
        correlation_for(method),
        parse_weights(args.weights),
        shrink=not args.no_shrink,
    )
    documents = [row.model_dump(mode="json") for row in rows]
    _emit(args, documents, documents)
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    knots = parse_knots(args.knots)
    try:
        config = SimulationConfig(
            case=args.case,
            n=args.n,
            tau=args.tau,
            beta=args.beta,
            eta=args.eta,
            rho=args.rho,
            reps=args.reps,
            seed=args.seed,
            truth=args.truth,
            degree=args.degree,
            knots=knots,
        )
        test = StudyTest(
            hypothesis=args.hypothesis,
            methods=[parse_method(m) for m in split_columns(args.methods)],
            weights=parse_weights(args.weights),
            level=args.level,
        )
    except ValidationError as e:
        raise ArgumentError(str(e.errors()[0]["msg"])) from None

    if args.study == "level-power":
        report = mc_level_power(config, test, n_jobs=args.threads)
        _emit(args, report.to_dict(), report.to_csv_rows())
    elif args.study == "mse":
        report = mc_mse(config, n_jobs=args.threads)
        _emit(args, report.to_dict(), report.to_csv_rows())
    else:
        if not args.values:
            raise ArgumentError("power-curve needs --values")
        try:
            values = [float(v) for v in split_columns(args.values)]
        except ValueError:
            raise ArgumentError(f"Could not parse --values {args.values!r}") from None
        reports = mc_power_curve(config, test, args.target, values, n_jobs=args.threads)
        rows = [
            {"target": r.target, "value": r.value, **row}
            for r in reports
            for row in r.to_csv_rows()
        ]
        _emit(args, [r.to_dict() for r in reports], rows)
    return EXIT_OK


# =============================================================================
# Parser
# =============================================================================


def _data_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--data", required=True, metavar="PATH", help="Longitudinal CSV file")
    parent.add_argument(
        "--varying", default="", help="Comma-separated columns with time-varying coefficients"
    )
    parent.add_argument(
        "--constant", default="", help="Comma-separated columns with constant coefficients"
    )
    parent.add_argument(
        "--no-intercept", action="store_true", help="Omit the time-varying intercept"
    )
    return parent


def _spline_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument(
        "--knots", default="auto", help="Internal knot count, or 'auto' for SIC selection"
    )
    parent.add_argument(
        "--degree", type=int, default=settings.default_degree, help="Spline degree (default 3)"
    )
    parent.add_argument(
        "--placement",
        choices=["uniform", "sample-quantile"],
        default="uniform",
        help="Internal knot placement",
    )
    return parent


def _output_options(formats: Sequence[str] = ("json",)) -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--output", metavar="PATH", help="Write to a file instead of stdout")
    parent.add_argument("--format", choices=list(formats), default=formats[0])
    parent.add_argument(
        "--threads",
        type=int,
        default=settings.threads,
        help="Worker cap for parallel fits and replicates (env PLVC_QR_THREADS)",
    )
    return parent


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with all subcommands."""
    parser = _Parser(
        prog="plvc-quantile",
        description="Quantile regression in partially linear varying coefficient models",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
    plvc-quantile fit --data d.csv --tau 0.5 --varying x1,x2 --constant z1 --knots auto
    plvc-quantile test-constancy --data d.csv --varying x1 --coef x1 --method qrs-delta --tau 0.3
    plvc-quantile simulate --case 1 --n 100 --tau 0.5 --reps 500 --beta 0 --seed 7
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    data, spline = _data_options(), _spline_options()
    json_out, table_out = _output_options(), _output_options(("json", "csv"))

    p = sub.add_parser("validate", parents=[data, json_out], help="Summarize a dataset")
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("fit", parents=[data, spline, json_out], help="Fit at one or more taus")
    p.add_argument("--tau", default="0.5", help="Quantile level, or a comma-separated grid")
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser(
        "select-knots", parents=[data, spline, table_out], help="SIC table over knot counts"
    )
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--k-max", type=int, help="Largest candidate (default ceil(N^0.2) + 2)")
    p.set_defaults(handler=_cmd_select_knots)

    p = sub.add_parser(
        "test-beta", parents=[data, spline, json_out], help="Test constant coefficients"
    )
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--coef", default="", help="Constant covariates to test (default: all)")
    p.add_argument("--method", choices=["qrs", "qrs-delta", "wald"], default="qrs")
    p.add_argument("--weights", choices=["identity", "estimated"], default="identity")
    p.set_defaults(handler=_cmd_test_beta)

    p = sub.add_parser(
        "test-constancy", parents=[data, spline, json_out], help="Test time-invariance"
    )
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--coef", required=True, help="Varying covariates to test")
    p.add_argument("--method", choices=["qrs", "qrs-delta"], default="qrs")
    p.add_argument("--weights", choices=["identity", "estimated"], default="identity")
    p.set_defaults(handler=_cmd_test_constancy)

    p = sub.add_parser(
        "shrink", parents=[data, spline, table_out], help="L1 shrinkage toward constancy"
    )
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--coef", required=True, help="Varying covariates to examine")
    p.add_argument("--lambdas", help="Comma-separated penalty grid (default: automatic)")
    p.set_defaults(handler=_cmd_shrink)

    p = sub.add_parser(
        "assess", parents=[data, spline, table_out], help="Simulate Y* near t* for a Q-Q check"
    )
    p.add_argument("--taus", help="Comma-separated tau grid (default 0.05, ..., 0.95)")
    p.add_argument("--t-star", type=float, required=True, help="Assessment time")
    p.add_argument("--tol", type=float, default=0.5, help="Matching distance around t*")
    p.add_argument("--draws", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--compare-lcc", action="store_true", help="Also assess the LCC model")
    p.set_defaults(handler=_cmd_assess)

    p = sub.add_parser(
        "plot-data", parents=[data, spline, _output_options(("csv",))], help="Curve grid CSV"
    )
    p.add_argument("--tau", default="0.5", help="Quantile level, or a comma-separated grid")
    p.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE)
    p.set_defaults(handler=_cmd_plot_data)

    p = sub.add_parser(
        "report", parents=[data, spline, table_out], help="Hypotheses across quantile levels"
    )
    p.add_argument("--taus", required=True, help="Comma-separated quantile levels")
    p.add_argument(
        "--beta", action="append", help="Constant covariates tested jointly (repeatable)"
    )
    p.add_argument(
        "--constancy", action="append", help="Varying covariates tested jointly (repeatable)"
    )
    p.add_argument("--method", choices=["qrs", "qrs-delta"], default="qrs")
    p.add_argument("--weights", choices=["identity", "estimated"], default="identity")
    p.add_argument("--no-shrink", action="store_true", help="Skip the shrinkage column")
    p.set_defaults(handler=_cmd_report)

    p = sub.add_parser(
        "simulate", parents=[_output_options(("csv", "json"))], help="Monte Carlo studies"
    )
    p.add_argument("--study", choices=["level-power", "mse", "power-curve"], default="level-power")
    p.add_argument("--case", type=int, choices=[1, 2, 3], default=1)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--rho", type=float, default=0.8)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truth", choices=["plvc", "lcc", "constancy"], default="plvc")
    p.add_argument("--hypothesis", choices=["beta", "constancy"], default="beta")
    p.add_argument("--methods", default="qrs,qrs-delta,wald")
    p.add_argument("--weights", choices=["identity", "estimated"], default="identity")
    p.add_argument("--level", type=float, default=settings.significance_level)
    p.add_argument("--knots", default="auto")
    p.add_argument("--degree", type=int, default=settings.default_degree)
    p.add_argument("--target", choices=["beta", "constancy"], default="beta")
    p.add_argument("--values", help="Comma-separated sweep for power-curve")
    p.set_defaults(handler=_cmd_simulate)

    return parser


# =============================================================================
# Entry points
# =============================================================================


def _ledger_params(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in vars(args).items() if k != "handler"}


def run(argv: Sequence[str] | None = None) -> int:
    """
    Parse arguments, dispatch to the library and map failures to exit codes.

    Returns:
        0 on success, 1 on usage errors, 2 on data errors, 3 on numerical failures.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ArgumentError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except SystemExit as e:
        # --help and --version
        return int(e.code or 0)

    command = f"cli.{args.command}"
    try:
        code: int = args.handler(args)
    except ArgumentError as e:
        return _fail(command, args, e, EXIT_USAGE)
    except (DataError, SplineError, FileNotFoundError) as e:
        return _fail(command, args, e, EXIT_DATA)
    except (NumericalError, ReplicateFailureError) as e:
        return _fail(command, args, e, EXIT_NUMERICAL)
    record_run(command, _ledger_params(args), result=code)
    return code


def _fail(command: str, args: argparse.Namespace, error: Exception, code: int) -> int:
    logger.debug(f"{command} failed", exc_info=error)
    sys.stderr.write(f"error: {error}\n")
    record_run(command, _ledger_params(args), error=error)
    return code


def main() -> None:
    """Console entry point."""
    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )
    sys.exit(run())


if __name__ == "__main__":
    main()
