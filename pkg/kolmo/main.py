"""
Main entry point for the kolmo command line.

Subcommands:
    identities  exact identity suite for orders 1..n_max
    cost        one cost evaluation with gradients and PDE residual
    kernel      fundamental solution value, normalisation and Dirac-limit sweeps
    jko         scheme run from a config file, with monitors and convergence table
    view        browse a JSON report in the terminal

Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.
"""
# built-in imports
import argparse
import logging
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional

# third party imports
import numpy as np

# kolmo imports
from kolmo.config import ConfigError, ConfigLoader, RunConfig, default_h_list
from kolmo.config_writer import save_config
from kolmo.cost_kernel import CostEvaluator, identity_suite, kramers_comparison
from kolmo.fundamental_solution import DEFAULT_DIRAC_TIMES, Kernel
from kolmo.grid import GridError, TensorGrid
from kolmo.jko_scheme import (
    MissingReferenceError,
    MonitorError,
    PotentialSpec,
    convergence_report,
    energy_dissipation_table,
    equicontinuity_monitor,
    euler_lagrange_terms,
    gaussian_measure,
    interpolate,
    run_scheme,
    weak_form_residual,
)
from kolmo.jko_scheme.diagnostics import has_reference
from kolmo.observables import Bump, Constant, Gaussian
from kolmo.optimal_transport import ConvergenceError
from kolmo.utils.checks import (
    check_cost_report,
    check_identity_report,
    check_jko_report,
    check_kernel_report,
)
from kolmo.utils.parallel import resolve_thread_count
from kolmo.utils.serialization import dumps, write_density_csv, write_json

logger = logging.getLogger("kolmo")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def parse_vector(text: str) -> List[float]:
    """Comma-separated floats, e.g. '0.3,-0.2'."""
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"Not a comma-separated list of numbers: {text!r}") from e


def parse_time(text: str) -> Fraction:
    """A rational time such as '1/2' or '3'."""
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"Not a rational number: {text!r}") from e


def configure_logging(verbose: bool, quiet: bool) -> None:
    """Root logger on stderr: DEBUG with -v, WARNING with -q, INFO otherwise."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def emit(report: Dict[str, Any], out_dir: Optional[str], name: str) -> None:
    """Write the report into out_dir, or print it to stdout."""
    if out_dir:
        path = write_json(report, Path(out_dir) / name)
        logger.info("Report written to %s", path)
    else:
        sys.stdout.write(dumps(report))


def finish(ok: bool, message: str) -> int:
    """Log the verdict and return the exit code."""
    if ok:
        logger.info(message)
        return EXIT_OK
    logger.error(message)
    return EXIT_FAILED


# Commands

def cmd_identities(args: argparse.Namespace) -> int:
    """Run the exact identity suite for n = 1..n_max."""
    if args.n_max < 1:
        raise ValueError(f"--n-max must be at least 1, got {args.n_max}")
    t_values = args.t or [Fraction(1), Fraction(1, 2), Fraction(3)]
    corrupt = args.corrupt if args.self_test else None
    started = time.perf_counter()
    reports = []
    for n in range(1, args.n_max + 1):
        report = identity_suite(n, args.d, t_values, corrupt=corrupt)
        logger.info("n=%d: %d checks, %s", n, len(report.checks),
                    "passed" if report.passed else f"{len(report.failures())} failed")
        reports.append(report.to_dict())
    logger.info("Identity suite finished in %.2fs", time.perf_counter() - started)
    result = {
        "command": "identities",
        "n_max": args.n_max,
        "d": args.d,
        "t_values": [str(t) for t in t_values],
        "self_test": bool(args.self_test),
        "corrupted": corrupt,
        "orders": reports,
    }
    ok, message = check_identity_report(result)
    result["passed"] = ok
    emit(result, args.out_dir, "identities.json")
    return finish(ok, message)


def cmd_cost(args: argparse.Namespace) -> int:
    """Evaluate the cost at one point with all diagnostics."""
    evaluator = CostEvaluator(args.n, args.d, t_max=max(1.0, args.t))
    x, y, t = args.x, args.y, args.t
    report = {
        "command": "cost",
        "n": args.n,
        "d": args.d,
        "t": t,
        "x": x,
        "y": y,
        "cost": evaluator.cost(t, x, y),
        "grad_x": evaluator.cost_grad_x(t, x, y),
        "grad_y": evaluator.cost_grad_y(t, x, y),
        "pde_residual": evaluator.verify_cost_pde(t, x, y),
        "pde_tolerance": evaluator.pde_tolerance(t, x, y),
        "free_flow": evaluator.free_flow(t, x),
        "comparability_constant": evaluator.K_bound,
        "comparability_holds": evaluator.comparability_holds(t, x, y),
    }
    if args.n == 2:
        report["kramers"] = kramers_comparison(t, x, y, args.d)
    ok, message = check_cost_report(report)
    report["passed"] = ok
    emit(report, args.out_dir, "cost.json")
    return finish(ok, message)


def _test_function(name: str, centre: np.ndarray, radius: float):
    if name == "constant":
        return Constant(1.0)
    if name == "gaussian":
        return Gaussian(centre, 1.0 / radius ** 2)
    return Bump(centre, radius)


def cmd_kernel(args: argparse.Namespace) -> int:
    """Evaluate Phi and, optionally, the normalisation and Dirac-limit sweeps."""
    kernel = Kernel(args.n, args.d)
    y = np.asarray(args.y, dtype=float)
    report: Dict[str, Any] = {
        "command": "kernel",
        "n": args.n,
        "d": args.d,
        "t": args.t,
        "beta": kernel.beta,
        "phi": kernel.phi(args.t, args.x, args.y),
        "pde_residual": kernel.pde_residual(args.t, args.x, args.y) if args.t >= 1e-3 else None,
    }
    if args.normalize_check:
        report["normalization"] = {
            "value": kernel.normalization_check(args.t, y, nodes=args.nodes),
            "nodes": args.nodes,
        }
    if args.dirac_check:
        phi = _test_function(args.test_function, y, args.radius)
        report["dirac"] = kernel.dirac_limit_check(
            y, args.times or DEFAULT_DIRAC_TIMES, phi, threads=resolve_thread_count(args.threads))
        report["dirac"]["test_function"] = args.test_function
    ok, message = check_kernel_report(report)
    report["passed"] = ok
    emit(report, args.out_dir, "kernel.json")
    return finish(ok, message)


def _default_bump(grid: TensorGrid) -> Bump:
    lows = np.array([axis[0] for axis in grid.axes])
    highs = np.array([axis[-1] for axis in grid.axes])
    return Bump(0.5 * (lows + highs), 0.25 * (highs - lows))


def run_jko(config: RunConfig, threads: int) -> Dict[str, Any]:
    """Run the configured scheme and collect every table; density snapshots go to out_dir."""
    out_dir = Path(config.out_dir)
    grid = TensorGrid.from_bounds(config.grid.bounds, config.grid.cells)
    rho0 = gaussian_measure(grid, config.initial.mean, config.initial.variances)
    V = PotentialSpec.from_config(config.potential, config.n, config.d)
    V.check_assumptions(grid.points, seed=config.seed)

    state = run_scheme(rho0, config.h, config.T, V, config.transport)
    for t in config.snapshots or (config.T,):
        t = min(t, state.final_time)
        write_density_csv(interpolate(state, t), out_dir / f"density_t{t:.6g}.csv")

    bump = _default_bump(grid)
    report: Dict[str, Any] = {
        "command": "jko",
        "config": config.to_dict(),
        "run": state.summary(),
        "energy_dissipation": energy_dissipation_table(state),
        "equicontinuity": equicontinuity_monitor(state, threads=threads),
        "euler_lagrange": euler_lagrange_terms(
            state.measures[-2], state.measures[-1], state.last_plan, config.h, bump, V),
        "weak_form": weak_form_residual(state, bump),
    }
    if has_reference(V):
        try:
            report["convergence"] = convergence_report(
                rho0, V, config.T, default_h_list(config), config.transport, threads=threads)
        except (MissingReferenceError, GridError) as e:
            logger.warning("Convergence table skipped: %s", e)
            report["convergence"] = {"skipped": str(e)}
    else:
        logger.warning("No reference solution for this potential; convergence table skipped")
        report["convergence"] = {"skipped": "missing reference"}
    return report


def cmd_jko(args: argparse.Namespace) -> int:
    """Scheme run from a config file."""
    config = ConfigLoader(Path(args.config)).load()
    config = config.with_overrides(seed=args.seed, out_dir=args.out_dir, threads=args.threads)
    threads = resolve_thread_count(config.threads)
    out_dir = Path(config.out_dir)
    save_config(config, out_dir / "config.yaml")
    try:
        report = run_jko(config, threads)
    except (ConvergenceError, MonitorError) as e:
        step = getattr(e, "step", None)
        write_json({"command": "jko", "config": config.to_dict(), "error": str(e), "step": step},
                   out_dir / "summary.json")
        logger.error("Scheme run aborted at step %s: %s", step, e)
        return EXIT_FAILED
    ok, message = check_jko_report(report)
    report["passed"] = ok
    write_json(report, out_dir / "summary.json")
    logger.info("Summary written to %s", out_dir / "summary.json")
    return finish(ok, message)


def cmd_view(args: argparse.Namespace) -> int:
    """Open the terminal report viewer."""
    # textual is only needed here
    from kolmo.ui.app import ReportApp  # pylint: disable=import-outside-toplevel

    path = Path(args.report)
    if not path.exists():
        raise FileNotFoundError(f"Report not found: {path}")
    ReportApp(path).run()
    return EXIT_OK


# Parser

def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subparser per command."""
    parser = argparse.ArgumentParser(
        prog="kolmo",
        description="Mean-squared-derivative cost, Kolmogorov kernels and minimizing-movement runs")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")
    parser.add_argument("--seed", type=int, default=None, help="Seed for all sampling")
    parser.add_argument("--out-dir", default=None, help="Directory for reports (default: stdout)")
    parser.add_argument("--threads", type=int, default=None,
                        help="Worker threads (default: $KOLMO_THREADS or 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identities", help="Exact identity suite")
    p.add_argument("--n-max", type=int, default=6, help="Largest order to check")
    p.add_argument("--d", type=int, default=1, help="Block dimension")
    p.add_argument("--t", type=parse_time, action="append",
                   help="Rational sample time (repeatable; default 1, 1/2, 3)")
    p.add_argument("--self-test", action="store_true",
                   help="Corrupt one matrix and require the suite to notice")
    p.add_argument("--corrupt", default="M", help="Matrix corrupted by --self-test")
    p.set_defaults(func=cmd_identities)

    vector_help = "comma-separated values; use --x=-1,2 for a leading minus"
    p = sub.add_parser("cost", help="Evaluate the cost at one point")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--x", type=parse_vector, required=True, help=vector_help)
    p.add_argument("--y", type=parse_vector, required=True, help=vector_help)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("kernel", help="Evaluate the fundamental solution")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--x", type=parse_vector, required=True, help=vector_help)
    p.add_argument("--y", type=parse_vector, required=True, help=vector_help)
    p.add_argument("--normalize-check", action="store_true", help="Gauss-Hermite normalisation")
    p.add_argument("--nodes", type=int, default=8, help="Gauss-Hermite nodes per axis")
    p.add_argument("--dirac-check", action="store_true", help="Dirac-limit sweep at y")
    p.add_argument("--times", type=parse_vector, default=None, help="Sweep times for --dirac-check")
    p.add_argument("--test-function", choices=("bump", "gaussian", "constant"), default="bump")
    p.add_argument("--radius", type=float, default=1.5, help="Test function radius")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("jko", help="Run the scheme from a config file")
    p.add_argument("config", help="YAML or JSON run config")
    p.set_defaults(func=cmd_jko)

    p = sub.add_parser("view", help="Browse a JSON report")
    p.add_argument("report", help="Report written by another command")
    p.set_defaults(func=cmd_view)
    return parser


def main(argv: Optional[List[str]] = None) -> None:
    """
    Entry point for the kolmo command line.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        code = args.func(args)
    except ConfigError as e:
        logger.error("Invalid configuration: %s", e)
        code = EXIT_USAGE
    except (ValueError, FileNotFoundError, argparse.ArgumentTypeError) as e:
        logger.error("%s", e)
        code = EXIT_USAGE
    sys.exit(code)


if __name__ == "__main__":
    main()
