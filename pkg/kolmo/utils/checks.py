"""
Pass/fail summaries of command reports.
"""
from typing import Any, Dict, Tuple

EDI_TOLERANCE = 1e-7
NORMALIZATION_TOLERANCE = 1e-6
DIRAC_TOLERANCE = 1e-3
RATE_SPREAD = 5.0


def check_identity_report(report: Dict[str, Any]) -> Tuple[bool, str]:
    """
    Check an identities report.

    Returns:
        Tuple of (success: bool, message: str)
    """
    failures = [f"n={entry['n']}: {check['name']}"
                for entry in report.get("orders", [])
                for check in entry.get("checks", [])
                if not check["passed"]]
    if report.get("self_test"):
        if failures:
            return True, f"Injected corruption detected ({len(failures)} failing checks)"
        return False, "Injected corruption was not detected"
    if failures:
        return False, "Failed identities: " + "; ".join(failures)
    return True, f"All identities hold for {len(report.get('orders', []))} orders"


def check_cost_report(report: Dict[str, Any]) -> Tuple[bool, str]:
    """
    Check a single cost evaluation.

    Returns:
        Tuple of (success: bool, message: str)
    """
    residual = abs(report["pde_residual"])
    if residual > report["pde_tolerance"]:
        return False, f"Cost PDE residual {residual:.3e} above {report['pde_tolerance']:.3e}"
    return True, "Cost PDE residual within tolerance"


def check_kernel_report(report: Dict[str, Any]) -> Tuple[bool, str]:
    """
    Check a kernel evaluation and its optional sweeps.

    Returns:
        Tuple of (success: bool, message: str)
    """
    problems = []
    normalization = report.get("normalization")
    if normalization is not None and abs(normalization["value"] - 1.0) > NORMALIZATION_TOLERANCE:
        problems.append(f"normalisation {normalization['value']!r}")
    dirac = report.get("dirac")
    if dirac is not None:
        if not dirac["monotone"]:
            problems.append("Dirac-limit errors are not monotone")
        if dirac["final_error"] is None or dirac["final_error"] > DIRAC_TOLERANCE:
            problems.append(f"Dirac-limit error {dirac['final_error']!r} above {DIRAC_TOLERANCE}")
    if problems:
        return False, "; ".join(problems)
    return True, "Kernel checks passed"


def check_jko_report(report: Dict[str, Any]) -> Tuple[bool, str]:
    """
    Check a scheme run: energy inequality on every step, bounded equicontinuity
    ratios and, when a convergence table was computed, monotone errors with a
    bounded spread of sum W / h across the step sizes.

    Returns:
        Tuple of (success: bool, message: str)
    """
    problems = []
    slack = report["energy_dissipation"]["min_edi_slack"]
    if slack is None or slack < -EDI_TOLERANCE:
        problems.append(f"energy inequality violated (slack {slack!r})")
    if not report["equicontinuity"]["bounded"]:
        problems.append("equicontinuity ratios unbounded")
    convergence = report.get("convergence") or {}
    if "rows" in convergence:
        if not convergence["monotone"]:
            errors = [row["l1_error"] for row in convergence["rows"]]
            problems.append(f"errors do not decrease with h ({errors!r})")
        spread = convergence["transport_rate_spread"]
        if spread is None or spread >= RATE_SPREAD:
            problems.append(f"sum W / h spread {spread!r} not below {RATE_SPREAD:g}")
    if problems:
        return False, "; ".join(problems)
    return True, "Scheme monitors within bounds"


REPORT_CHECKS = {
    "identities": check_identity_report,
    "cost": check_cost_report,
    "kernel": check_kernel_report,
    "jko": check_jko_report,
}


def check_report(report: Dict[str, Any]) -> Tuple[bool, str]:
    """
    Check any saved report by its "command" field.

    Returns:
        Tuple of (success: bool, message: str)
    """
    command = report.get("command")
    if "error" in report:
        return False, f"Run aborted: {report['error']}"
    checker = REPORT_CHECKS.get(command)
    if checker is None:
        return False, f"Unknown report command: {command!r}"
    return checker(report)
