"""
Exact identity suite for the cost-function matrices.

Every identity is checked in rational arithmetic at a handful of rational
time samples. They are polynomial in t, so agreement at enough sample points
certifies them; here the default samples are t in {1, 1/2, 3}.
"""
# built-in imports
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Any, Dict, Iterable, List, Optional

# kolmo imports
from kolmo.cost_kernel.exact import (
    RatMatrix, as_rational, build_A, build_B, build_B_inverse_closed, build_D,
    build_H, build_H0, build_H1, build_H2, build_H2_prime, build_K, build_LU,
    build_M, build_M_inverse_closed, build_P, build_Q, build_T_matrices,
    check_order, falling_factorial, is_zero, max_abs, rat_diag, rat_identity,
)

logger = logging.getLogger(__name__)

MAX_SUITE_ORDER = 12
DEFAULT_T_SAMPLES = (Fraction(1), Fraction(1, 2), Fraction(3))
CORRUPTIBLE = ("A", "B", "B_inverse", "L", "U", "M")


@dataclass
class IdentityCheck:
    """Outcome of a single exact identity."""
    name: str
    n: int
    passed: bool
    t: Optional[Fraction] = None
    residual: Fraction = Fraction(0)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON-friendly dictionary."""
        return {
            "name": self.name,
            "n": self.n,
            "t": None if self.t is None else str(self.t),
            "passed": self.passed,
            "residual": str(self.residual),
        }


@dataclass
class IdentityReport:
    """All identity checks for one order n."""
    n: int
    d: int
    checks: List[IdentityCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """True when every check passed exactly."""
        return all(check.passed for check in self.checks)

    def failures(self) -> List[IdentityCheck]:
        """Checks that did not hold."""
        return [check for check in self.checks if not check.passed]

    def add(self, name: str, residual: RatMatrix, t: Optional[Fraction] = None) -> None:
        """Record a check whose residual matrix must vanish identically."""
        self.checks.append(IdentityCheck(
            name=name, n=self.n, t=t, passed=is_zero(residual), residual=max_abs(residual),
        ))

    def add_scalar(self, name: str, residual: Fraction, t: Optional[Fraction] = None) -> None:
        """Record a check whose scalar residual must vanish."""
        residual = Fraction(residual)
        self.checks.append(IdentityCheck(
            name=name, n=self.n, t=t, passed=residual == 0, residual=abs(residual),
        ))

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON-friendly dictionary."""
        return {
            "n": self.n,
            "d": self.d,
            "passed": self.passed,
            "checks": [check.to_dict() for check in self.checks],
        }


def _corrupt(matrices: Dict[str, RatMatrix], name: Optional[str]) -> None:
    if name is None:
        return
    if name not in CORRUPTIBLE:
        raise ValueError(f"Unknown matrix to corrupt: {name!r} (expected one of {CORRUPTIBLE})")
    target = matrices[name].copy()
    target[0, 0] += Fraction(1, 10 ** 6)
    matrices[name] = target


def binomial_alternating_residuals(n: int) -> List[Fraction]:
    """
    sum_{j<=k} C(n,j) (-1)^j - (-1)^k C(n-1,k) for k = 0..n-1.
    """
    return [
        Fraction(sum(comb(n, j) * (-1) ** j for j in range(k + 1)) - (-1) ** k * comb(n - 1, k))
        for k in range(n)
    ]


def falling_factorial_residuals(n: int) -> List[Fraction]:
    """
    For 1 <= j <= k <= 2n with k - j <= n:
    sum_i (-1)^{i+j}/((i-1)!(j-i)!) (n+i-1)!/(n+i-k)!  -  C(k-1,j-1) n!/(n-(k-j))!.
    """
    out = []
    for k in range(1, 2 * n + 1):
        for j in range(1, k + 1):
            if k - j > n:
                continue
            lhs = sum(
                Fraction((-1) ** (i + j) * falling_factorial(n + i - 1, k - 1),
                         factorial(i - 1) * factorial(j - i))
                for i in range(1, j + 1)
            )
            rhs = comb(k - 1, j - 1) * falling_factorial(n, k - j)
            out.append(lhs - rhs)
    return out


def identity_suite(n: int, d: int = 1,
                   t_values: Iterable = DEFAULT_T_SAMPLES,
                   corrupt: Optional[str] = None) -> IdentityReport:
    """
    Run every exact identity for order n.

    Failures are report entries, never exceptions. ``corrupt`` names a matrix
    (one of CORRUPTIBLE) to perturb before checking, for fault-injection runs.
    """
    check_order(n, MAX_SUITE_ORDER)
    if d < 1:
        raise ValueError(f"Dimension must be positive, got {d}")

    L, U, Linv, Uinv = build_LU(n)
    matrices = {
        "A": build_A(n),
        "B": build_B(n),
        "B_inverse": build_B_inverse_closed(n),
        "L": L,
        "U": U,
        "M": build_M(n),
    }
    _corrupt(matrices, corrupt)
    A, B, Binv, L, U, M = (matrices[key] for key in CORRUPTIBLE)

    I = rat_identity(n)
    H0 = build_H0(n)
    Q = build_Q(n)
    D = build_D(n)
    Minv_closed = build_M_inverse_closed(n)
    odd_diag = rat_diag([2 * (n - i) + 1 for i in range(1, n + 1)])

    report = IdentityReport(n=n, d=d)
    report.add("B_inverse_closed", B.dot(Binv) - I)
    report.add("LU_product", L.dot(U) - A)
    report.add("L_inverse_closed", L.dot(Linv) - I)
    report.add("U_inverse_closed", U.dot(Uinv) - I)
    report.add("A_inverse_from_LU", Uinv.dot(Linv).dot(A) - I)
    report.add("M_times_A", M.dot(A) - B)
    report.add("M_inverse_closed", M.dot(Minv_closed) - I)
    report.add("A_B_inverse_closed", A.dot(Binv) - Minv_closed)
    report.add_scalar("M_nn", M[n - 1, n - 1] - n * n)

    T11 = Minv_closed.dot(odd_diag) - H0
    report.add("T11_antisymmetric", T11 + T11.T)

    for k, residual in enumerate(binomial_alternating_residuals(n)):
        report.add_scalar(f"binomial_alternating[k={k}]", residual)
    report.add_scalar(
        "falling_factorial_identity",
        max((abs(r) for r in falling_factorial_residuals(n)), default=Fraction(0)),
    )

    for t in t_values:
        t = as_rational(t)
        H1 = build_H1(n, t)
        H2 = build_H2(n, t)
        H2p = build_H2_prime(n, t)
        P = build_P(n, t)

        T1, T2, T3 = build_T_matrices(n, t, M=M)
        report.add("T1_antisymmetric", T1 + T1.T, t)
        report.add("T2_zero", T2, t)
        report.add("T3_antisymmetric", T3 + T3.T, t)

        trace = sum(D.dot(H2.T).dot(M).dot(H2).diagonal())
        report.add_scalar("trace_D_H2T_M_H2", d * trace - n * n * d * t ** (2 * (n - 1)), t)

        report.add("H0_relation", H2.dot(D).dot(H2.T) - t ** (2 * (n - 1)) * H0, t)
        report.add("H2T_inverse_closed", H2.T.dot(P) - I, t)

        bracket = (2 * n - 1) * I - 2 * t * P.dot(H2p.T) + 2 * t * P.dot(Q).dot(H2.T)
        report.add("diag_relation", bracket - odd_diag, t)

        T31 = Minv_closed.dot(bracket) - H0
        T31_closed = Minv_closed.copy()
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                T31_closed[i - 1, j - 1] = Fraction(
                    i - j, (2 * n + 1 - i - j) * factorial(n - i) * factorial(n - j))
        report.add("T31_closed", T31 - T31_closed, t)

        report.add("H_closed", H2.dot(build_H(n, t)) - H1, t)

        K = build_K(n, t)
        report.add("K_closed", t ** (2 - 2 * n) * K.dot(H2.T).dot(M).dot(H1) - I, t)

    if report.passed:
        logger.debug("identity suite n=%d: %d checks passed", n, len(report.checks))
    else:
        logger.info("identity suite n=%d: %d of %d checks failed",
                    n, len(report.failures()), len(report.checks))
    return report
