"""
Exact rational constructions of the combinatorial matrices behind the
mean-squared-derivative cost.

Matrices are numpy object arrays holding ``fractions.Fraction`` entries, so
products and inverses stay exact. Row and column indices in the formulas below
are 1-based, as in the closed forms; the arrays themselves are 0-based.
"""
# built-in imports
from fractions import Fraction
from math import comb, factorial
from typing import Callable, Tuple, Union

# third party imports
import numpy as np

# A RatMatrix is a 2-d numpy object array of Fraction values.
RatMatrix = np.ndarray
RationalLike = Union[int, Fraction]

MAX_ORDER = 64


def check_order(n: int, upper: int = MAX_ORDER) -> None:
    """
    Raise ValueError unless 1 <= n <= upper.
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise ValueError(f"Order must be an integer, got {n!r}")
    if n < 1 or n > upper:
        raise ValueError(f"Order {n} out of range [1, {upper}]")


def as_rational(value: Union[RationalLike, str, float]) -> Fraction:
    """
    Convert a value to an exact Fraction. Floats are converted exactly.
    """
    if isinstance(value, Fraction):
        return value
    return Fraction(value)


def rat_matrix(rows: int, cols: int, entry: Callable[[int, int], RationalLike]) -> RatMatrix:
    """
    Build a rows x cols exact matrix from ``entry(i, j)`` with 1-based indices.
    """
    out = np.empty((rows, cols), dtype=object)
    for i in range(1, rows + 1):
        for j in range(1, cols + 1):
            out[i - 1, j - 1] = Fraction(entry(i, j))
    return out


def rat_identity(n: int) -> RatMatrix:
    """Exact identity matrix."""
    return rat_matrix(n, n, lambda i, j: int(i == j))


def rat_diag(values) -> RatMatrix:
    """Exact diagonal matrix with the given entries."""
    values = [Fraction(v) for v in values]
    n = len(values)
    return rat_matrix(n, n, lambda i, j: values[i - 1] if i == j else 0)


def rat_inverse(X: RatMatrix) -> RatMatrix:
    """
    Gauss-Jordan inverse of an exact square matrix.

    Raises ValueError for non-square input and ZeroDivisionError when the
    matrix is singular.
    """
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"matrix is not square (shape = {X.shape})")

    n = X.shape[0]
    XI = np.hstack((X.copy(), rat_identity(n)))

    for i in range(n):
        for j in range(i, n):
            if XI[j, i] != 0:
                if i != j:
                    XI[[i, j]] = XI[[j, i]]
                break
        else:
            raise ZeroDivisionError("matrix is singular")

        XI[i, :] /= XI[i, i]
        for j in range(n):
            if j != i and XI[j, i] != 0:
                XI[j, :] -= XI[j, i] * XI[i, :]

    return XI[:, n:]


def rat_det(X: RatMatrix) -> Fraction:
    """Exact determinant by fraction-preserving elimination."""
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"matrix is not square (shape = {X.shape})")
    W = X.copy()
    n = W.shape[0]
    det = Fraction(1)
    for i in range(n):
        pivot = next((j for j in range(i, n) if W[j, i] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != i:
            W[[i, pivot]] = W[[pivot, i]]
            det = -det
        det *= W[i, i]
        for j in range(i + 1, n):
            if W[j, i] != 0:
                W[j, :] -= (W[j, i] / W[i, i]) * W[i, :]
    return det


def symmetric_part(X: RatMatrix) -> RatMatrix:
    """(X + X^T) / 2, exact."""
    return (X + X.T) * Fraction(1, 2)


def is_zero(X: RatMatrix) -> bool:
    """True when every entry is exactly zero."""
    return all(entry == 0 for entry in X.flat)


def max_abs(X: RatMatrix) -> Fraction:
    """Largest absolute entry, exact."""
    return max((abs(Fraction(entry)) for entry in X.flat), default=Fraction(0))


def to_float(X: RatMatrix) -> np.ndarray:
    """Convert an exact matrix to float64."""
    return np.array([[float(entry) for entry in row] for row in X], dtype=float)


def falling_factorial(m: int, k: int) -> int:
    """
    m (m-1) ... (m-k+1); zero when a factor vanishes, 1 when k == 0.
    """
    out = 1
    for r in range(k):
        out *= m - r
    return out


# Combinatorial matrices


def build_A(n: int) -> RatMatrix:
    """
    A_{k+1,i} = k! C(n+i-1, k): row k holds the k-th falling factorials of n..2n-1.
    """
    check_order(n)
    return rat_matrix(n, n, lambda r, i: factorial(r - 1) * comb(n + i - 1, r - 1))


def build_B(n: int) -> RatMatrix:
    """
    B_{ki} = (-1)^{n-k} (n+i-1)!/(k+i-n-1)! when k+i >= n+1, zero otherwise.
    """
    check_order(n)

    def entry(k: int, i: int) -> int:
        if k + i < n + 1:
            return 0
        return (-1) ** (n - k) * (factorial(n + i - 1) // factorial(k + i - n - 1))

    return rat_matrix(n, n, entry)


def build_B_inverse_closed(n: int) -> RatMatrix:
    """
    Closed-form inverse of B.
    """
    check_order(n)

    def entry(k: int, i: int) -> Fraction:
        if k + i > n + 1:
            return Fraction(0)
        return Fraction((-1) ** (k - 1), factorial(n + k - 1) * factorial(n + 1 - k - i))

    return rat_matrix(n, n, entry)


def build_LU(n: int) -> Tuple[RatMatrix, RatMatrix, RatMatrix, RatMatrix]:
    """
    Closed-form factors of A = LU and their inverses.

    Returns (L, U, L^{-1}, U^{-1}).
    """
    check_order(n)

    def lower(k: int, j: int) -> Fraction:
        if j > k:
            return Fraction(0)
        return Fraction(comb(k - 1, j - 1) * factorial(n), factorial(n - k + j))

    def upper(i: int, j: int) -> Fraction:
        if j < i:
            return Fraction(0)
        return Fraction(factorial(j - 1), factorial(j - i))

    def lower_inv(j: int, i: int) -> Fraction:
        if i > j:
            return Fraction(0)
        return Fraction(
            (-1) ** (j - i) * factorial(j - 1) * comb(n + j - i - 1, j - i),
            factorial(i - 1),
        )

    def upper_inv(i: int, j: int) -> Fraction:
        if j < i:
            return Fraction(0)
        return Fraction((-1) ** (i + j), factorial(i - 1) * factorial(j - i))

    return (
        rat_matrix(n, n, lower),
        rat_matrix(n, n, upper),
        rat_matrix(n, n, lower_inv),
        rat_matrix(n, n, upper_inv),
    )


def build_M(n: int) -> RatMatrix:
    """
    M = B A^{-1}, assembled as B U^{-1} L^{-1} from the closed-form factors.
    """
    _, _, Linv, Uinv = build_LU(n)
    return build_B(n).dot(Uinv).dot(Linv)


def build_M_inverse_closed(n: int) -> RatMatrix:
    """
    (A B^{-1})_{ij} = 1 / ((2n+1-i-j) (n-i)! (n-j)!).
    """
    check_order(n)
    return rat_matrix(
        n, n,
        lambda i, j: Fraction(1, (2 * n + 1 - i - j) * factorial(n - i) * factorial(n - j)),
    )


def build_H0(n: int) -> RatMatrix:
    """(H_0)_{ij} = 1 / ((n-i)! (n-j)!)."""
    check_order(n)
    return rat_matrix(n, n, lambda i, j: Fraction(1, factorial(n - i) * factorial(n - j)))


def build_Q(n: int) -> RatMatrix:
    """Subdiagonal shift: Q_{i+1,i} = 1."""
    check_order(n)
    return rat_matrix(n, n, lambda i, j: int(i == j + 1))


def build_D(n: int) -> RatMatrix:
    """Projection on the last block: diag(0, ..., 0, 1)."""
    check_order(n)
    return rat_matrix(n, n, lambda i, j: int(i == j == n))


# Time-dependent matrices evaluated at an exact sample t


def _positive(t: RationalLike) -> Fraction:
    t = as_rational(t)
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    return t


def build_H1(n: int, t: RationalLike) -> RatMatrix:
    """H_1(t) = diag(1, t, ..., t^{n-1})."""
    check_order(n)
    t = _positive(t)
    return rat_matrix(n, n, lambda i, j: t ** (i - 1) if i == j else 0)


def build_H1_prime(n: int, t: RationalLike) -> RatMatrix:
    """Derivative of H_1 in t."""
    check_order(n)
    t = _positive(t)
    return rat_matrix(n, n, lambda i, j: (i - 1) * t ** (i - 2) if i == j and i > 1 else 0)


def build_H2(n: int, t: RationalLike) -> RatMatrix:
    """(H_2)_{ij} = t^{j-1}/(j-i)! for j >= i."""
    check_order(n)
    t = _positive(t)
    return rat_matrix(n, n, lambda i, j: t ** (j - 1) / factorial(j - i) if j >= i else 0)


def build_H2_prime(n: int, t: RationalLike) -> RatMatrix:
    """Derivative of H_2 in t."""
    check_order(n)
    t = _positive(t)
    return rat_matrix(
        n, n,
        lambda i, j: (j - 1) * t ** (j - 2) / factorial(j - i) if j >= i and j > 1 else 0,
    )


def build_H(n: int, t: RationalLike) -> RatMatrix:
    """
    Closed form of H_2^{-1} H_1: H_{ij} = (-t)^{j-i}/(j-i)! for j >= i.
    """
    check_order(n)
    t = _positive(t)
    return rat_matrix(n, n, lambda i, j: (-t) ** (j - i) / factorial(j - i) if j >= i else 0)


def build_P(n: int, t: RationalLike) -> RatMatrix:
    """
    Closed form of (H_2^T)^{-1}: P_{lj} = (-1)^{l-j} / ((l-j)! t^{j-1}) for l >= j.
    """
    check_order(n)
    t = _positive(t)
    return rat_matrix(
        n, n,
        lambda l, j: Fraction((-1) ** (l - j), factorial(l - j)) / t ** (j - 1) if l >= j else 0,
    )


def build_K(n: int, t: RationalLike) -> RatMatrix:
    """
    Closed form of t^{2n-2} (H_2^T M H_1)^{-1}:
    K_{ij} = (-1)^{n-j} t^{2n-i-j} / (2n-i-j+1)!.
    """
    check_order(n)
    t = _positive(t)
    return rat_matrix(
        n, n,
        lambda i, j: (-1) ** (n - j) * t ** (2 * n - i - j) / factorial(2 * n - i - j + 1),
    )


def build_T_matrices(n: int, t: RationalLike,
                     M: RatMatrix = None) -> Tuple[RatMatrix, RatMatrix, RatMatrix]:
    """
    The three auxiliary matrices (T1, T2, T3) whose structure gives the PDE for
    the cost. T1 and T3 are anti-symmetric, T2 vanishes.
    """
    check_order(n)
    t = _positive(t)
    if M is None:
        M = build_M(n)

    H1 = build_H1(n, t)
    H1p = build_H1_prime(n, t)
    H2 = build_H2(n, t)
    H2p = build_H2_prime(n, t)
    Q = build_Q(n)
    D = build_D(n)
    H0 = build_H0(n)
    scale = t ** (2 - 2 * n)
    odd = 2 * n - 1

    T1 = (odd * H1.T.dot(M).dot(H1)
          - 2 * t * H1p.T.dot(M).dot(H1)
          - scale * H1.T.dot(M).dot(H2).dot(D).dot(H2.T).dot(M).dot(H1))

    T2 = ((1 - 2 * n) * H2.T.dot(M).dot(H1)
          + t * (H2p.T.dot(M).dot(H1) + H2.T.dot(M).dot(H1p))
          - t * Q.dot(H2.T).dot(M).dot(H1)
          + H2.T.dot(M).dot(H0).dot(M).dot(H1))

    T3 = (odd * H2.T.dot(M).dot(H2)
          - 2 * t * H2p.T.dot(M).dot(H2)
          + 2 * t * Q.dot(H2.T).dot(M).dot(H2)
          - scale * H2.T.dot(M).dot(H2).dot(D).dot(H2.T).dot(M).dot(H2))

    return T1, T2, T3
