"""
Exact constructions and the identity suite.
"""
from fractions import Fraction

import numpy as np
import pytest

from kolmo.cost_kernel import (
    build_A, build_B, build_B_inverse_closed, build_LU, build_M, build_T_matrices,
    identity_suite,
)
from kolmo.cost_kernel.exact import (
    build_M_inverse_closed, is_zero, rat_det, rat_identity, rat_inverse, symmetric_part,
)


def as_fractions(rows):
    return np.array([[Fraction(v) for v in row] for row in rows], dtype=object)


def assert_exact(actual, expected):
    assert actual.shape == expected.shape
    assert is_zero(actual - expected), f"{actual} != {expected}"


@pytest.mark.parametrize("n, expected", [
    (1, [[1]]),
    (2, [[1, 1], [2, 3]]),
    (3, [[1, 1, 1], [3, 4, 5], [6, 12, 20]]),
])
def test_build_A_small_orders(n, expected):
    assert_exact(build_A(n), as_fractions(expected))


def test_build_B_small_orders():
    assert_exact(build_B(1), as_fractions([[1]]))
    assert_exact(build_B(2), as_fractions([[0, -6], [2, 6]]))


@pytest.mark.parametrize("n", range(1, 9))
def test_build_B_zero_block(n):
    B = build_B(n)
    for k in range(1, n + 1):
        for i in range(1, n + 1):
            if k + i < n + 1:
                assert B[k - 1, i - 1] == 0


def test_B_inverse_closed_form():
    expected = as_fractions([[Fraction(1, 2), Fraction(1, 2)], [Fraction(-1, 6), 0]])
    assert_exact(build_B_inverse_closed(2), expected)
    assert_exact(rat_inverse(build_B(2)), expected)
    assert_exact(build_B(5).dot(build_B_inverse_closed(5)), rat_identity(5))


def test_lu_factors_n2():
    L, U, _, _ = build_LU(2)
    assert_exact(U, as_fractions([[1, 1], [0, 1]]))
    assert_exact(L, as_fractions([[1, 0], [2, 1]]))
    assert_exact(L.dot(U), build_A(2))


@pytest.mark.parametrize("n", range(1, 11))
def test_lu_product_and_inverse(n):
    L, U, Linv, Uinv = build_LU(n)
    A = build_A(n)
    assert_exact(L.dot(U), A)
    assert_exact(Uinv.dot(Linv).dot(A), rat_identity(n))


def test_build_M_known_orders():
    assert_exact(build_M(1), as_fractions([[1]]))
    M = build_M(2)
    assert_exact(M, as_fractions([[12, -6], [-6, 4]]))
    assert M[1, 1] == 4


@pytest.mark.parametrize("n", range(1, 8))
def test_M_inverse_closed_form(n):
    assert_exact(build_M(n).dot(build_M_inverse_closed(n)), rat_identity(n))


def test_det_of_symmetric_part_n2():
    assert rat_det(symmetric_part(build_M(2))) == 12


@pytest.mark.parametrize("n", range(1, 13))
def test_symmetric_part_positive_definite(n):
    # Sylvester: every leading principal minor is positive
    Ms = symmetric_part(build_M(n))
    for k in range(1, n + 1):
        assert rat_det(Ms[:k, :k]) > 0


def test_T2_vanishes_n2_t1():
    _, T2, _ = build_T_matrices(2, 1)
    assert is_zero(T2)


def test_T1_antisymmetric_n3_half():
    T1, _, _ = build_T_matrices(3, Fraction(1, 2))
    assert is_zero(T1 + T1.T)


@pytest.mark.parametrize("n", range(1, 11))
def test_identity_suite_passes_exactly(n):
    report = identity_suite(n)
    assert report.passed, [c.name for c in report.failures()]
    assert all(check.residual == 0 for check in report.checks)


def test_identity_suite_includes_T31_closed_form():
    report = identity_suite(4, t_values=[Fraction(1, 2)])
    names = {check.name for check in report.checks if check.passed}
    assert "T31_closed" in names
    assert "K_closed" in names
    assert "diag_relation" in names


def test_identity_suite_block_dimension():
    assert identity_suite(3, d=2).passed


@pytest.mark.parametrize("matrix", ["A", "B", "B_inverse", "L", "U", "M"])
def test_corruption_is_detected(matrix):
    report = identity_suite(3, corrupt=matrix)
    assert not report.passed
    assert report.failures()


def test_unknown_corruption_target():
    with pytest.raises(ValueError):
        identity_suite(2, corrupt="Z")


@pytest.mark.parametrize("n", [0, 65, -1])
def test_order_out_of_range(n):
    with pytest.raises(ValueError):
        build_A(n)


def test_suite_order_cap():
    with pytest.raises(ValueError):
        identity_suite(13)


def test_report_serialises_fractions_as_text():
    data = identity_suite(2, t_values=[Fraction(1, 2)]).to_dict()
    assert data["passed"] is True
    t_values = {check["t"] for check in data["checks"]}
    assert "1/2" in t_values
    assert all(check["residual"] == "0" for check in data["checks"])
