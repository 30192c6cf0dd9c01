"""
Thread pool map and quadrature rules.
"""
import numpy as np
import pytest

from kolmo.utils.parallel import THREADS_ENV, resolve_thread_count, thread_map
from kolmo.utils.quadrature import tensor_hermgauss, tensor_trapezoid


def test_thread_map_keeps_order():
    assert thread_map(lambda v: v * v, range(20), threads=4) == [v * v for v in range(20)]


def test_thread_map_propagates_errors():
    def fail(v):
        if v == 3:
            raise RuntimeError("boom")
        return v

    with pytest.raises(RuntimeError):
        thread_map(fail, range(5), threads=2)


def test_thread_count_resolution(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert resolve_thread_count() == 1
    monkeypatch.setenv(THREADS_ENV, "3")
    assert resolve_thread_count() == 3
    assert resolve_thread_count(2) == 2
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ValueError):
        resolve_thread_count()
    with pytest.raises(ValueError):
        resolve_thread_count(0)


def test_hermgauss_moments():
    points, weights = tensor_hermgauss(2, 10)
    assert points.shape == (100, 2)
    # int exp(-|u|^2) du = pi, int u_1^2 exp(-|u|^2) du = pi / 2
    assert weights.sum() == pytest.approx(np.pi, rel=1e-13)
    assert weights @ points[:, 0] ** 2 == pytest.approx(np.pi / 2, rel=1e-12)


def test_trapezoid_integrates_linear_functions_exactly():
    points, weights = tensor_trapezoid([0.0, -1.0], [2.0, 1.0], 5)
    assert weights.sum() == pytest.approx(4.0)
    assert weights @ (points[:, 0] + 3.0 * points[:, 1]) == pytest.approx(4.0)
