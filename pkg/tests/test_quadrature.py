import numpy as np
import pytest

from twophase import quadrature as q


@pytest.mark.parametrize("order", [2, 4, 6])
def test_gauss_legendre_exact_for_polynomials(order):
    x, w = q.gauss_legendre(order, 0.5, 2.0)
    deg = 2 * order - 1
    assert np.sum(w * x**deg) == pytest.approx((2.0 ** (deg + 1) - 0.5 ** (deg + 1)) / (deg + 1), rel=1e-13)


def test_composite_gauss_rejects_zero_panels():
    with pytest.raises(ValueError):
        q.composite_gauss(0, 1, 0)


def test_time_rule_panels_and_empty_interval():
    ts, wt = q.time_rule(0.0, 1.0, 0.3, order=2)
    assert ts.size == 8 and wt.sum() == pytest.approx(1.0)
    assert q.time_rule(1.0, 1.0, 0.1)[0].size == 0


def test_box_rule_integrates_separable_function():
    pts, w = q.box_rule([0, -1], [np.pi, 1], [4, 3], order=6)
    val = np.sum(w * np.sin(pts[:, 0]) * pts[:, 1] ** 2)
    assert val == pytest.approx(2.0 * 2.0 / 3.0, rel=1e-10)


def test_spectral_derivative_of_trig_polynomial():
    th = q.periodic_nodes(32)
    f = np.sin(3 * th) + 0.5 * np.cos(th)
    assert np.allclose(q.spectral_derivative(f), 3 * np.cos(3 * th) - 0.5 * np.sin(th), atol=1e-12)
    assert np.allclose(q.spectral_derivative(f, 2), -9 * np.sin(3 * th) - 0.5 * np.cos(th), atol=1e-11)


def test_trig_interpolate_reproduces_band_limited_data():
    th = q.periodic_nodes(16)
    f = np.cos(2 * th) - np.sin(5 * th)
    s = np.array([0.1, 1.7, 4.0])
    assert np.allclose(q.trig_interpolate(f, s), np.cos(2 * s) - np.sin(5 * s), atol=1e-13)


def test_halfspace_fraction_axis_aligned_and_diagonal():
    n = np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 1.0] / np.sqrt(2)])
    off = np.array([0.2, -0.7, 0.0])
    frac = q.halfspace_fraction(n, off)
    assert frac == pytest.approx([0.7, 0.0, 0.5], abs=1e-4)


def test_grid_cell_rule_disk_area_second_order():
    errs = []
    for h in (1 / 8, 1 / 16, 1 / 32):
        _, w, frac = q.grid_cell_rule([-1.5, -1.5], [1.5, 1.5], h, lambda x: np.hypot(x[:, 0], x[:, 1]) - 1.0)
        errs.append(abs(np.sum(w * frac) - np.pi))
    assert errs[-1] < 1e-3
    assert np.log2(errs[0] / errs[-1]) / 2 > 1.5
