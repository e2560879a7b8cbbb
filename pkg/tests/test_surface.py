import numpy as np
import pytest
from scipy.special import ellipe

from twophase import surface as sf


def test_circle_measure_normals_and_curvature():
    c = sf.circle(center=(0.3, -0.2), radius=2.0, m=64)
    assert sf.surface_measure(c) == pytest.approx(4 * np.pi, rel=1e-13)
    assert np.allclose(c.normals, (c.nodes - [0.3, -0.2]) / 2.0, atol=1e-13)
    assert np.allclose(sf.mean_curvature(c), -0.5, atol=1e-12)


def test_ellipse_perimeter_matches_elliptic_integral():
    a, b = 1.5, 0.7
    e = sf.ellipse(a=a, b=b, m=128)
    exact = 4 * a * ellipe(1 - (b / a) ** 2)
    assert sf.surface_measure(e) == pytest.approx(exact, rel=1e-12)


def test_ellipse_curvature_closed_form():
    a, b = 1.5, 0.7
    e = sf.ellipse(a=a, b=b, m=128)
    x, y = e.nodes.T
    # signed curvature at (x, y), negative for the convex inner phase
    k = -(a**4 * b**4) / (b**4 * x**2 + a**4 * y**2) ** 1.5
    assert np.allclose(sf.mean_curvature(e), k, atol=1e-10)


def test_orientation_flip_reverses_normal_and_curvature():
    c = sf.circle(m=32)
    f = c.with_orientation(-1)
    assert np.allclose(f.normals, -c.normals)
    assert np.allclose(sf.mean_curvature(f), 1.0, atol=1e-12)


def test_tangential_gradient_of_coordinate():
    c = sf.circle(m=64)
    g = sf.tangential_gradient(c, values=c.nodes[:, 0])
    nu = c.normals
    expected = np.array([1.0, 0.0]) - nu[:, :1] * nu
    assert np.allclose(g, expected, atol=1e-12)


def test_tangential_divergence_of_normal_is_minus_curvature():
    e = sf.ellipse(m=128)
    assert np.allclose(sf.tangential_divergence(e, values=e.normals), -sf.mean_curvature(e), atol=1e-9)


def test_sphere_area_and_curvature_matrix():
    s = sf.sphere(radius=1.5, n_theta=32, n_phi=64)
    assert sf.surface_measure(s) == pytest.approx(4 * np.pi * 2.25, rel=1e-10)
    K = sf.curvature_matrix(s)
    assert K.symmetry_residual < 1e-8 and K.normal_residual < 1e-8
    assert np.allclose(sf.mean_curvature(s), -2 / 1.5, atol=1e-6)


def test_contains_and_distance():
    c = sf.circle(m=128)
    x = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 0.5]])
    assert c.contains(x).tolist() == [True, False, True]
    assert c.distance(x) == pytest.approx([1.0, 1.0, 0.5], abs=1e-3)


def test_surface_ibp_needs_values():
    with pytest.raises(ValueError):
        sf.check_surface_ibp(sf.circle(m=16), 0)


def test_non_finite_field_rejected():
    c = sf.circle(m=16)
    vals = np.ones(16)
    vals[3] = np.nan
    with pytest.raises(ValueError):
        sf.surface_integrate(c, vals)
    with pytest.raises(ValueError):
        sf.surface_integrate(c, np.ones(15))


def test_degenerate_curve_rejected():
    with pytest.raises(sf.DegenerateSurfaceError):
        sf.Curve(np.zeros((16, 2)))


def test_gauss_green_linear_field_and_coarse_warning():
    e = sf.ellipse(m=128)
    r = sf.gauss_green(e, lambda x: x.copy(), lambda x: np.full(len(x), 2.0), h=1 / 64)
    assert r["flux"] == pytest.approx(2 * np.pi * 1.5 * 0.7, rel=1e-12)
    assert r["residual"] < 1e-3
    with pytest.warns(UserWarning):
        sf.gauss_green(e, lambda x: x.copy(), lambda x: np.full(len(x), 2.0), h=0.5)


def test_fourier_curve_reduces_to_circle():
    f = sf.fourier_curve(r0=1.0, m=64)
    assert np.allclose(sf.mean_curvature(f), -1.0, atol=1e-12)
