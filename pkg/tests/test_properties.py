"""Property-based tests of structural identities."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from twophase import evolving as ev
from twophase import fields as fl
from twophase import harness as hs
from twophase import pressure as pr
from twophase import quadrature as qd
from twophase import surface as sf
from twophase import weak_form as wf

small = st.floats(-1.0, 1.0, allow_nan=False)
times = st.floats(0.0, 1.0, allow_nan=False)
seeds = st.integers(0, 2**32 - 1)

volume_maps = st.one_of(
    st.builds(lambda a, b: ev.Translation([a, b]), small, small),
    st.builds(lambda w, cx: ev.Rotation(2 * w, center=(cx, 0.0)), small, small),
    st.builds(lambda r: ev.Shear(r), small),
    st.builds(lambda a, k: ev.SineShear(0.3 * a, 1.0 + abs(k)), small, small),
)


@settings(max_examples=40, deadline=None)
@given(volume_maps, times, seeds)
def test_volume_preserving_maps_have_unit_jacobian(phi, t, seed):
    x = np.random.default_rng(seed).uniform(-2, 2, (20, 2))
    assert np.allclose(phi.det(x, t), 1.0, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.one_of(volume_maps, st.builds(lambda r: ev.Dilation(0.5 * abs(r)), small)), times, seeds)
def test_maps_invert(phi, t, seed):
    x = np.random.default_rng(seed).uniform(-2, 2, (20, 2))
    assert np.allclose(phi.inverse(phi(x, t), t), x, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(small, small, st.floats(0.2, 1.0), small, small, seeds)
def test_test_fields_are_divergence_free(cx, cy, r, wx, wy, seed):
    psi = fl.build_test_field([cx, cy], r, (0.0, 1.0), tilt=[wx, wy])
    x = np.random.default_rng(seed).uniform(-2, 2, (50, 2))
    assert np.abs(psi.divergence(x, 0.5)).max() < 1e-10 * max(1.0, r**-2)


@settings(max_examples=30, deadline=None)
@given(seeds, small)
def test_projection_split_and_tangential_invariance(seed, c):
    e = sf.ellipse(m=64)
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((64, 2))
    r = pr.projection_constants(e, b)
    assert np.allclose(r["P_tau"] + r["P_nu"], b, atol=1e-13)
    shifted = pr.projection_constants(e, b + rng.standard_normal((64, 1)) * e.tangent)
    assert abs(shifted["C"] - r["C"]) < 1e-12
    assert abs(pr.projection_constants(e, b + c * e.normals)["C"] - r["C"] - c) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(0.7, 1.3), st.lists(st.floats(-0.08, 0.08), min_size=1, max_size=3),
       st.lists(st.floats(-0.08, 0.08), min_size=1, max_size=3), seeds)
def test_surface_ibp_on_fourier_curves(r0, cs, ss, seed):
    curve = sf.fourier_curve(r0=r0, cos_coeffs=[0.0, *cs], sin_coeffs=[0.0, *ss], m=256)
    a = np.random.default_rng(seed).uniform(-1, 1, 2)

    def f(x):
        return np.cos(x @ a) + x[:, 0]

    assert max(sf.check_surface_ibp(curve, i, func=f) for i in range(2)) < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), seeds)
def test_curvature_functional_is_linear(a, b, seed):
    e = sf.ellipse(m=128)
    p1, p2 = fl.test_battery(np.random.default_rng(seed), 2, [-2.5, -2.5], [2.5, 2.5], 1.0, anchors=e.nodes)
    s = fl.SumTestField([(a, p1), (b, p2)])

    def form(p):
        return wf.curvature_functional(e, lambda x: p.value(x, 0.5), lambda x: p.grad(x, 0.5), "nu_nu_form")

    assert abs(form(s) - a * form(p1) - b * form(p2)) < 1e-12 * (1 + abs(a) + abs(b))


@settings(max_examples=15, deadline=None)
@given(small, small, st.floats(0.5, 2.0))
def test_pressure_gauge_covariance(gx, gy, scale):
    # scaling targets scales the potential; adding a constant gradient adds a linear function
    def level(x):
        return np.hypot(x[:, 0], x[:, 1]) - 1.0

    def base(x):
        return np.stack([np.cos(x[:, 0]), -np.sin(x[:, 1])], 1)

    def shifted(x):
        return scale * base(x) + np.array([gx, gy])

    p0 = pr.associated_pressure(level, [-2, -2], [2, 2], 0.125, (base, base))
    p1 = pr.associated_pressure(level, [-2, -2], [2, 2], 0.125, (shifted, shifted))
    for inner in (True, False):
        sel = p0.solved & (p0.phase == inner)
        diff = p1.values[sel] - scale * p0.values[sel] - p0.nodes[sel] @ [gx, gy]
        assert np.ptp(diff) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 0.5), st.floats(0.6, 2.0), st.floats(0.0, 1.0))
def test_open_window_is_symmetric(t_a, t_b, s):
    w = fl.TimeWindow(t_a, t_b)
    mid, half = 0.5 * (t_a + t_b), 0.5 * (t_b - t_a)
    # rounding of the two mirrored times is amplified by (1 - tau^2)^-1 near the edges
    cond = 1.0 + fl.BUMP_POWER * 2 * s**2 / max(1.0 - s**2, 1e-300) * max(1.0, abs(mid) / half)
    assert np.isclose(w.value(mid - s * half), w.value(mid + s * half), rtol=1e-14 * cond, atol=1e-300)
    assert np.isclose(w.deriv(mid - s * half), -w.deriv(mid + s * half), rtol=1e-9 * cond, atol=1e-300)


@settings(max_examples=50, deadline=None)
@given(st.floats(-np.pi, np.pi), st.floats(-0.9, 0.9))
def test_halfspace_fraction_complement(angle, offset):
    n = np.array([[np.cos(angle), np.sin(angle)]])
    a = qd.halfspace_fraction(n, np.array([offset]))[0]
    b = qd.halfspace_fraction(n, np.array([-offset]))[0]
    assert 0.0 <= a <= 1.0 and abs(a + b - 1.0) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=6))
def test_spectral_derivative_exact_for_trig_polynomials(coeffs):
    th = qd.periodic_nodes(32)
    f = sum(c * np.sin((k + 1) * th) for k, c in enumerate(coeffs))
    df = sum(c * (k + 1) * np.cos((k + 1) * th) for k, c in enumerate(coeffs))
    assert np.allclose(qd.spectral_derivative(f), df, atol=1e-11)


@given(st.dictionaries(st.text(max_size=5), st.one_of(st.integers(), st.floats(allow_nan=False), st.text())))
def test_digest_is_key_order_independent(d):
    assert hs.digest(d) == hs.digest(dict(reversed(list(d.items()))))
