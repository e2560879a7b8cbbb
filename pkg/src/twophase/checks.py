"""Catalog of runnable identity checks.

Each check takes a :class:`CheckContext` and returns an :class:`Outcome`.
``status`` is one of ``pass``, ``fail``, ``info`` (a reported value with no
verdict) or ``skipped`` (not applicable to the scenario).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import evolving as ev
from . import fields as fl
from . import pressure as pr
from . import surface as sf
from . import weak_form as wf


@dataclass
class Outcome:
    values: dict
    tolerance: float | None = None
    passed: bool | None = None
    status: str = ""
    table: list | None = None

    def __post_init__(self):
        if not self.status:
            self.status = "info" if self.passed is None else ("pass" if self.passed else "fail")


class NotApplicable(Exception):
    """Raised by a check that does not apply to the scenario."""


@dataclass
class CheckContext:
    scenario: object
    rng: np.random.Generator
    tolerance: float | None
    shared: dict = field(default_factory=dict)

    def tol(self, default: float) -> float:
        return default if self.tolerance is None else self.tolerance


@dataclass(frozen=True)
class CheckSpec:
    id: str
    anchor: str
    operation: str
    func: Callable
    tolerance: float | None


CATALOG: dict[str, CheckSpec] = {}


def check(cid: str, anchor: str, operation: str, tolerance: float | None = None):
    def deco(func):
        CATALOG[cid] = CheckSpec(cid, anchor, operation, func, tolerance)
        return func

    return deco


def _le(value: float, tol: float) -> bool:
    return bool(np.isfinite(value) and value <= tol)


def _need_2d(sc):
    if sc.dim != 2:
        raise NotApplicable("implemented for planar interfaces only")


def _need_weak(sc):
    if not sc.weak_solution:
        raise NotApplicable("scenario is not declared a weak solution")


def _need_round(sc):
    if sc.config["geometry"]["kind"] not in ("circle", "sphere"):
        raise NotApplicable("closed-form curvature needs a circle or sphere")


def observed_order(levels, errors) -> float:
    """Least-squares slope of log(error) against log(level)."""
    x = np.log(np.asarray(levels, dtype=float))
    y = np.log(np.maximum(np.asarray(errors, dtype=float), 1e-300))
    return float(np.polyfit(x, y, 1)[0])


def _order_outcome(levels, errors, minimum, floor, label) -> Outcome:
    errors = [float(e) for e in errors]
    table = [{"level": float(lv), "error": e} for lv, e in zip(levels, errors)]
    if max(errors) <= floor:
        return Outcome({"order": None, "errors": errors, "note": "all errors below floor"}, minimum, True,
                       table=table)
    order = observed_order(levels, errors)
    monotone = all(b < a for a, b in zip(errors, errors[1:]))
    return Outcome({"order": order, "errors": errors, "monotone": monotone, "quantity": label}, minimum,
                   bool(order >= minimum), table=table)


def _round_radius(sc) -> float:
    return float(sc.config["geometry"].get("radius", 1.0))


# -- surface calculus ------------------------------------------------------------


@check("curvature_ground_truth", "Mean curvature", "surface_calculus.mean_curvature")
def _curvature_ground_truth(ctx):
    sc = ctx.scenario
    _need_round(sc)
    s = sc.surface()
    exact = -(sc.dim - 1) / _round_radius(sc)
    err = float(np.abs(sf.mean_curvature(s) - exact).max())
    tol = ctx.tol(1e-8 if sc.dim == 2 else 1e-4)
    return Outcome({"max_error": err, "exact": exact}, tol, _le(err, tol))


@check("curvature_matrix_structure", "is symmetric and ν(x) is an eigenvector",
       "surface_calculus.curvature_matrix")
def _curvature_matrix(ctx):
    K = sf.curvature_matrix(ctx.scenario.surface())
    sym, nrm = K.symmetry_residual, K.normal_residual
    tol = ctx.tol(1e-8)
    return Outcome({"symmetry": sym, "normal": nrm}, tol, _le(max(sym, nrm), tol))


def _random_analytic(rng, dim):
    a = rng.uniform(-1.5, 1.5, dim)
    b = rng.uniform(0, 2 * np.pi)
    c = rng.uniform(-0.5, 0.5, dim)

    def f(x):
        return np.sin(x @ a + b) + np.exp(0.3 * (x @ c))

    def g(x):
        return np.cos(x @ a + b)[:, None] * a + 0.3 * np.exp(0.3 * (x @ c))[:, None] * c

    return f, g


@check("surface_integration_by_parts", "∫_Γ δ_i f = − ∫_Γ f κ ν_i", "surface_calculus.check_surface_ibp")
def _surface_ibp(ctx):
    sc = ctx.scenario
    s = sc.surface()
    worst = 0.0
    for _ in range(5):
        f, g = _random_analytic(ctx.rng, sc.dim)
        for axis in range(sc.dim):
            worst = max(worst, sf.check_surface_ibp(s, axis, func=f, grad=g if sc.dim == 3 else None))
    tol = ctx.tol(1e-8)
    return Outcome({"max_residual": worst, "fields": 5}, tol, _le(worst, tol))


@check("surface_ibp_spectral_decay", "∫_Γ δ_i f = − ∫_Γ f κ ν_i", "surface_calculus.check_surface_ibp")
def _surface_ibp_decay(ctx):
    sc = ctx.scenario
    _need_2d(sc)
    f, _ = _random_analytic(ctx.rng, 2)
    levels = [64, 128, 256]
    errs = []
    for m in levels:
        s = sc.surface(m)
        errs.append(max(sf.check_surface_ibp(s, i, func=f) for i in range(2)))
    floor = ctx.tol(1e-12)
    ratios = [a / max(b, 1e-300) for a, b in zip(errs, errs[1:])]
    ok = all(b <= floor or r >= 1e2 for r, b in zip(ratios, errs[1:]))
    table = [{"level": m, "error": e} for m, e in zip(levels, errs)]
    return Outcome({"errors": errs, "ratios": ratios}, floor, ok, table=table)


@check("gauss_green", "∫_Ω div ψ = ∫_∂Ω ψ·ν", "surface_calculus.gauss_green")
def _gauss_green(ctx):
    sc = ctx.scenario
    _need_2d(sc)
    a = ctx.rng.uniform(-1, 1, 4)

    def psi(x):
        return np.stack([np.sin(a[0] * x[:, 1]) + a[1] * x[:, 0] ** 2, np.cos(a[2] * x[:, 0]) * x[:, 1] + a[3]], 1)

    def div(x):
        return 2 * a[1] * x[:, 0] + np.cos(a[2] * x[:, 0])

    h = sc.resolution["grid_h"]
    r = sf.gauss_green(sc.surface(), psi, div, h)
    tol = ctx.tol(1e-5)
    return Outcome({"residual": r["residual"], "bulk": r["bulk"], "flux": r["flux"], "h": h}, tol,
                   _le(r["residual"], tol))


@check("weak_curvature_identity", "ν⁻ ⊗ ν⁻ : ∇ψ", "weak_form.curvature_functional")
def _weak_curvature(ctx):
    sc = ctx.scenario
    s = sc.surface()
    gaps, mags = [], []
    for psi in sc.battery(ctx.rng, count=10):
        grad = lambda x, p=psi: _spatial_grad(p, x)  # noqa: E731
        k = wf.curvature_functional(s, psi.spatial, grad, "kappa_form")
        n = wf.curvature_functional(s, psi.spatial, grad, "nu_nu_form")
        gaps.append(abs(k - n))
        mags.append(max(abs(k), abs(n)))
    tol = ctx.tol(1e-7)
    vals = {"max_gap": max(gaps), "max_magnitude": max(mags)}
    return Outcome(vals, tol, _le(max(gaps), tol))


def _spatial_grad(psi, x):
    _, _, H = psi.potential.eval(x)
    return psi.amplitude * np.einsum("ij,qjk->qik", psi._R, H)


# -- evolving domain -------------------------------------------------------------


def _sample_box(sc, rng, n):
    return rng.uniform(sc.lower, sc.upper, (n, sc.dim))


@check("volume_preservation", "det ∇Φ = 1", "evolving_domain.Diffeomorphism.det")
def _volume(ctx):
    sc = ctx.scenario
    d = sc.diffeo()
    if not d.volume_preserving:
        raise NotApplicable("motion is not volume preserving")
    x = _sample_box(sc, ctx.rng, 1000)
    err = max(float(np.abs(d.det(x, t) - 1.0).max()) for t in np.linspace(0, d.T, 5))
    tol = ctx.tol(1e-10)
    return Outcome({"max_det_error": err, "samples": 1000}, tol, _le(err, tol))


def divergence_pairs(dim):
    """Built-in (f, div f) pairs for the pullback divergence check."""
    if dim == 2:
        return [
            (lambda x: np.stack([x[:, 0] ** 2, x[:, 0] * x[:, 1]], 1), lambda x: 3 * x[:, 0]),
            (lambda x: np.stack([np.sin(x[:, 1]), np.cos(x[:, 0])], 1), lambda x: np.zeros(len(x))),
            (lambda x: np.stack([np.exp(0.3 * x[:, 0]), x[:, 1] ** 3], 1),
             lambda x: 0.3 * np.exp(0.3 * x[:, 0]) + 3 * x[:, 1] ** 2),
            (lambda x: np.stack([x[:, 0] * np.cos(x[:, 1]), np.sin(x[:, 0] * x[:, 1])], 1),
             lambda x: np.cos(x[:, 1]) + x[:, 0] * np.cos(x[:, 0] * x[:, 1])),
        ]
    return [
        (lambda x: x**2, lambda x: 2 * np.sum(x, axis=1)),
        (lambda x: np.stack([np.sin(x[:, 1]), np.cos(x[:, 2]), x[:, 0]], 1), lambda x: np.zeros(len(x))),
        (lambda x: np.stack([x[:, 0] * x[:, 1], x[:, 1] * x[:, 2], x[:, 2] * x[:, 0]], 1),
         lambda x: x[:, 1] + x[:, 2] + x[:, 0]),
        (lambda x: np.exp(0.2 * x), lambda x: 0.2 * np.sum(np.exp(0.2 * x), axis=1)),
    ]


@check("phi_star_divergence", "div(Φ★ f) = (div f) ∘ Φ", "evolving_domain.phi_star")
def _phi_star(ctx):
    sc = ctx.scenario
    d = sc.diffeo()
    if not d.volume_preserving:
        raise NotApplicable("divergence is preserved only by volume-preserving maps")
    x = ctx.rng.uniform(-1, 1, (50, sc.dim))
    errs = [ev.check_div_preservation(d, 0.5 * d.T, f, g, x) for f, g in divergence_pairs(sc.dim)]
    tol = ctx.tol(1e-8)
    return Outcome({"residuals": errs}, tol, _le(max(errs), tol))


@check("normal_velocity_consistency", "V = v · ν⁻", "evolving_domain.normal_velocity")
def _normal_velocity(ctx):
    sc = ctx.scenario
    traj = sc.trajectory()
    v = sc.velocity()
    err = 0.0
    for t in traj.times:
        g = traj.surface(t)
        vn = np.sum(v.value(g.nodes, t) * g.normals, axis=1)
        err = max(err, float(np.abs(traj.normal_velocity(t) - vn).max()))
    tol = ctx.tol(1e-10)
    return Outcome({"max_mismatch": err}, tol, _le(err, tol))


def _transport_scalar(dim):
    return fl.scalar_field("wave", k=[1.0, 0.5, 0.25][:dim], omega=1.0)


@check("transport_theorem_bulk", "d/dt ∫_Ω(t) f = ∫_Ω(t) ∂_t f + ∫_Γ(t) f V", "evolving_domain.transport_check_bulk")
def _transport_bulk(ctx):
    sc = ctx.scenario
    traj = sc.trajectory()
    f = _transport_scalar(sc.dim)
    r = ev.transport_check_bulk(traj, f.f, f.dfdt, 0.5 * traj.T, sc.resolution["fd_dt"])
    tol = ctx.tol(1e-6)
    return Outcome({"residual": r["residual"], "lhs": r["lhs"], "rhs": r["rhs"]}, tol, _le(r["residual"], tol))


@check("transport_theorem_order", "d/dt ∫_Ω(t) f = ∫_Ω(t) ∂_t f + ∫_Γ(t) f V", "evolving_domain.transport_check_bulk")
def _transport_order(ctx):
    sc = ctx.scenario
    traj = sc.trajectory()
    f = _transport_scalar(sc.dim)
    levels = [4e-3, 2e-3, 1e-3]
    errs = [ev.transport_check_bulk(traj, f.f, f.dfdt, 0.5 * traj.T, dt)["residual"] for dt in levels]
    return _order_outcome(levels, errs, ctx.tol(1.9), 1e-12, "transport residual vs dt")


def _evolving(sc):
    traj = sc.trajectory()
    return traj._evolving


@check("transport_theorem_surface", "Transport theorem", "evolving_domain.transport_check_surface")
def _transport_surface(ctx):
    sc = ctx.scenario
    f = _transport_scalar(sc.dim)
    r = ev.transport_check_surface(_evolving(sc), f.f, f.dfdt, f.grad, 0.5 * sc.diffeo().T,
                                   sc.resolution["fd_dt"])
    tol = ctx.tol(1e-5)
    return Outcome({"residual": r["residual"], "lhs": r["lhs"], "rhs": r["rhs"]}, tol, _le(r["residual"], tol))


@check("surface_measure_rate", "d/dt H^{n−1}(Γ(t)) = −∫_Γ κ V", "evolving_domain.transport_check_surface")
def _measure_rate(ctx):
    sc = ctx.scenario
    f = fl.scalar_field("constant")
    r = ev.transport_check_surface(_evolving(sc), f.f, f.dfdt, f.grad, 0.5 * sc.diffeo().T,
                                   sc.resolution["fd_dt"])
    tol = ctx.tol(1e-6)
    return Outcome({"residual": r["measure_residual"], "lhs": r["measure_lhs"], "rhs": r["measure_rhs"]}, tol,
                   _le(r["measure_residual"], tol))


@check("spacetime_integration_by_parts", "Integration by parts", "evolving_domain.spacetime_ibp")
def _spacetime_ibp(ctx):
    sc = ctx.scenario
    traj = sc.trajectory()
    T = traj.T
    f = _transport_scalar(sc.dim)
    c = traj.surface(0.0).center

    def phi(x, t):
        return np.sin(np.pi * t / T) ** 2 * np.exp(-np.sum((x - c) ** 2, axis=1))

    def dphi(x, t):
        return np.pi / T * np.sin(2 * np.pi * t / T) * np.exp(-np.sum((x - c) ** 2, axis=1))

    r = ev.spacetime_ibp(traj, f.f, f.dfdt, phi, dphi, dt=0.05)
    tol = ctx.tol(1e-8)
    return Outcome({k: float(v) for k, v in r.items()}, tol, _le(r["residual"], tol))


@check("pullback_trace_bound", "Transformation of trace spaces", "evolving_domain.pullback_trace")
def _pullback(ctx):
    sc = ctx.scenario
    traj = sc.trajectory()
    s0 = traj.surface(0.0)
    worst = 0.0
    ok = True
    for t in traj.times[1:]:
        g = traj.surface(t)
        vals = np.sin(g.nodes[:, 0]) + np.cos(2 * g.nodes[:, 1]) + 1.5
        res = ev.pullback_trace(sc.diffeo(), t, vals, s0, g)
        ok &= res.within_bound
        worst = max(worst, abs(np.log(res.ratio)) / max(np.log(res.bound), 1e-300) if res.bound > 1 else 0.0)
    return Outcome({"worst_ratio_of_bound": worst}, 1.0, bool(ok))


# -- weak formulation --------------------------------------------------------------


@check("density_consistency", "ρ = (β₁ − β₂)χ + β₂", "weak_form.PhaseState")
def _density(ctx):
    sc = ctx.scenario
    state = wf.PhaseState(0.0, sc.trajectory(), sc.velocity(), sc.params())
    res = state.consistency_residual(_sample_box(sc, ctx.rng, 2000))
    tol = ctx.tol(1e-14)
    return Outcome({"residual": res}, tol, _le(res, tol))


def _quad(ctx):
    if "quad" not in ctx.shared:
        ctx.shared["quad"] = wf.PhaseQuadrature(ctx.scenario.trajectory())
    return ctx.shared["quad"]


@check("momentum_weak_form", "Weak form of linear-momentum balance", "weak_form.momentum_residual")
def _momentum(ctx):
    sc = ctx.scenario
    if not (sc.weak_solution or sc.config["audit"]):
        raise NotApplicable("scenario is not declared a weak solution")
    traj, params, v = sc.trajectory(), sc.params(), sc.velocity()
    res = [wf.momentum_residual(traj, params, p, v, dt=sc.resolution["time_dt"], quadrature=_quad(ctx))["residual"]
           for p in sc.battery(ctx.rng)]
    worst = float(np.max(np.abs(res)))
    if sc.config["audit"]:
        return Outcome({"max_residual": worst, "residuals": res})
    tol = ctx.tol(1e-7)
    return Outcome({"max_residual": worst, "residuals": res}, tol, _le(worst, tol))


@check("momentum_linearity", "Weak form of linear-momentum balance", "weak_form.momentum_residual")
def _linearity(ctx):
    sc = ctx.scenario
    traj, params, v = sc.trajectory(), sc.params(), sc.velocity()
    p1, p2 = sc.battery(ctx.rng, count=2)
    a, b = ctx.rng.uniform(-2, 2, 2)
    kw = {"dt": sc.resolution["time_dt"], "quadrature": _quad(ctx)}

    def terms(p):
        return wf.momentum_residual(traj, params, p, v, **kw)["terms"]

    # one box and one time range for all three, so every evaluation uses the same rule
    combo = fl.SumTestField([(a, p1), (b, p2)])
    box, win = combo.support_box(), combo.window
    t1 = terms(fl.SumTestField([(1.0, p1)], box, win))
    t2 = terms(fl.SumTestField([(1.0, p2)], box, win))
    t12 = terms(combo)
    err = max(abs(t12[k] - (a * t1[k] + b * t2[k])) for k in t12)
    # relative to the largest term; terms at roundoff level are compared absolutely
    scale = max(max(abs(a * t1[k]) + abs(b * t2[k]) for k in t12), 1e-6)
    rel = err / scale
    tol = ctx.tol(1e-10)
    return Outcome({"max_relative": rel, "max_abs": err, "scale": scale, "a": float(a), "b": float(b)}, tol,
                   _le(rel, tol))


@check("energy_equality", "Energy equality and a priori bounds", "weak_form.energy_audit")
def _energy(ctx):
    sc = ctx.scenario
    _need_weak(sc)
    traj = sc.trajectory()
    r = wf.energy_audit(traj, sc.params(), sc.velocity(), 0.0, traj.T, quadrature=_quad(ctx))
    rel = abs(r["gap"]) / max(abs(r["rhs"]), 1e-300)
    tol = ctx.tol(1e-6)
    vals = {"relative_gap": rel, "gap": r["gap"], "lhs": r["lhs"], "rhs": r["rhs"]}
    vals.update(r["terms"])
    return Outcome(vals, tol, _le(rel, tol))


def _transport_tests(sc, rng, count):
    anchors = sc.surface().nodes
    T = sc.diffeo().T
    out = []
    while len(out) < count:
        r = rng.uniform(0.5, 0.8)
        c = anchors[rng.integers(len(anchors))] + rng.uniform(-0.3, 0.3, sc.dim) * r
        if np.any(c - r <= sc.lower) or np.any(c + r >= sc.upper):
            continue
        win = fl.TimeWindow(0.0, rng.uniform(0.6 * T, 0.9 * T), "closed_at_zero")
        out.append(fl.ScalarTestField(c, r, win, 1.0, rng.uniform(-0.5, 0.5, sc.dim)))
    return out


@check("transport_equation", "χ(∂_t φ + v · ∇φ)", "weak_form.transport_residual")
def _transport_eq(ctx):
    sc = ctx.scenario
    _need_2d(sc)
    traj, v = sc.trajectory(), sc.velocity()
    h = sc.resolution["grid_h"]
    res = [wf.transport_residual(traj, v, phi, dt=sc.resolution["fd_dt"], h=h)["residual"]
           for phi in _transport_tests(sc, ctx.rng, 1)]
    tol = ctx.tol(1e-5)
    return Outcome({"max_residual": max(res), "h": h}, tol, _le(max(res), tol))


@check("transport_equation_order", "χ(∂_t φ + v · ∇φ)", "weak_form.transport_residual")
def _transport_eq_order(ctx):
    sc = ctx.scenario
    _need_2d(sc)
    traj, v = sc.trajectory(), sc.velocity()
    phi = _transport_tests(sc, ctx.rng, 1)[0]
    levels = [1 / 16, 1 / 32, 1 / 64]
    errs = [wf.transport_residual(traj, v, phi, dt=h / 4, h=h)["residual"] for h in levels]
    return _order_outcome(levels, errs, ctx.tol(0.9), 1e-12, "transport residual vs h, dt = h/4")


@check("perimeter_identity", "‖∇ρ(t)‖_M(Ω) = (β₂ − β₁) H^{n−1}(Γ(t))", "weak_form.total_variation_identity")
def _perimeter(ctx):
    sc = ctx.scenario
    _need_round(sc)
    p = sc.params()
    if p.beta1 == p.beta2:
        raise NotApplicable("equal densities; see perimeter_equal_density")
    r = wf.total_variation_identity(sc.trajectory(), p)
    tol = ctx.tol(0.95)
    return Outcome({k: float(v) for k, v in r.items()}, tol, bool(r["ratio"] >= tol))


@check("perimeter_equal_density", "‖∇ρ(t)‖_M(Ω) = (β₂ − β₁) H^{n−1}(Γ(t))", "weak_form.total_variation_identity")
def _perimeter_equal(ctx):
    sc = ctx.scenario
    p = sc.params()
    same = wf.MaterialParams(p.beta1, p.beta1, p.mu1, p.mu1, p.sigma)
    r = wf.total_variation_identity(sc.trajectory(), same)
    tol = ctx.tol(0.0)
    return Outcome({"tv_estimate": r["tv_estimate"]}, tol, bool(abs(r["tv_estimate"]) <= tol))


# -- pressure ------------------------------------------------------------------------


def _extension(ctx):
    if "ext" not in ctx.shared:
        ctx.shared["ext"] = pr.harmonic_extension(ctx.scenario.surface())
    return ctx.shared["ext"]


@check("harmonic_extension_trace", "Δũ(t) = 0 in Ω⁻(0)", "pressure_reconstruction.harmonic_extension")
def _ext_trace(ctx):
    _need_2d(ctx.scenario)
    ext = _extension(ctx)
    tol = ctx.tol(1e-8)
    return Outcome({"trace_error": ext.trace_error, "offset_factor": ext.offset, "sources": len(ext.sources)},
                   tol, _le(ext.trace_error, tol))


def _interior_points(surface, rng, n, margin=0.1):
    lo, hi = surface.nodes.min(axis=0), surface.nodes.max(axis=0)
    out = []
    while len(out) < n:
        x = rng.uniform(lo, hi, (4 * n, surface.dim))
        keep = surface.contains(x) & (surface.distance(x) > margin)
        out.extend(x[keep])
    return np.asarray(out[:n])


@check("harmonic_extension_oracle", "Δũ(t) = 0 in Ω⁻(0)", "pressure_reconstruction.harmonic_extension")
def _ext_oracle(ctx):
    sc = ctx.scenario
    _need_2d(sc)
    s = sc.surface()
    ext = _extension(ctx)
    x = _interior_points(s, ctx.rng, 20)
    err = float(np.abs(ext.value(x) - pr.double_layer_solution(s, sf.mean_curvature(s), x)).max())
    tol = ctx.tol(1e-8)
    return Outcome({"max_difference": err, "points": 20}, tol, _le(err, tol))


@check("regular_curvature_functional", "∫∫ K · ψ", "pressure_reconstruction.extended_curvature")
def _regular_curvature(ctx):
    sc = ctx.scenario
    _need_2d(sc)
    traj = sc.trajectory()
    cache = ctx.shared.setdefault("ext_cache", pr.ExtensionCache(traj))
    gaps = [pr.regular_curvature_gaps(traj, p, cache, dt=0.25, order=2, min_panels=2)["max_gap"]
            for p in sc.battery(ctx.rng, count=3)]
    tol = ctx.tol(1e-6)
    return Outcome({"max_gap": max(gaps)}, tol, _le(max(gaps), tol))


@check("greg_vanishing", "G_reg(ψ) = 0", "pressure_reconstruction.greg_apply")
def _greg(ctx):
    sc = ctx.scenario
    _need_2d(sc)
    _need_weak(sc)
    traj = sc.trajectory()
    cache = ctx.shared.setdefault("ext_cache", pr.ExtensionCache(traj))
    vals = [pr.greg_apply(traj, sc.params(), sc.velocity(), p, cache, dt=sc.resolution["time_dt"],
                          quadrature=_quad(ctx))["value"] for p in sc.battery(ctx.rng)]
    worst = float(np.max(np.abs(vals)))
    tol = ctx.tol(1e-5)
    return Outcome({"max_abs": worst, "values": vals}, tol, _le(worst, tol))


def _pressure(ctx, h=None, apply_constant=True):
    sc = ctx.scenario
    _need_2d(sc)
    h = h or sc.resolution["pressure_h"]
    traj, params, v = sc.trajectory(), sc.params(), sc.velocity()
    raw_key = ("pressure_raw", h)
    if raw_key not in ctx.shared:
        ctx.shared[raw_key] = pr.reconstruct_pressure(traj, params, v, 0.0, h, ext=_extension(ctx))[0]
    key = ("pressure", h, apply_constant)
    if key not in ctx.shared:
        bundle = dataclasses.replace(ctx.shared[raw_key])
        ctx.shared[key] = pr.adjust_jump(bundle, _extension(ctx), traj, params, v, apply_constant=apply_constant)
    return ctx.shared[key]


@check("pressure_curl", "Reconstruction of associated pressure", "pressure_reconstruction.associated_pressure")
def _curl(ctx):
    b = _pressure(ctx)
    tol = ctx.tol(1e-8)
    return Outcome({"curl": b.curl, "ls_residual": b.ls_residual}, tol, _le(b.curl, tol))


@check("pressure_jump", "[p] = 2[μ(ρ)Dv ν⁻]·ν⁻ + 2σκ", "pressure_reconstruction.adjust_jump")
def _jump(ctx):
    sc = ctx.scenario
    expected = sc.config["expected"].get("pressure_jump")
    if expected is None:
        raise NotApplicable("no expected pressure jump declared")
    b = _pressure(ctx)
    pm, pp = b.traces(sc.surface())
    jump = float(np.mean(pm - pp))
    err = float(np.abs((pm - pp) - expected).max())
    tol = ctx.tol(1e-6)
    return Outcome({"inner_minus_outer": jump, "expected": expected, "max_error": err}, tol, _le(err, tol))


@check("pressure_zero_mean", "∫_Ω p(t) dx = 0", "pressure_reconstruction.adjust_jump")
def _zero_mean(ctx):
    sc = ctx.scenario
    b = _pressure(ctx)
    m = abs(b.mean(sc.lower, sc.upper))
    scale = max(1.0, float(np.abs(b.node_values()).max()))
    tol = ctx.tol(1e-8)
    return Outcome({"relative_mean": m / scale}, tol, _le(m / scale, tol))


@check("young_laplace", "[p] = 2[μ(ρ)Dv ν⁻]·ν⁻ + 2σκ", "pressure_reconstruction.young_laplace_check")
def _young_laplace(ctx):
    sc = ctx.scenario
    b = _pressure(ctx)
    r = pr.young_laplace_check(b, sc.trajectory(), sc.params(), sc.velocity())
    tol = ctx.tol(1e-6)
    return Outcome({k: r[k] for k in ("max_defect", "l2_defect", "C")}, tol, _le(r["max_defect"], tol))


@check("young_laplace_order", "[p] = 2[μ(ρ)Dv ν⁻]·ν⁻ + 2σκ", "pressure_reconstruction.young_laplace_check")
def _young_laplace_order(ctx):
    sc = ctx.scenario
    levels = sc.resolution["pressure_levels"]
    errs = [pr.young_laplace_check(_pressure(ctx, h), sc.trajectory(), sc.params(), sc.velocity())["max_defect"]
            for h in levels]
    return _order_outcome(levels, errs, ctx.tol(1.8), 1e-10, "Young-Laplace max defect vs h")


@check("jump_constant_regression", "C(t) = (1/H^{n−1}(Γ(t))) ∫_Γ b·ν⁻",
       "pressure_reconstruction.projection_constants")
def _jump_constant(ctx):
    sc = ctx.scenario
    b = _pressure(ctx, apply_constant=False)
    r = pr.young_laplace_check(b, sc.trajectory(), sc.params(), sc.velocity())
    diff = abs(r["C"] - b.jump_constant)
    tol = ctx.tol(1e-10)
    return Outcome({"C_unadjusted": r["C"], "C_recorded": b.jump_constant, "difference": diff}, tol, _le(diff, tol))


@check("projection_constant", "C(t) = (1/H^{n−1}(Γ(t))) ∫_Γ b·ν⁻", "pressure_reconstruction.projection_constants")
def _projection(ctx):
    sc = ctx.scenario
    s = sc.surface()
    c = float(ctx.rng.uniform(-2, 2))
    normal = pr.projection_constants(s, c * s.normals)
    tang = s.tangent if sc.dim == 2 else np.cross(s.normals, [0.3, -0.2, 1.0])
    tangential = pr.projection_constants(s, tang)
    err = max(abs(normal["C"] - c), float(np.abs(normal["P_tau"]).max()), abs(tangential["C"]),
              float(np.abs(tangential["P_nu"]).max()))
    tol = ctx.tol(1e-10)
    return Outcome({"normal_C": normal["C"], "c": c, "tangential_C": tangential["C"], "max_error": err}, tol,
                   _le(err, tol))


@check("convective_norm", "Regularity of convective term", "pressure_reconstruction.convective_norm")
def _convective(ctx):
    sc = ctx.scenario
    r = pr.convective_norm(sc.trajectory(), sc.velocity(), dt=0.25, quadrature=_quad(ctx))
    return Outcome(dict(r))


def list_checks() -> list[dict]:
    return [{"id": c.id, "anchor": c.anchor, "operation": c.operation} for c in CATALOG.values()]


__all__ = ["CATALOG", "CheckContext", "CheckSpec", "NotApplicable", "Outcome", "list_checks", "observed_order"]
