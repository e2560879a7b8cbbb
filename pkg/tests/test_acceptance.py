"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured values and
the tolerance it was judged against.  Run standalone for just those lines::

    python3 tests/test_acceptance.py
"""

from __future__ import annotations

import functools
import sys

import numpy as np
import pytest
from scipy.special import iv

from twophase import harness
from twophase import pressure as pr
from twophase import surface as sf

# checks needed per built-in scenario; each scenario runs once per session
PLAN = {
    "static_bubble": [
        "curvature_ground_truth", "curvature_matrix_structure", "surface_integration_by_parts",
        "surface_ibp_spectral_decay", "weak_curvature_identity", "energy_equality", "perimeter_identity",
        "perimeter_equal_density", "momentum_weak_form", "momentum_linearity", "harmonic_extension_trace",
        "harmonic_extension_oracle", "greg_vanishing", "pressure_curl", "pressure_jump", "pressure_zero_mean",
        "young_laplace", "young_laplace_order", "projection_constant",
    ],
    "static_bubble_sphere": ["curvature_ground_truth", "curvature_matrix_structure", "volume_preservation",
                             "phi_star_divergence", "projection_constant"],
    "rotating_ellipse": ["curvature_matrix_structure", "surface_integration_by_parts",
                         "surface_ibp_spectral_decay", "weak_curvature_identity", "volume_preservation",
                         "phi_star_divergence", "projection_constant"],
    "translating_bubble": ["volume_preservation", "phi_star_divergence", "transport_theorem_bulk",
                           "transport_theorem_order", "energy_equality", "transport_equation",
                           "transport_equation_order", "greg_vanishing"],
    "rotating_bubble": ["transport_equation", "transport_equation_order", "greg_vanishing"],
    "shear_interface": ["volume_preservation", "phi_star_divergence", "transport_theorem_bulk",
                        "transport_theorem_order"],
    "dilating_circle": ["surface_measure_rate"],
    "single_phase_taylor_green": ["momentum_weak_form", "greg_vanishing"],
    "rankine_bubble": ["young_laplace_order"],
}

WEAK_SCENARIOS = ["static_bubble", "translating_bubble", "rotating_bubble", "single_phase_taylor_green"]


@functools.lru_cache(maxsize=None)
def records(name: str) -> dict:
    report = harness.run_scenario(name, checks=PLAN[name])
    return {r["id"]: r for r in report["checks"]}


def rec(name: str, cid: str) -> dict:
    return records(name)[cid]


def verdict(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}  {title}: {detail}"
    _emit(line)
    assert ok, line


def _emit(line: str) -> None:
    capman = _CAPTURE.get("manager")
    if capman is not None:
        with capman.global_and_fixture_disabled():
            print(line, flush=True)
    else:
        print(line, flush=True)


_CAPTURE: dict = {}


@pytest.fixture(autouse=True)
def _uncaptured(request):
    _CAPTURE["manager"] = request.config.pluginmanager.getplugin("capturemanager")
    yield
    _CAPTURE.pop("manager", None)


def _passed(*pairs) -> bool:
    return all(rec(n, c)["status"] == "pass" for n, c in pairs)


def _fmt(x) -> str:
    return "none" if x is None else f"{x:.3g}"


# -- criteria ---------------------------------------------------------------------------


def test_criterion_01_curvature_ground_truth():
    c = rec("static_bubble", "curvature_ground_truth")
    s = rec("static_bubble_sphere", "curvature_ground_truth")
    ok = c["values"]["max_error"] <= 1e-8 and s["values"]["max_error"] <= 1e-4
    verdict(1, "curvature ground truth", ok,
            f"circle err {_fmt(c['values']['max_error'])} (tol 1e-8), "
            f"sphere err {_fmt(s['values']['max_error'])} (tol 1e-4)")


def test_criterion_02_curvature_matrix_structure():
    worst = 0.0
    for name in ("static_bubble", "rotating_ellipse", "static_bubble_sphere"):
        v = rec(name, "curvature_matrix_structure")["values"]
        worst = max(worst, v["symmetry"], v["normal"])
    verdict(2, "curvature matrix symmetric with normal eigenvector", worst <= 1e-8,
            f"max(|K-K^T|, |K nu|) {_fmt(worst)} over circle, ellipse, sphere (tol 1e-8)")


def test_criterion_03_surface_integration_by_parts():
    res = max(rec(n, "surface_integration_by_parts")["values"]["max_residual"]
              for n in ("static_bubble", "rotating_ellipse"))
    decay_ok = _passed(("static_bubble", "surface_ibp_spectral_decay"),
                       ("rotating_ellipse", "surface_ibp_spectral_decay"))
    errs = rec("rotating_ellipse", "surface_ibp_spectral_decay")["values"]["errors"]
    # below M=64 the ellipse is not yet at roundoff, so the decay rate is visible there
    f = lambda x: np.sin(1.3 * x[:, 0] - 0.4 * x[:, 1] + 0.2)  # noqa: E731
    coarse = [max(sf.check_surface_ibp(sf.ellipse(m=m), i, func=f) for i in range(2)) for m in (16, 32, 64)]
    ratio = coarse[0] / max(coarse[1], 1e-300)
    ok = res <= 1e-8 and decay_ok and ratio >= 1e2
    verdict(3, "surface integration by parts", ok,
            f"max residual {_fmt(res)} (tol 1e-8); ellipse M=64,128,256 errors "
            f"{', '.join(_fmt(e) for e in errs)} (at roundoff); M=16->32 ratio {_fmt(ratio)} (>= 1e2)")


def test_criterion_04_weak_curvature_identity():
    e = rec("rotating_ellipse", "weak_curvature_identity")["values"]
    c = rec("static_bubble", "weak_curvature_identity")["values"]
    ok = e["max_gap"] <= 1e-7 and c["max_magnitude"] <= 1e-7
    verdict(4, "weak curvature identity", ok,
            f"ellipse gap {_fmt(e['max_gap'])} over 10 fields (tol 1e-7); "
            f"circle max |form| {_fmt(c['max_magnitude'])} (tol 1e-7)")


def test_criterion_05_transport_theorem():
    bulk = {n: rec(n, "transport_theorem_bulk")["values"]["residual"]
            for n in ("translating_bubble", "shear_interface")}
    order = {n: rec(n, "transport_theorem_order")["values"]["order"]
             for n in ("translating_bubble", "shear_interface")}
    rate = rec("dilating_circle", "surface_measure_rate")["values"]["residual"]
    ok = max(bulk.values()) <= 1e-6 and all(o is None or o >= 1.9 for o in order.values()) and rate <= 1e-6
    verdict(5, "transport theorem", ok,
            f"residual at dt=1e-3 translating {_fmt(bulk['translating_bubble'])}, shear "
            f"{_fmt(bulk['shear_interface'])} (tol 1e-6); order {_fmt(order['translating_bubble'])}, "
            f"{_fmt(order['shear_interface'])} (>= 1.9); dilating measure rate {_fmt(rate)} (tol 1e-6)")


def test_criterion_06_diffeomorphism_contract():
    names = ("translating_bubble", "shear_interface", "rotating_ellipse", "static_bubble_sphere")
    det = max(rec(n, "volume_preservation")["values"]["max_det_error"] for n in names)
    samples = min(rec(n, "volume_preservation")["values"]["samples"] for n in names)
    div = max(max(rec(n, "phi_star_divergence")["values"]["residuals"]) for n in names)
    pairs = min(len(rec(n, "phi_star_divergence")["values"]["residuals"]) for n in names)
    ok = det <= 1e-10 and div <= 1e-8 and samples >= 1000 and pairs >= 4
    verdict(6, "diffeomorphism contract", ok,
            f"max |det-1| {_fmt(det)} at {samples} samples (tol 1e-10); "
            f"pullback divergence residual {_fmt(div)} for {pairs} pairs per map (tol 1e-8)")


def test_criterion_07_energy_equality():
    s = rec("static_bubble", "energy_equality")["values"]["relative_gap"]
    t = rec("translating_bubble", "energy_equality")["values"]["relative_gap"]
    verdict(7, "energy equality", s <= 1e-12 and t <= 1e-6,
            f"static relative gap {_fmt(s)} (tol 1e-12); translating {_fmt(t)} (tol 1e-6)")


def test_criterion_08_transport_equation():
    res = {n: rec(n, "transport_equation")["values"] for n in ("translating_bubble", "rotating_bubble")}
    orders = {n: rec(n, "transport_equation_order")["values"] for n in ("translating_bubble", "rotating_bubble")}
    ok = all(v["max_residual"] <= 1e-5 and v["h"] == 1 / 256 for v in res.values())
    # least-squares order; a non-monotone sequence is reported but not fatal
    ok &= all(o["order"] is None or o["order"] >= 0.9 for o in orders.values())
    flags = ", ".join(f"{'monotone' if o.get('monotone', True) else 'non-monotone'}" for o in orders.values())
    verdict(8, "transport equation", ok,
            f"residual at h=1/256, dt=1e-3: translating {_fmt(res['translating_bubble']['max_residual'])}, "
            f"rotating {_fmt(res['rotating_bubble']['max_residual'])} (tol 1e-5); decay order "
            f"{_fmt(orders['translating_bubble']['order'])}, {_fmt(orders['rotating_bubble']['order'])} "
            f"(>= 0.9; {flags})")


def test_criterion_09_perimeter_identity():
    p = rec("static_bubble", "perimeter_identity")["values"]
    z = rec("static_bubble", "perimeter_equal_density")["values"]["tv_estimate"]
    ok = p["ratio"] >= 0.95 and z == 0.0
    verdict(9, "perimeter identity", ok,
            f"TV bound / ((b2-b1) 2 pi R) = {p['ratio']:.6f} (>= 0.95); equal densities give {z!r} (exact 0)")


def test_criterion_10_momentum_weak_form():
    s = rec("static_bubble", "momentum_weak_form")["values"]["max_residual"]
    tg = rec("single_phase_taylor_green", "momentum_weak_form")["values"]["max_residual"]
    lin = rec("static_bubble", "momentum_linearity")["values"]["max_relative"]
    ok = s <= 1e-7 and tg <= 1e-4 and lin <= 1e-10
    verdict(10, "momentum weak form", ok,
            f"static max residual {_fmt(s)} (tol 1e-7); Taylor-Green {_fmt(tg)} (tol 1e-4); "
            f"linearity {_fmt(lin)} relative (tol 1e-10)")


def test_criterion_11_pressure_pipeline():
    v = {c: rec("static_bubble", c)["values"] for c in
         ("pressure_jump", "pressure_zero_mean", "pressure_curl", "young_laplace", "young_laplace_order")}
    rank = rec("rankine_bubble", "young_laplace_order")["values"]
    static_order = v["young_laplace_order"]
    ok = (abs(v["pressure_jump"]["inner_minus_outer"] - 1.0) <= 1e-6 and v["pressure_jump"]["max_error"] <= 1e-6
          and v["pressure_zero_mean"]["relative_mean"] <= 1e-8 and v["pressure_curl"]["curl"] <= 1e-8
          and v["young_laplace"]["max_defect"] <= 1e-6
          and rec("static_bubble", "young_laplace_order")["status"] == "pass"
          and rank["order"] is not None and rank["order"] >= 1.8)
    verdict(11, "pressure pipeline", ok,
            f"p- - p+ = {v['pressure_jump']['inner_minus_outer']:.12f} (target 1, tol 1e-6); "
            f"mean {_fmt(v['pressure_zero_mean']['relative_mean'])} (tol 1e-8); "
            f"curl {_fmt(v['pressure_curl']['curl'])} (tol 1e-8); "
            f"YL defect {_fmt(v['young_laplace']['max_defect'])} (tol 1e-6); "
            f"static order {static_order.get('note', _fmt(static_order.get('order')))}; "
            f"Rankine order {_fmt(rank['order'])} (>= 1.8)")


def test_criterion_12_projection_constant():
    worst = max(rec(n, "projection_constant")["values"]["max_error"]
                for n in ("static_bubble", "rotating_ellipse", "static_bubble_sphere"))
    # b = nu (1 + cos theta) has normal mean 1 on the unit circle
    c = sf.circle(m=256)
    th = np.arctan2(c.nodes[:, 1], c.nodes[:, 0])
    C = pr.projection_constants(c, c.normals * (1 + np.cos(th))[:, None])["C"]
    ok = worst <= 1e-10 and abs(C - 1.0) <= 1e-10
    verdict(12, "projection constant", ok,
            f"max error for b = c nu and tangential b {_fmt(worst)} (tol 1e-10); "
            f"b = nu (1 + cos theta) gives C - 1 = {_fmt(C - 1.0)}")


def test_criterion_13_harmonic_extension():
    c = sf.circle(m=256)
    th = np.arctan2(c.nodes[:, 1], c.nodes[:, 0])
    rng = np.random.default_rng(13)
    r = rng.uniform(0.0, 0.9, 20)
    phi = rng.uniform(0.0, 2 * np.pi, 20)
    x = np.stack([r * np.cos(phi), r * np.sin(phi)], 1)
    const = float(np.abs(pr.harmonic_extension(c, np.full(c.m, -1.0)).value(x) + 1.0).max())
    cos_err = float(np.abs(pr.harmonic_extension(c, np.cos(th)).value(x) - r * np.cos(phi)).max())
    # exp(cos t) = I0(1) + 2 sum_k I_k(1) cos(k t); the disk solution damps mode k by r^k
    series = iv(0, 1) + 2 * sum(iv(k, 1) * r**k * np.cos(k * phi) for k in range(1, 40))
    exp_err = float(np.abs(pr.harmonic_extension(c, np.exp(np.cos(th))).value(x) - series).max())
    oracle = rec("static_bubble", "harmonic_extension_oracle")["values"]["max_difference"]
    ok = const <= 1e-10 and cos_err <= 1e-8 and exp_err <= 1e-8 and oracle <= 1e-8
    verdict(13, "harmonic extension", ok,
            f"constant data {_fmt(const)} (tol 1e-10); cos data vs series {_fmt(cos_err)}, "
            f"exp(cos) vs series {_fmt(exp_err)} at 20 points (tol 1e-8); vs double layer {_fmt(oracle)}")


def test_criterion_14_greg_vanishing():
    vals = {n: rec(n, "greg_vanishing")["values"]["max_abs"] for n in WEAK_SCENARIOS}
    ok = max(vals.values()) <= 1e-5
    verdict(14, "regularised functional vanishes", ok,
            ", ".join(f"{n} {_fmt(v)}" for n, v in vals.items()) + " (tol 1e-5)")


def test_criterion_15_determinism(tmp_path):
    subset = ["curvature_ground_truth", "weak_curvature_identity", "momentum_weak_form", "projection_constant"]
    texts = []
    for k in range(2):
        report = harness.run_scenario("static_bubble", checks=subset)
        path = harness.write_report(report, tmp_path / f"run{k}")
        texts.append(path.read_bytes())
    ok = texts[0] == texts[1]
    verdict(15, "determinism", ok, f"two report.json files of {len(texts[0])} bytes are "
            + ("byte-identical" if ok else "different"))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
