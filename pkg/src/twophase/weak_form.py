"""Functionals of the weak two-phase formulation.

Bulk integrals are phase-weighted: a :class:`PhaseRule` carries points with
separate weights for the inner phase (density beta_1) and the outer phase
(beta_2), so ``int rho f = sum (beta_1 w_minus + beta_2 w_plus) f``.  Two
backends build such rules:

``mapped``
    tensor Gauss rule on a box plus the reference region rule pushed through
    the diffeomorphism; spectrally accurate for smooth integrands.
``grid``
    Cartesian midpoint rule with cut-cell volume fractions; second order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evolving import BulkTrajectory
from .quadrature import box_rule, grid_cell_rule, time_rule
from .surface import mean_curvature, surface_integrate, surface_measure


@dataclass(frozen=True)
class MaterialParams:
    beta1: float
    beta2: float
    mu1: float
    mu2: float
    sigma: float

    def __post_init__(self):
        if not 0 < self.beta1 <= self.beta2:
            raise ValueError("densities must satisfy 0 < beta1 <= beta2")
        if self.mu1 <= 0 or self.mu2 <= 0:
            raise ValueError("viscosities must be positive")
        if self.sigma < 0:
            raise ValueError("surface tension must be non-negative")
        if self.beta1 == self.beta2 and self.mu1 != self.mu2:
            raise ValueError("equal densities need equal viscosities (mu is a function of rho)")

    def mu(self, rho):
        """mu(rho), affine between (beta1, mu1) and (beta2, mu2)."""
        rho = np.asarray(rho, dtype=float)
        if self.beta1 == self.beta2:
            return np.full_like(rho, self.mu1)
        s = (rho - self.beta2) / (self.beta1 - self.beta2)
        return s * self.mu1 + (1.0 - s) * self.mu2

    def scaled_sigma(self, factor: float) -> "MaterialParams":
        return MaterialParams(self.beta1, self.beta2, self.mu1, self.mu2, self.sigma * factor)


# -- phase state --------------------------------------------------------------


@dataclass
class PhaseState:
    """Bulk fields at one time: indicator, density, viscosity and velocity."""

    t: float
    traj: BulkTrajectory
    velocity: object
    params: MaterialParams

    def chi(self, x) -> np.ndarray:
        return self.traj.inside(x, self.t).astype(float)

    def rho(self, x) -> np.ndarray:
        p = self.params
        return (p.beta1 - p.beta2) * self.chi(x) + p.beta2

    def mu(self, x) -> np.ndarray:
        return self.params.mu(self.rho(x))

    def chi_from_rho(self, rho) -> np.ndarray:
        p = self.params
        if p.beta1 == p.beta2:
            raise ValueError("chi is not recoverable from rho when beta1 == beta2")
        return (np.asarray(rho) - p.beta2) / (p.beta1 - p.beta2)

    def consistency_residual(self, x) -> float:
        """Largest violation of rho in {beta1, beta2} and rho = (beta1 - beta2) chi + beta2."""
        p = self.params
        rho = self.rho(x)
        two_valued = np.minimum(np.abs(rho - p.beta1), np.abs(rho - p.beta2)).max()
        res = float(two_valued)
        if p.beta1 != p.beta2:
            res = max(res, float(np.abs(self.chi_from_rho(rho) - self.chi(x)).max()))
        return res

    def sym_grad(self, x) -> np.ndarray:
        return self.velocity.sym_grad(x, self.t)


# -- quadrature over the two phases ------------------------------------------


@dataclass(frozen=True)
class PhaseRule:
    points: np.ndarray
    w_minus: np.ndarray
    w_plus: np.ndarray

    def integrate(self, f_minus, f_plus=None) -> float:
        fm = np.asarray(f_minus)
        fp = fm if f_plus is None else np.asarray(f_plus)
        return float(np.sum(self.w_minus * fm) + np.sum(self.w_plus * fp))

    def weighted(self, a_minus: float, a_plus: float) -> np.ndarray:
        """Per-point weight for a phase-wise constant coefficient (rho or mu)."""
        return a_minus * self.w_minus + a_plus * self.w_plus


class PhaseQuadrature:
    """Builds :class:`PhaseRule` objects for a trajectory at a given time."""

    def __init__(self, traj: BulkTrajectory, backend: str = "mapped", h: float = 1 / 64,
                 subcells: int = 4, panel: float = 0.25, order: int = 8, region=(4, 8)):
        if backend not in ("mapped", "grid"):
            raise ValueError(f"unknown quadrature backend {backend!r}")
        self.traj = traj
        self.backend = backend
        self.h = h
        self.subcells = subcells
        self.panel = panel
        self.order = order
        self.region = region

    def _box(self, box):
        if box is None:
            return self.traj.lower, self.traj.upper
        lo = np.maximum(np.asarray(box[0], float), self.traj.lower)
        hi = np.minimum(np.asarray(box[1], float), self.traj.upper)
        return lo, hi

    def rule(self, t: float, box=None, inner_only: bool = False) -> PhaseRule:
        """Phase rule on ``box``; ``inner_only`` allows dropping points with zero inner weight."""
        lo, hi = self._box(box)
        if self.backend == "grid":
            if inner_only:
                nodes = self.traj.surface(t).nodes
                lo = np.maximum(lo, nodes.min(axis=0) - 2 * self.h)
                hi = np.minimum(hi, nodes.max(axis=0) + 2 * self.h)
                if np.any(hi <= lo):
                    return PhaseRule(np.empty((0, lo.size)), np.empty(0), np.empty(0))
            pts, w, frac = grid_cell_rule(lo, hi, self.h, lambda x: self.traj.level_set(x, t), self.subcells)
            return PhaseRule(pts, w * frac, w * (1.0 - frac))
        panels = np.maximum(1, np.ceil((hi - lo) / self.panel - 1e-9).astype(int))
        bp, bw = box_rule(lo, hi, panels, self.order)
        rp, rw = self.traj.region_rule(t, self.region)
        if box is not None:
            # region points outside the box only see integrands that vanish there
            keep = np.all((rp >= lo) & (rp <= hi), axis=1)
            rp, rw = rp[keep], rw[keep]
        pts = np.concatenate([bp, rp])
        return PhaseRule(pts, np.concatenate([np.zeros_like(bw), rw]), np.concatenate([bw, -rw]))


# -- curvature functional ------------------------------------------------------


def curvature_functional(surface, psi, grad_psi, mode: str = "kappa_form") -> float:
    """int kappa nu . psi  (kappa_form)  or  int nu (x) nu : grad psi  (nu_nu_form)."""
    x = surface.nodes
    nu = surface.normals
    if mode == "kappa_form":
        return surface_integrate(surface, mean_curvature(surface) * np.sum(nu * psi(x), axis=1))
    if mode == "nu_nu_form":
        return surface_integrate(surface, np.einsum("qi,qij,qj->q", nu, grad_psi(x), nu))
    raise ValueError(f"unknown mode {mode!r}")


# -- momentum balance ----------------------------------------------------------


def window_time_rule(psi, T, dt, order, min_panels: int = 8):
    """Gauss rule over the time support of ``psi``, with at least ``min_panels`` panels."""
    w = psi.window
    t0 = 0.0 if w.variant == "closed_at_zero" else w.t_a
    t1 = min(w.t_b, T)
    return time_rule(t0, t1, min(dt, (t1 - t0) / min_panels), order)


def momentum_residual(traj: BulkTrajectory, params: MaterialParams, psi, velocity,
                      initial_velocity=None, dt: float = 0.1, order: int = 4,
                      quadrature: PhaseQuadrature | None = None) -> dict:
    """LHS - RHS of the weak momentum balance against one div-free test field.

    The report holds each term with the sign it has when everything is moved
    to one side, so ``residual`` is their sum.
    """
    quad = quadrature or PhaseQuadrature(traj)
    box = psi.support_box()
    ts, wt = window_time_rule(psi, traj.T, dt, order)
    b1, b2 = params.beta1, params.beta2
    m1, m2 = params.mu1, params.mu2
    time_term = conv = visc = surf = 0.0
    for t, w in zip(ts, wt):
        rule = quad.rule(t, box)
        x = rule.points
        v = velocity.value(x, t)
        gpsi = psi.grad(x, t)
        rho_w = rule.weighted(b1, b2)
        time_term += w * float(np.sum(rho_w * np.sum(v * psi.dt(x, t), axis=1)))
        conv += w * float(np.sum(rho_w * np.einsum("qi,qj,qij->q", v, v, gpsi)))
        Dv = velocity.sym_grad(x, t)
        Dpsi = 0.5 * (gpsi + np.swapaxes(gpsi, 1, 2))
        visc -= 2.0 * w * float(np.sum(rule.weighted(m1, m2) * np.einsum("qij,qij->q", Dv, Dpsi)))
        g = traj.surface(t)
        nu = g.normals
        surf += 2.0 * params.sigma * w * surface_integrate(
            g, np.einsum("qi,qij,qj->q", nu, psi.grad(g.nodes, t), nu)
        )
    v0 = initial_velocity or velocity
    rule = quad.rule(0.0, box)
    x = rule.points
    initial = float(np.sum(rule.weighted(b1, b2) * np.sum(v0.value(x, 0.0) * psi.value(x, 0.0), axis=1)))
    terms = {"time": time_term, "convection": conv, "viscous": visc, "initial": initial, "surface_tension": surf}
    residual = sum(terms.values())
    return {"terms": terms, "residual": residual}


# -- energy --------------------------------------------------------------------


def kinetic_energy(traj, params, velocity, t, quadrature=None) -> float:
    quad = quadrature or PhaseQuadrature(traj)
    rule = quad.rule(t)
    v = velocity.value(rule.points, t)
    return 0.5 * float(np.sum(rule.weighted(params.beta1, params.beta2) * np.sum(v * v, axis=1)))


def dissipation(traj, params, velocity, tau1, tau2, dt=0.05, order=4, quadrature=None) -> float:
    quad = quadrature or PhaseQuadrature(traj)
    ts, wt = time_rule(tau1, tau2, dt, order)
    total = 0.0
    for t, w in zip(ts, wt):
        rule = quad.rule(t)
        Dv = velocity.sym_grad(rule.points, t)
        total += w * float(np.sum(rule.weighted(params.mu1, params.mu2) * np.einsum("qij,qij->q", Dv, Dv)))
    return 2.0 * total


def energy_audit(traj, params, velocity, tau1: float, tau2: float, dt=0.05, quadrature=None) -> dict:
    """Both sides of the energy balance between ``tau1`` and ``tau2``."""
    if tau1 > tau2:
        raise ValueError("need tau1 <= tau2")
    for tau in (tau1, tau2):
        if tau < 0 or tau > traj.T:
            raise ValueError(f"tau={tau} outside [0, T]")
    s = params.sigma
    e2 = kinetic_energy(traj, params, velocity, tau2, quadrature)
    e1 = kinetic_energy(traj, params, velocity, tau1, quadrature)
    a2 = surface_measure(traj.surface(tau2))
    a1 = surface_measure(traj.surface(tau1))
    diss = dissipation(traj, params, velocity, tau1, tau2, dt, quadrature=quadrature)
    lhs = 2 * s * a2 + e2 + diss
    rhs = 2 * s * a1 + e1
    return {
        "lhs": lhs,
        "rhs": rhs,
        "gap": lhs - rhs,
        "terms": {"surface_end": 2 * s * a2, "kinetic_end": e2, "dissipation": diss,
                  "surface_start": 2 * s * a1, "kinetic_start": e1},
    }


# -- transport equation ----------------------------------------------------------


def transport_residual(traj: BulkTrajectory, velocity, phi, dt: float = 1e-3, h: float = 1 / 128,
                       backend: str = "grid", order: int = 2, subcells: int = 4) -> dict:
    """|int int chi (dt phi + v . grad phi) + int chi0 phi(0)| for a scalar test ``phi``."""
    quad = PhaseQuadrature(traj, backend=backend, h=h, subcells=subcells)
    box = phi.support_box()
    w0 = phi.window
    t0 = 0.0 if w0.variant == "closed_at_zero" else w0.t_a
    ts, wt = time_rule(t0, min(w0.t_b, traj.T), dt, order)
    bulk = 0.0
    for t, w in zip(ts, wt):
        rule = quad.rule(t, box, inner_only=True)
        sel = rule.w_minus > 0
        x = rule.points[sel]
        integrand = phi.dt(x, t) + np.sum(velocity.value(x, t) * phi.grad(x, t), axis=1)
        bulk += w * float(np.sum(rule.w_minus[sel] * integrand))
    rule = quad.rule(0.0, box, inner_only=True)
    initial = float(np.sum(rule.w_minus * phi.value(rule.points, 0.0)))
    return {"bulk": bulk, "initial": initial, "residual": abs(bulk + initial)}


# -- total variation -------------------------------------------------------------


def _radial_field_divergence(y, r0, width, dim):
    """div of psi = -g(|y|) y/|y| with g a unit-height bump of half-width ``width`` at r0."""
    from .fields import bump

    r = np.linalg.norm(y, axis=1)
    s = (r - r0) / width
    B, B1, _ = bump(s**2)
    dg = B1 * 2.0 * s / width
    return -(dg + (dim - 1) * B / np.maximum(r, 1e-300))


def total_variation_identity(traj: BulkTrajectory, params: MaterialParams, t: float = 0.0,
                             width: float = 0.01, radii=None, centers=None,
                             radial_panels: int = 512) -> dict:
    """Dictionary lower bound of sup int rho div psi against (beta2 - beta1)|Gamma|.

    The dictionary holds radial fields -g(|x - c|)(x - c)/|x - c| with
    |psi| <= 1.  Their outer-phase part integrates to zero exactly and is
    dropped, so equal densities give exactly zero.
    """
    surf = traj.surface(t)
    geometric = (params.beta2 - params.beta1) * surface_measure(surf)
    if centers is None:
        centers = [np.asarray(surf.center, dtype=float)]
    if radii is None:
        d = np.linalg.norm(surf.nodes - centers[0], axis=1)
        radii = np.linspace(d.min(), d.max(), 41) if np.ptp(d) > 1e-12 else np.array([d.mean()])
    pts, w = traj.region_rule(t, (radial_panels, 8))
    best = -np.inf
    n = traj.dim
    for c in centers:
        y = pts - c
        for r0 in np.atleast_1d(radii):
            if r0 <= width:
                continue
            div = _radial_field_divergence(y, r0, width, n)
            value = (params.beta1 - params.beta2) * float(np.sum(w * div))
            best = max(best, value)
    best = float(best) if np.isfinite(best) else 0.0
    ratio = best / geometric if geometric > 0 else (1.0 if best == 0 else float("inf"))
    return {"tv_estimate": best, "geometric": geometric, "ratio": ratio}


# -- strong form -------------------------------------------------------------------


def strong_residual_bulk(traj: BulkTrajectory, params: MaterialParams, velocity, grad_p, points,
                         t: float, h: float) -> np.ndarray:
    """rho dt v + rho (v . grad) v - 2 mu div Dv + grad p at points off the interface.

    ``grad_p(x, t)`` is the pressure gradient; div v = 0 is assumed so that
    2 div Dv = Delta v.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    surf = traj.surface(t)
    if np.any(surf.distance(x) <= h):
        raise ValueError("strong residual requested within h of the interface")
    inside = traj.inside(x, t)
    rho = np.where(inside, params.beta1, params.beta2)[:, None]
    mu = np.where(inside, params.mu1, params.mu2)[:, None]
    return (rho * (velocity.dt(x, t) + velocity.convective(x, t)) - mu * velocity.laplacian(x, t)
            + grad_p(x, t))
