"""Oriented closed hypersurfaces and tangential calculus on them.

Two representations are supported:

* :class:`Curve` -- a closed planar curve sampled at equispaced parameter
  nodes; derivatives along the curve are spectral (FFT in the parameter).
* :class:`Ellipsoid` -- spheres and ellipsoids in 3D with closed-form normals
  and curvature and a product Gauss x trapezoid quadrature.

Normals are always the normal pointing out of the enclosed region, flipped
when ``orientation == -1``.  With that convention a round inner region has
negative mean curvature, ``kappa = -(n - 1) / R``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .quadrature import (
    composite_gauss,
    gauss_legendre,
    grid_cell_rule,
    periodic_nodes,
    spectral_derivative,
    trig_interpolate,
)


class DegenerateSurfaceError(ValueError):
    """Raised when a chart has a vanishing tangent somewhere."""


class ExtensionRequiredError(ValueError):
    """Raised when nodal data cannot be differentiated without an extension."""


def _check_finite(values, name="field"):
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{name} contains NaN or inf")
    return values


class Curve:
    """Closed planar curve given by nodes at theta_j = 2*pi*j/M."""

    dim = 2

    def __init__(self, nodes, orientation: int = 1, level_set=None, center=None, label="curve"):
        nodes = _check_finite(nodes, "nodes")
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ValueError("curve nodes must have shape (M, 2)")
        if orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        self.nodes = nodes
        self.m = nodes.shape[0]
        self.theta = periodic_nodes(self.m)
        self.orientation = orientation
        self.label = label
        self.d1 = spectral_derivative(nodes, 1)
        self.d2 = spectral_derivative(nodes, 2)
        self.speed = np.linalg.norm(self.d1, axis=1)
        scale = max(np.abs(nodes).max(), 1.0)
        if self.speed.min() <= 1e-12 * scale:
            raise DegenerateSurfaceError(f"{label}: chart has a vanishing tangent")
        self.tangent = self.d1 / self.speed[:, None]
        # sign of the enclosed area tells us whether the parametrisation is ccw
        cross = nodes[:, 0] * self.d1[:, 1] - nodes[:, 1] * self.d1[:, 0]
        self._ccw = 1.0 if cross.sum() > 0 else -1.0
        outward = self._ccw * np.stack([self.d1[:, 1], -self.d1[:, 0]], axis=1) / self.speed[:, None]
        self.normals = orientation * outward
        self.weights = self.speed * (2.0 * np.pi / self.m)
        self._level_set = level_set
        self._center = None if center is None else np.asarray(center, dtype=float)
        self._region_override = None
        self._tree = None

    # -- basic geometry -------------------------------------------------
    @property
    def center(self) -> np.ndarray:
        if self._center is None:
            self._center = self.centroid()
        return self._center

    def centroid(self) -> np.ndarray:
        x, y = self.nodes[:, 0], self.nodes[:, 1]
        dx, dy = self.d1[:, 0], self.d1[:, 1]
        h = 2.0 * np.pi / self.m
        area = 0.5 * np.sum(x * dy - y * dx) * h
        cx = 0.5 * np.sum(x * x * dy) * h / area
        cy = -0.5 * np.sum(y * y * dx) * h / area
        return np.array([cx, cy])

    def arclength_derivative(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        d = spectral_derivative(values, 1)
        shape = (self.m,) + (1,) * (values.ndim - 1)
        return d / self.speed.reshape(shape)

    def level_set(self, x) -> np.ndarray:
        """Signed function, negative inside the enclosed region."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self._level_set is not None:
            return self._level_set(x)
        from matplotlib.path import Path

        inside = Path(self.upsampled(8)).contains_points(x)
        return np.where(inside, -1.0, 1.0) * self.distance(x)

    def contains(self, x) -> np.ndarray:
        return self.level_set(x) < 0.0

    def upsampled(self, factor: int) -> np.ndarray:
        theta = periodic_nodes(self.m * factor)
        return trig_interpolate(self.nodes, theta)

    def distance(self, x) -> np.ndarray:
        """Unsigned distance to the curve, from a refined node cloud."""
        if self._tree is None:
            self._tree = cKDTree(self.upsampled(16))
        d, _ = self._tree.query(np.atleast_2d(x))
        return d

    def feature_size(self) -> float:
        kappa = np.abs(mean_curvature(self))
        return float(1.0 / max(kappa.max(), 1e-12))

    def with_orientation(self, orientation: int) -> "Curve":
        out = Curve(self.nodes, orientation, self._level_set, self._center, self.label)
        out._region_override = self._region_override
        return out

    def region_rule(self, radial_panels: int = 8, radial_order: int = 8, angular: int | None = None):
        """Quadrature for the enclosed region, exact-geometry and high order.

        Star-shaped regions are swept radially from the centre; mapped regions
        reuse the rule of their reference region pushed through the map.
        """
        if self._region_override is not None:
            return self._region_override(radial_panels, radial_order, angular)
        c = self.center
        if angular is None or angular == self.m:
            rel = self.nodes - c
            drel = self.d1
        else:
            theta = periodic_nodes(angular)
            rel = trig_interpolate(self.nodes, theta) - c
            drel = trig_interpolate(self.d1, theta)
        jac = rel[:, 0] * drel[:, 1] - rel[:, 1] * drel[:, 0]
        if not (np.all(jac > 0) or np.all(jac < 0)):
            raise ValueError(f"{self.label}: region is not star-shaped about its centre")
        jac = np.abs(jac)
        s, ws = composite_gauss(0.0, 1.0, radial_panels, radial_order)
        na = rel.shape[0]
        pts = c + s[:, None, None] * rel[None, :, :]
        wts = (s * ws)[:, None] * jac[None, :] * (2.0 * np.pi / na)
        return pts.reshape(-1, 2), wts.ravel()


class Ellipsoid:
    """Sphere or axis-aligned ellipsoid with product quadrature.

    ``n_theta`` Gauss nodes in cos(theta) times ``n_phi`` trapezoid nodes in phi.
    """

    dim = 3

    def __init__(self, center, semi_axes, n_theta=64, n_phi=128, orientation=1, label="ellipsoid"):
        if orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        self._center = np.asarray(center, dtype=float)
        self.semi_axes = np.asarray(semi_axes, dtype=float)
        if self.semi_axes.shape != (3,) or np.any(self.semi_axes <= 0):
            raise DegenerateSurfaceError("ellipsoid needs three positive semi-axes")
        self.n_theta, self.n_phi = n_theta, n_phi
        self.orientation = orientation
        self.label = label
        u, wu = gauss_legendre(n_theta)
        phi = periodic_nodes(n_phi)
        U, P = np.meshgrid(u, phi, indexing="ij")
        W = np.repeat(wu[:, None], n_phi, axis=1) * (2.0 * np.pi / n_phi)
        st = np.sqrt(1.0 - U**2)
        a, b, c = self.semi_axes
        unit = np.stack([st * np.cos(P), st * np.sin(P), U], axis=-1).reshape(-1, 3)
        self._unit = unit
        self.nodes = self._center + unit * self.semi_axes
        U, P, st = U.ravel(), P.ravel(), st.ravel()
        # tangents d/dtheta and (d/dphi)/sin(theta)
        self._t_theta = np.stack([a * U * np.cos(P), b * U * np.sin(P), -c * st], axis=1)
        self._t_phi = np.stack([-a * np.sin(P), b * np.cos(P), np.zeros_like(P)], axis=1)
        area_el = np.linalg.norm(np.cross(self._t_theta, self._t_phi), axis=1)
        self.weights = area_el * W.ravel()
        self.m = self.nodes.shape[0]
        g = self._level_grad(self.nodes)
        self.normals = orientation * g / np.linalg.norm(g, axis=1)[:, None]

    @property
    def center(self):
        return self._center

    def _level_grad(self, x):
        return 2.0 * (x - self._center) / self.semi_axes**2

    def level_set(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.sum(((x - self._center) / self.semi_axes) ** 2, axis=1) - 1.0

    def contains(self, x):
        return self.level_set(x) < 0.0

    def distance(self, x):
        # only exact for spheres; a first-order estimate otherwise
        x = np.atleast_2d(np.asarray(x, dtype=float))
        g = self._level_grad(x)
        return np.abs(self.level_set(x)) / np.maximum(np.linalg.norm(g, axis=1), 1e-300)

    def feature_size(self):
        return float(self.semi_axes.min() ** 2 / self.semi_axes.max())

    def with_orientation(self, orientation):
        return Ellipsoid(self._center, self.semi_axes, self.n_theta, self.n_phi, orientation, self.label)

    def curvature_values(self):
        """Closed form K = -P H P / |grad g| for g = sum (x_i / a_i)^2 - 1."""
        nu = self.orientation * self.normals  # outward, orientation-free
        g = self._level_grad(self.nodes)
        P = np.eye(3)[None] - nu[:, :, None] * nu[:, None, :]
        H = np.diag(2.0 / self.semi_axes**2)
        K = -np.einsum("qij,jk,qkl->qil", P, H, P) / np.linalg.norm(g, axis=1)[:, None, None]
        return self.orientation * K

    def region_rule(self, radial_panels=6, radial_order=8, angular=None):
        n_theta = self.n_theta if angular is None else angular
        n_phi = 2 * n_theta
        s, ws = composite_gauss(0.0, 1.0, radial_panels, radial_order)
        u, wu = gauss_legendre(n_theta)
        phi = periodic_nodes(n_phi)
        S, U, P = np.meshgrid(s, u, phi, indexing="ij")
        st = np.sqrt(1.0 - U**2)
        dirs = np.stack([st * np.cos(P), st * np.sin(P), U], axis=-1)
        pts = self._center + S[..., None] * dirs * self.semi_axes
        w = (ws * s**2)[:, None, None] * wu[None, :, None] * (2.0 * np.pi / n_phi)
        w = np.broadcast_to(w, S.shape) * np.prod(self.semi_axes)
        return pts.reshape(-1, 3), w.ravel()


class MappedSurface:
    """Image of an :class:`Ellipsoid` under a diffeomorphism (3D).

    Only measure and normals are available; curvature of mapped 3D surfaces
    is not implemented.
    """

    dim = 3

    def __init__(self, reference: Ellipsoid, diffeo, t: float):
        self.reference = reference
        self.diffeo = diffeo
        self.t = t
        self.orientation = reference.orientation
        self.label = f"{reference.label}@t={t:g}"
        ref = reference.nodes
        self.nodes = diffeo(ref, t)
        F = diffeo.grad(ref, t)
        ta = np.einsum("qij,qj->qi", F, reference._t_theta)
        tb = np.einsum("qij,qj->qi", F, reference._t_phi)
        cr = np.cross(ta, tb)
        area = np.linalg.norm(cr, axis=1)
        self.weights = reference.weights * area / np.linalg.norm(
            np.cross(reference._t_theta, reference._t_phi), axis=1
        )
        # cross product of the mapped tangents keeps the outward sense for det F > 0
        ref_out = np.cross(reference._t_theta, reference._t_phi)
        sign = np.sign(np.sum(ref_out * reference.normals * reference.orientation, axis=1))
        self.normals = self.orientation * sign[:, None] * cr / area[:, None]
        self.m = self.nodes.shape[0]

    @property
    def center(self):
        return self.diffeo(self.reference.center[None], self.t)[0]

    def level_set(self, x):
        return self.reference.level_set(self.diffeo.inverse(np.atleast_2d(x), self.t))

    def contains(self, x):
        return self.level_set(x) < 0.0

    def distance(self, x):
        tree = cKDTree(self.nodes)
        return tree.query(np.atleast_2d(x))[0]

    def feature_size(self):
        return self.reference.feature_size()

    def curvature_values(self):
        raise NotImplementedError("curvature of mapped 3D surfaces is not available")

    def region_rule(self, radial_panels=6, radial_order=8, angular=None):
        pts, w = self.reference.region_rule(radial_panels, radial_order, angular)
        F = self.diffeo.grad(pts, self.t)
        return self.diffeo(pts, self.t), w * np.linalg.det(F)


# -- constructors ------------------------------------------------------------


def circle(center=(0.0, 0.0), radius=1.0, m=256, orientation=1) -> Curve:
    c = np.asarray(center, dtype=float)
    th = periodic_nodes(m)
    nodes = c + radius * np.stack([np.cos(th), np.sin(th)], axis=1)

    def level(x):
        d = x - c
        return np.sqrt(np.einsum("ij,ij->i", d, d)) - radius

    return Curve(nodes, orientation, level, c, label="circle")


def ellipse(center=(0.0, 0.0), a=1.5, b=0.7, m=256, angle=0.0, orientation=1) -> Curve:
    c = np.asarray(center, dtype=float)
    th = periodic_nodes(m)
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    local = np.stack([a * np.cos(th), b * np.sin(th)], axis=1)
    nodes = c + local @ rot.T

    def level(x):
        y = (x - c) @ rot
        return np.sqrt((y[:, 0] / a) ** 2 + (y[:, 1] / b) ** 2) - 1.0

    return Curve(nodes, orientation, level, c, label="ellipse")


def fourier_curve(center=(0.0, 0.0), r0=1.0, cos_coeffs=(), sin_coeffs=(), m=256, orientation=1) -> Curve:
    """Star-shaped curve r(theta) = r0 + sum a_k cos(k theta) + b_k sin(k theta)."""
    c = np.asarray(center, dtype=float)
    a = np.asarray(cos_coeffs, dtype=float)
    b = np.asarray(sin_coeffs, dtype=float)

    def radius(theta):
        r = np.full_like(theta, r0, dtype=float)
        for k, ak in enumerate(a, start=1):
            r = r + ak * np.cos(k * theta)
        for k, bk in enumerate(b, start=1):
            r = r + bk * np.sin(k * theta)
        return r

    th = periodic_nodes(m)
    r = radius(th)
    if np.any(r <= 0):
        raise DegenerateSurfaceError("fourier curve radius must stay positive")
    nodes = c + r[:, None] * np.stack([np.cos(th), np.sin(th)], axis=1)

    def level(x):
        d = x - c
        return np.linalg.norm(d, axis=1) - radius(np.arctan2(d[:, 1], d[:, 0]))

    return Curve(nodes, orientation, level, c, label="fourier_curve")


def curve_from_chart(chart: Callable, m: int, orientation=1, level_set=None, center=None) -> Curve:
    """Sample a closed-form periodic chart; rejects charts that do not close."""
    start, end = chart(np.array([0.0])), chart(np.array([2.0 * np.pi]))
    if not np.allclose(start, end, atol=1e-12, rtol=0):
        raise ValueError("chart is not 2*pi-periodic")
    return Curve(chart(periodic_nodes(m)), orientation, level_set, center)


def sphere(center=(0.0, 0.0, 0.0), radius=1.0, n_theta=64, n_phi=128, orientation=1) -> Ellipsoid:
    return Ellipsoid(center, (radius, radius, radius), n_theta, n_phi, orientation, label="sphere")


# -- operations -------------------------------------------------------------


def surface_measure(surface) -> float:
    """H^{n-1} of the surface as the sum of quadrature weights."""
    return float(np.sum(surface.weights))


def normal_field(surface) -> np.ndarray:
    return surface.normals


def _project(surface, vectors):
    nu = surface.normals
    return vectors - np.sum(vectors * nu, axis=1)[:, None] * nu


def tangential_gradient(surface, values=None, grad: Callable | None = None) -> np.ndarray:
    """Tangential gradient of a scalar field on the surface.

    Pass ``grad`` (ambient gradient of an extension) or, on curves, nodal
    ``values`` which are differentiated spectrally along arclength.
    """
    if grad is not None:
        return _project(surface, np.asarray(grad(surface.nodes), dtype=float))
    if values is None:
        raise ValueError("need nodal values or an ambient gradient")
    if surface.dim != 2:
        raise ExtensionRequiredError("3D surfaces need a closed-form extension (grad=...)")
    values = _check_finite(values)
    return surface.arclength_derivative(values)[:, None] * surface.tangent


def tangential_divergence(surface, values=None, jac: Callable | None = None) -> np.ndarray:
    """div_Gamma u = sum_i delta_i u_i.

    ``jac`` returns the ambient Jacobian J[q, i, j] = d_j u_i; nodal ``values``
    of shape (M, 2) are accepted on curves.
    """
    if jac is not None:
        J = np.asarray(jac(surface.nodes), dtype=float)
        nu = surface.normals
        P = np.eye(surface.dim)[None] - nu[:, :, None] * nu[:, None, :]
        return np.einsum("qij,qji->q", J, P)
    if values is None:
        raise ValueError("need nodal values or an ambient Jacobian")
    if surface.dim != 2:
        raise ExtensionRequiredError("3D surfaces need a closed-form extension (jac=...)")
    values = _check_finite(values)
    return np.sum(surface.tangent * surface.arclength_derivative(values), axis=1)


@dataclass(frozen=True)
class CurvatureMatrix:
    values: np.ndarray  # (M, n, n), K_ij = -delta_i nu_j
    normals: np.ndarray

    @property
    def symmetry_residual(self) -> float:
        return float(np.abs(self.values - np.swapaxes(self.values, 1, 2)).max())

    @property
    def normal_residual(self) -> float:
        return float(np.abs(np.einsum("qij,qj->qi", self.values, self.normals)).max())

    def trace(self) -> np.ndarray:
        return np.trace(self.values, axis1=1, axis2=2)

    def principal_curvatures(self) -> np.ndarray:
        """Eigenvalues belonging to eigenvectors orthogonal to the normal."""
        sym = 0.5 * (self.values + np.swapaxes(self.values, 1, 2))
        w, v = np.linalg.eigh(sym)
        along = np.abs(np.einsum("qij,qi->qj", v, self.normals))
        n = self.values.shape[1]
        out = np.empty((w.shape[0], n - 1))
        for q in range(w.shape[0]):
            drop = np.argmax(along[q])
            out[q] = np.delete(w[q], drop)
        return out


def curvature_matrix(surface) -> CurvatureMatrix:
    if surface.dim == 2:
        dnu = surface.arclength_derivative(surface.normals)
        K = -surface.tangent[:, :, None] * dnu[:, None, :]
    else:
        K = surface.curvature_values()
    return CurvatureMatrix(K, surface.normals)


def mean_curvature(surface) -> np.ndarray:
    return curvature_matrix(surface).trace()


def surface_integrate(surface, values) -> float:
    values = _check_finite(values)
    if values.shape[0] != surface.m:
        raise ValueError("field node count does not match the surface")
    w = surface.weights.reshape((surface.m,) + (1,) * (values.ndim - 1))
    return np.sum(w * values, axis=0) if values.ndim > 1 else float(np.sum(surface.weights * values))


def check_surface_ibp(surface, axis: int, values=None, grad: Callable | None = None,
                      func: Callable | None = None) -> float:
    """|int delta_i f + int f kappa nu_i| for one coordinate direction.

    With ``grad`` the nodal values come from ``func`` (or ``values``); without
    it the nodal values are differentiated spectrally.
    """
    if values is None:
        if func is None:
            raise ValueError("need nodal values or a closed-form function")
        values = func(surface.nodes)
    values = _check_finite(values)
    dgrad = tangential_gradient(surface, values=values, grad=grad)
    kappa = mean_curvature(surface)
    lhs = surface_integrate(surface, dgrad[:, axis])
    rhs = surface_integrate(surface, values * kappa * surface.normals[:, axis])
    return float(abs(lhs + rhs))


def gauss_green(surface, psi: Callable, div_psi: Callable, h: float, subcells: int = 4) -> dict:
    """Compare the bulk integral of div(psi) over the enclosed region with the flux.

    The bulk side uses the Cartesian midpoint rule with sub-sampled cut cells,
    with linearised volume fractions in cut cells; the flux uses the surface quadrature.
    """
    fs = surface.feature_size()
    if h > 0.25 * fs:
        warnings.warn(
            f"grid spacing h={h:g} is coarse for feature size {fs:.3g}; use h <= {0.1 * fs:.3g}",
            stacklevel=2,
        )
    lo = surface.nodes.min(axis=0) - 2 * h
    hi = surface.nodes.max(axis=0) + 2 * h
    pts, w, frac = grid_cell_rule(lo, hi, h, surface.level_set, subcells)
    bulk = float(np.sum(w * frac * div_psi(pts)))
    flux = float(np.sum(surface.weights * np.sum(psi(surface.nodes) * surface.normals, axis=1)))
    return {"bulk": bulk, "flux": flux, "residual": abs(bulk - flux)}
