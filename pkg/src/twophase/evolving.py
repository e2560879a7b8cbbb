"""Space-time diffeomorphisms, moving interfaces and the identities tied to them.

Every diffeomorphism ``Phi(xi; t)`` carries its spatial gradient, time
derivative and inverse in closed form.  Surfaces at time ``t`` are node images
of the initial surface; bulk integrals over the moving inner region reuse the
reference region rule pushed through the map, weighted by ``det grad Phi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .quadrature import box_rule, time_rule
from .surface import (
    Curve,
    Ellipsoid,
    MappedSurface,
    mean_curvature,
    surface_integrate,
    surface_measure,
)

_T_TOL = 1e-12


class Diffeomorphism:
    """Base class: subclasses implement ``_map``, ``_grad``, ``_dt``, ``_inverse``."""

    dim: int = 2
    volume_preserving: bool = True
    rigid: bool = False
    kind: str = "diffeomorphism"

    def __init__(self, T: float = 1.0):
        if T <= 0:
            raise ValueError("time horizon T must be positive")
        self.T = float(T)

    def check_time(self, t: float) -> None:
        if t < -_T_TOL or t > self.T + _T_TOL:
            raise ValueError(f"t={t} outside [0, {self.T}]")

    def _points(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dim:
            raise ValueError(f"{self.kind} acts on {self.dim}D points, got shape {x.shape}")
        return x

    def __call__(self, xi, t: float) -> np.ndarray:
        return self._map(self._points(xi), float(t))

    def grad(self, xi, t: float) -> np.ndarray:
        """Jacobian F[q, i, j] = d Phi_i / d xi_j."""
        return self._grad(self._points(xi), float(t))

    def dt(self, xi, t: float) -> np.ndarray:
        return self._dt(self._points(xi), float(t))

    def inverse(self, x, t: float) -> np.ndarray:
        return self._inverse(self._points(x), float(t))

    def det(self, xi, t: float) -> np.ndarray:
        return np.linalg.det(self.grad(xi, t))

    def describe(self) -> dict:
        return {"kind": self.kind, "T": self.T}


class Identity(Diffeomorphism):
    kind = "identity"
    rigid = True

    def __init__(self, dim: int = 2, T: float = 1.0):
        super().__init__(T)
        self.dim = dim

    def _map(self, xi, t):
        return xi.copy()

    def _grad(self, xi, t):
        return np.broadcast_to(np.eye(self.dim), (xi.shape[0], self.dim, self.dim)).copy()

    def _dt(self, xi, t):
        return np.zeros_like(xi)

    def _inverse(self, x, t):
        return x.copy()


class Translation(Diffeomorphism):
    """Phi = xi + t c."""

    kind = "translation"
    rigid = True

    def __init__(self, c, T: float = 1.0):
        super().__init__(T)
        self.c = np.asarray(c, dtype=float)
        self.dim = self.c.size

    def _map(self, xi, t):
        return xi + t * self.c

    def _grad(self, xi, t):
        return np.broadcast_to(np.eye(self.dim), (xi.shape[0], self.dim, self.dim)).copy()

    def _dt(self, xi, t):
        return np.broadcast_to(self.c, xi.shape).copy()

    def _inverse(self, x, t):
        return x - t * self.c

    def describe(self):
        return {**super().describe(), "c": self.c.tolist()}


def _skew(axis):
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    return np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])


class Rotation(Diffeomorphism):
    """Rigid rotation with angular speed ``omega`` about ``center`` (and ``axis`` in 3D)."""

    kind = "rotation"
    rigid = True

    def __init__(self, omega: float, center=(0.0, 0.0), axis=(0.0, 0.0, 1.0), T: float = 1.0):
        super().__init__(T)
        self.omega = float(omega)
        self.center = np.asarray(center, dtype=float)
        self.dim = self.center.size
        if self.dim == 2:
            self._gen = np.array([[0.0, -1.0], [1.0, 0.0]])
        elif self.dim == 3:
            self._gen = _skew(axis)
        else:
            raise ValueError("rotation needs a 2D or 3D center")
        self.axis = np.asarray(axis, dtype=float)

    def matrix(self, t: float) -> np.ndarray:
        a = self.omega * t
        G = self._gen
        # Rodrigues; in 2D G @ G = -I so the same formula holds
        return np.eye(self.dim) + np.sin(a) * G + (1.0 - np.cos(a)) * (G @ G)

    def _map(self, xi, t):
        return self.center + (xi - self.center) @ self.matrix(t).T

    def _grad(self, xi, t):
        return np.broadcast_to(self.matrix(t), (xi.shape[0], self.dim, self.dim)).copy()

    def _dt(self, xi, t):
        Q = self.matrix(t)
        return self.omega * (xi - self.center) @ (self._gen @ Q).T

    def _inverse(self, x, t):
        return self.center + (x - self.center) @ self.matrix(t)

    def describe(self):
        out = {**super().describe(), "omega": self.omega, "center": self.center.tolist()}
        if self.dim == 3:
            out["axis"] = self.axis.tolist()
        return out


class Shear(Diffeomorphism):
    """Simple shear Phi = (xi_1 + rate t xi_2, xi_2, ...), det grad Phi = 1."""

    kind = "shear"

    def __init__(self, rate: float, dim: int = 2, T: float = 1.0):
        super().__init__(T)
        self.rate = float(rate)
        self.dim = dim

    def _matrix(self, t):
        A = np.eye(self.dim)
        A[0, 1] = self.rate * t
        return A

    def _map(self, xi, t):
        return xi @ self._matrix(t).T

    def _grad(self, xi, t):
        return np.broadcast_to(self._matrix(t), (xi.shape[0], self.dim, self.dim)).copy()

    def _dt(self, xi, t):
        out = np.zeros_like(xi)
        out[:, 0] = self.rate * xi[:, 1]
        return out

    def _inverse(self, x, t):
        return x @ np.linalg.inv(self._matrix(t)).T

    def describe(self):
        return {**super().describe(), "rate": self.rate}


class SineShear(Diffeomorphism):
    """Nonlinear shear Phi = (xi_1 + t A sin(k xi_2), xi_2, ...); volume preserving."""

    kind = "sine_shear"

    def __init__(self, amplitude: float, wavenumber: float = 1.0, dim: int = 2, T: float = 1.0):
        super().__init__(T)
        self.amplitude = float(amplitude)
        self.wavenumber = float(wavenumber)
        self.dim = dim

    def _map(self, xi, t):
        out = xi.copy()
        out[:, 0] += t * self.amplitude * np.sin(self.wavenumber * xi[:, 1])
        return out

    def _grad(self, xi, t):
        F = np.broadcast_to(np.eye(self.dim), (xi.shape[0], self.dim, self.dim)).copy()
        F[:, 0, 1] = t * self.amplitude * self.wavenumber * np.cos(self.wavenumber * xi[:, 1])
        return F

    def _dt(self, xi, t):
        out = np.zeros_like(xi)
        out[:, 0] = self.amplitude * np.sin(self.wavenumber * xi[:, 1])
        return out

    def _inverse(self, x, t):
        out = x.copy()
        out[:, 0] -= t * self.amplitude * np.sin(self.wavenumber * x[:, 1])
        return out

    def describe(self):
        return {**super().describe(), "amplitude": self.amplitude, "wavenumber": self.wavenumber}


class Dilation(Diffeomorphism):
    """Phi = c + (1 + rate t)(xi - c).  Not volume preserving."""

    kind = "dilation"
    volume_preserving = False

    def __init__(self, rate: float, center=(0.0, 0.0), T: float = 1.0):
        super().__init__(T)
        self.rate = float(rate)
        self.center = np.asarray(center, dtype=float)
        self.dim = self.center.size
        if 1.0 + self.rate * self.T <= 0:
            raise ValueError("dilation factor must stay positive on [0, T]")

    def _map(self, xi, t):
        return self.center + (1.0 + self.rate * t) * (xi - self.center)

    def _grad(self, xi, t):
        return np.broadcast_to((1.0 + self.rate * t) * np.eye(self.dim), (xi.shape[0], self.dim, self.dim)).copy()

    def _dt(self, xi, t):
        return self.rate * (xi - self.center)

    def _inverse(self, x, t):
        return self.center + (x - self.center) / (1.0 + self.rate * t)

    def describe(self):
        return {**super().describe(), "rate": self.rate, "center": self.center.tolist()}


class Composite(Diffeomorphism):
    """Phi = Phi_k o ... o Phi_1 (the first map in the list acts first)."""

    kind = "composite"

    def __init__(self, maps: Sequence[Diffeomorphism], T: float | None = None):
        if not maps:
            raise ValueError("composite needs at least one map")
        super().__init__(min(m.T for m in maps) if T is None else T)
        self.maps = list(maps)
        dims = {m.dim for m in self.maps}
        if len(dims) != 1:
            raise ValueError("composite maps must share a dimension")
        self.dim = dims.pop()
        self.volume_preserving = all(m.volume_preserving for m in self.maps)
        self.rigid = all(m.rigid for m in self.maps)

    def _map(self, xi, t):
        y = xi
        for m in self.maps:
            y = m._map(y, t)
        return y

    def _grad(self, xi, t):
        y = xi
        F = np.broadcast_to(np.eye(self.dim), (xi.shape[0], self.dim, self.dim)).copy()
        for m in self.maps:
            F = np.einsum("qij,qjk->qik", m._grad(y, t), F)
            y = m._map(y, t)
        return F

    def _dt(self, xi, t):
        y = xi
        v = np.zeros_like(xi)
        for m in self.maps:
            v = m._dt(y, t) + np.einsum("qij,qj->qi", m._grad(y, t), v)
            y = m._map(y, t)
        return v

    def _inverse(self, x, t):
        y = x
        for m in reversed(self.maps):
            y = m._inverse(y, t)
        return y

    def describe(self):
        return {**super().describe(), "maps": [m.describe() for m in self.maps]}


def regularity_spot_check(diffeo: Diffeomorphism, points, t: float, h: float = 1e-2) -> float:
    """Largest third-order forward difference quotient of Phi along the axes.

    A bounded value on a sample set is the cheap stand-in for C^3 regularity.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    worst = 0.0
    for i in range(diffeo.dim):
        e = np.zeros(diffeo.dim)
        e[i] = h
        vals = [diffeo(pts + k * e, t) for k in range(4)]
        d3 = (vals[3] - 3 * vals[2] + 3 * vals[1] - vals[0]) / h**3
        worst = max(worst, float(np.abs(d3).max()))
    return worst


# -- surfaces ---------------------------------------------------------------


def _mapped_region(reference, diffeo, t):
    def rule(radial_panels=8, radial_order=8, angular=None):
        pts, w = reference.region_rule(radial_panels, radial_order, angular)
        F = diffeo.grad(pts, t)
        return diffeo(pts, t), w * np.linalg.det(F)

    return rule


def advect_surface(surface, diffeo: Diffeomorphism, t: float):
    """Image of ``surface`` under ``Phi(.; t)``; quadrature comes from the mapped chart."""
    diffeo.check_time(t)
    if surface.dim != diffeo.dim:
        raise ValueError("surface and diffeomorphism dimensions differ")
    if surface.dim == 2:
        ref = surface

        def level(x):
            return ref.level_set(diffeo.inverse(x, t))

        out = Curve(
            diffeo(surface.nodes, t),
            surface.orientation,
            level_set=level,
            center=diffeo(surface.center[None], t)[0],
            label=f"{surface.label}@t={t:g}",
        )
        out._region_override = _mapped_region(ref, diffeo, t)
    else:
        if not isinstance(surface, Ellipsoid):
            raise TypeError("3D advection starts from a sphere or ellipsoid")
        out = MappedSurface(surface, diffeo, t)
    out.source = (surface, diffeo, float(t))
    return out


class EvolvingSurface:
    """Gamma(t) = Phi(Gamma(0); t) with cached snapshots."""

    def __init__(self, initial, diffeo: Diffeomorphism, lower=None, upper=None):
        self.initial = initial
        self.diffeo = diffeo
        self.lower = None if lower is None else np.asarray(lower, dtype=float)
        self.upper = None if upper is None else np.asarray(upper, dtype=float)
        self._cache: dict[float, object] = {}

    @property
    def T(self) -> float:
        return self.diffeo.T

    def at(self, t: float):
        t = float(t)
        if t not in self._cache:
            surf = self.initial if t == 0.0 and self.diffeo.kind == "identity" else advect_surface(
                self.initial, self.diffeo, t
            )
            if self.lower is not None:
                margin = min((surf.nodes - self.lower).min(), (self.upper - surf.nodes).min())
                if margin <= 0:
                    raise ValueError(f"interface leaves the domain at t={t:g}")
            self._cache[t] = surf
        return self._cache[t]

    def normal_velocity(self, t: float) -> np.ndarray:
        return normal_velocity(self.diffeo, self.at(t), t)


def _reference_points(diffeo, surface_t, t):
    src = getattr(surface_t, "source", None)
    if src is None:
        return diffeo.inverse(surface_t.nodes, t)
    ref, d, ts = src
    if d is not diffeo or abs(ts - t) > _T_TOL:
        raise ValueError("surface was not produced by this diffeomorphism at this time")
    return ref.nodes


def normal_velocity(diffeo: Diffeomorphism, surface_t, t: float) -> np.ndarray:
    """V(x) = dt Phi(Phi^{-1}(x; t); t) . nu(x)."""
    diffeo.check_time(t)
    xi = _reference_points(diffeo, surface_t, t)
    return np.sum(diffeo.dt(xi, t) * surface_t.normals, axis=1)


# -- the Phi-star transform --------------------------------------------------


def phi_star(diffeo: Diffeomorphism, t: float, f: Callable) -> Callable:
    """Return xi -> (grad Phi(xi; t))^{-1} f(Phi(xi; t))."""
    diffeo.check_time(t)

    def pulled(xi):
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        F = diffeo.grad(xi, t)
        return np.linalg.solve(F, f(diffeo(xi, t))[..., None])[..., 0]

    return pulled


def phi_star_inverse(diffeo: Diffeomorphism, t: float, h: Callable) -> Callable:
    """Return x -> grad Phi(xi; t) h(xi) with xi = Phi^{-1}(x; t)."""
    diffeo.check_time(t)

    def pushed(x):
        xi = diffeo.inverse(x, t)
        return np.einsum("qij,qj->qi", diffeo.grad(xi, t), h(xi))

    return pushed


def fd_divergence(g: Callable, points, step: float = 1e-5) -> np.ndarray:
    """Central-difference divergence with one Richardson step."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[1]

    def central(hs):
        total = np.zeros(pts.shape[0])
        for i in range(n):
            e = np.zeros(n)
            e[i] = hs
            total += (g(pts + e)[:, i] - g(pts - e)[:, i]) / (2 * hs)
        return total

    return (4.0 * central(step / 2) - central(step)) / 3.0


def check_div_preservation(diffeo: Diffeomorphism, t: float, f: Callable, div_f: Callable,
                           points) -> float:
    """max |div(Phi_* f)(xi) - (div f)(Phi(xi; t))| over ``points``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lhs = fd_divergence(phi_star(diffeo, t, f), pts)
    rhs = div_f(diffeo(pts, t))
    return float(np.abs(lhs - rhs).max())


# -- trace pullback ----------------------------------------------------------


@dataclass(frozen=True)
class PullbackResult:
    values: np.ndarray
    norm_reference: float
    norm_current: float
    ratio: float
    bound: float

    @property
    def within_bound(self) -> bool:
        return 1.0 / self.bound - 1e-12 <= self.ratio <= self.bound + 1e-12


def stretch_bound(diffeo: Diffeomorphism, points, times) -> float:
    """C with ||u o Phi||_{L2(Gamma0)} / ||u||_{L2(Gamma(t))} in [1/C, C].

    Area elements change by det F |F^{-T} nu|, which lies between the
    (n-1)-th powers of the extreme singular values of F.
    """
    smax, smin = 1.0, 1.0
    pts = np.atleast_2d(points)
    for t in np.atleast_1d(times):
        s = np.linalg.svd(diffeo.grad(pts, float(t)), compute_uv=False)
        smax = max(smax, float(s.max()))
        smin = min(smin, float(s.min()))
    k = diffeo.dim - 1
    return float(max(smax**k, smin ** (-k)) ** 0.5)


def pullback_trace(diffeo: Diffeomorphism, t: float, values, surface0, surface_t=None) -> PullbackResult:
    """u o Phi(.; t) on Gamma(0): the nodes correspond, so this is a relabelling."""
    values = np.asarray(values, dtype=float)
    if surface_t is None:
        surface_t = advect_surface(surface0, diffeo, t)
    if values.shape[0] != surface_t.m or surface0.m != surface_t.m:
        raise ValueError("node counts of field and surfaces do not match")
    sq = values**2 if values.ndim == 1 else np.sum(values**2, axis=1)
    n0 = float(np.sqrt(surface_integrate(surface0, sq)))
    nt = float(np.sqrt(surface_integrate(surface_t, sq)))
    bound = stretch_bound(diffeo, surface0.nodes, [t])
    return PullbackResult(values.copy(), n0, nt, n0 / nt if nt > 0 else float("nan"), bound)


# -- bulk trajectory --------------------------------------------------------


@dataclass
class BulkTrajectory:
    """Inner region Omega^-(t) = Phi(Omega^-(0); t) inside the box ``[lower, upper]``."""

    surface0: object
    diffeo: Diffeomorphism
    lower: np.ndarray
    upper: np.ndarray
    times: np.ndarray = field(default=None)
    region_resolution: tuple = (8, 8)
    _evolving: EvolvingSurface = field(init=False, repr=False)

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if np.any(self.upper <= self.lower):
            raise ValueError("box upper corner must exceed lower corner")
        if self.times is None:
            self.times = np.linspace(0.0, self.diffeo.T, 11)
        self.times = np.asarray(self.times, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("time grid must be strictly increasing")
        self._evolving = EvolvingSurface(self.surface0, self.diffeo, self.lower, self.upper)
        for t in self.times:
            self.surface(t)

    @property
    def T(self) -> float:
        return self.diffeo.T

    @property
    def dim(self) -> int:
        return self.diffeo.dim

    def surface(self, t: float):
        return self._evolving.at(t)

    def normal_velocity(self, t: float) -> np.ndarray:
        return self._evolving.normal_velocity(t)

    def inside(self, x, t: float) -> np.ndarray:
        return self.surface0.contains(self.diffeo.inverse(x, t))

    def level_set(self, x, t: float) -> np.ndarray:
        return self.surface0.level_set(self.diffeo.inverse(x, t))

    def region_rule(self, t: float, resolution: tuple | None = None):
        rp, ro = resolution or self.region_resolution
        return _mapped_region(self.surface0, self.diffeo, t)(rp, ro, None)

    def box_rule(self, box=None, panel_size: float = 0.125, order: int = 8):
        lo, hi = (self.lower, self.upper) if box is None else (np.asarray(box[0]), np.asarray(box[1]))
        panels = np.maximum(1, np.ceil((hi - lo) / panel_size - 1e-9).astype(int))
        return box_rule(lo, hi, panels, order)

    def integrate_inner(self, f: Callable, t: float) -> float:
        pts, w = self.region_rule(t)
        return float(np.sum(w * f(pts, t)))

    def phase_integral(self, f_minus: Callable, f_plus: Callable, t: float, box=None) -> float:
        """int_{Omega^-} f_minus + int_{Omega^+} f_plus, both integrands smooth on the box."""
        bp, bw = self.box_rule(box)
        outer = float(np.sum(bw * f_plus(bp, t)))
        pts, w = self.region_rule(t)
        inner = float(np.sum(w * (f_minus(pts, t) - f_plus(pts, t))))
        return outer + inner


def _central(g: Callable, t: float, dt: float, richardson: bool) -> float:
    d = (g(t + dt) - g(t - dt)) / (2 * dt)
    if not richardson:
        return d
    d2 = (g(t + dt / 2) - g(t - dt / 2)) / dt
    return (4 * d2 - d) / 3


def transport_check_bulk(traj: BulkTrajectory, f: Callable, dfdt: Callable, t: float,
                         dt: float | None = None, richardson: bool = False) -> dict:
    """Compare d/dt int_{Omega(t)} f with int dt f + int_Gamma f V."""
    dt = 1e-3 * traj.T if dt is None else dt
    if t - dt < -_T_TOL or t + dt > traj.T + _T_TOL:
        raise ValueError("t too close to the ends of [0, T] for central differencing")
    lhs = _central(lambda s: traj.integrate_inner(f, s), t, dt, richardson)
    surf = traj.surface(t)
    V = traj.normal_velocity(t)
    rhs = traj.integrate_inner(dfdt, t) + surface_integrate(surf, f(surf.nodes, t) * V)
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs)}


def transport_check_surface(surf: EvolvingSurface, f: Callable, dfdt: Callable, grad_f: Callable,
                            t: float, dt: float | None = None, richardson: bool = False) -> dict:
    """Residuals of the surface transport identity and of d/dt |Gamma| = -int kappa V."""
    dt = 1e-3 * surf.T if dt is None else dt
    if t - dt < -_T_TOL or t + dt > surf.T + _T_TOL:
        raise ValueError("t too close to the ends of [0, T] for central differencing")

    def integral(s):
        g = surf.at(s)
        return surface_integrate(g, f(g.nodes, s))

    gt = surf.at(t)
    V = surf.normal_velocity(t)
    kappa = mean_curvature(gt)
    fx = f(gt.nodes, t)
    dn = np.sum(grad_f(gt.nodes, t) * gt.normals, axis=1)
    lhs = _central(integral, t, dt, richardson)
    rhs = surface_integrate(gt, dfdt(gt.nodes, t) - fx * kappa * V + dn * V)
    dmeasure = _central(lambda s: surface_measure(surf.at(s)), t, dt, richardson)
    measure_rhs = -surface_integrate(gt, kappa * V)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "residual": abs(lhs - rhs),
        "measure_lhs": dmeasure,
        "measure_rhs": measure_rhs,
        "measure_residual": abs(dmeasure - measure_rhs),
    }


def spacetime_ibp(traj: BulkTrajectory, f: Callable, dfdt: Callable, phi: Callable, dphidt: Callable,
                  dt: float = 1e-2, support=None, order: int = 4) -> dict:
    """Residual of int int dt f phi + int int f dt phi + int int V f phi over the inner region.

    ``support`` is an optional (lower, upper) box holding the spatial support
    of ``phi``; it must lie inside the domain box.
    """
    if support is not None:
        lo, hi = np.asarray(support[0], float), np.asarray(support[1], float)
        if np.any(lo < traj.lower) or np.any(hi > traj.upper):
            raise ValueError("support of the test function leaves the domain")
    ts, wt = time_rule(0.0, traj.T, dt, order)
    a = b = c = 0.0
    for t, w in zip(ts, wt):
        pts, wx = traj.region_rule(t)
        a += w * float(np.sum(wx * dfdt(pts, t) * phi(pts, t)))
        b += w * float(np.sum(wx * f(pts, t) * dphidt(pts, t)))
        surf = traj.surface(t)
        V = traj.normal_velocity(t)
        c += w * surface_integrate(surf, V * f(surf.nodes, t) * phi(surf.nodes, t))
    return {"dt_f_phi": a, "f_dt_phi": b, "boundary": c, "residual": abs(a + b + c)}
