"""Closed-form velocity families, space-time scalars and div-free test fields.

Vector fields expose ``value(x, t)``, the Jacobian ``grad(x, t)`` with
``J[q, i, j] = d_j v_i``, ``dt(x, t)`` and ``laplacian(x, t)``.  Points have
shape (N, n); time is a scalar.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _pts(x):
    return np.atleast_2d(np.asarray(x, dtype=float))


class VelocityField:
    name = "velocity"
    dim = 2

    def __call__(self, x, t):
        return self.value(x, t)

    def convective(self, x, t):
        """(v . grad) v."""
        return np.einsum("qij,qj->qi", self.grad(x, t), self.value(x, t))

    def sym_grad(self, x, t):
        J = self.grad(x, t)
        return 0.5 * (J + np.swapaxes(J, 1, 2))

    def exact_pressure(self, x, t, rho):
        """Pressure of the closed-form solution for density ``rho``, if there is one."""
        raise NotImplementedError(f"{self.name} has no closed-form pressure")

    def describe(self) -> dict:
        return {"kind": self.name}


class ZeroVelocity(VelocityField):
    name = "zero"

    def __init__(self, dim: int = 2):
        self.dim = dim

    def value(self, x, t):
        return np.zeros_like(_pts(x))

    def grad(self, x, t):
        x = _pts(x)
        return np.zeros((x.shape[0], self.dim, self.dim))

    def dt(self, x, t):
        return np.zeros_like(_pts(x))

    def laplacian(self, x, t):
        return np.zeros_like(_pts(x))

    def exact_pressure(self, x, t, rho):
        return np.zeros(_pts(x).shape[0])


class UniformVelocity(ZeroVelocity):
    name = "uniform"

    def __init__(self, c):
        self.c = np.asarray(c, dtype=float)
        self.dim = self.c.size

    def value(self, x, t):
        return np.broadcast_to(self.c, _pts(x).shape).copy()

    def describe(self):
        return {"kind": self.name, "c": self.c.tolist()}


class RigidRotation(VelocityField):
    """v = omega (-(x_2 - c_2), x_1 - c_1); steady with p = rho omega^2 r^2 / 2."""

    name = "rigid_rotation"

    def __init__(self, omega: float, center=(0.0, 0.0)):
        self.omega = float(omega)
        self.center = np.asarray(center, dtype=float)
        self._W = self.omega * np.array([[0.0, -1.0], [1.0, 0.0]])

    def value(self, x, t):
        return (_pts(x) - self.center) @ self._W.T

    def grad(self, x, t):
        return np.broadcast_to(self._W, (_pts(x).shape[0], 2, 2)).copy()

    def dt(self, x, t):
        return np.zeros_like(_pts(x))

    def laplacian(self, x, t):
        return np.zeros_like(_pts(x))

    def exact_pressure(self, x, t, rho):
        r2 = np.sum((_pts(x) - self.center) ** 2, axis=1)
        return rho * self.omega**2 * r2 / 2.0

    def describe(self):
        return {"kind": self.name, "omega": self.omega, "center": self.center.tolist()}


class SimpleShear(VelocityField):
    """v = (rate x_2, 0, ...); steady Stokes and Navier-Stokes flow with constant p."""

    name = "simple_shear"

    def __init__(self, rate: float, dim: int = 2):
        self.rate = float(rate)
        self.dim = dim

    def value(self, x, t):
        x = _pts(x)
        out = np.zeros_like(x)
        out[:, 0] = self.rate * x[:, 1]
        return out

    def grad(self, x, t):
        J = np.zeros((_pts(x).shape[0], self.dim, self.dim))
        J[:, 0, 1] = self.rate
        return J

    def dt(self, x, t):
        return np.zeros_like(_pts(x))

    def laplacian(self, x, t):
        return np.zeros_like(_pts(x))

    def exact_pressure(self, x, t, rho):
        return np.zeros(_pts(x).shape[0])

    def describe(self):
        return {"kind": self.name, "rate": self.rate}


class TaylorGreen(VelocityField):
    """Decaying 2D Taylor-Green vortex with kinematic viscosity ``nu``."""

    name = "taylor_green"

    def __init__(self, nu: float, amplitude: float = 1.0, k: float = 1.0):
        self.nu = float(nu)
        self.U = float(amplitude)
        self.k = float(k)

    def _decay(self, t):
        return self.U * np.exp(-2.0 * self.nu * self.k**2 * t)

    def value(self, x, t):
        x = _pts(x)
        kx, ky = self.k * x[:, 0], self.k * x[:, 1]
        return self._decay(t) * np.stack([np.sin(kx) * np.cos(ky), -np.cos(kx) * np.sin(ky)], axis=1)

    def grad(self, x, t):
        x = _pts(x)
        kx, ky = self.k * x[:, 0], self.k * x[:, 1]
        a = self._decay(t) * self.k
        J = np.empty((x.shape[0], 2, 2))
        J[:, 0, 0] = a * np.cos(kx) * np.cos(ky)
        J[:, 0, 1] = -a * np.sin(kx) * np.sin(ky)
        J[:, 1, 0] = a * np.sin(kx) * np.sin(ky)
        J[:, 1, 1] = -a * np.cos(kx) * np.cos(ky)
        return J

    def dt(self, x, t):
        return -2.0 * self.nu * self.k**2 * self.value(x, t)

    def laplacian(self, x, t):
        return -2.0 * self.k**2 * self.value(x, t)

    def exact_pressure(self, x, t, rho):
        x = _pts(x)
        amp = rho * self._decay(t) ** 2 / 4.0
        return amp * (np.cos(2 * self.k * x[:, 0]) + np.cos(2 * self.k * x[:, 1]))

    def pressure_gradient(self, x, t, rho):
        x = _pts(x)
        amp = -rho * self._decay(t) ** 2 * self.k / 2.0
        return amp * np.stack([np.sin(2 * self.k * x[:, 0]), np.sin(2 * self.k * x[:, 1])], axis=1)

    def describe(self):
        return {"kind": self.name, "nu": self.nu, "amplitude": self.U, "k": self.k}


class RankineVortex(VelocityField):
    """Rigid rotation for r < R joined to the potential vortex omega R^2 / r outside.

    Each piece is a steady Navier-Stokes flow; the pressure is
    ``rho omega^2 r^2 / 2`` inside and ``-rho omega^2 R^4 / (2 r^2)`` outside.
    """

    name = "rankine"

    def __init__(self, omega: float, radius: float = 1.0, center=(0.0, 0.0)):
        self.omega = float(omega)
        self.R = float(radius)
        self.center = np.asarray(center, dtype=float)

    def _split(self, x):
        y = _pts(x) - self.center
        r2 = np.sum(y**2, axis=1)
        return y, r2, r2 < self.R**2

    def value(self, x, t):
        y, r2, inner = self._split(x)
        perp = np.stack([-y[:, 1], y[:, 0]], axis=1)
        scale = np.where(inner, 1.0, self.R**2 / np.maximum(r2, 1e-300))
        return self.omega * scale[:, None] * perp

    def grad(self, x, t):
        y, r2, inner = self._split(x)
        J = np.empty((y.shape[0], 2, 2))
        J[:, 0, 0], J[:, 0, 1], J[:, 1, 0], J[:, 1, 1] = 0.0, -1.0, 1.0, 0.0
        # outside: d_j (R^2 perp_i / r^2)
        r4 = np.maximum(r2, 1e-300) ** 2
        x1, x2 = y[:, 0], y[:, 1]
        out = np.empty_like(J)
        out[:, 0, 0] = 2 * x1 * x2 / r4
        out[:, 0, 1] = (x2**2 - x1**2) / r4
        out[:, 1, 0] = (x2**2 - x1**2) / r4
        out[:, 1, 1] = -2 * x1 * x2 / r4
        out *= self.R**2
        return self.omega * np.where(inner[:, None, None], J, out)

    def dt(self, x, t):
        return np.zeros_like(_pts(x))

    def laplacian(self, x, t):
        return np.zeros_like(_pts(x))

    def exact_pressure(self, x, t, rho):
        y, r2, inner = self._split(x)
        inside = rho * self.omega**2 * r2 / 2.0
        outside = -rho * self.omega**2 * self.R**4 / (2.0 * np.maximum(r2, 1e-300))
        return np.where(inner, inside, outside)

    def describe(self):
        return {"kind": self.name, "omega": self.omega, "radius": self.R, "center": self.center.tolist()}


class RandomDivFree(VelocityField):
    """Divergence-free field from a random trigonometric stream function (diagnostics only)."""

    name = "random_divfree"

    def __init__(self, seed: int = 0, modes: int = 4, amplitude: float = 1.0, decay: float = 0.5):
        rng = np.random.default_rng(seed)
        self.seed = seed
        self.k = rng.integers(-3, 4, size=(modes, 2)).astype(float)
        self.k[np.all(self.k == 0, axis=1)] = (1.0, 0.0)
        self.a = amplitude * rng.standard_normal(modes) / modes
        self.phase = rng.uniform(0, 2 * np.pi, modes)
        self.decay = float(decay)

    def _arg(self, x):
        return _pts(x) @ self.k.T + self.phase

    def value(self, x, t):
        c = np.cos(self._arg(x)) * self.a * np.exp(-self.decay * t)
        # psi = sum a sin(k.x + p); v = (d2 psi, -d1 psi)
        return np.stack([c @ self.k[:, 1], -(c @ self.k[:, 0])], axis=1)

    def grad(self, x, t):
        s = -np.sin(self._arg(x)) * self.a * np.exp(-self.decay * t)
        J = np.empty((s.shape[0], 2, 2))
        for j in range(2):
            J[:, 0, j] = s @ (self.k[:, 1] * self.k[:, j])
            J[:, 1, j] = -(s @ (self.k[:, 0] * self.k[:, j]))
        return J

    def dt(self, x, t):
        return -self.decay * self.value(x, t)

    def laplacian(self, x, t):
        c = np.cos(self._arg(x)) * self.a * np.exp(-self.decay * t)
        k2 = np.sum(self.k**2, axis=1)
        return -np.stack([c @ (self.k[:, 1] * k2), -(c @ (self.k[:, 0] * k2))], axis=1)

    def describe(self):
        return {"kind": self.name, "seed": self.seed, "modes": len(self.a), "decay": self.decay}


# -- space-time scalars ------------------------------------------------------


@dataclass(frozen=True)
class SpaceTimeScalar:
    """f(x, t) with closed-form time derivative and spatial gradient."""

    name: str
    f: object
    dfdt: object
    grad: object

    def __call__(self, x, t):
        return self.f(_pts(x), t)


def scalar_field(kind: str, **p) -> SpaceTimeScalar:
    if kind == "constant":
        c = float(p.get("value", 1.0))
        return SpaceTimeScalar(
            kind,
            lambda x, t: np.full(x.shape[0], c),
            lambda x, t: np.zeros(x.shape[0]),
            lambda x, t: np.zeros_like(x),
        )
    if kind == "coordinate":
        i = int(p.get("axis", 0))

        def g(x, t):
            out = np.zeros_like(x)
            out[:, i] = 1.0
            return out

        return SpaceTimeScalar(kind, lambda x, t: x[:, i].copy(), lambda x, t: np.zeros(x.shape[0]), g)
    if kind == "t_coordinate":
        i = int(p.get("axis", 0))

        def g(x, t):
            out = np.zeros_like(x)
            out[:, i] = t
            return out

        return SpaceTimeScalar(kind, lambda x, t: t * x[:, i], lambda x, t: x[:, i].copy(), g)
    if kind == "wave":
        k = np.asarray(p.get("k", [1.0, 0.5]), dtype=float)
        w = float(p.get("omega", 1.0))
        return SpaceTimeScalar(
            kind,
            lambda x, t: np.sin(x @ k[: x.shape[1]] - w * t),
            lambda x, t: -w * np.cos(x @ k[: x.shape[1]] - w * t),
            lambda x, t: np.cos(x @ k[: x.shape[1]] - w * t)[:, None] * k[: x.shape[1]],
        )
    raise KeyError(f"unknown scalar field kind {kind!r}")


# -- compactly supported test functions --------------------------------------


BUMP_POWER = 12


def bump(q, k: int = BUMP_POWER):
    """B(q) = (1 - q)^k for q < 1, else 0, with its first two derivatives in q.

    A high polynomial power keeps the profile C^(k-1) while staying far better
    resolved by surface and bulk quadrature than the exp(-1/(1-q)) bump.
    """
    u = np.clip(1.0 - np.asarray(q, dtype=float), 0.0, None)
    return u**k, -k * u ** (k - 1), k * (k - 1) * u ** (k - 2)


class TimeWindow:
    """Smooth time factor; ``open`` vanishes at both ends, ``closed_at_zero`` does not at t=0."""

    def __init__(self, t_a: float, t_b: float, variant: str = "open"):
        if variant not in ("open", "closed_at_zero"):
            raise ValueError(f"unknown time variant {variant!r}")
        if t_b <= t_a or (variant == "closed_at_zero" and t_a != 0.0):
            raise ValueError("invalid time window for the variant")
        if t_a < 0:
            raise ValueError("time window must start at t >= 0")
        self.t_a, self.t_b, self.variant = float(t_a), float(t_b), variant

    def _tau(self, t):
        if self.variant == "open":
            mid, half = 0.5 * (self.t_a + self.t_b), 0.5 * (self.t_b - self.t_a)
        else:
            mid, half = 0.0, self.t_b
        return (np.asarray(t, dtype=float) - mid) / half, half

    def value(self, t):
        tau, _ = self._tau(t)
        return bump(tau**2)[0]

    def deriv(self, t):
        tau, half = self._tau(t)
        _, B1, _ = bump(tau**2)
        return B1 * 2.0 * tau / half


class _BumpPotential:
    """s(x) = B(|x - c|^2 / r^2) (1 + w . (x - c) / r) with gradient and Hessian."""

    def __init__(self, center, radius, tilt):
        self.c = np.asarray(center, dtype=float)
        self.r = float(radius)
        self.w = np.zeros_like(self.c) if tilt is None else np.asarray(tilt, dtype=float)

    def eval(self, x, order=2):
        y = _pts(x) - self.c
        r2 = self.r**2
        q = np.sum(y**2, axis=1) / r2
        B, B1, B2 = bump(q)
        L = 1.0 + y @ self.w / self.r
        s = B * L
        if order == 0:
            return s, None, None
        gq = 2.0 * y / r2
        g = (B1 * L)[:, None] * gq + B[:, None] * self.w / self.r
        if order == 1:
            return s, g, None
        n = y.shape[1]
        H = (B2 * L)[:, None, None] * gq[:, :, None] * gq[:, None, :]
        H += (B1 * L * 2.0 / r2)[:, None, None] * np.eye(n)
        cross = gq[:, :, None] * self.w[None, None, :] / self.r
        H += B1[:, None, None] * (cross + np.swapaxes(cross, 1, 2))
        return s, g, H


def _rotator(dim, axis):
    """Matrix R with psi = R grad s: the 2D rotated gradient or grad s x a in 3D."""
    if dim == 2:
        return np.array([[0.0, 1.0], [-1.0, 0.0]])
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    return -np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])


class DivFreeTestField:
    """psi = A T(t) R grad s with s a tilted radial bump; divergence free by construction."""

    def __init__(self, center, radius, window: TimeWindow, amplitude=1.0, tilt=None,
                 axis=(0.0, 0.0, 1.0), domain=None):
        self.potential = _BumpPotential(center, radius, tilt)
        self.dim = self.potential.c.size
        if self.dim not in (2, 3):
            raise ValueError("test fields live in 2D or 3D")
        self.window = window
        self.amplitude = float(amplitude)
        self.axis = np.asarray(axis, dtype=float)
        self._R = _rotator(self.dim, axis)
        if domain is not None:
            lo, hi = (np.asarray(b, dtype=float) for b in domain)
            if np.any(self.potential.c - self.potential.r <= lo) or np.any(self.potential.c + self.potential.r >= hi):
                raise ValueError("test-field support must lie strictly inside the domain")

    @property
    def center(self):
        return self.potential.c

    @property
    def radius(self):
        return self.potential.r

    @property
    def variant(self):
        return self.window.variant

    def support_box(self):
        return self.center - self.radius, self.center + self.radius

    def value(self, x, t):
        _, g, _ = self.potential.eval(x, order=1)
        return self.amplitude * self.window.value(t) * g @ self._R.T

    __call__ = value

    def spatial(self, x):
        """Time-independent profile R grad s."""
        _, g, _ = self.potential.eval(x, order=1)
        return self.amplitude * g @ self._R.T

    def grad(self, x, t):
        _, _, H = self.potential.eval(x)
        return self.amplitude * self.window.value(t) * np.einsum("ij,qjk->qik", self._R, H)

    def sym_grad(self, x, t):
        J = self.grad(x, t)
        return 0.5 * (J + np.swapaxes(J, 1, 2))

    def dt(self, x, t):
        _, g, _ = self.potential.eval(x, order=1)
        return self.amplitude * self.window.deriv(t) * g @ self._R.T

    def divergence(self, x, t):
        return np.trace(self.grad(x, t), axis1=1, axis2=2)

    def scaled(self, factor: float) -> "DivFreeTestField":
        p = self.potential
        return DivFreeTestField(p.c, p.r, self.window, self.amplitude * factor, p.w, self.axis)

    def describe(self):
        p = self.potential
        return {
            "center": p.c.tolist(),
            "radius": p.r,
            "tilt": p.w.tolist(),
            "amplitude": self.amplitude,
            "window": [self.window.t_a, self.window.t_b],
            "variant": self.window.variant,
        }


class GradientTestField(DivFreeTestField):
    """psi = A T(t) grad s: compactly supported but not divergence free."""

    def __init__(self, center, radius, window: TimeWindow, amplitude=1.0, tilt=None, domain=None):
        super().__init__(center, radius, window, amplitude, tilt, domain=domain)
        self._R = np.eye(self.dim)

    def scaled(self, factor: float) -> "GradientTestField":
        p = self.potential
        return GradientTestField(p.c, p.r, self.window, self.amplitude * factor, p.w)


class SumTestField:
    """a psi_1 + b psi_2, for linearity checks."""

    def __init__(self, terms, box=None, window: TimeWindow | None = None):
        self.terms = list(terms)
        self.dim = self.terms[0][1].dim
        if box is None:
            lo = np.min([f.support_box()[0] for _, f in self.terms], axis=0)
            hi = np.max([f.support_box()[1] for _, f in self.terms], axis=0)
            box = (lo, hi)
        self._box = box
        if window is None:
            ws = [f.window for _, f in self.terms]
            window = TimeWindow(min(w.t_a for w in ws), max(w.t_b for w in ws), ws[0].variant)
        self._window = window

    def support_box(self):
        return self._box

    def _comb(self, method, x, t):
        return sum(a * getattr(f, method)(x, t) for a, f in self.terms)

    def value(self, x, t):
        return self._comb("value", x, t)

    __call__ = value

    def grad(self, x, t):
        return self._comb("grad", x, t)

    def sym_grad(self, x, t):
        return self._comb("sym_grad", x, t)

    def dt(self, x, t):
        return self._comb("dt", x, t)

    def spatial(self, x):
        return sum(a * f.spatial(x) for a, f in self.terms)

    @property
    def window(self):
        """Window whose span covers every term (used for the time range only)."""
        return self._window


class ScalarTestField:
    """phi = A T(t) s(x), smooth with compact support in space."""

    def __init__(self, center, radius, window: TimeWindow, amplitude=1.0, tilt=None):
        self.potential = _BumpPotential(center, radius, tilt)
        self.window = window
        self.amplitude = float(amplitude)

    def support_box(self):
        p = self.potential
        return p.c - p.r, p.c + p.r

    def value(self, x, t):
        return self.amplitude * self.window.value(t) * self.potential.eval(x, order=0)[0]

    __call__ = value

    def grad(self, x, t):
        return self.amplitude * self.window.value(t) * self.potential.eval(x, order=1)[1]

    def dt(self, x, t):
        return self.amplitude * self.window.deriv(t) * self.potential.eval(x, order=0)[0]


def build_test_field(center, radius, time_window, amplitude=1.0, variant="open", tilt=None,
                     axis=(0.0, 0.0, 1.0), domain=None) -> DivFreeTestField:
    t_a, t_b = time_window
    return DivFreeTestField(center, radius, TimeWindow(t_a, t_b, variant), amplitude, tilt, axis, domain)


def test_battery(rng: np.random.Generator, count: int, lower, upper, T: float, radius=(0.5, 0.8),
                 anchors=None, variant="open", dim=2):
    """Random div-free test fields with support inside the box.

    With ``anchors`` (e.g. interface nodes) the centres sit near those points so
    the supports cross the interface.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    out = []
    while len(out) < count:
        r = rng.uniform(*radius)
        if anchors is not None:
            c = anchors[rng.integers(len(anchors))] + rng.uniform(-0.5, 0.5, dim) * r
        else:
            c = rng.uniform(lower + r, upper - r)
        if np.any(c - r <= lower) or np.any(c + r >= upper):
            continue
        tilt = rng.uniform(-0.8, 0.8, dim)
        if variant == "open":
            t_a = rng.uniform(0.0, 0.3 * T)
            window = (t_a, rng.uniform(0.7 * T, T))
        else:
            window = (0.0, rng.uniform(0.5 * T, T))
        axis = rng.standard_normal(3) if dim == 3 else (0.0, 0.0, 1.0)
        out.append(build_test_field(c, r, window, 1.0, variant, tilt, axis, (lower, upper)))
    return out
