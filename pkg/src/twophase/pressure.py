"""Curvature extension, the regularised functional and pressure reconstruction.

The mean curvature is extended harmonically into the inner region with the
method of fundamental solutions.  The pressure is rebuilt phase by phase from
its target gradient by least squares on a cell-centred grid (2D), then the
inner phase is shifted so that the Young-Laplace jump holds in the mean and a
single constant enforces zero mean over the box.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve
from scipy.spatial import cKDTree

from .evolving import BulkTrajectory
from .quadrature import gauss_legendre, grid_cell_rule, time_rule
from .surface import mean_curvature, surface_integrate, surface_measure
from .weak_form import MaterialParams, PhaseQuadrature, window_time_rule


class InconsistentFieldWarning(UserWarning):
    """The target field is not a gradient (curl or least-squares residual too large)."""


class ResolutionError(ValueError):
    """The grid cannot resolve a phase or a trace stencil."""


# -- harmonic extension (method of fundamental solutions) ----------------------


def _fundamental(x, y, dim):
    d = np.linalg.norm(x[:, None, :] - y[None, :, :], axis=2)
    if dim == 2:
        return np.log(d)
    return 1.0 / d


def _fundamental_grad(x, y, dim):
    diff = x[:, None, :] - y[None, :, :]
    d2 = np.sum(diff**2, axis=2)
    if dim == 2:
        return diff / d2[..., None]
    return -diff / d2[..., None] ** 1.5


@dataclass
class CurvatureExtension:
    """m(x) = c_0 + sum_k c_k G(x - y_k); harmonic wherever the sources are not."""

    sources: np.ndarray
    coeffs: np.ndarray
    constant: float
    dim: int
    trace_error: float
    offset: float
    surface: object = field(repr=False, default=None)

    def value(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.coeffs.size == 0:
            return np.full(x.shape[0], self.constant)
        return self.constant + _fundamental(x, self.sources, self.dim) @ self.coeffs

    __call__ = value

    def grad(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.coeffs.size == 0:
            return np.zeros_like(x)
        return np.einsum("qkd,k->qd", _fundamental_grad(x, self.sources, self.dim), self.coeffs)


def _ridge_solve(A, b, lam):
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    reg = lam * s[0]
    filt = s / (s**2 + reg**2)
    return Vt.T @ (filt * (U.T @ b))


def harmonic_extension(surface, kappa=None, offset_factor: float = 1.5, n_sources: int | None = None,
                       ridge: float = 1e-12, tol: float = 1e-8) -> CurvatureExtension:
    """Harmonic m in the enclosed region with m = kappa on the surface.

    Sources sit at x + d nu with d = ``offset_factor`` times the feature size.
    When the trace error exceeds ``tol`` other offsets are tried and the best
    fit is kept.
    """
    kappa = mean_curvature(surface) if kappa is None else np.asarray(kappa, dtype=float)
    x = surface.nodes
    dim = surface.dim
    outward = surface.normals * surface.orientation
    if np.ptp(kappa) <= 1e-14 * max(1.0, np.abs(kappa).max()):
        c = float(np.mean(kappa))
        return CurvatureExtension(np.empty((0, dim)), np.empty(0), c, dim, float(np.abs(kappa - c).max()),
                                  0.0, surface)
    m = x.shape[0]
    ns = n_sources or (m // 2 if dim == 2 else m // 3)
    pick = np.linspace(0, m, ns, endpoint=False).astype(int)
    fs = surface.feature_size()
    best = None
    for factor in (offset_factor, 1.0, 2.0, 0.75, 3.0, 0.5):
        y = x[pick] + factor * fs * outward[pick]
        if np.any(surface.contains(y)):
            continue
        A = np.hstack([np.ones((m, 1)), _fundamental(x, y, dim)])
        sol = _ridge_solve(A, kappa, ridge)
        err = float(np.abs(A @ sol - kappa).max())
        if best is None or err < best[0]:
            best = (err, y, sol, factor)
        if err <= tol:
            break
    if best is None:
        raise RuntimeError("no admissible source placement for the extension")
    err, y, sol, factor = best
    return CurvatureExtension(y, sol[1:], float(sol[0]), dim, err, factor, surface)


def double_layer_solution(curve, data, points) -> np.ndarray:
    """Interior Dirichlet solution by a double-layer Nystrom solve (2D oracle)."""
    if curve.dim != 2:
        raise ValueError("the boundary-integral oracle is 2D only")
    x = curve.nodes
    nu = curve.normals * curve.orientation
    w = curve.weights
    diff = x[None, :, :] - x[:, None, :]
    d2 = np.sum(diff**2, axis=2)
    np.fill_diagonal(d2, 1.0)
    K = np.sum(nu[None, :, :] * diff, axis=2) / d2 / (2 * np.pi)
    # limit of the kernel on the diagonal is the signed curvature over 4 pi
    kappa = mean_curvature(curve) * curve.orientation
    np.fill_diagonal(K, -kappa / (4 * np.pi))
    A = 0.5 * np.eye(len(x)) + K * w[None, :]
    mu = np.linalg.solve(A, np.asarray(data, dtype=float))
    p = np.atleast_2d(points)
    dp = x[None, :, :] - p[:, None, :]
    kern = np.sum(nu[None, :, :] * dp, axis=2) / np.sum(dp**2, axis=2) / (2 * np.pi)
    return kern @ (w * mu)


class ExtendedCurvature:
    """K = grad m inside the region bounded by the surface and 0 outside."""

    def __init__(self, ext: CurvatureExtension, inside: Callable):
        self.ext = ext
        self._inside = inside

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        mask = self._inside(x)
        if np.any(mask):
            out[mask] = self.ext.grad(x[mask])
        return out


def extended_curvature(ext: CurvatureExtension, inside: Callable | None = None) -> ExtendedCurvature:
    inside = ext.surface.contains if inside is None else inside
    return ExtendedCurvature(ext, inside)


class ExtensionCache:
    """Curvature extensions per snapshot time of a trajectory."""

    def __init__(self, traj: BulkTrajectory, **kwargs):
        self.traj = traj
        self.kwargs = kwargs
        self._store: dict[float, CurvatureExtension] = {}

    def __call__(self, t: float) -> CurvatureExtension:
        t = float(t)
        if t not in self._store:
            self._store[t] = harmonic_extension(self.traj.surface(t), **self.kwargs)
        return self._store[t]


def regular_curvature_gaps(traj: BulkTrajectory, psi, extensions: ExtensionCache | None = None,
                           dt: float = 0.1, order: int = 4, region=(8, 8), min_panels: int = 8) -> dict:
    """Space-time values of int K.psi, int_Gamma kappa nu.psi and int_Gamma nu(x)nu:grad psi."""
    extensions = extensions or ExtensionCache(traj)
    ts, wt = window_time_rule(psi, traj.T, dt, order, min_panels)
    bulk = kform = nform = 0.0
    for t, w in zip(ts, wt):
        ext = extensions(t)
        pts, wx = traj.region_rule(t, region)
        bulk += w * float(np.sum(wx * np.sum(ext.grad(pts) * psi.value(pts, t), axis=1)))
        g = traj.surface(t)
        nu = g.normals
        kform += w * surface_integrate(g, mean_curvature(g) * np.sum(nu * psi.value(g.nodes, t), axis=1))
        nform += w * surface_integrate(g, np.einsum("qi,qij,qj->q", nu, psi.grad(g.nodes, t), nu))
    return {
        "bulk": bulk,
        "kappa_form": kform,
        "nu_nu_form": nform,
        "max_gap": max(abs(bulk - kform), abs(bulk - nform), abs(kform - nform)),
    }


# -- regularised functional ------------------------------------------------------


def greg_apply(traj: BulkTrajectory, params: MaterialParams, velocity, psi,
               extensions: ExtensionCache | None = None, dt: float = 0.1, order: int = 4,
               quadrature: PhaseQuadrature | None = None) -> dict:
    """G_reg(psi) with its four terms.

    -int rho dt v.psi - int rho (v.grad v).psi - 2 int mu Dv:Dpsi + 2 sigma int K.psi
    """
    extensions = extensions or ExtensionCache(traj)
    quad = quadrature or PhaseQuadrature(traj)
    box = psi.support_box()
    ts, wt = window_time_rule(psi, traj.T, dt, order)
    b1, b2, m1, m2 = params.beta1, params.beta2, params.mu1, params.mu2
    time_term = conv = visc = curv = 0.0
    for t, w in zip(ts, wt):
        rule = quad.rule(t, box)
        x = rule.points
        p = psi.value(x, t)
        rho_w = rule.weighted(b1, b2)
        time_term -= w * float(np.sum(rho_w * np.sum(velocity.dt(x, t) * p, axis=1)))
        conv -= w * float(np.sum(rho_w * np.sum(velocity.convective(x, t) * p, axis=1)))
        gpsi = psi.grad(x, t)
        Dpsi = 0.5 * (gpsi + np.swapaxes(gpsi, 1, 2))
        visc -= 2.0 * w * float(np.sum(rule.weighted(m1, m2) * np.einsum("qij,qij->q", velocity.sym_grad(x, t), Dpsi)))
        if params.sigma != 0.0:
            ext = extensions(t)
            curv += 2.0 * params.sigma * w * float(np.sum(rule.w_minus * np.sum(ext.grad(x) * p, axis=1)))
    terms = {"time": time_term, "convection": conv, "viscous": visc, "curvature": curv}
    return {"terms": terms, "value": sum(terms.values())}


# -- least-squares pressure ---------------------------------------------------------


def momentum_targets(params: MaterialParams, velocity, ext: CurvatureExtension | None, t: float):
    """Per-phase target gradients F-, F+ of the associated pressure."""

    def f_minus(x):
        F = -params.beta1 * (velocity.dt(x, t) + velocity.convective(x, t)) + params.mu1 * velocity.laplacian(x, t)
        if ext is not None and params.sigma != 0.0:
            F = F + 2.0 * params.sigma * ext.grad(x)
        return F

    def f_plus(x):
        return -params.beta2 * (velocity.dt(x, t) + velocity.convective(x, t)) + params.mu2 * velocity.laplacian(x, t)

    return f_minus, f_plus


def curl_diagnostic(F: Callable, points, step: float = 1e-4) -> float:
    """max |d1 F2 - d2 F1| by Richardson-extrapolated central differences."""
    pts = np.atleast_2d(points)
    if pts.shape[0] == 0:
        return 0.0
    e1, e2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])

    def curl(h):
        d1 = (F(pts + h * e1)[:, 1] - F(pts - h * e1)[:, 1]) / (2 * h)
        d2 = (F(pts + h * e2)[:, 0] - F(pts - h * e2)[:, 0]) / (2 * h)
        return d1 - d2

    return float(np.abs((4 * curl(step / 2) - curl(step)) / 3).max())


@dataclass
class PressureBundle:
    """Per-phase pressure on a cell-centred grid plus everything needed to evaluate it."""

    t: float
    h: float
    nodes: np.ndarray
    values: np.ndarray
    phase: np.ndarray  # True for the inner phase
    solved: np.ndarray
    level_set: Callable
    targets: tuple
    curl: float
    ls_residual: float
    shift_minus: float = 0.0
    shift_global: float = 0.0
    minus_correction: Callable | None = None
    jump_constant: float | None = None
    _trees: dict = field(default_factory=dict, repr=False)

    def _tree(self, inner: bool):
        if inner not in self._trees:
            idx = np.flatnonzero(self.solved & (self.phase == inner))
            self._trees[inner] = (cKDTree(self.nodes[idx]), idx)
        return self._trees[inner]

    def raw(self, x, inner: bool) -> np.ndarray:
        """Least-squares potential of one phase at arbitrary points of that phase.

        Starts at a nearby grid node of the phase and adds the line integral of
        the target gradient along a segment that stays in the phase.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        tree, idx = self._tree(inner)
        k = min(8, len(idx))
        _, cand = tree.query(x, k=k)
        cand = np.atleast_2d(cand).reshape(x.shape[0], k)
        F = self.targets[0] if inner else self.targets[1]
        s, ws = gauss_legendre(4, 0.0, 1.0)
        out = np.full(x.shape[0], np.nan)
        pending = np.arange(x.shape[0])
        for j in range(k):
            if pending.size == 0:
                break
            start = self.nodes[idx[cand[pending, j]]]
            seg = x[pending] - start
            probe = start[:, None, :] + np.linspace(0, 1, 7)[None, :, None] * seg[:, None, :]
            sign = self.level_set(probe.reshape(-1, 2)).reshape(len(pending), 7) < 0
            ok = np.all(sign == inner, axis=1)
            if not np.any(ok):
                continue
            rows = pending[ok]
            a, d = start[ok], seg[ok]
            pts = (a[:, None, :] + s[None, :, None] * d[:, None, :]).reshape(-1, 2)
            line = np.sum(F(pts).reshape(len(rows), len(s), 2) * d[:, None, :], axis=2) @ ws
            out[rows] = self.values[idx[cand[rows, j]]] + line
            pending = pending[~ok]
        if pending.size:
            raise ResolutionError("no grid node of the phase reachable without crossing the interface")
        return out

    def evaluate(self, x, inner=None) -> np.ndarray:
        """Final pressure (after any adjustment) at arbitrary points."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if inner is None:
            inner = self.level_set(x) < 0
        inner = np.broadcast_to(np.asarray(inner, dtype=bool), (x.shape[0],))
        out = np.empty(x.shape[0])
        for flag in (True, False):
            sel = inner == flag
            if not np.any(sel):
                continue
            vals = self.raw(x[sel], flag)
            if flag:
                vals = vals + self.shift_minus
                if self.minus_correction is not None:
                    vals = vals + self.minus_correction(x[sel])
            out[sel] = vals + self.shift_global
        return out

    def node_values(self) -> np.ndarray:
        vals = self.values.copy()
        inner = self.phase
        vals[inner] += self.shift_minus
        if self.minus_correction is not None and np.any(inner):
            vals[inner] += self.minus_correction(self.nodes[inner])
        return vals + self.shift_global

    def traces(self, surface, distances=(1, 2, 3)):
        """One-sided quadratic extrapolation of both phases onto the surface nodes."""
        x = surface.nodes
        nu = surface.normals * surface.orientation
        d = np.asarray(distances, dtype=float) * self.h
        out = {}
        for side, inner in (("minus", True), ("plus", False)):
            sgn = -1.0 if inner else 1.0
            pts = x[:, None, :] + sgn * d[None, :, None] * nu[:, None, :]
            flat = pts.reshape(-1, 2)
            if np.any((self.level_set(flat) < 0) != inner):
                raise ResolutionError("trace stencil crosses the interface; refine the grid")
            vals = self.evaluate(flat, inner).reshape(x.shape[0], len(d))
            # Lagrange extrapolation to distance 0 from nodes at 1h, 2h, 3h
            out[side] = 3.0 * vals[:, 0] - 3.0 * vals[:, 1] + vals[:, 2]
        return out["minus"], out["plus"]

    def mean(self, lower, upper, subcells: int = 4) -> float:
        """Cell-average of the final pressure over the box (cut cells sub-sampled)."""
        pts, w, frac = grid_cell_rule(lower, upper, self.h, self.level_set, subcells)
        full = (frac == 0.0) | (frac == 1.0)
        total = 0.0
        if np.any(full):
            fp, fw, fin = pts[full], w[full], frac[full] == 1.0
            vals = np.empty(fp.shape[0])
            # cell centres that coincide with solved grid nodes of the right phase reuse the nodal value
            hit = self._node_lookup(fp, fin)
            if np.any(hit >= 0):
                vals[hit >= 0] = self.node_values()[hit[hit >= 0]]
            miss = hit < 0
            if np.any(miss):
                vals[miss] = self.evaluate(fp[miss], fin[miss])
            total += float(np.sum(fw * vals))
        cut = ~full
        if np.any(cut):
            pm = self.evaluate_extended(pts[cut], True)
            pp = self.evaluate_extended(pts[cut], False)
            total += float(np.sum(w[cut] * (frac[cut] * pm + (1 - frac[cut]) * pp)))
        return total / float(np.prod(np.asarray(upper) - np.asarray(lower)))

    def _node_lookup(self, x, inner) -> np.ndarray:
        """Index of the grid node at each point, or -1 when there is none of that phase."""
        lo = self.nodes.min(axis=0) - 0.5 * self.h
        counts = np.round((self.nodes.max(axis=0) - lo) / self.h + 0.5).astype(int)
        ij = np.round((x - lo) / self.h - 0.5).astype(int)
        ok = np.all((ij >= 0) & (ij < counts), axis=1)
        idx = np.where(ok, ij[:, 0] * counts[1] + ij[:, 1], 0)
        ok &= np.all(np.abs(self.nodes[idx] - x) <= 1e-9 * max(1.0, self.h), axis=1)
        ok &= self.solved[idx] & (self.phase[idx] == inner)
        return np.where(ok, idx, -1)

    def evaluate_extended(self, x, inner: bool) -> np.ndarray:
        """Phase potential continued a short way across the interface (for cut cells)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        nodes_ok = self.solved & (self.phase == inner)
        tree = cKDTree(self.nodes[nodes_ok])
        idx = np.flatnonzero(nodes_ok)
        _, j = tree.query(x)
        start = self.nodes[idx[j]]
        F = self.targets[0] if inner else self.targets[1]
        s, ws = gauss_legendre(4, 0.0, 1.0)
        seg = x - start
        pts = (start[:, None, :] + s[None, :, None] * seg[:, None, :]).reshape(-1, 2)
        line = np.sum(F(pts).reshape(len(x), len(s), 2) * seg[:, None, :], axis=2) @ ws
        vals = self.values[idx[j]] + line
        if inner:
            vals = vals + self.shift_minus
            if self.minus_correction is not None:
                vals = vals + self.minus_correction(x)
        return vals + self.shift_global


def associated_pressure(level_set: Callable, lower, upper, h: float, targets, t: float = 0.0,
                        curl_tol: float = 1e-6, ls_tol: float = 1e-2, min_points: int = 10) -> PressureBundle:
    """Least-squares potentials of the per-phase targets on a cell-centred grid.

    Each edge joining two nodes of the same phase contributes
    (p_b - p_a) / h = F(midpoint) . e.  One node per connected component is
    pinned, so every phase carries its own gauge constant.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.size != 2:
        raise NotImplementedError("pressure reconstruction is implemented in 2D")
    counts = np.round((upper - lower) / h).astype(int)
    xs = [lower[i] + h * (np.arange(counts[i]) + 0.5) for i in range(2)]
    X, Y = np.meshgrid(*xs, indexing="ij")
    nodes = np.stack([X.ravel(), Y.ravel()], axis=1)
    phase = level_set(nodes) < 0
    for flag, name in ((True, "inner"), (False, "outer")):
        if np.count_nonzero(phase == flag) < min_points:
            raise ResolutionError(f"{name} phase has fewer than {min_points} grid points")
    index = np.arange(nodes.shape[0]).reshape(counts)
    rows_a, rows_b, rhs = [], [], []
    f_minus, f_plus = targets
    for axis in range(2):
        a = index.take(np.arange(counts[axis] - 1), axis=axis).ravel()
        b = index.take(np.arange(1, counts[axis]), axis=axis).ravel()
        mid = 0.5 * (nodes[a] + nodes[b])
        same = (phase[a] == phase[b]) & ((level_set(mid) < 0) == phase[a])
        a, b, mid = a[same], b[same], mid[same]
        inner = phase[a]
        g = np.empty(a.size)
        if np.any(inner):
            g[inner] = f_minus(mid[inner])[:, axis]
        if np.any(~inner):
            g[~inner] = f_plus(mid[~inner])[:, axis]
        rows_a.append(a)
        rows_b.append(b)
        rhs.append(g)
    a = np.concatenate(rows_a)
    b = np.concatenate(rows_b)
    g = np.concatenate(rhs)
    n_edges, n_nodes = a.size, nodes.shape[0]
    r = np.arange(n_edges)
    D = sparse.csr_matrix(
        (np.concatenate([-np.ones(n_edges), np.ones(n_edges)]) / h, (np.concatenate([r, r]), np.concatenate([a, b]))),
        shape=(n_edges, n_nodes),
    )
    adj = sparse.csr_matrix((np.ones(n_edges), (a, b)), shape=(n_nodes, n_nodes))
    n_comp, labels = connected_components(adj, directed=False)
    used = np.zeros(n_nodes, dtype=bool)
    used[a] = True
    used[b] = True
    pinned = np.zeros(n_nodes, dtype=bool)
    for c in np.unique(labels[used]):
        pinned[np.flatnonzero((labels == c) & used)[0]] = True
    free = used & ~pinned
    A = (D.T @ D).tocsr()
    rhs_n = D.T @ g
    values = np.zeros(n_nodes)
    fi = np.flatnonzero(free)
    values[fi] = spsolve(A[fi][:, fi].tocsc(), rhs_n[fi])
    resid = D @ values - g
    scale = max(1.0, float(np.abs(g).max()))
    ls_res = float(np.sqrt(np.mean(resid**2))) / scale
    # curl of the targets away from the interface
    far = np.abs(level_set(nodes)) > 3 * h
    sample = np.flatnonzero(far & used)[:: max(1, np.count_nonzero(far & used) // 2000)]
    sp = nodes[sample]
    curl = max(
        curl_diagnostic(f_minus, sp[phase[sample]]),
        curl_diagnostic(f_plus, sp[~phase[sample]]),
    )
    if curl > curl_tol or ls_res > ls_tol:
        warnings.warn(
            f"target field is not a gradient: curl {curl:.3g}, least-squares residual {ls_res:.3g}",
            InconsistentFieldWarning,
            stacklevel=2,
        )
    return PressureBundle(t, h, nodes, values, phase, used, level_set, (f_minus, f_plus), curl, ls_res)


def reconstruct_pressure(traj: BulkTrajectory, params: MaterialParams, velocity, t: float, h: float,
                         ext: CurvatureExtension | None = None, **kwargs) -> tuple:
    """Associated pressure at time ``t`` for a trajectory; returns (bundle, extension)."""
    surf = traj.surface(t)
    ext = harmonic_extension(surf) if ext is None else ext
    targets = momentum_targets(params, velocity, ext, t)
    bundle = associated_pressure(lambda x: traj.level_set(x, t), traj.lower, traj.upper, h, targets, t, **kwargs)
    return bundle, ext


# -- projection and jump ------------------------------------------------------------


def projection_constants(surface, b) -> dict:
    """Tangential and normal parts of ``b`` and C = mean of b . nu over the surface."""
    b = np.asarray(b, dtype=float)
    nu = surface.normals
    bn = np.sum(b * nu, axis=1)
    p_nu = bn[:, None] * nu
    return {"P_tau": b - p_nu, "P_nu": p_nu, "C": surface_integrate(surface, bn) / surface_measure(surface)}


def viscous_jump(surface, params: MaterialParams, velocity, t: float, eps: float = 1e-9) -> np.ndarray:
    """2 [mu Dv nu] . nu with one-sided strain rates."""
    x = surface.nodes
    nu = surface.normals
    out = surface.normals * surface.orientation
    Dp = velocity.sym_grad(x + eps * out, t)
    Dm = velocity.sym_grad(x - eps * out, t)
    nn_p = np.einsum("qi,qij,qj->q", nu, Dp, nu)
    nn_m = np.einsum("qi,qij,qj->q", nu, Dm, nu)
    return 2.0 * (params.mu2 * nn_p - params.mu1 * nn_m)


def jump_defect(bundle: PressureBundle, surface, params: MaterialParams, velocity) -> np.ndarray:
    """[p] - 2 [mu Dv nu] . nu - 2 sigma kappa at every surface node."""
    pm, pp = bundle.traces(surface)
    kappa = mean_curvature(surface)
    return (pp - pm) - viscous_jump(surface, params, velocity, bundle.t) - 2.0 * params.sigma * kappa


def adjust_jump(bundle: PressureBundle, ext: CurvatureExtension, traj: BulkTrajectory, params: MaterialParams,
                velocity, apply_constant: bool = True, zero_mean: bool = True) -> PressureBundle:
    """Replace p- by p- - 2 sigma m + C and subtract the box mean.

    C is the surface mean of the jump defect; with ``apply_constant=False``
    only the curvature correction is made (the defect then keeps mean C).
    """
    t = bundle.t
    sigma = params.sigma
    bundle.minus_correction = (lambda x: -2.0 * sigma * ext.value(x)) if sigma != 0.0 else None
    bundle.shift_minus = 0.0
    bundle.shift_global = 0.0
    surface = traj.surface(t)
    defect = jump_defect(bundle, surface, params, velocity)
    C = projection_constants(surface, defect[:, None] * surface.normals)["C"]
    bundle.jump_constant = float(C)
    if apply_constant:
        bundle.shift_minus = float(C)
    if zero_mean:
        bundle.shift_global = -bundle.mean(traj.lower, traj.upper)
    return bundle


def young_laplace_check(bundle: PressureBundle, traj: BulkTrajectory, params: MaterialParams, velocity,
                        tol: float = 1e-6) -> dict:
    surface = traj.surface(bundle.t)
    d = jump_defect(bundle, surface, params, velocity)
    l2 = float(np.sqrt(surface_integrate(surface, d**2)))
    C = projection_constants(surface, d[:, None] * surface.normals)["C"]
    mx = float(np.abs(d).max())
    return {"max_defect": mx, "l2_defect": l2, "C": float(C), "passed": mx <= tol}


# -- convective term --------------------------------------------------------------------


def convective_norm(traj: BulkTrajectory, velocity, T: float | None = None, dt: float = 0.05,
                    order: int = 4, quadrature: PhaseQuadrature | None = None) -> dict:
    """Per-phase L2(0,T; L3) norms of (v . grad) v, plus the whole-box value."""
    quad = quadrature or PhaseQuadrature(traj)
    T = traj.T if T is None else T
    ts, wt = time_rule(0.0, T, dt, order)
    acc = {"minus": 0.0, "plus": 0.0, "total": 0.0}
    for t, w in zip(ts, wt):
        rule = quad.rule(t)
        c3 = np.linalg.norm(velocity.convective(rule.points, t), axis=1) ** 3
        parts = {
            "minus": float(np.sum(rule.w_minus * c3)),
            "plus": float(np.sum(rule.w_plus * c3)),
        }
        parts["total"] = parts["minus"] + parts["plus"]
        for key, val in parts.items():
            acc[key] += w * max(val, 0.0) ** (2.0 / 3.0)
    return {key: float(np.sqrt(val)) for key, val in acc.items()}
