"""Quadrature rules shared by the surface, bulk and space-time integrals."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def gauss_legendre(order: int, a: float = -1.0, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _leggauss(order)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def composite_gauss(a: float, b: float, panels: int, order: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule with ``panels`` equal slabs of ``order`` points."""
    if panels < 1:
        raise ValueError("panels must be >= 1")
    edges = np.linspace(a, b, panels + 1)
    x, w = _leggauss(order)
    half = 0.5 * np.diff(edges)
    nodes = edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def time_rule(t0: float, t1: float, dt: float, order: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss rule on [t0, t1] with slabs no wider than ``dt``."""
    if t1 <= t0:
        return np.empty(0), np.empty(0)
    panels = max(1, int(np.ceil((t1 - t0) / dt - 1e-9)))
    return composite_gauss(t0, t1, panels, order)


def box_rule(lower, upper, panels, order: int = 6) -> tuple[np.ndarray, np.ndarray]:
    """Tensor composite Gauss rule on an axis-aligned box.

    Returns points of shape (N, n) and weights of shape (N,).
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = lower.size
    panels = np.broadcast_to(np.asarray(panels, dtype=int), (n,))
    axes = [composite_gauss(lower[i], upper[i], int(panels[i]), order) for i in range(n)]
    grids = np.meshgrid(*[ax[0] for ax in axes], indexing="ij")
    wgrids = np.meshgrid(*[ax[1] for ax in axes], indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return points, weights


def periodic_nodes(m: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(m) / m


def spectral_derivative(values: np.ndarray, order: int = 1) -> np.ndarray:
    """Derivative in the periodic parameter on [0, 2*pi) along axis 0.

    The Nyquist mode is dropped for odd derivatives so real data stays real.
    """
    values = np.asarray(values, dtype=float)
    m = values.shape[0]
    k = np.fft.fftfreq(m, d=1.0 / m)
    if order % 2 == 1 and m % 2 == 0:
        k = k.copy()
        k[m // 2] = 0.0
    factor = (1j * k) ** order
    shape = (m,) + (1,) * (values.ndim - 1)
    coeffs = np.fft.fft(values, axis=0)
    return np.real(np.fft.ifft(coeffs * factor.reshape(shape), axis=0))


def trig_interpolate(values: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of equispaced samples at ``theta``."""
    values = np.asarray(values, dtype=float)
    m = values.shape[0]
    coeffs = np.fft.fft(values, axis=0) / m
    k = np.fft.fftfreq(m, d=1.0 / m)
    if m % 2 == 0:
        # split the Nyquist mode symmetrically
        coeffs = coeffs.copy()
        k = k.copy()
        k[m // 2] = m // 2
        coeffs[m // 2] *= 0.5
        coeffs = np.concatenate([coeffs, coeffs[m // 2: m // 2 + 1]], axis=0)
        k = np.concatenate([k, [-m // 2]])
    phase = np.exp(1j * np.outer(np.asarray(theta, dtype=float), k))
    return np.real(phase @ coeffs)


def _ramp_power(x, n):
    return np.maximum(x, 0.0) ** n / float(np.prod(np.arange(1, n + 1)))


def halfspace_fraction(normals: np.ndarray, offset: np.ndarray) -> np.ndarray:
    """Fraction of the unit cube [-1/2, 1/2]^n with ``normal . y < offset``.

    This is the CDF of a sum of independent uniforms, a signed sum of
    truncated powers over the cube's vertices.
    """
    a = np.maximum(np.abs(normals), 1e-5)
    n = a.shape[1]
    total = np.zeros(a.shape[0])
    for signs in np.ndindex(*(2,) * n):
        eps = 1.0 - 2.0 * np.asarray(signs, dtype=float)
        shift = offset + 0.5 * (a * eps).sum(axis=1)
        total += np.prod(eps) * _ramp_power(shift, n)
    return np.clip(total / np.prod(a, axis=1), 0.0, 1.0)


def grid_cell_rule(lower, upper, h: float, level_set, subcells: int = 4):
    """Midpoint rule on a Cartesian grid with refined treatment of cut cells.

    ``level_set`` maps points (N, n) to values that are negative inside the
    region.  Cells whose corners and centre agree in sign are taken as full or
    empty.  Cut cells are split into ``subcells**n`` sub-cells, and each
    sub-cell gets the volume fraction of the half-space obtained by linearising
    the level set at its centre.

    Returns ``(points, weights, fraction)``; ``fraction`` is the part of each
    weight lying inside the region, so the complement belongs to the outside.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = lower.size
    counts = np.maximum(1, np.round((upper - lower) / h).astype(int))
    hs = (upper - lower) / counts
    edges = [lower[i] + hs[i] * np.arange(counts[i] + 1) for i in range(n)]
    corners = np.stack([g.ravel() for g in np.meshgrid(*edges, indexing="ij")], axis=1)
    corner_in = (level_set(corners) < 0).reshape(tuple(counts + 1))
    centres_1d = [0.5 * (e[1:] + e[:-1]) for e in edges]
    centres = np.stack([g.ravel() for g in np.meshgrid(*centres_1d, indexing="ij")], axis=1)
    centre_in = level_set(centres) < 0

    cut = np.zeros(tuple(counts), dtype=bool)
    cin = centre_in.reshape(tuple(counts))
    for offset in np.ndindex(*(2,) * n):
        sl = tuple(slice(o, o + counts[i]) for i, o in enumerate(offset))
        cut |= corner_in[sl] != cin
    cut = cut.ravel()

    cell_volume = float(np.prod(hs))
    keep = ~cut
    pts = [centres[keep]]
    wts = [np.full(int(keep.sum()), cell_volume)]
    frac = [centre_in[keep].astype(float)]
    if cut.any():
        k = subcells
        offs_1d = [(np.arange(k) + 0.5) / k - 0.5 for _ in range(n)]
        offs = np.stack([g.ravel() for g in np.meshgrid(*offs_1d, indexing="ij")], axis=1) * hs
        sub = (centres[cut][:, None, :] + offs[None, :, :]).reshape(-1, n)
        delta = hs / k
        phi = level_set(sub)
        grad = np.empty_like(sub)
        step = 1e-3 * delta.min()
        for i in range(n):
            e = np.zeros(n)
            e[i] = step
            grad[:, i] = (level_set(sub + e) - level_set(sub - e)) / (2 * step)
        # work in sub-cell units so the cell is the unit cube
        g_scaled = grad * delta
        norm = np.maximum(np.linalg.norm(g_scaled, axis=1), 1e-300)
        pts.append(sub)
        wts.append(np.full(sub.shape[0], cell_volume / k**n))
        frac.append(halfspace_fraction(g_scaled / norm[:, None], -phi / norm))
    return np.concatenate(pts), np.concatenate(wts), np.concatenate(frac)
