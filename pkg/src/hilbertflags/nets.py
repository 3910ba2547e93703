"""Direction nets on spheres and 1-D quadrature rules."""

from functools import lru_cache
from math import gamma, pi

import numpy as np


def unit_ball_volume(d):
    """Lebesgue volume of the Euclidean unit ball in R^d."""
    return pi ** (d / 2) / gamma(d / 2 + 1)


def sphere_area(d):
    """Surface measure of the unit sphere S^{d-1} in R^d."""
    return d * unit_ball_volume(d)


def angular_net(n, offset=0.0):
    """n equally spaced unit vectors in the plane."""
    theta = offset + 2 * pi * np.arange(n) / n
    return np.column_stack([np.cos(theta), np.sin(theta)])


def fibonacci_sphere(n):
    """Quasi-uniform points on S^2 from the golden-angle spiral."""
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(np.clip(1 - z * z, 0, None))
    phi = pi * (3 - np.sqrt(5.0)) * i
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def direction_net(d, n, seed=0):
    """Return ``(dirs, weights)`` approximating the uniform measure on S^{d-1}.

    Weights sum to the sphere area. 2D uses an angular net, 3D a Fibonacci
    sphere; higher dimensions fall back to a seeded random net.
    """
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if d == 2:
        dirs = angular_net(n)
    elif d == 3:
        dirs = fibonacci_sphere(n)
    else:
        g = np.random.default_rng(seed).standard_normal((n, d))
        dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
    w = np.full(len(dirs), sphere_area(d) / len(dirs))
    return dirs, w


def sphere_product_rule(n_theta, n_phi):
    """Gauss-Legendre in cos(polar angle) times a uniform azimuth rule on S^2."""
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    phi = 2 * pi * (np.arange(n_phi) + 0.5) / n_phi
    z = np.repeat(x, n_phi)
    r = np.sqrt(1 - z * z)
    ph = np.tile(phi, n_theta)
    dirs = np.column_stack([r * np.cos(ph), r * np.sin(ph), z])
    w = np.repeat(wx, n_phi) * (2 * pi / n_phi)
    return dirs, w


@lru_cache(maxsize=64)
def _leggauss(order):
    return np.polynomial.legendre.leggauss(order)


def gauss_segments(breaks, order):
    """Composite Gauss-Legendre rule over consecutive intervals of ``breaks``.

    Returns nodes, weights and the index of the interval holding each node,
    so callers can form running integrals up to every breakpoint.
    """
    breaks = np.asarray(breaks, dtype=float)
    x, w = _leggauss(order)
    a, b = breaks[:-1], breaks[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    seg = np.repeat(np.arange(len(a)), order)
    return nodes, weights, seg


def subdivide(points, max_len=1.0):
    """Merge ``points`` into a sorted break list with gaps no longer than max_len."""
    pts = np.unique(np.asarray(points, dtype=float))
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        k = max(1, int(np.ceil((b - a) / max_len - 1e-12)))
        out.extend(a + (b - a) * np.arange(1, k + 1) / k)
    return np.array(out)


def graded_unit_rule(depth, order, singular_end=0):
    """Rule on [0, 1] resolving an endpoint singularity down to ``exp(-depth)``.

    The half next to the singular end is mapped by tau = exp(-w) / 2 and
    integrated with unit-length Gauss segments in w; the other half uses a
    plain composite rule. Returns (nodes, weights) with weights including
    the substitution Jacobian.
    """
    w_breaks = subdivide([0.0, depth], 1.0)
    wn, ww, _ = gauss_segments(w_breaks, order)
    tau = 0.5 * np.exp(-wn)
    tw = ww * tau
    rn, rw, _ = gauss_segments(np.linspace(0.5, 1.0, 3), order)
    nodes = np.concatenate([tau, rn])
    weights = np.concatenate([tw, rw])
    if singular_end == 1:
        nodes = 1.0 - nodes
    return nodes, weights
