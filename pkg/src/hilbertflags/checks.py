"""Membership checks for the ball sandwich inclusions.

Both checks sample points on Hilbert spheres about the base point, with
radii spread across the band where the inclusions could fail, and count
the points that land on the wrong side of an inclusion.
"""

import numpy as np

from .hilbert_metric import (
    MACBEATH_INNER,
    MACBEATH_OUTER,
    asymptotic_ball,
    hilbert_distances,
    macbeath_region,
    radial_extents,
)
from .convex_core import chords

DIST_TOL = 1e-9


def sample_shells(body, y, rho_lo, rho_hi, n, rng):
    """Points y + s u with u uniform on the sphere and Hilbert radius uniform."""
    d = body.dim
    u = rng.standard_normal((n, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    tm, tp = chords(body, np.broadcast_to(y, u.shape), u)
    rho = rng.uniform(max(rho_lo, 0.0), rho_hi, n)
    s = radial_extents(tm, tp, rho)
    return y + s[:, None] * u


def _radii_about(body, y):
    l = float(body.boundary_distance(y)[0])
    verts = getattr(body, "vertices", None)
    if verts is not None:
        L = float(np.max(np.linalg.norm(verts - y, axis=1)))
    else:
        c = body.certificate
        L = float(np.linalg.norm(y - c.center)) + c.outer
    return l, L


def asymptotic_sandwich_violations(body, y, R, n=10_000, seed=0):
    """Count failures of AsB(y, R - delta) in B(y, R) in AsB(y, R).

    delta = log(1 + L/l) / 2 with l, L the inner and outer radii about y.
    """
    rng = np.random.default_rng(seed)
    y = np.asarray(y, dtype=float)
    l, L = _radii_about(body, y)
    delta = 0.5 * np.log1p(L / l)
    x = sample_shells(body, y, R - delta - 0.5, R + 0.5, n, rng)
    dist = hilbert_distances(body, y, x)
    outer = asymptotic_ball(body, y, R)
    inner = asymptotic_ball(body, y, R - delta)
    bad_in = inner.contains(x, -DIST_TOL) & (dist > R + DIST_TOL)
    bad_out = (dist < R - DIST_TOL) & ~outer.contains(x, DIST_TOL)
    return int(np.sum(bad_in) + np.sum(bad_out))


def macbeath_sandwich_violations(body, x, n=10_000, seed=0):
    """Count failures of B(x, log(6/5)/2) in M'(x) in B(x, log(3/2)/2)."""
    rng = np.random.default_rng(seed)
    x = np.asarray(x, dtype=float)
    M = macbeath_region(body, x)
    z = sample_shells(body, x, 0.5 * MACBEATH_INNER, 1.5 * MACBEATH_OUTER, n, rng)
    dist = hilbert_distances(body, x, z)
    bad_in = (dist < MACBEATH_INNER - DIST_TOL) & ~M.contains(z, DIST_TOL)
    bad_out = M.contains(z, -DIST_TOL) & (dist > MACBEATH_OUTER + DIST_TOL)
    return int(np.sum(bad_in) + np.sum(bad_out))
