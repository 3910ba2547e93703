"""Hilbert and Funk distances, the Finsler norm, and volume densities.

Densities come in two flavours.  :func:`tangent_ball` integrates the
Finsler unit ball over a direction net (the general route, any body with a
ray oracle).  :func:`density` dispatches to closed forms where the body
allows it: ellipsoids (the Klein model), polygons and 3-polytopes, whose
tangent unit balls are polytopes built from the reciprocal facet slacks.
The closed forms stay accurate arbitrarily close to the boundary, where
the unit ball degenerates into a needle that no fixed net resolves.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .convex_core import (
    AffineImage,
    EmptySet,
    Ellipsoid,
    IntersectionBody,
    _as_rows,
    check_interior,
    chords,
    scale_about,
)
from .errors import CoincidentPoints, PointNotInterior
from .nets import direction_net, unit_ball_volume
from .polytope_lattice import Polytope

BUSEMANN = "busemann"
HOLMES_THOMPSON = "holmes-thompson"
_KIND_ALIASES = {
    "busemann": BUSEMANN, "b": BUSEMANN,
    "holmes-thompson": HOLMES_THOMPSON, "holmes_thompson": HOLMES_THOMPSON,
    "ht": HOLMES_THOMPSON, "h": HOLMES_THOMPSON,
}

MACBEATH_INNER = 0.5 * np.log(6 / 5)
MACBEATH_OUTER = 0.5 * np.log(3 / 2)


def volume_kind(kind):
    try:
        return _KIND_ALIASES[str(kind).lower()]
    except KeyError:
        raise ValueError(f"unknown volume kind {kind!r}") from None


# --- distances -----------------------------------------------------------

def _segments(body, p, q):
    p, q = _as_rows(p), _as_rows(q)
    p, q = np.broadcast_arrays(p, q)
    diff = q - p
    D = np.linalg.norm(diff, axis=1)
    check_interior(body, q)
    check_interior(body, p)
    return p, q, diff, D


def _lex_greater(p, q):
    out = np.zeros(len(p), dtype=bool)
    undecided = np.ones(len(p), dtype=bool)
    for k in range(p.shape[1]):
        out |= undecided & (p[:, k] > q[:, k])
        undecided &= p[:, k] == q[:, k]
    return out


def hilbert_distances(body, p, q):
    """Vectorised Hilbert distance between matching rows of p and q.

    Each pair is evaluated in a canonical (lexicographic) order, so the
    result is exactly symmetric.
    """
    p, q, _, _ = _segments(body, p, q)
    swap = _lex_greater(p, q)
    p, q = np.where(swap[:, None], q, p), np.where(swap[:, None], p, q)
    diff = q - p
    D = np.linalg.norm(diff, axis=1)
    out = np.zeros(len(D))
    nz = D > 0
    if np.any(nz):
        u = diff[nz] / D[nz, None]
        tm, tp = chords(body, p[nz], u)
        out[nz] = 0.5 * (np.log1p(D[nz] / tm) - np.log1p(-D[nz] / tp))
    return out


def hilbert_distance(body, p, q):
    """Half the log of the cross ratio of p, q with the chord endpoints."""
    return float(hilbert_distances(body, p, q)[0])


def funk_distances(body, p, q):
    p, q, diff, D = _segments(body, p, q)
    out = np.zeros(len(D))
    nz = D > 0
    if np.any(nz):
        u = diff[nz] / D[nz, None]
        _, tp = chords(body, p[nz], u)
        out[nz] = -np.log1p(-D[nz] / tp)
    return out


def funk_distance(body, p, q):
    """log(|pb| / |qb|) with b the boundary point beyond q."""
    return float(funk_distances(body, p, q)[0])


def finsler_norms(body, points, vectors):
    pts, v = np.broadcast_arrays(_as_rows(points), _as_rows(vectors))
    out = np.zeros(len(pts))
    check_interior(body, pts)
    nz = np.linalg.norm(v, axis=1) > 0
    if np.any(nz):
        tp = body.ray_hit(pts[nz], v[nz])
        tm = body.ray_hit(pts[nz], -v[nz])
        out[nz] = 0.5 * (1 / tp + 1 / tm)
    return out


def finsler_norm(body, p, v):
    """F(p, v) = (1/t+ + 1/t-) / 2, with t+- the boundary hit times along +-v."""
    return float(finsler_norms(body, p, v)[0])


# --- balls -----------------------------------------------------------------

def radial_extents(t_minus, t_plus, R):
    """Distance s along a chord with d(p, p + s u) = R, from the hit times."""
    R = np.asarray(R, dtype=float)
    em = np.exp(-2 * R)
    return t_plus * t_minus * (-np.expm1(-2 * R)) / (t_plus * em + t_minus)


def ball_radial_extent(body, p, u, R):
    """Euclidean extent of the metric ball B(p, R) in the unit direction u."""
    if R < 0:
        raise ValueError("radius must be nonnegative")
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    tm, tp = chords(body, p, u)
    return float(radial_extents(tm, tp, R)[0])


def in_metric_ball(body, center, points, R, tol=0.0):
    return hilbert_distances(body, center, points) <= R + tol


def asymptotic_ball(body, y, R):
    """Dilation ``y + (1 - exp(-2R)) (body - y)``; empty for R <= 0."""
    if R <= 0:
        return EmptySet(body.dim)
    check_interior(body, y)
    return scale_about(body, y, -np.expm1(-2 * R))


def macbeath_region(body, x):
    """``x + (body - x)/5 & (x - body)/5`` as an intersection body."""
    x = np.asarray(x, dtype=float)
    check_interior(body, x)
    d = body.dim
    outward = scale_about(body, x, 0.2)
    inward = body.transformed(-0.2 * np.eye(d), 1.2 * x)
    r_in = float(body.boundary_distance(x)[0]) / 5
    c = body.certificate
    r_out = (float(np.linalg.norm(x - c.center)) + c.outer) / 5
    if r_in <= 0:
        raise PointNotInterior("point too close to the boundary for a Macbeath region")
    return IntersectionBody([outward, inward], x, r_in, max(r_out, r_in))


def ray_distance(body, o, x):
    """Distance from x to the boundary along the ray from o through x."""
    o = np.asarray(o, dtype=float)
    x = np.asarray(x, dtype=float)
    check_interior(body, o)
    check_interior(body, x)
    v = x - o
    n = np.linalg.norm(v)
    if n == 0:
        raise CoincidentPoints("ray distance needs x != o")
    return float(body.ray_hit(x, v / n)[0])


# --- tangent unit balls ------------------------------------------------------

@dataclass(frozen=True)
class TangentBall:
    """Sampled Finsler unit ball at ``base_point``.

    ``directions`` are unit vectors and ``radii`` the radial function of the
    unit ball along them.  Volumes are Lebesgue measures of the ball and of
    its polar dual.
    """

    base_point: np.ndarray
    directions: np.ndarray
    radii: np.ndarray
    leb_ball: float
    leb_polar: float

    @property
    def dim(self):
        return len(self.base_point)

    @property
    def busemann_density(self):
        return unit_ball_volume(self.dim) / self.leb_ball

    @property
    def holmes_thompson_density(self):
        return self.leb_polar / unit_ball_volume(self.dim)


def _sqrtm_spd(S):
    w, v = np.linalg.eigh(S)
    return (v * np.sqrt(w)[..., None, :]) @ np.swapaxes(v, -1, -2), w


def _tangent_batch(body, points, n_dirs, normalize, max_iter=40):
    """Net quadrature of the unit ball and its polar at many points at once.

    With ``normalize`` the net is pulled back through a linear map T chosen
    so that T^-1 (unit ball) is close to round; this is iterated until the
    second-moment matrix is well conditioned.
    """
    pts = _as_rows(points)
    N, d = pts.shape
    U, w = direction_net(d, n_dirs)
    n = len(U)
    T = np.broadcast_to(np.eye(d), (N, d, d)).copy()
    active = np.ones(N, dtype=bool)
    for it in range(max_iter if normalize else 1):
        V = np.einsum("nij,kj->nki", T, U)
        r = 1.0 / finsler_norms(body, np.repeat(pts, n, axis=0), V.reshape(-1, d)).reshape(N, n)
        if not normalize:
            break
        P = r[..., None] * U[None]
        S = np.einsum("k,nki,nkj->nij", w, P, P) / w.sum() * d
        M, ev = _sqrtm_spd(S)
        cond = ev[:, -1] / ev[:, 0]
        upd = active & (cond > 1.02)
        if not np.any(upd):
            break
        T[upd] = T[upd] @ M[upd]
        active = upd
    detT = np.abs(np.linalg.det(T))
    leb_ball = detT * np.einsum("k,nk->n", w, r ** d) / d
    h = np.max(r[:, None, :] * (U @ U.T)[None], axis=2)
    leb_polar = np.einsum("k,nk->n", w, h ** (-d)) / d / detT
    V = np.einsum("nij,kj->nki", T, U)
    vn = np.linalg.norm(V, axis=2)
    return V / vn[..., None], r * vn, leb_ball, leb_polar


def tangent_ball(body, p, n_dirs=None, normalize=True):
    """Finsler unit ball at p with its Lebesgue volume and that of its polar.

    Radii are the harmonic combination 2 t+ t- / (t+ + t-).  The polar
    volume uses the support function of the sampled ball (max over the
    net), an inner approximation that converges with ``n_dirs``.
    """
    p = np.asarray(p, dtype=float)
    d = len(p)
    if n_dirs is None:
        n_dirs = 512 if d <= 2 else 4096
    if n_dirs < 16 and d > 1:
        raise ValueError("tangent_ball needs at least 16 directions")
    check_interior(body, p)
    dirs, radii, lb, lp = _tangent_batch(body, p, n_dirs, normalize)
    return TangentBall(p, dirs[0], radii[0], float(lb[0]), float(lp[0]))


# --- closed-form densities ---------------------------------------------------

def _polygon_cycle(P):
    key = "_cyclic_facets"
    if key not in P.__dict__:
        ang = np.arctan2(P.facet_normals[:, 1], P.facet_normals[:, 0])
        P.__dict__[key] = np.argsort(ang)
    return P.__dict__[key]


def polygon_densities(P, slacks):
    """(busemann, holmes_thompson) densities of a polygon from facet slacks.

    With g_i = n_i / h_i the polar of the body seen from the point, the
    polar of the unit ball is (A - A)/2 for A = conv(g_i); its area follows
    from the mixed-area formula.  The unit ball itself has its vertices in
    the directions normal to the edges of A.
    """
    order = _polygon_cycle(P)
    n = P.facet_normals[order]
    h = np.asarray(slacks)[:, order]
    g = n[None] / h[..., None]
    gn = np.roll(g, -1, axis=1)
    area_A = 0.5 * np.sum(g[..., 0] * gn[..., 1] - g[..., 1] * gn[..., 0], axis=1)
    e = gn - g
    en = np.stack([-e[..., 1], e[..., 0]], axis=-1)
    mixed = 0.5 * np.sum(np.max(np.einsum("nid,nkd->nki", g, en), axis=2), axis=1)
    leb_polar = 0.5 * (area_A + mixed)
    # unit-ball vertices sit in the directions +-(e_y, -e_x)
    w = np.concatenate([-en, en], axis=1)
    w = w / np.linalg.norm(w, axis=2, keepdims=True)
    proj = np.einsum("nid,nkd->nki", g, w)
    F = 0.5 * (np.max(proj, axis=2) + np.max(-proj, axis=2))
    pts = w / F[..., None]
    ang = np.arctan2(pts[..., 1], pts[..., 0])
    idx = np.argsort(ang, axis=1)
    pts = np.take_along_axis(pts, idx[..., None], axis=1)
    pn = np.roll(pts, -1, axis=1)
    leb_ball = 0.5 * np.sum(pts[..., 0] * pn[..., 1] - pts[..., 1] * pn[..., 0], axis=1)
    return np.pi / leb_ball, leb_polar / np.pi


def _vertex_cycles(P):
    """Facets around each vertex of a 3-polytope, in cyclic order."""
    key = "_vertex_cycles"
    if key in P.__dict__:
        return P.__dict__[key]
    cycles = []
    for v in range(len(P.vertices)):
        on = [j for j, f in enumerate(P.facets) if v in f]
        nrm = P.facet_normals[on]
        a = nrm.mean(axis=0)
        a /= np.linalg.norm(a)
        b1 = np.cross(a, [1.0, 0, 0] if abs(a[0]) < 0.9 else [0, 1.0, 0])
        b1 /= np.linalg.norm(b1)
        b2 = np.cross(a, b1)
        ang = np.arctan2(nrm @ b2, nrm @ b1)
        cycles.append([on[i] for i in np.argsort(ang)])
    P.__dict__[key] = cycles
    return cycles


def polytope3_holmes_thompson(P, slacks):
    """Holmes-Thompson density of a 3-polytope from its facet slacks.

    Faces of A = conv(n_i / h_i) correspond to vertices of P, so the mixed
    volume V(A, A, -A) is a sum over vertices of face area times a support
    value of -A.
    """
    h = np.asarray(slacks)
    g = P.facet_normals[None] / h[..., None]
    vol_A = np.zeros(len(h))
    mixed = np.zeros(len(h))
    for cyc in _vertex_cycles(P):
        gc = g[:, cyc]
        a = 0.5 * np.sum(np.cross(gc, np.roll(gc, -1, axis=1)), axis=1)
        s = np.sign(np.einsum("nd,nd->n", a, gc[:, 0]))
        a = a * s[:, None]
        area = np.linalg.norm(a, axis=1)
        nu = a / area[:, None]
        vol_A += area * np.einsum("nd,nd->n", gc[:, 0], nu) / 3
        mixed += area * np.max(-np.einsum("nid,nd->ni", g, nu), axis=1)
    leb_polar = (2 * vol_A + 2 * mixed) / 8
    return leb_polar / unit_ball_volume(3)


def polytope3_busemann(P, slacks):
    """Busemann density of a 3-polytope: hull of (g_i - g_j)/2, then its polar."""
    h = np.asarray(slacks)
    g = P.facet_normals[None] / h[..., None]
    m = g.shape[1]
    out = np.empty(len(h))
    for k in range(len(h)):
        q = 0.5 * (g[k][:, None] - g[k][None, :]).reshape(m * m, 3)
        q = q[np.any(q != 0, axis=1)]
        M, _ = _sqrtm_spd(q.T @ q / len(q))
        z = q @ np.linalg.inv(M).T
        hull = ConvexHull(z)
        polar = -hull.equations[:, :3] / hull.equations[:, 3:]
        vol = ConvexHull(polar).volume / abs(np.linalg.det(M))
        out[k] = unit_ball_volume(3) / vol
    return out


def _poly_from_slacks(P, slacks, kind):
    if P.dim == 1:
        # interval: both densities equal (t+ + t-) / (2 t+ t-)
        tp, tm = slacks[:, 1], slacks[:, 0]
        return (tp + tm) / (2 * tp * tm)
    if P.dim == 2:
        b, ht = polygon_densities(P, slacks)
        return b if kind == BUSEMANN else ht
    if P.dim == 3:
        if kind == BUSEMANN:
            return polytope3_busemann(P, slacks)
        return polytope3_holmes_thompson(P, slacks)
    return None


def density_from_slacks(P, slacks, kind):
    """Polytope density given the facet slacks b_i - <n_i, x> of the points."""
    kind = volume_kind(kind)
    out = _poly_from_slacks(P, np.asarray(slacks, dtype=float), kind)
    if out is None:
        raise NotImplementedError("closed-form densities need d <= 3")
    return out


def density(body, points, kind, n_dirs=None, exact=True):
    """Busemann or Holmes-Thompson density at each point.

    Closed forms are used for ellipsoids and polytopes of dimension <= 3
    (and affine images of those) unless ``exact`` is False; everything else
    goes through :func:`tangent_ball` with affine normalisation.
    """
    kind = volume_kind(kind)
    pts = _as_rows(points)
    if exact:
        if isinstance(body, Ellipsoid):
            check_interior(body, pts)
            z2 = np.sum(body._z(pts) ** 2, axis=1)
            return (1 - z2) ** (-(body.dim + 1) / 2) / body.det
        if isinstance(body, Polytope) and body.dim <= 3:
            check_interior(body, pts)
            return density_from_slacks(body, body.slacks(pts), kind)
        if isinstance(body, AffineImage):
            return density(body.inner, body.preimage(pts), kind, n_dirs) / body.det
    check_interior(body, pts)
    d = body.dim
    if n_dirs is None:
        n_dirs = 512 if d <= 2 else 4096
    out = np.empty(len(pts))
    step = max(1, 200_000 // n_dirs)
    for i in range(0, len(pts), step):
        _, _, lb, lp = _tangent_batch(body, pts[i:i + step], n_dirs, True)
        out[i:i + step] = unit_ball_volume(d) / lb if kind == BUSEMANN else lp / unit_ball_volume(d)
    return out
