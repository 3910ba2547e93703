"""Bounded convex bodies described by oracles.

Every body answers three questions in vectorised form: where does a ray
leave the body (``ray_hit``), what is its support function (``support``),
and is a point inside (``contains``).  Each body also carries a sandwich
certificate ``y + l*E <= body <= y + L*E`` that is checked on construction.

Polytopes live in :mod:`hilbertflags.polytope_lattice`; they subclass
:class:`ConvexBody` and plug into every function here.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    CertificateError,
    DegenerateBody,
    DimensionMismatch,
    NonpositiveFactor,
    PointNotInterior,
    WidthOutOfRange,
)
from .nets import direction_net

# relative tolerance on boundary hits for root-found rays
TAU_HIT = 1e-12
# points closer than this (relative to the outer radius) to the boundary
# are treated as boundary points
INTERIOR_MARGIN = 1e-12


def _as_rows(x):
    x = np.asarray(x, dtype=float)
    return x[None, :] if x.ndim == 1 else x


@dataclass(frozen=True)
class Certificate:
    """Euclidean sandwich ``center + inner*E <= body <= center + outer*E``."""

    center: np.ndarray
    inner: float
    outer: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not (self.inner > 0 and self.outer >= self.inner):
            raise CertificateError(
                f"need 0 < inner <= outer, got {self.inner}, {self.outer}")

    def scaled(self, y, factor):
        y = np.asarray(y, dtype=float)
        return Certificate(y + factor * (self.center - y),
                           factor * self.inner, factor * self.outer)


class ConvexBody:
    """Abstract bounded convex body with nonempty interior."""

    dim: int
    certificate: Certificate

    # --- oracles every subclass provides -------------------------------
    def ray_hit(self, points, dirs):
        """Parameter t >= 0 with ``points + t*dirs`` on the boundary.

        ``dirs`` need not be normalised; the returned parameter is measured
        in units of ``dirs``.  Points must be inside the body.
        """
        raise NotImplementedError

    def support(self, dirs):
        """Support function, positively homogeneous in ``dirs``."""
        raise NotImplementedError

    def gauge(self, points):
        """Minkowski gauge about the certificate center (<= 1 inside)."""
        c = self.certificate.center
        x = _as_rows(points) - c
        nx = np.linalg.norm(x, axis=1)
        out = np.zeros(len(x))
        nz = nx > 0
        if np.any(nz):
            t = self.ray_hit(np.broadcast_to(c, x[nz].shape), x[nz])
            out[nz] = 1.0 / t
        return out

    def contains(self, points, tol=0.0):
        return self.gauge(points) <= 1.0 + tol

    def transformed(self, matrix, offset):
        """Image under ``x -> matrix @ x + offset``."""
        return AffineImage(self, matrix, offset)

    def scaled(self, y, factor):
        d = self.dim
        y = np.asarray(y, dtype=float)
        return self.transformed(factor * np.eye(d), y - factor * y)

    def boundary_distance(self, points):
        """Lower bound on the Euclidean distance to the boundary.

        Uses ``body >= x + (1 - g(x)) (body - y)`` with g the gauge about
        the certificate center y.
        """
        g = self.gauge(points)
        return np.clip(1.0 - g, 0.0, None) * self.certificate.inner

    def apex(self, u):
        """A point of the body maximising <x, u>."""
        raise NotImplementedError

    def exact_centroid(self):
        return None

    def section_centroid(self, u, offset, n_samples=200_000, seed=0):
        """Centroid of the slice ``body & {<x,u> = offset}``."""
        u = np.asarray(u, dtype=float)
        u = u / np.linalg.norm(u)
        y = self.certificate.center
        base = y + (offset - y @ u) * u
        if self.dim == 2:
            t = np.array([-u[1], u[0]])
            if not self.contains(base):
                raise WidthOutOfRange("hyperplane misses the body interior")
            tp = self.ray_hit(base, t)[0]
            tm = self.ray_hit(base, -t)[0]
            return base + 0.5 * (tp - tm) * t
        # orthonormal frame of the hyperplane, then rejection sampling
        q, _ = np.linalg.qr(np.column_stack([u, np.eye(self.dim)]))
        frame = q[:, 1:self.dim]
        L = self.certificate.outer
        rng = np.random.default_rng(seed)
        z = rng.uniform(-L, L, size=(n_samples, self.dim - 1))
        pts = base + z @ frame.T
        inside = pts[self.contains(pts)]
        if len(inside) < 10:
            raise DegenerateBody("slice too thin to sample")
        return inside.mean(axis=0)

    def bounding_box(self):
        c, L = self.certificate.center, self.certificate.outer
        return c - L, c + L

    def verify_certificate(self, n_dirs=4096):
        """Check the sandwich radii through support values on a direction net."""
        dirs, _ = direction_net(self.dim, n_dirs)
        dirs = np.vstack([dirs, np.eye(self.dim), -np.eye(self.dim)])
        h = self.support(dirs) - dirs @ self.certificate.center
        slack = 1e-9 * self.certificate.outer
        if np.min(h) < self.certificate.inner - slack:
            raise CertificateError("inner ball is not contained in the body")
        if np.max(h) > self.certificate.outer + slack:
            raise CertificateError("body is not contained in the outer ball")
        return True


class EmptySet:
    """Sentinel returned for asymptotic balls of nonpositive radius."""

    is_empty = True

    def __init__(self, dim):
        self.dim = dim

    def contains(self, points, tol=0.0):
        return np.zeros(len(_as_rows(points)), dtype=bool)

    def __repr__(self):
        return f"EmptySet(dim={self.dim})"


class Ellipsoid(ConvexBody):
    """``{center + A z : |z| <= 1}``; ``axes`` is a vector of semi-axes or a matrix A."""

    def __init__(self, center, axes):
        self.center = np.asarray(center, dtype=float)
        axes = np.asarray(axes, dtype=float)
        self.matrix = np.diag(axes) if axes.ndim == 1 else axes
        self.dim = len(self.center)
        if self.matrix.shape != (self.dim, self.dim):
            raise DimensionMismatch("axes do not match the center dimension")
        sv = np.linalg.svd(self.matrix, compute_uv=False)
        if sv[-1] <= 0:
            raise DegenerateBody("ellipsoid axes are degenerate")
        self.inverse = np.linalg.inv(self.matrix)
        self.det = abs(np.linalg.det(self.matrix))
        self.certificate = Certificate(self.center, sv[-1], sv[0])

    @classmethod
    def ball(cls, d, radius=1.0, center=None):
        center = np.zeros(d) if center is None else center
        return cls(center, np.full(d, float(radius)))

    def _z(self, points):
        return (_as_rows(points) - self.center) @ self.inverse.T

    def gauge(self, points):
        return np.linalg.norm(self._z(points), axis=1)

    def ray_hit(self, points, dirs):
        z0 = self._z(points)
        dz = _as_rows(dirs) @ self.inverse.T
        a = np.einsum("ij,ij->i", dz, dz)
        b = np.einsum("ij,ij->i", z0, dz)
        c = 1.0 - np.einsum("ij,ij->i", z0, z0)
        disc = np.sqrt(np.clip(b * b + a * c, 0.0, None))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(b > 0, c / (b + disc), (disc - b) / a)
        return t

    def support(self, dirs):
        u = _as_rows(dirs)
        return u @ self.center + np.linalg.norm(u @ self.matrix, axis=1)

    def apex(self, u):
        u = np.asarray(u, dtype=float)
        w = self.matrix.T @ u
        return self.center + self.matrix @ (w / np.linalg.norm(w))

    def section_centroid(self, u, offset, **_):
        u = np.asarray(u, dtype=float)
        w = self.matrix.T @ u
        k = offset - self.center @ u
        return self.center + self.matrix @ (k * w / (w @ w))

    def exact_centroid(self):
        return self.center.copy()

    def transformed(self, matrix, offset):
        matrix = np.asarray(matrix, dtype=float)
        return Ellipsoid(matrix @ self.center + offset, matrix @ self.matrix)

    def boundary_distance(self, points):
        z = np.linalg.norm(self._z(points), axis=1)
        return np.clip(1 - z, 0, None) * self.certificate.inner

    def __repr__(self):
        return f"Ellipsoid(center={self.center.tolist()}, matrix={self.matrix.tolist()})"


class PNormBall(ConvexBody):
    """``{x : ||x - center||_p <= scale}`` for an exponent p >= 1 (inf allowed)."""

    def __init__(self, center, scale, exponent):
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)
        self.p = float(exponent)
        if self.p < 1:
            raise ValueError("exponent must be >= 1")
        if self.scale <= 0:
            raise DegenerateBody("scale must be positive")
        self.dim = d = len(self.center)
        if np.isinf(self.p):
            self.q = 1.0
        elif self.p == 1:
            self.q = np.inf
        else:
            self.q = self.p / (self.p - 1)
        e = 0.5 - (0.0 if np.isinf(self.p) else 1.0 / self.p)
        lo, hi = (1.0, d ** e) if e >= 0 else (d ** e, 1.0)
        self.certificate = Certificate(self.center, self.scale * lo, self.scale * hi)

    def _norm(self, y, p):
        if np.isinf(p):
            return np.max(np.abs(y), axis=1)
        m = np.max(np.abs(y), axis=1)
        m = np.where(m > 0, m, 1.0)
        return m * np.sum((np.abs(y) / m[:, None]) ** p, axis=1) ** (1 / p)

    def gauge(self, points):
        return self._norm(_as_rows(points) - self.center, self.p) / self.scale

    def support(self, dirs):
        u = _as_rows(dirs)
        return u @ self.center + self.scale * self._norm(u, self.q)

    def apex(self, u):
        u = np.asarray(u, dtype=float)
        if np.isinf(self.p):
            x = np.sign(u)
        elif self.p == 1:
            x = np.zeros_like(u)
            i = np.argmax(np.abs(u))
            x[i] = np.sign(u[i])
        else:
            a = np.abs(u) ** (self.q - 1)
            x = np.sign(u) * a / np.sum(np.abs(u) ** self.q) ** ((self.q - 1) / self.q)
        return self.center + self.scale * x

    def ray_hit(self, points, dirs):
        x = _as_rows(points) - self.center
        u = _as_rows(dirs)
        if np.isinf(self.p):
            # box: exact slab intersection
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(u > 0, (self.scale - x) / u,
                             np.where(u < 0, (-self.scale - x) / u, np.inf))
            return np.min(t, axis=1)
        un = np.linalg.norm(u, axis=1)
        # bracket: the body lies inside the outer ball about the center
        hi = (np.linalg.norm(x, axis=1) + self.certificate.outer) / un * (1 + 1e-9)
        lo = np.zeros(len(x))
        t = hi.copy()
        p, s = self.p, self.scale
        for _ in range(200):
            y = x + t[:, None] * u
            g = self._norm(y, p)
            f = g / s - 1.0
            lo = np.where(f < 0, np.maximum(lo, t), lo)
            hi = np.where(f >= 0, np.minimum(hi, t), hi)
            gn = np.where(g > 0, g, 1.0)
            grad = np.sign(y) * (np.abs(y) / gn[:, None]) ** (p - 1) / s
            fp = np.einsum("ij,ij->i", grad, u)
            with np.errstate(divide="ignore", invalid="ignore"):
                tn = t - f / fp
            bad = ~np.isfinite(tn) | (tn <= lo) | (tn >= hi) | (fp <= 0)
            tn = np.where(bad, 0.5 * (lo + hi), tn)
            done = np.abs(tn - t) <= TAU_HIT * np.maximum(t, 1e-300)
            t = tn
            if np.all(done):
                break
        # two plain Newton steps take the root from TAU_HIT to full precision
        for _ in range(2):
            y = x + t[:, None] * u
            g = self._norm(y, p)
            gn = np.where(g > 0, g, 1.0)
            fp = np.einsum("ij,ij->i", np.sign(y) * (np.abs(y) / gn[:, None]) ** (p - 1) / s, u)
            with np.errstate(divide="ignore", invalid="ignore"):
                tn = t - (g / s - 1.0) / fp
            t = np.where(np.isfinite(tn) & (fp > 0) & (np.abs(tn - t) <= 1e-9 * t), tn, t)
        return t

    def __repr__(self):
        return f"PNormBall(center={self.center.tolist()}, scale={self.scale}, exponent={self.p})"


class AffineImage(ConvexBody):
    """``matrix @ inner + offset`` for an invertible matrix."""

    def __init__(self, inner, matrix, offset):
        self.inner = inner
        self.matrix = np.asarray(matrix, dtype=float)
        self.offset = np.asarray(offset, dtype=float)
        self.dim = inner.dim
        if self.matrix.shape != (self.dim, self.dim):
            raise DimensionMismatch("affine map does not match body dimension")
        self.inverse = np.linalg.inv(self.matrix)
        self.det = abs(np.linalg.det(self.matrix))
        sv = np.linalg.svd(self.matrix, compute_uv=False)
        c = inner.certificate
        self.certificate = Certificate(self.matrix @ c.center + self.offset,
                                       c.inner * sv[-1], c.outer * sv[0])

    def preimage(self, points):
        return (_as_rows(points) - self.offset) @ self.inverse.T

    def gauge(self, points):
        return self.inner.gauge(self.preimage(points))

    def ray_hit(self, points, dirs):
        return self.inner.ray_hit(self.preimage(points), _as_rows(dirs) @ self.inverse.T)

    def support(self, dirs):
        u = _as_rows(dirs)
        return self.inner.support(u @ self.matrix) + u @ self.offset

    def apex(self, u):
        return self.matrix @ self.inner.apex(self.matrix.T @ np.asarray(u, float)) + self.offset

    def exact_centroid(self):
        c = self.inner.exact_centroid()
        return None if c is None else self.matrix @ c + self.offset

    def transformed(self, matrix, offset):
        matrix = np.asarray(matrix, dtype=float)
        return AffineImage(self.inner, matrix @ self.matrix, matrix @ self.offset + offset)

    def __repr__(self):
        return f"AffineImage({self.inner!r}, matrix={self.matrix.tolist()}, offset={self.offset.tolist()})"


class IntersectionBody(ConvexBody):
    """Intersection of convex bodies sharing an interior point ``center``.

    Only the membership and ray oracles are available; the support function
    of an intersection has no closed form here.
    """

    def __init__(self, members, center, inner, outer):
        self.members = list(members)
        self.dim = self.members[0].dim
        self.certificate = Certificate(center, inner, outer)

    def contains(self, points, tol=0.0):
        ok = np.ones(len(_as_rows(points)), dtype=bool)
        for m in self.members:
            ok &= m.contains(points, tol)
        return ok

    def ray_hit(self, points, dirs):
        return np.min([m.ray_hit(points, dirs) for m in self.members], axis=0)

    def support(self, dirs):
        raise NotImplementedError("support of an intersection body is not available")


@dataclass(frozen=True)
class Cap:
    """``body & {<x,u> >= offset}`` with its apex and base centroid."""

    body: ConvexBody
    normal: np.ndarray
    offset: float
    base_centroid: np.ndarray
    apex: np.ndarray
    width: float


# --- operations ---------------------------------------------------------

def _unit(u):
    u = np.asarray(u, dtype=float)
    n = np.linalg.norm(u)
    if n == 0:
        raise ValueError("direction must be nonzero")
    return u / n


def check_interior(body, points):
    """Raise PointNotInterior unless every point is strictly inside."""
    pts = _as_rows(points)
    if body.dim != pts.shape[1]:
        raise DimensionMismatch(f"point of dimension {pts.shape[1]} for a {body.dim}-body")
    g = body.gauge(pts)
    if not np.all(g < 1.0):
        raise PointNotInterior("point is not in the interior of the body")


def chords(body, points, dirs):
    """Vectorised ``(t_minus, t_plus)`` for rays through interior points.

    Raises PointNotInterior when a point is within INTERIOR_MARGIN of the
    boundary, since cross ratios there are dominated by rounding.
    """
    pts = _as_rows(points)
    u = _as_rows(dirs)
    u = np.broadcast_to(u, pts.shape) if len(u) == 1 else u
    pts = np.broadcast_to(pts, u.shape) if len(pts) == 1 else pts
    check_interior(body, pts)
    tp = body.ray_hit(pts, u)
    tm = body.ray_hit(pts, -u)
    tol = INTERIOR_MARGIN * body.certificate.outer
    if not (np.all(tp > tol) and np.all(tm > tol)):
        raise PointNotInterior("point lies on the boundary to working precision")
    return tm, tp


def chord_endpoints(body, p, u):
    """Boundary hit times ``(t_minus, t_plus)`` along the line through p with direction u."""
    u = _unit(u)
    tm, tp = chords(body, p, u)
    return float(tm[0]), float(tp[0])


def support_value(body, u):
    """Support function h(u) = sup <x, u> for a unit direction u."""
    return float(body.support(_unit(u))[0])


def _candidate_directions(body):
    f = getattr(body, "facet_normals", None)
    return None if f is None else np.asarray(f)


def hausdorff_distance(body1, body2, n_dirs=4096):
    """max |h1(u) - h2(u)| over a direction net.

    Facet normals of polytopes are added to the net, and for pairs of
    polygons the vertex-difference directions too, which makes the value
    exact in that case.  Otherwise it is a lower bound converging with
    ``n_dirs``.
    """
    if body1.dim != body2.dim:
        raise DimensionMismatch("bodies live in different dimensions")
    dirs, _ = direction_net(body1.dim, n_dirs)
    extra = [dirs]
    for b in (body1, body2):
        c = _candidate_directions(b)
        if c is not None:
            extra.append(c)
    v1 = getattr(body1, "vertices", None)
    v2 = getattr(body2, "vertices", None)
    if body1.dim == 2 and v1 is not None and v2 is not None:
        diff = (v1[:, None, :] - v2[None, :, :]).reshape(-1, 2)
        n = np.linalg.norm(diff, axis=1)
        diff = diff[n > 1e-15] / n[n > 1e-15, None]
        extra.extend([diff, -diff])
    dirs = np.vstack(extra)
    return float(np.max(np.abs(body1.support(dirs) - body2.support(dirs))))


def scale_about(body, y, factor):
    """Homothety ``y + factor*(body - y)``."""
    if not factor > 0:
        raise NonpositiveFactor(f"scaling factor must be positive, got {factor}")
    if factor == 1:
        return body
    return body.scaled(np.asarray(y, dtype=float), float(factor))


def sample_uniform(body, n, rng):
    """n points uniformly distributed in the body (rejection from its box)."""
    lo, hi = body.bounding_box()
    out = []
    have = 0
    while have < n:
        batch = rng.uniform(lo, hi, size=(max(2 * (n - have), 1024), body.dim))
        keep = batch[body.contains(batch)]
        out.append(keep)
        have += len(keep)
    return np.vstack(out)[:n]


def centroid(body, n_samples=1_000_000, seed=0, return_error=False):
    """Center of mass under Lebesgue measure.

    Exact for polytopes and ellipsoids (and their affine images); Monte
    Carlo otherwise, in which case ``return_error`` also returns the
    per-coordinate standard error.
    """
    exact = body.exact_centroid()
    if exact is not None:
        return (exact, np.zeros(body.dim)) if return_error else exact
    rng = np.random.default_rng(seed)
    pts = sample_uniform(body, n_samples, rng)
    c = pts.mean(axis=0)
    err = pts.std(axis=0, ddof=1) / np.sqrt(len(pts))
    return (c, err) if return_error else c


def make_cap(body, u, width):
    """Cap ``body & {<x,u> >= h(u) - width}``."""
    u = _unit(u)
    h_plus = float(body.support(u)[0])
    h_minus = float(body.support(-u)[0])
    if not (0 < width < h_plus + h_minus):
        raise WidthOutOfRange(f"width must lie in (0, {h_plus + h_minus})")
    offset = h_plus - width
    base = body.section_centroid(u, offset)
    return Cap(body, u, offset, np.asarray(base), np.asarray(body.apex(u)), float(width))
