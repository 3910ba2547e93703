"""Busemann and Holmes-Thompson volumes of metric and asymptotic balls.

Every region handled here is star-shaped about its center p, so volumes are
computed in polar form.  The radial variable is the Hilbert radius rho in
[0, R] rather than the Euclidean extent: along a chord with hit times
t+ and t- the extent is s(rho) in closed form, and the integrand
density * s^(d-1) * ds/drho stays bounded as the ball approaches the
boundary.  Since the integrand does not depend on R, one pass over the
largest radius yields the whole growth curve by cumulative sums.

Polygons and 3-polytopes are integrated over boundary patches (the facet
faces of the barycentric flag simplices) rather than a direction net,
because at large R the mass of a polytope ball piles up within
exp(-2R) of the vertex directions.  The patch coordinate is graded
exponentially toward the vertex and the facet slacks of each node are
formed from exact complements, so no digits are lost near the boundary.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .convex_core import Ellipsoid, _as_rows, check_interior, chords
from .errors import BudgetTooSmall, InvalidSpec, PointNotInterior
from .hilbert_metric import (
    asymptotic_ball,
    density,
    density_from_slacks,
    hilbert_distances,
    volume_kind,
)
from .nets import (
    angular_net,
    direction_net,
    gauss_segments,
    graded_unit_rule,
    sphere_product_rule,
    subdivide,
)
from .parallel import parallel_map
from .polytope_lattice import FlagSimplex, Polytope, flag_decomposition

METRIC = "metric"
ASYMPTOTIC = "asymptotic"
QUADRATURE = "radial-quadrature"
MONTE_CARLO = "monte-carlo"

MIN_DIRS = 16
MIN_ORDER = 2
MIN_SAMPLES = 100
_CHUNK = 400_000


@dataclass(frozen=True)
class Cone:
    """Closed cone ``apex + sum c_i g_i`` with c_i >= 0 and d generators."""

    apex: np.ndarray
    generators: np.ndarray

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.generators, dtype=float))
        object.__setattr__(self, "apex", np.asarray(self.apex, dtype=float))
        object.__setattr__(self, "generators", g)
        if g.shape != (len(self.apex), len(self.apex)) or abs(np.linalg.det(g)) < 1e-14:
            raise InvalidSpec("a cone needs d linearly independent generators")

    def contains(self, points, tol=1e-12):
        c = np.linalg.solve(self.generators.T, (_as_rows(points) - self.apex).T).T
        return np.all(c >= -tol, axis=1)


@dataclass(frozen=True)
class BallSpec:
    """Metric or asymptotic ball about ``center``, optionally clipped.

    ``clip`` is a FlagSimplex whose last point (the top face) is the center,
    restricting to the cone over its facet part, or a :class:`Cone` with
    apex at the center.
    """

    body: object
    center: np.ndarray
    R: float
    kind: str = METRIC
    clip: object = None

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        object.__setattr__(self, "center", c)
        if self.kind not in (METRIC, ASYMPTOTIC):
            raise InvalidSpec(f"ball kind must be {METRIC!r} or {ASYMPTOTIC!r}")
        if len(c) != self.body.dim:
            raise InvalidSpec("center dimension does not match the body")
        if not np.isfinite(self.R) or self.R < 0:
            raise InvalidSpec("radius must be finite and nonnegative")
        try:
            check_interior(self.body, c)
        except PointNotInterior as exc:
            raise InvalidSpec(str(exc)) from None
        _check_clip(self.body, c, self.clip)


def _check_clip(body, c, clip):
    if clip is None:
        return
    scale = body.certificate.outer
    if isinstance(clip, FlagSimplex):
        if not isinstance(body, Polytope) or body.dim not in (2, 3):
            raise InvalidSpec("flag-simplex clips need a polygon or 3-polytope")
        if np.linalg.norm(clip.points[-1] - c) > 1e-9 * scale:
            raise InvalidSpec("the flag simplex must have its top-face point at the center")
    elif isinstance(clip, Cone):
        if np.linalg.norm(clip.apex - c) > 1e-9 * scale:
            raise InvalidSpec("the clip cone must have its apex at the center")
        if body.dim not in (2, 3):
            raise InvalidSpec("cone clips are supported in dimensions 2 and 3")
    else:
        raise InvalidSpec("clip must be a FlagSimplex or a Cone")


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    stderr: float
    method: str
    nodes: int
    volume_kind: str


@dataclass(frozen=True)
class QuadratureBudget:
    """Node counts for the radial quadrature.

    ``n_dirs`` applies to the direction-net route (None picks 1024 in 2D and
    4096 in 3D); the orders are Gauss points per unit segment in rho and in
    the graded patch coordinates; ``grading_extra`` is how far past
    ``2 R`` the patch grading reaches, in units of log distance.
    """

    n_dirs: int = None
    radial_order: int = 8
    patch_order: int = 8
    grading_extra: float = 12.0

    def __post_init__(self):
        if self.n_dirs is not None and self.n_dirs < MIN_DIRS:
            raise BudgetTooSmall(f"need at least {MIN_DIRS} directions")
        if self.radial_order < MIN_ORDER or self.patch_order < MIN_ORDER:
            raise BudgetTooSmall(f"need at least {MIN_ORDER} nodes per segment")
        if self.grading_extra < 0:
            raise BudgetTooSmall("grading_extra must be nonnegative")

    def coarse(self):
        """The reference rule used for the error estimate."""
        n = None if self.n_dirs is None else max(MIN_DIRS, self.n_dirs // 2)
        return QuadratureBudget(n, max(MIN_ORDER, self.radial_order - 2),
                                max(MIN_ORDER, self.patch_order - 2), self.grading_extra)


def default_budget(d):
    if d >= 3:
        return QuadratureBudget(radial_order=6, patch_order=5, grading_extra=10.0)
    return QuadratureBudget()


# --- the rho substitution ------------------------------------------------------

def _rho_factors(tm, rho, ball):
    """lam = s / t+, its complement 1 - lam and dlam/drho, with t+ = 1.

    ``tm`` is t- in units of t+; arrays broadcast against ``rho``.
    """
    if ball == METRIC:
        E = np.exp(2 * rho)
        den = 1 + E * tm
        lam = tm * np.expm1(2 * rho) / den
        comp = (1 + tm) / den
        dlam = 2 * E * tm * (1 + tm) / den ** 2
    else:
        e = np.exp(-2 * rho)
        lam = -np.expm1(-2 * rho) + 0 * tm
        comp = e + 0 * tm
        dlam = 2 * e + 0 * tm
    return lam, comp, dlam


class _Ladder:
    """Composite Gauss rule in rho with breakpoints at every ladder radius."""

    def __init__(self, R_ladder, order):
        R = np.asarray(R_ladder, dtype=float)
        breaks = subdivide(np.concatenate([[0.0], R]), 1.0)
        self.nodes, self.weights, self.seg = gauss_segments(breaks, order)
        self.n_seg = len(breaks) - 1
        self.ends = np.searchsorted(breaks, R - 1e-12 * max(1.0, R.max()))
        self.R = R

    def accumulate(self, f):
        """Integrals of f (sampled at the nodes) from 0 to each ladder radius."""
        per_seg = np.bincount(self.seg, weights=f * self.weights, minlength=self.n_seg)
        cum = np.concatenate([[0.0], np.cumsum(per_seg)])
        return cum[self.ends]


# --- polytope patches ----------------------------------------------------------------

def _cross2(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _zeroed(h, scale):
    h = np.array(h, dtype=float)
    h[np.abs(h) < 1e-12 * scale] = 0.0
    return h


def _center_picker(P, center):
    """Barycenters for proper faces, the ball center for the polytope itself."""
    top = P.lattice.top

    def pick(fid):
        return center if fid == top else P.face_points(fid).mean(axis=0)
    return pick


def _patch_nodes(P, p, fs, depth, order):
    """Boundary nodes of one flag simplex's facet part.

    Returns (v, tm, hx, jw) with v = x - p the patch vectors, t- along -v in
    units of |v|, the facet slacks of x, and Jacobian times weight.
    """
    scale = P.certificate.outer
    pts = fs.points
    t, wt = graded_unit_rule(depth, order)
    if P.dim == 2:
        q0, q1 = pts[0], pts[1]
        h0, h1 = _zeroed(P.slacks(q0)[0], scale), _zeroed(P.slacks(q1)[0], scale)
        x = q0 + t[:, None] * (q1 - q0)
        hx = (1 - t)[:, None] * h0 + t[:, None] * h1
        jac = abs(_cross2(q0 - p, q1 - q0))
        jw = jac * wt
    else:
        b, c, a = pts[0], pts[1], pts[2]
        ha, hb, hc = (_zeroed(P.slacks(q)[0], scale) for q in (a, b, c))
        ub, wb = np.meshgrid(t, t, indexing="ij")
        wgt = np.outer(wt, wt).ravel()
        ub, wb = ub.ravel(), wb.ravel()
        u = 1 - ub
        x = a + u[:, None] * (b - a) + (u * wb)[:, None] * (c - b)
        hx = (ub[:, None] * ha + (u * (1 - wb))[:, None] * hb
              + (u * wb)[:, None] * hc)
        jac = abs(np.dot(a - p, np.cross(b - a, c - b)))
        jw = jac * u * wgt
    v = x - p
    tm = P.ray_hit(np.broadcast_to(p, v.shape), -v)
    return v, tm, hx, jw


def _patch_ladder(P, p, fs, kind, ladder, ball, depth, order):
    hp = P.slacks(p)[0]
    v, tm, hx, jw = _patch_nodes(P, p, fs, depth, order)
    d = P.dim
    rho = ladder.nodes
    f = np.zeros(len(rho))
    step = max(1, _CHUNK // (len(rho) * len(hp)))
    for i in range(0, len(tm), step):
        sl = slice(i, i + step)
        lam, comp, dlam = _rho_factors(tm[sl, None], rho[None, :], ball)
        s = comp[..., None] * hp + lam[..., None] * hx[sl, None, :]
        dens = density_from_slacks(P, s.reshape(-1, len(hp)), kind).reshape(lam.shape)
        f += np.sum(dens * lam ** (d - 1) * dlam * jw[sl, None], axis=0)
    return ladder.accumulate(f), len(tm) * len(rho)


def _patch_route(P, p, kind, R_ladder, ball, budget, clip):
    depth = 2 * float(np.max(R_ladder)) + budget.grading_extra
    ladder = _Ladder(R_ladder, budget.radial_order)
    flags = [clip] if clip is not None else flag_decomposition(P, _center_picker(P, p))
    out = parallel_map(
        lambda fs: _patch_ladder(P, p, fs, kind, ladder, ball, depth, budget.patch_order),
        flags)
    per_flag = np.array([o[0] for o in out])
    return per_flag, sum(o[1] for o in out)


# --- direction nets --------------------------------------------------------------------

def _directions(d, n, clip):
    if clip is None:
        if d == 2:
            return angular_net(n, np.pi / n), np.full(n, 2 * np.pi / n)
        if d == 3:
            nt = max(4, int(round(np.sqrt(n / 2))))
            return sphere_product_rule(nt, 2 * nt)
        return direction_net(d, n)
    if d == 2:
        g = clip.generators
        a0, a1 = np.arctan2(g[:, 1], g[:, 0])
        if _cross2(g[0], g[1]) < 0:
            a0, a1 = a1, a0
        a1 = a0 + (a1 - a0) % (2 * np.pi)
        k = max(1, n // 16)
        th, w, _ = gauss_segments(np.linspace(a0, a1, k + 1), 16)
        return np.column_stack([np.cos(th), np.sin(th)]), w
    # 3D: supersampled product rule restricted to the cone
    nt = max(8, int(round(np.sqrt(2 * n))))
    dirs, w = sphere_product_rule(nt, 2 * nt)
    keep = clip.contains(clip.apex + dirs)
    return dirs[keep], w[keep]


def _direction_ladder(body, p, kind, ladder, ball, dirs, wts, n_dirs_density):
    d = body.dim
    tm, tp = chords(body, np.broadcast_to(p, dirs.shape), dirs)
    rho = ladder.nodes
    f = np.zeros(len(rho))
    step = max(1, _CHUNK // len(rho))
    if not isinstance(body, (Ellipsoid, Polytope)):
        step = max(1, step // 64)
    for i in range(0, len(dirs), step):
        sl = slice(i, i + step)
        lam, _, dlam = _rho_factors((tm[sl] / tp[sl])[:, None], rho[None, :], ball)
        s = lam * tp[sl, None]
        ds = dlam * tp[sl, None]
        y = p + s[..., None] * dirs[sl, None, :]
        dens = density(body, y.reshape(-1, d), kind, n_dirs=n_dirs_density).reshape(s.shape)
        f += np.sum(dens * s ** (d - 1) * ds * wts[sl, None], axis=0)
    return ladder.accumulate(f)


def _direction_route(body, p, kind, R_ladder, ball, budget, clip):
    d = body.dim
    n = budget.n_dirs or (1024 if d <= 2 else 4096)
    dirs, wts = _directions(d, n, clip)
    ladder = _Ladder(R_ladder, budget.radial_order)
    chunks = np.array_split(np.arange(len(dirs)), min(len(dirs), 8))
    parts = parallel_map(
        lambda idx: _direction_ladder(body, p, kind, ladder, ball, dirs[idx], wts[idx], None),
        [c for c in chunks if len(c)])
    return np.sum(parts, axis=0), len(dirs) * len(ladder.nodes)


def _use_patches(body):
    return isinstance(body, Polytope) and body.dim in (2, 3)


def _quadrature(body, p, kind, R_ladder, ball, budget, clip):
    if _use_patches(body) and not isinstance(clip, Cone):
        per_flag, nodes = _patch_route(body, p, kind, R_ladder, ball, budget, clip)
        return per_flag.sum(axis=0), nodes
    if isinstance(clip, FlagSimplex):
        raise InvalidSpec("flag-simplex clips need a polygon or 3-polytope")
    return _direction_route(body, p, kind, R_ladder, ball, budget, clip)


def _quadrature_with_error(body, p, kind, R_ladder, ball, budget, clip):
    fine, nodes = _quadrature(body, p, kind, R_ladder, ball, budget, clip)
    coarse, _ = _quadrature(body, p, kind, R_ladder, ball, budget.coarse(), clip)
    return fine, np.abs(fine - coarse), nodes


# --- Monte Carlo ----------------------------------------------------------------------

def _in_clip(clip, p, pts):
    if clip is None:
        return np.ones(len(pts), dtype=bool)
    if isinstance(clip, Cone):
        return clip.contains(pts)
    return Cone(p, clip.points[:-1] - p).contains(pts)


def _monte_carlo(spec, kind, n, seed):
    body, p, R = spec.body, spec.center, spec.R
    if R == 0:
        return 0.0, 0.0
    asb = asymptotic_ball(body, p, R)
    lo, hi = asb.bounding_box()
    box = float(np.prod(hi - lo))
    rng = np.random.default_rng(seed)
    total = total_sq = 0.0
    for i in range(0, n, 100_000):
        m = min(100_000, n - i)
        x = rng.uniform(lo, hi, (m, body.dim))
        inside = body.contains(x) & _in_clip(spec.clip, p, x)
        if np.any(inside):
            xi = x[inside]
            if spec.kind == METRIC:
                ok = hilbert_distances(body, p, xi) <= R
            else:
                ok = asb.contains(xi)
            inside[np.flatnonzero(inside)[~ok]] = False
        f = np.zeros(m)
        if np.any(inside):
            f[inside] = density(body, x[inside], kind)
        total += f.sum()
        total_sq += np.sum(f * f)
    mean = total / n
    var = max(total_sq / n - mean ** 2, 0.0)
    return box * mean, box * np.sqrt(var / n)


# --- public API -----------------------------------------------------------------------------

def _budget_for(budget, d):
    if budget is None:
        return default_budget(d)
    if isinstance(budget, QuadratureBudget):
        return budget
    n = int(budget)
    if n < MIN_DIRS:
        raise BudgetTooSmall(f"need at least {MIN_DIRS} directions")
    b = default_budget(d)
    return QuadratureBudget(n, b.radial_order, b.patch_order, b.grading_extra)


def region_volume(spec, kind, budget=None, method="quadrature", seed=0):
    """Busemann or Holmes-Thompson volume of the region described by ``spec``.

    ``budget`` is a QuadratureBudget (or a direction count) for the
    quadrature, and a sample count for ``method="monte-carlo"``.
    """
    kind = volume_kind(kind)
    if not isinstance(spec, BallSpec):
        raise InvalidSpec("expected a BallSpec")
    if method in ("monte-carlo", MONTE_CARLO):
        n = 100_000 if budget is None else int(budget)
        if n < MIN_SAMPLES:
            raise BudgetTooSmall(f"need at least {MIN_SAMPLES} samples")
        value, err = _monte_carlo(spec, kind, n, seed)
        return VolumeEstimate(value, err, MONTE_CARLO, n, kind)
    if method not in ("quadrature", QUADRATURE):
        raise InvalidSpec(f"unknown method {method!r}")
    b = _budget_for(budget, spec.body.dim)
    if spec.R == 0:
        return VolumeEstimate(0.0, 0.0, QUADRATURE, 0, kind)
    v, e, nodes = _quadrature_with_error(spec.body, spec.center, kind, [spec.R],
                                         spec.kind, b, spec.clip)
    return VolumeEstimate(float(v[0]), float(e[0]), QUADRATURE, nodes, kind)


def _check_ladder(R_ladder):
    R = np.asarray(R_ladder, dtype=float).reshape(-1)
    if len(R) == 0 or np.any(~np.isfinite(R)) or R[0] < 0 or np.any(np.diff(R) <= 0):
        raise InvalidSpec("R ladder must be nonnegative and strictly increasing")
    return R


def ball_growth_curve(body, p, kind, R_ladder, ball=METRIC, budget=None, clip=None,
                      method="quadrature", seed=0):
    """Volumes of B(p, R) (or AsB(p, R)) for every R of an increasing ladder.

    The quadrature route evaluates the largest radius once and reads the
    smaller ones off cumulative sums, so the curve is nondecreasing by
    construction.  Returns a list of (R, VolumeEstimate).
    """
    kind = volume_kind(kind)
    R = _check_ladder(R_ladder)
    BallSpec(body, p, R[-1], ball, clip)
    p = np.asarray(p, dtype=float).reshape(-1)
    if method in ("monte-carlo", MONTE_CARLO):
        return [(float(r), region_volume(BallSpec(body, p, r, ball, clip), kind, budget,
                                         method, seed)) for r in R]
    b = _budget_for(budget, body.dim)
    pos = R > 0
    vals, errs = np.zeros(len(R)), np.zeros(len(R))
    nodes = 0
    if np.any(pos):
        vals[pos], errs[pos], nodes = _quadrature_with_error(body, p, kind, R[pos], ball, b, clip)
    return [(float(r), VolumeEstimate(float(v), float(e), QUADRATURE, nodes, kind))
            for r, v, e in zip(R, vals, errs)]


@dataclass(frozen=True)
class FlagVolumes:
    """Per-flag cone volumes of a polytope ball along a radius ladder."""

    flags: list
    R: np.ndarray
    volumes: np.ndarray = field(repr=False)

    @property
    def totals(self):
        return self.volumes.sum(axis=0)


def flag_cone_volumes(P, kind, R_ladder, center=None, ball=ASYMPTOTIC, budget=None):
    """Volume of the ball inside the cone over each flag simplex's facet part.

    The flag simplices use barycenters for proper faces and ``center``
    (default: the vertex barycenter) for the polytope itself, so the cones
    tile the ball.
    """
    if not _use_patches(P):
        raise InvalidSpec("flag cone volumes need a polygon or 3-polytope")
    kind = volume_kind(kind)
    R = _check_ladder(R_ladder)
    p = P.base_point if center is None else np.asarray(center, dtype=float)
    BallSpec(P, p, R[-1], ball)
    b = _budget_for(budget, P.dim)
    flags = flag_decomposition(P, _center_picker(P, p))
    vols = np.zeros((len(flags), len(R)))
    pos = R > 0
    if np.any(pos):
        ladder = _Ladder(R[pos], b.radial_order)
        depth = 2 * float(R[-1]) + b.grading_extra
        out = parallel_map(
            lambda fs: _patch_ladder(P, p, fs, kind, ladder, ball, depth, b.patch_order)[0],
            flags)
        vols[:, pos] = np.array(out)
    return FlagVolumes(flags, R, vols)


CSV_COLUMNS = ("R", "volume", "stderr", "kind", "body-id")


def write_growth_csv(stream, curve, body_id):
    """Write (R, VolumeEstimate) rows with a header to an open text stream."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r, est in curve:
        w.writerow([repr(float(r)), repr(est.value), repr(est.stderr), est.volume_kind, body_id])


def read_growth_csv(stream):
    rows = list(csv.DictReader(stream))
    return [(float(r["R"]), VolumeEstimate(float(r["volume"]), float(r["stderr"]),
                                           QUADRATURE, 0, r["kind"])) for r in rows]
