"""Convex polytopes with their face lattices, flags and flag decompositions.

The hull itself comes from Qhull (through :mod:`scipy.spatial`); its
triangulated output is merged back into true facets, and the face lattice
is then derived purely combinatorially from the facet vertex sets: the
facets of a face F are the maximal proper intersections of F with facets
of the polytope.
"""

from dataclasses import dataclass
from functools import cached_property
from math import factorial

import numpy as np
from scipy.spatial import ConvexHull, cKDTree

from .convex_core import Certificate, ConvexBody, _as_rows
from .errors import DegenerateInput, PickerPointNotInFace

DEDUP_TOL = 1e-9
COPLANAR_TOL = 1e-9
MAX_DIM = 4


@dataclass(frozen=True)
class Face:
    id: int
    dim: int
    vertices: tuple


@dataclass(frozen=True)
class Flag:
    """Maximal chain of face ids, one per dimension 0..d."""

    faces: tuple

    def __iter__(self):
        return iter(self.faces)

    def __len__(self):
        return len(self.faces)


@dataclass(frozen=True)
class FlagSimplex:
    flag: Flag
    points: np.ndarray

    @property
    def volume(self):
        p = self.points
        d = len(p) - 1
        return abs(np.linalg.det(p[1:] - p[0])) / factorial(d)


class FaceLattice:
    """Graded poset of the nonempty faces, ranks 0..d, the polytope on top.

    Face ids are assigned by (dimension, discovery order); vertex i has id i.
    """

    def __init__(self, n_vertices, facets, d):
        self.d = d
        by_set = {}
        levels = [[] for _ in range(d + 1)]
        levels[d].append(frozenset(range(n_vertices)))
        incident = [[] for _ in range(n_vertices)]
        for j, f in enumerate(facets):
            for v in f:
                incident[v].append(j)
        facet_sets = [frozenset(f) for f in facets]
        if d >= 1:
            levels[d - 1] = list(dict.fromkeys(facet_sets))
        children_sets = {}
        children_sets[levels[d][0]] = list(levels[d - 1]) if d >= 1 else []
        for k in range(d - 1, 0, -1):
            seen = dict()
            for F in levels[k]:
                cands = {j for v in F for j in incident[v]}
                inter = set()
                for j in cands:
                    G = facet_sets[j]
                    if F <= G:
                        continue
                    s = F & G
                    if s:
                        inter.add(s)
                maximal = [s for s in inter if not any(s < t for t in inter)]
                maximal.sort(key=lambda s: sorted(s))
                children_sets[F] = maximal
                for s in maximal:
                    seen.setdefault(s, None)
            if k - 1 == 0:
                levels[0] = [frozenset([v]) for v in range(n_vertices)]
            else:
                levels[k - 1] = list(seen)
        for v in range(n_vertices):
            children_sets.setdefault(frozenset([v]), [])
        if d == 1:
            levels[0] = [frozenset([v]) for v in range(n_vertices)]
        faces = []
        for k in range(d + 1):
            for s in levels[k]:
                by_set[s] = len(faces)
                faces.append(Face(len(faces), k, tuple(sorted(s))))
        self.faces = faces
        self.children = [sorted(by_set[c] for c in children_sets.get(frozenset(f.vertices), []))
                         for f in faces]
        parents = [[] for _ in faces]
        for f in faces:
            for c in self.children[f.id]:
                parents[c].append(f.id)
        self.parents = [sorted(p) for p in parents]
        self.top = len(faces) - 1

    def faces_of_dim(self, k):
        return [f for f in self.faces if f.dim == k]

    def f_vector(self):
        return [sum(1 for f in self.faces if f.dim == k) for k in range(self.d + 1)]

    def euler_characteristic(self):
        """Alternating face count including the polytope itself; equals 1."""
        return sum((-1) ** k * n for k, n in enumerate(self.f_vector()))

    def dump(self):
        """Plain-text lattice: one ``rank id v1 v2 ...`` line per face."""
        lines = [f"{f.dim} {f.id} " + " ".join(map(str, f.vertices)) for f in self.faces]
        return "\n".join(lines) + "\n"


class Polytope(ConvexBody):
    """Convex polytope as vertices plus unit-normal facet half-spaces.

    ``facets`` lists the vertex indices on each facet.  The base point is
    the vertex average; the sandwich certificate is measured from it.
    """

    def __init__(self, vertices, normals, offsets, facets):
        self.vertices = np.asarray(vertices, dtype=float)
        self.facet_normals = np.asarray(normals, dtype=float)
        self.facet_offsets = np.asarray(offsets, dtype=float)
        self.facets = [tuple(sorted(f)) for f in facets]
        self.dim = self.vertices.shape[1]
        self.base_point = self.vertices.mean(axis=0)
        inner = float(np.min(self.facet_offsets - self.facet_normals @ self.base_point))
        outer = float(np.max(np.linalg.norm(self.vertices - self.base_point, axis=1)))
        self.certificate = Certificate(self.base_point, inner, outer)

    def __repr__(self):
        return f"Polytope(d={self.dim}, vertices={len(self.vertices)}, facets={len(self.facets)})"

    @classmethod
    def from_points(cls, points):
        points = np.asarray(points, dtype=float)
        return convex_hull(points, points.shape[1])

    # --- oracles ------------------------------------------------------
    def slacks(self, points):
        return self.facet_offsets - _as_rows(points) @ self.facet_normals.T

    def contains(self, points, tol=0.0):
        return np.min(self.slacks(points), axis=1) >= -tol * self.certificate.outer

    def ray_hit(self, points, dirs):
        s = self.slacks(points)
        rate = _as_rows(dirs) @ self.facet_normals.T
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(rate > 0, s / rate, np.inf)
        return np.min(t, axis=1)

    def support(self, dirs):
        return np.max(_as_rows(dirs) @ self.vertices.T, axis=1)

    def boundary_distance(self, points):
        return np.clip(np.min(self.slacks(points), axis=1), 0, None)

    def apex(self, u):
        h = self.vertices @ np.asarray(u, dtype=float)
        top = h >= h.max() - 1e-12 * max(1.0, abs(h.max()))
        return self.vertices[top].mean(axis=0)

    def transformed(self, matrix, offset):
        matrix = np.asarray(matrix, dtype=float)
        return convex_hull(self.vertices @ matrix.T + offset, self.dim)

    def scaled(self, y, factor):
        y = np.asarray(y, dtype=float)
        out = Polytope(y + factor * (self.vertices - y), self.facet_normals,
                       factor * self.facet_offsets + (1 - factor) * (self.facet_normals @ y),
                       self.facets)
        if "lattice" in self.__dict__:
            out.__dict__["lattice"] = self.lattice
        return out

    # --- combinatorics ------------------------------------------------
    @cached_property
    def lattice(self):
        return FaceLattice(len(self.vertices), self.facets, self.dim)

    def face_points(self, face_id):
        return self.vertices[list(self.lattice.faces[face_id].vertices)]

    def _triangulate(self, face_id, memo):
        if face_id in memo:
            return memo[face_id]
        face = self.lattice.faces[face_id]
        if face.dim == 0:
            out = [(face.vertices[0],)]
        else:
            apex = face.vertices[0]
            out = []
            for c in self.lattice.children[face_id]:
                if apex in self.lattice.faces[c].vertices:
                    continue
                out.extend((apex,) + s for s in self._triangulate(c, memo))
        memo[face_id] = out
        return out

    @cached_property
    def triangulation(self):
        """Pulling triangulation of the polytope into d-simplices (vertex index tuples)."""
        return np.array(self._triangulate(self.lattice.top, {}), dtype=int)

    @cached_property
    def volume(self):
        v = self.vertices[self.triangulation]
        return float(np.sum(np.abs(np.linalg.det(v[:, 1:] - v[:, :1]))) / factorial(self.dim))

    def exact_centroid(self):
        v = self.vertices[self.triangulation]
        w = np.abs(np.linalg.det(v[:, 1:] - v[:, :1]))
        if w.sum() <= 1e-300:
            from .errors import DegenerateBody
            raise DegenerateBody("polytope has zero volume")
        return (w[:, None] * v.mean(axis=1)).sum(axis=0) / w.sum()

    def section_centroid(self, u, offset, **_):
        u = np.asarray(u, dtype=float)
        u = u / np.linalg.norm(u)
        h = self.vertices @ u - offset
        pts = []
        for f in self.lattice.faces_of_dim(1) if self.dim > 1 else []:
            a, b = f.vertices
            if h[a] * h[b] < 0:
                s = h[a] / (h[a] - h[b])
                pts.append(self.vertices[a] + s * (self.vertices[b] - self.vertices[a]))
        pts.extend(self.vertices[np.abs(h) <= 1e-12])
        pts = np.array(pts)
        if len(pts) == 0:
            from .errors import WidthOutOfRange
            raise WidthOutOfRange("hyperplane misses the polytope")
        if self.dim <= 2 or len(pts) <= self.dim - 1:
            return pts.mean(axis=0)
        q, _ = np.linalg.qr(np.column_stack([u, np.eye(self.dim)]))
        frame = q[:, 1:self.dim]
        z = (pts - pts.mean(axis=0)) @ frame
        sub = convex_hull(z, self.dim - 1)
        return pts.mean(axis=0) + frame @ sub.exact_centroid()


def _dedup(points, tol):
    """Drop points within ``tol`` of an earlier point."""
    drop = set()
    for i, j in sorted(cKDTree(points).query_pairs(tol)):
        if i not in drop:
            drop.add(j)
    return points[[i for i in range(len(points)) if i not in drop]]


def _merge_coplanar(hull, tol):
    """Union-find over neighbouring simplices lying on a common hyperplane."""
    eq = hull.equations
    parent = list(range(len(eq)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, nbrs in enumerate(hull.neighbors):
        for j in nbrs:
            if j > i and np.max(np.abs(eq[i] - eq[j])) <= tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups = {}
    for i in range(len(eq)):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def convex_hull(points, d):
    """Polytope hull of ``points`` in R^d with its vertex set made minimal.

    Raises DegenerateInput when the points do not affinely span R^d.
    """
    points = np.asarray(points, dtype=float).reshape(-1, d)
    if not 1 <= d <= MAX_DIM:
        raise ValueError(f"dimension {d} outside 1..{MAX_DIM}")
    scale = max(1.0, float(np.max(np.abs(points))))
    if len(points) < d + 1:
        raise DegenerateInput("need at least d+1 points")
    centered = points - points.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[d - 1] <= COPLANAR_TOL * scale * max(1.0, np.sqrt(len(points))):
        raise DegenerateInput("points do not span the full dimension")
    if d == 1:
        lo, hi = float(points.min()), float(points.max())
        return Polytope([[lo], [hi]], [[-1.0], [1.0]], [-lo, hi], [(0,), (1,)])

    hull = ConvexHull(points)
    verts = points[hull.vertices]
    verts = _dedup(verts, DEDUP_TOL * scale)
    for _ in range(3):
        hull = ConvexHull(verts)
        groups = _merge_coplanar(hull, COPLANAR_TOL)
        normals, offsets, facets = [], [], []
        for g in groups:
            idx = sorted({int(v) for s in hull.simplices[g] for v in s})
            fv = verts[idx]
            c = fv.mean(axis=0)
            _, _, vt = np.linalg.svd(fv - c)
            n = vt[-1]
            if n @ hull.equations[g[0], :d] < 0:
                n = -n
            normals.append(n)
            offsets.append(float(n @ c))
            facets.append(idx)
        normals = np.array(normals)
        # a vertex is extreme iff the normals of its facets span R^d
        incident = [[] for _ in verts]
        for j, f in enumerate(facets):
            for v in f:
                incident[v].append(j)
        extreme = np.array([len(on) >= d and np.linalg.matrix_rank(normals[on], tol=1e-7) == d
                            for on in incident])
        if extreme.all():
            return Polytope(verts, normals, offsets, facets)
        verts = verts[extreme]
    raise DegenerateInput("could not reduce to an extreme vertex set")


def simplex(d, scale=1.0):
    """Regular d-simplex inscribed in the sphere of radius ``scale``."""
    e = np.eye(d + 1) - 1.0 / (d + 1)
    q, _ = np.linalg.qr(e.T)
    v = e @ q[:, :d]
    v *= scale / np.linalg.norm(v[0])
    return convex_hull(v, d)


def regular_polygon(n, radius=1.0, phase=0.0):
    t = phase + 2 * np.pi * np.arange(n) / n
    return convex_hull(radius * np.column_stack([np.cos(t), np.sin(t)]), 2)


def cube(d, half=1.0):
    grid = np.array(np.meshgrid(*[[-half, half]] * d, indexing="ij")).reshape(d, -1).T
    return convex_hull(grid, d)


def flag_count(P):
    """Number of maximal flags via the facet recursion |Flags(F)| = sum over facets G of F."""
    lat = P.lattice
    memo = {}
    order = sorted(range(len(lat.faces)), key=lambda i: lat.faces[i].dim)
    for i in order:
        ch = lat.children[i]
        memo[i] = 1 if lat.faces[i].dim == 0 else sum(memo[c] for c in ch)
    return memo[lat.top]


def enumerate_flags(P):
    """All maximal chains, in lexicographic order of their face ids."""
    lat = P.lattice
    out = []
    d = lat.d

    def walk(chain):
        if len(chain) == d + 1:
            out.append(Flag(tuple(chain)))
            return
        for p in lat.parents[chain[-1]]:
            walk(chain + [p])

    for f in lat.faces_of_dim(0):
        walk([f.id])
    return out


def barycenter_picker(P):
    """Picker mapping a face id to the average of its vertices."""
    def pick(face_id):
        return P.face_points(face_id).mean(axis=0)
    return pick


def _check_in_face(P, face_id, x, tol=1e-9):
    face = P.lattice.faces[face_id]
    pts = P.face_points(face_id)
    scale = P.certificate.outer
    if face.dim == 0:
        ok = np.linalg.norm(x - pts[0]) <= tol * scale
    else:
        base = pts[0]
        basis = pts[1:] - base
        coef, *_ = np.linalg.lstsq(basis.T, x - base, rcond=None)
        resid = np.linalg.norm(basis.T @ coef - (x - base))
        s = P.slacks(x)[0]
        vs = set(face.vertices)
        on = np.array([vs <= set(f) for f in P.facets])
        if face.dim == P.dim:
            on[:] = False
        ok = (resid <= tol * scale and np.all(np.abs(s[on]) <= tol * scale)
              and np.all(s[~on] > tol * scale))
    if not ok:
        raise PickerPointNotInFace(f"picked point is not in the relative interior of face {face_id}")


def flag_decomposition(P, picker=None):
    """One flag simplex per maximal flag, vertex i picked inside face f_i."""
    pick = barycenter_picker(P) if picker is None else picker
    cache = {}

    def point(fid):
        if fid not in cache:
            x = np.asarray(pick(fid), dtype=float)
            _check_in_face(P, fid, x)
            cache[fid] = x
        return cache[fid]

    return [FlagSimplex(fl, np.array([point(f) for f in fl])) for fl in enumerate_flags(P)]
