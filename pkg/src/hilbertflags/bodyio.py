"""Body specs: JSON ``{dim, kind, parameters}`` documents and vertex lists.

Supported kinds: ellipsoid, ball, pnorm, polytope, simplex,
regular_polygon, cube and affine (a nested spec plus matrix and offset).
A ``.txt`` file is read as a whitespace-separated vertex list, one vertex
per line, and becomes the convex hull of those points.
"""

import json
from pathlib import Path

import numpy as np

from .convex_core import AffineImage, Ellipsoid, PNormBall
from .errors import BadConfig, DimensionMismatch
from .polytope_lattice import Polytope, convex_hull, cube, regular_polygon, simplex


def _arr(params, key, default=None):
    if key not in params:
        if default is None:
            raise BadConfig(f"missing parameter {key!r}")
        return default
    return np.asarray(params[key], dtype=float)


def body_from_spec(spec):
    """Build a body from a spec dict."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise BadConfig("a body spec needs a 'kind'")
    kind = spec["kind"]
    p = spec.get("parameters", {})
    d = spec.get("dim")
    try:
        if kind == "ellipsoid":
            body = Ellipsoid(_arr(p, "center"), _arr(p, "axes"))
        elif kind == "ball":
            if d is None:
                raise BadConfig("a ball spec needs 'dim'")
            body = Ellipsoid.ball(int(d), float(p.get("radius", 1.0)),
                                  _arr(p, "center", np.zeros(int(d))))
        elif kind == "pnorm":
            body = PNormBall(_arr(p, "center"), float(p.get("scale", 1.0)),
                             float(p["exponent"]))
        elif kind == "polytope":
            v = _arr(p, "vertices")
            body = convex_hull(v, v.shape[1])
        elif kind == "simplex":
            body = simplex(int(d), float(p.get("scale", 1.0)))
        elif kind == "regular_polygon":
            body = regular_polygon(int(p["n"]), float(p.get("radius", 1.0)),
                                   float(p.get("phase", 0.0)))
        elif kind == "cube":
            body = cube(int(d), float(p.get("half", 1.0)))
        elif kind == "affine":
            inner = body_from_spec(p["body"])
            m, off = _arr(p, "matrix"), _arr(p, "offset")
            body = inner.transformed(m, off) if isinstance(inner, (Polytope, Ellipsoid)) \
                else AffineImage(inner, m, off)
        else:
            raise BadConfig(f"unknown body kind {kind!r}")
    except (KeyError, TypeError) as exc:
        raise BadConfig(f"bad parameters for {kind!r}: {exc}") from None
    if d is not None and int(d) != body.dim:
        raise DimensionMismatch(f"spec says dim {d} but the body has dim {body.dim}")
    return body


def body_to_spec(body):
    """Spec dict that reloads to an equal body."""
    if isinstance(body, Polytope):
        return {"dim": body.dim, "kind": "polytope",
                "parameters": {"vertices": body.vertices.tolist()}}
    if isinstance(body, Ellipsoid):
        return {"dim": body.dim, "kind": "ellipsoid",
                "parameters": {"center": body.center.tolist(), "axes": body.matrix.tolist()}}
    if isinstance(body, PNormBall):
        return {"dim": body.dim, "kind": "pnorm",
                "parameters": {"center": body.center.tolist(), "scale": body.scale,
                               "exponent": body.p}}
    if isinstance(body, AffineImage):
        return {"dim": body.dim, "kind": "affine",
                "parameters": {"body": body_to_spec(body.inner),
                               "matrix": body.matrix.tolist(), "offset": body.offset.tolist()}}
    raise BadConfig(f"cannot serialise {type(body).__name__}")


def read_vertices(path):
    v = np.loadtxt(path, dtype=float, ndmin=2)
    if v.size == 0:
        raise BadConfig(f"{path}: no vertices")
    return v


def write_vertices(path, vertices):
    np.savetxt(path, np.asarray(vertices, dtype=float), fmt="%.17g")


def load_body(path):
    path = Path(path)
    if path.suffix == ".txt":
        v = read_vertices(path)
        return convex_hull(v, v.shape[1])
    try:
        spec = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise BadConfig(f"{path}: {exc}") from None
    return body_from_spec(spec)


def save_body(path, body):
    Path(path).write_text(json.dumps(body_to_spec(body), indent=2) + "\n")


def same_vertex_set(a, b, tol=1e-12):
    """True when two vertex arrays agree as sets, up to ``tol``."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        return False
    ia, ib = np.lexsort(a.T[::-1]), np.lexsort(b.T[::-1])
    return bool(np.max(np.abs(a[ia] - b[ib])) <= tol)
