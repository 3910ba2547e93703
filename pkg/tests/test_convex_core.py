import numpy as np
import pytest

from hilbertflags import (
    Ellipsoid,
    EmptySet,
    PNormBall,
    centroid,
    chord_endpoints,
    convex_hull,
    cube,
    hausdorff_distance,
    make_cap,
    regular_polygon,
    scale_about,
    simplex,
    support_value,
)
from hilbertflags.convex_core import AffineImage, chords
from hilbertflags.errors import (
    DimensionMismatch,
    NonpositiveFactor,
    PointNotInterior,
    WidthOutOfRange,
)
from hilbertflags.nets import angular_net


def test_chord_endpoints_disk_origin(disk, rng):
    for u in angular_net(7):
        assert chord_endpoints(disk, [0, 0], u) == pytest.approx((1, 1), abs=1e-14)


def test_chord_endpoints_disk_offcenter(disk):
    assert chord_endpoints(disk, [0.5, 0], [1, 0]) == pytest.approx((1.5, 0.5), abs=1e-14)


def test_chord_endpoints_polytope_active_facet(rng):
    for _ in range(20):
        P = convex_hull(rng.standard_normal((15, 3)), 3)
        p = P.base_point
        u = rng.standard_normal(3)
        u /= np.linalg.norm(u)
        tm, tp = chord_endpoints(P, p, u)
        for x in (p + tp * u, p - tm * u):
            s = P.slacks(x)[0]
            assert s.min() == pytest.approx(0, abs=1e-12)
            assert np.all(s >= -1e-12)


@pytest.mark.parametrize("body", [Ellipsoid([0.3, -0.2], [[2, 0.5], [0, 1]]),
                                  PNormBall([0, 0], 1.5, 3.0), PNormBall([0, 0], 1, 1.0),
                                  PNormBall([0, 0, 0], 1, np.inf)])
def test_smooth_hits_lie_on_boundary(body, rng):
    c = body.certificate.center
    u = rng.standard_normal((200, body.dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    tm, tp = chords(body, c, u)
    g = body.gauge(c + tp[:, None] * u)
    assert np.max(np.abs(g - 1)) < 1e-10
    g = body.gauge(c - tm[:, None] * u)
    assert np.max(np.abs(g - 1)) < 1e-10


def test_chord_outside_raises(disk):
    with pytest.raises(PointNotInterior):
        chord_endpoints(disk, [1.0, 0], [1, 0])
    with pytest.raises(PointNotInterior):
        chord_endpoints(disk, [2.0, 0], [0, 1])


def test_support_values(disk, ellipse, square):
    assert support_value(square, [1, 0]) == 1
    assert support_value(disk, [0.6, 0.8]) == pytest.approx(1)
    assert support_value(ellipse, [1, 0]) == pytest.approx(2)
    assert support_value(PNormBall([0, 0], 1, 2.0), [0, 1]) == pytest.approx(1)


def test_support_subadditive(rng):
    bodies = [Ellipsoid([0, 0], [2, 1]), PNormBall([0, 0], 1, 4.0),
              convex_hull(rng.standard_normal((10, 2)), 2)]
    for b in bodies:
        u, v = rng.standard_normal((2, 100, 2))
        assert np.all(b.support(u + v) <= b.support(u) + b.support(v) + 1e-12)


def test_hausdorff_basic(disk):
    assert hausdorff_distance(disk, disk) == 0
    eps = 0.01
    assert hausdorff_distance(disk, Ellipsoid.ball(2, 1 + eps)) == pytest.approx(eps)


@pytest.mark.parametrize("n", [5, 12, 37])
def test_hausdorff_inscribed_ngon(disk, n):
    P = regular_polygon(n)
    assert hausdorff_distance(disk, P, 10_000) == pytest.approx(1 - np.cos(np.pi / n), abs=1e-6)


def test_hausdorff_dimension_mismatch(disk):
    with pytest.raises(DimensionMismatch):
        hausdorff_distance(disk, Ellipsoid.ball(3))


def test_scale_about(disk):
    assert scale_about(disk, [0, 0], 1) is disk
    half = scale_about(disk, [0, 0], 0.5)
    assert support_value(half, [1, 0]) == pytest.approx(0.5)
    assert half.certificate.outer == pytest.approx(0.5)
    with pytest.raises(NonpositiveFactor):
        scale_about(disk, [0, 0], 0)
    with pytest.raises(NonpositiveFactor):
        scale_about(disk, [0, 0], -1)


def test_hausdorff_scaling_lemma_polygons(rng):
    # (1/lam) body2 sits inside body1 when d_H <= eps and both contain l E
    violations = 0
    for _ in range(30):
        P1 = convex_hull(rng.standard_normal((12, 2)) + 0.0, 2)
        P2 = convex_hull(P1.vertices + 0.05 * rng.standard_normal(P1.vertices.shape), 2)
        c = P1.base_point
        P1, P2 = P1.transformed(np.eye(2), -c), P2.transformed(np.eye(2), -c)
        l = min(P1.boundary_distance([0, 0])[0], P2.boundary_distance([0, 0])[0])
        if l <= 0:
            continue
        eps = hausdorff_distance(P1, P2)
        shrunk = scale_about(P2, [0, 0], 1 / (1 + eps / l))
        violations += int(np.sum(~P1.contains(shrunk.vertices, tol=1e-12)))
    assert violations == 0


def test_centroids(rng):
    T = simplex(3)
    assert np.allclose(centroid(T), T.vertices.mean(axis=0), atol=1e-14)
    E = Ellipsoid([1.0, -2.0], [3.0, 1.0])
    assert np.allclose(centroid(E), [1, -2])
    P = convex_hull(rng.standard_normal((9, 2)), 2)
    mc, err = centroid(AffineImage(P, np.eye(2), np.zeros(2)), return_error=True)
    assert np.allclose(mc, centroid(P), atol=1e-12)
    ball = PNormBall([0.2, 0.1], 1, 3.0)
    c, err = centroid(ball, 400_000, seed=1, return_error=True)
    assert np.all(np.abs(c - [0.2, 0.1]) < 5 * err + 1e-12)


def test_polygon_centroid_matches_grid(rng):
    P = convex_hull(rng.uniform(-1, 1, (8, 2)), 2)
    xs = np.linspace(-1, 1, 1501)
    X, Y = np.meshgrid(xs, xs)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    inside = pts[P.contains(pts)]
    assert np.allclose(centroid(P), inside.mean(axis=0), atol=1e-3)


def test_centroid_lemma_random_polytopes(rng):
    # |px| >= |pq| / (d + 1) for the chord from boundary point p through the centroid x
    worst = np.inf
    for d in (2, 3, 4):
        for _ in range(60):
            P = convex_hull(rng.standard_normal((d + 6, d)), d)
            x = centroid(P)
            u = rng.standard_normal(d)
            u /= np.linalg.norm(u)
            tm, tp = chord_endpoints(P, x, u)
            p, q = x - tm * u, x + tp * u
            worst = min(worst, np.linalg.norm(p - x) - np.linalg.norm(p - q) / (d + 1))
    assert worst >= -1e-9


def test_make_cap_disk():
    disk = Ellipsoid.ball(2)
    cap = make_cap(disk, [1, 0], 0.1)
    assert np.allclose(cap.apex, [1, 0])
    assert np.allclose(cap.base_centroid, [0.9, 0], atol=1e-12)
    tiny = make_cap(disk, [1, 0], 1e-6)
    assert np.linalg.norm(tiny.base_centroid - tiny.apex) < 2e-6


def test_make_cap_square():
    sq = convex_hull([[0, 0], [1, 0], [0, 1], [1, 1]], 2)
    cap = make_cap(sq, [1, 0], 0.25)
    assert np.allclose(cap.base_centroid, [0.75, 0.5])
    with pytest.raises(WidthOutOfRange):
        make_cap(sq, [1, 0], 1.5)
    with pytest.raises(WidthOutOfRange):
        make_cap(sq, [1, 0], 0)


def test_cap_base_inside_body(rng):
    T = simplex(3)
    for _ in range(10):
        u = rng.standard_normal(3)
        cap = make_cap(T, u, 0.3)
        assert T.contains(cap.base_centroid, tol=1e-9)[0]
        assert np.dot(cap.base_centroid, cap.normal) == pytest.approx(cap.offset)


def test_certificates_hold(rng):
    for b in (Ellipsoid([0, 0], [2, 1]), PNormBall([0, 0, 0], 2, 1.5), cube(3),
              convex_hull(rng.standard_normal((20, 3)), 3)):
        assert b.verify_certificate()


def test_empty_set():
    e = EmptySet(2)
    assert not np.any(e.contains(np.zeros((3, 2))))
