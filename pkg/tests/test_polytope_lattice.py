from math import factorial

import numpy as np
import pytest

from hilbertflags import (
    convex_hull,
    cube,
    enumerate_flags,
    flag_count,
    flag_decomposition,
    regular_polygon,
    simplex,
)
from hilbertflags.errors import DegenerateInput, PickerPointNotInFace
from hilbertflags.polytope_lattice import barycenter_picker


def test_square_lattice():
    P = convex_hull([[0, 0], [1, 0], [1, 1], [0, 1]], 2)
    assert len(P.vertices) == 4
    assert P.lattice.f_vector() == [4, 4, 1]


def test_interior_point_removed():
    P = convex_hull([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]], 2)
    assert len(P.vertices) == 4
    assert flag_count(P) == 8


def test_points_on_circle_all_vertices():
    t = np.random.default_rng(0).uniform(0, 2 * np.pi, 100)
    P = convex_hull(np.column_stack([np.cos(t), np.sin(t)]), 2)
    assert len(P.vertices) == 100


def test_degenerate_input():
    with pytest.raises(DegenerateInput):
        convex_hull([[0, 0], [1, 1], [2, 2]], 2)
    with pytest.raises(DegenerateInput):
        convex_hull([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], 3)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_simplex_flags(d):
    S = simplex(d)
    assert flag_count(S) == factorial(d + 1)
    assert len(enumerate_flags(S)) == factorial(d + 1)


def test_known_counts():
    assert flag_count(cube(2)) == 8
    assert flag_count(cube(3)) == 48
    assert flag_count(cube(4)) == 384
    assert flag_count(regular_polygon(5)) == 10
    assert len(enumerate_flags(convex_hull([[-1.0], [2.0]], 1))) == 2


def test_recursion_matches_enumeration(rng):
    for _ in range(30):
        P = convex_hull(rng.standard_normal((int(rng.integers(5, 21)), 3)), 3)
        assert flag_count(P) == len(enumerate_flags(P))
        assert P.lattice.euler_characteristic() == 1


def test_flag_order_and_chains(rng):
    P = convex_hull(rng.standard_normal((12, 3)), 3)
    flags = enumerate_flags(P)
    keys = [tuple(f.faces) for f in flags]
    assert keys == sorted(keys)
    L = P.lattice
    for f in flags:
        dims = [L.faces[i].dim for i in f.faces]
        assert dims == list(range(4))
        for a, b in zip(f.faces, f.faces[1:]):
            assert set(L.faces[a].vertices) < set(L.faces[b].vertices)


def test_simplex_minimal_flag_count(rng):
    for d in (2, 3):
        for _ in range(15):
            P = convex_hull(rng.standard_normal((d + 4, d)), d)
            n = flag_count(P)
            if len(P.vertices) == d + 1:
                assert n == factorial(d + 1)
            else:
                assert n > factorial(d + 1)


def test_vertices_satisfy_facets(rng):
    P = convex_hull(rng.standard_normal((30, 3)), 3)
    assert np.all(P.slacks(P.vertices) >= -1e-12)
    for f in P.facets:
        assert len(f) >= 3
        assert np.linalg.matrix_rank(P.vertices[list(f)[1:]] - P.vertices[f[0]]) == 2


def test_triangle_barycentric_decomposition(triangle):
    fs = flag_decomposition(triangle)
    assert len(fs) == 6
    assert np.allclose([s.volume for s in fs], triangle.volume / 6)


def test_square_decomposition_area(square):
    fs = flag_decomposition(square)
    assert len(fs) == 8
    assert sum(s.volume for s in fs) == pytest.approx(4.0, rel=1e-12)


def test_tetrahedron_decomposition(tetrahedron):
    fs = flag_decomposition(tetrahedron)
    assert len(fs) == 24
    assert sum(s.volume for s in fs) == pytest.approx(tetrahedron.volume, rel=1e-8)


def test_decomposition_partitions(rng):
    P = convex_hull(rng.standard_normal((10, 3)), 3)
    fs = flag_decomposition(P)
    assert sum(s.volume for s in fs) == pytest.approx(P.volume, rel=1e-8)
    lo, hi = P.vertices.min(axis=0), P.vertices.max(axis=0)
    x = rng.uniform(lo, hi, (3000, 3))
    x = x[P.contains(x)]
    hits = np.zeros(len(x), dtype=int)
    for s in fs:
        A = s.points[1:] - s.points[0]
        lam = np.linalg.solve(A.T, (x - s.points[0]).T).T
        bary = np.column_stack([1 - lam.sum(axis=1), lam])
        hits += np.all(bary > 1e-10, axis=1)
    # interiors are disjoint and cover the polytope up to null sets
    assert hits.max() <= 1
    assert np.mean(hits == 1) > 0.999


def test_custom_picker_and_rejection(square):
    base = barycenter_picker(square)
    off = square.lattice.top

    def shifted(fid):
        return np.array([0.3, -0.2]) if fid == off else base(fid)
    fs = flag_decomposition(square, shifted)
    assert sum(s.volume for s in fs) == pytest.approx(4.0)

    def bad(fid):
        return np.array([5.0, 5.0]) if fid == off else base(fid)
    with pytest.raises(PickerPointNotInFace):
        flag_decomposition(square, bad)


def test_lattice_dump(triangle):
    lines = triangle.lattice.dump().strip().splitlines()
    assert len(lines) == 7
    rank, fid, *verts = lines[-1].split()
    assert rank == "2" and len(verts) == 3


def test_large_hull_lattice():
    from hilbertflags.nets import fibonacci_sphere
    P = convex_hull(fibonacci_sphere(500), 3)
    assert flag_count(P) == len(enumerate_flags(P))
    assert flag_count(P) == 6 * len(P.facets)
