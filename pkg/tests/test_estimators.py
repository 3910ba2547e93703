import json

import numpy as np
import pytest

from hilbertflags import (
    Ellipsoid,
    approximate_polytope,
    asvol_estimate,
    convex_hull,
    cube,
    entropy_estimate,
    flag_approx_estimate,
    flag_count,
    flag_number,
    hausdorff_distance,
    regular_polygon,
    simplex,
    verify_flag_ratio,
)
from hilbertflags.errors import EpsilonTooSmall, NonConvergentFit, NonPolytopeBody
from hilbertflags.estimators import fit_slope, report_json, shrink_ratio

LADDER = np.arange(1.0, 9.01, 0.5)


def test_fit_slope_exact_line():
    x = np.arange(10.0)
    fit = fit_slope(x, 3 * x + 1, window=(4, 9))
    assert fit.slope == pytest.approx(3) and fit.intercept == pytest.approx(1)
    assert fit.window == (4.0, 9.0)
    with pytest.raises(NonConvergentFit):
        fit_slope(x, x, window=(8, 9))
    with pytest.raises(NonConvergentFit):
        fit_slope(x, np.where(x % 2, 5.0, -5.0))


def test_asvol_triangle_affine_invariance(triangle):
    A = np.array([[3.0, 1.0], [0.0, 0.4]])
    a = asvol_estimate(triangle, "b", LADDER, sandwich=False)
    b = asvol_estimate(triangle.transformed(A, np.array([1.0, 2.0])), "b", LADDER,
                       sandwich=False)
    assert b.value == pytest.approx(a.value, rel=0.02)
    assert a.value == pytest.approx(np.pi, rel=1e-3)


def test_asvol_sandwich_agreement(square):
    a = asvol_estimate(square, "ht", LADDER)
    assert a.sandwich["relative_gap"] < 1e-3
    assert float(a) == pytest.approx(8 / 6 * 9 / np.pi, rel=1e-3)


def test_asvol_rejects_smooth(disk):
    with pytest.raises(NonPolytopeBody):
        asvol_estimate(disk, "b")


def test_simplex_minimality(rng):
    ref = asvol_estimate(simplex(2), "ht", LADDER, sandwich=False).value
    for _ in range(4):
        P = convex_hull(rng.standard_normal((7, 2)), 2)
        a = asvol_estimate(P, "ht", LADDER, sandwich=False).value
        assert a >= ref * (1 - 0.05)
        if len(P.vertices) > 3:
            assert a > ref * 1.1


def test_entropy_models(disk, triangle):
    fit = entropy_estimate(disk, "ht")
    assert fit.slope == pytest.approx(1, abs=0.02)
    assert fit.extra["alternative"]["slope"] == pytest.approx(1, abs=0.02)
    tri = entropy_estimate(triangle, "ht")
    assert abs(tri.slope) < 1e-3
    assert tri.extra["alternative"]["slope"] == pytest.approx(0.25, abs=0.01)
    lin = entropy_estimate(triangle, "ht", model="linear")
    assert lin.slope == pytest.approx(tri.extra["alternative"]["slope"])


def test_entropy_ball3_and_bounds():
    fit = entropy_estimate(Ellipsoid.ball(3), "ht", [4, 4.5, 5, 5.5, 6])
    assert fit.slope == pytest.approx(2, abs=0.05)
    for body in (Ellipsoid([0, 0], [2, 1]), regular_polygon(5)):
        assert entropy_estimate(body, "b").slope <= 1 + 0.1


def test_approximate_disk_ngon(disk):
    for eps in (1e-2, 1e-3):
        P = approximate_polytope(disk, eps)
        n = len(P.vertices)
        assert 1 - np.cos(np.pi / n) <= eps
        assert 1 - np.cos(np.pi / (n - 1)) > eps
        assert flag_count(P) == 2 * n


def test_approximate_polytope_returns_itself(pentagon):
    assert approximate_polytope(pentagon, 0.1) is pentagon
    assert flag_number(simplex(3), 1e-9) == 24


def test_approximate_ball3():
    B = Ellipsoid.ball(3)
    P = approximate_polytope(B, 1e-2)
    assert hausdorff_distance(B, P, 20_000) <= 1e-2 + 1e-4


def test_epsilon_too_small(disk):
    with pytest.raises(EpsilonTooSmall):
        approximate_polytope(disk, 1e-12)
    with pytest.raises(EpsilonTooSmall):
        approximate_polytope(disk, 0)


def test_flag_count_growth_2d(disk):
    eps = [2.0 ** -k for k in range(6, 12)]
    counts = [flag_number(disk, e) for e in eps]
    ratios = np.array(counts[1:]) / np.array(counts[:-1])
    assert np.allclose(ratios, np.sqrt(2), rtol=0.08)


def test_flag_approx_polygon_saturates(pentagon):
    fit = flag_approx_estimate(pentagon, [2.0 ** -k for k in range(4, 10)])
    assert fit.slope == pytest.approx(0, abs=1e-12)


def test_flag_approx_upper_bound(ellipse):
    fit = flag_approx_estimate(ellipse, [2.0 ** -k for k in range(4, 11)])
    assert fit.slope <= 0.5 + 0.05


def test_verify_flag_ratio_hexagon():
    rep = verify_flag_ratio(regular_polygon(6), "ht", 9)
    assert rep["estimate"] == pytest.approx(2, rel=0.05)
    assert rep["expected"] == 2
    assert rep["per_flag_spread"] < 0.01
    json.loads(report_json(rep))


def test_verify_flag_ratio_simplex(triangle):
    rep = verify_flag_ratio(triangle, "b", 9)
    assert rep["estimate"] == pytest.approx(1, rel=0.01)


def test_shrink_ratio_limit():
    for d in (2, 3, 4):
        assert shrink_ratio(1e-5, d) == pytest.approx(4 * d + 1, rel=1e-2)
        assert shrink_ratio(1e-9, d) == pytest.approx(4 * d + 1, rel=1e-6)
