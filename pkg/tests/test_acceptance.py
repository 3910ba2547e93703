"""Acceptance criteria, one test per criterion.

Each criterion prints a single PASS/FAIL line with the measured values and
its runtime.  Run directly (``python tests/test_acceptance.py``) or through
pytest, where the lines are repeated in the terminal summary.
"""

import sys
import time
from math import factorial

import numpy as np
import pytest
from scipy.optimize import brentq

from hilbertflags import (
    Ellipsoid,
    ball_growth_curve,
    ball_radial_extent,
    centroid,
    chord_endpoints,
    convex_hull,
    cube,
    enumerate_flags,
    entropy_estimate,
    flag_approx_estimate,
    flag_count,
    hausdorff_distance,
    hilbert_distance,
    regular_polygon,
    scale_about,
    simplex,
)
from hilbertflags.checks import asymptotic_sandwich_violations, macbeath_sandwich_violations
from hilbertflags.estimators import EPS_LADDER_2D, EPS_LADDER_3D, asvol_estimate
from hilbertflags.hilbert_metric import funk_distances, hilbert_distances

RESULTS = []


def _record(n, title, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed < budget
    line = (f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title} | {detail} "
            f"| {elapsed:.1f}s (limit {budget:.0f}s)")
    RESULTS.append(line)
    print(line)
    return ok


def _timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


# --- criteria ------------------------------------------------------------------

def criterion_1():
    def work():
        rng = np.random.default_rng(1)
        r = np.sqrt(rng.uniform(0, 1, 1000)) * 0.999999
        th = rng.uniform(0, 2 * np.pi, 1000)
        x = np.column_stack([r * np.cos(th), r * np.sin(th)])
        d = hilbert_distances(Ellipsoid.ball(2), np.zeros(2), x)
        return float(np.max(np.abs(d - np.arctanh(r))))
    err, t = _timed(work)
    return _record(1, "Klein-model exactness", err < 1e-10, f"max error {err:.2e}", t, 1)


def criterion_2():
    def work():
        curve = ball_growth_curve(Ellipsoid.ball(2), [0, 0], "busemann", [1, 2, 3, 4, 5, 6])
        return [abs(e.value / (2 * np.pi * (np.cosh(R) - 1)) - 1) for R, e in curve]
    rel, t = _timed(work)
    return _record(2, "disk Busemann ball volume", max(rel) < 0.01,
                   f"max relative error {max(rel):.2e} over R=1..6", t, 60)


def criterion_3():
    R = np.arange(6.0, 10.01, 0.5)

    def work():
        disk = entropy_estimate(Ellipsoid.ball(2), "holmes-thompson", R)
        tri = entropy_estimate(simplex(2), "holmes-thompson", R)
        return disk, tri
    (disk, tri), t = _timed(work)
    ok = 0.9 <= disk.slope <= 1.1 and -0.05 <= tri.slope <= 0.05
    detail = (f"disk {disk.slope:.4f}, triangle {tri.slope:.2e} "
              f"(log-prefactor fit; plain log-linear slopes: disk "
              f"{disk.extra['alternative']['slope']:.4f}, triangle "
              f"{tri.extra['alternative']['slope']:.4f})")
    return _record(3, "entropy slopes", ok, detail, t, 300)


def criterion_4():
    R = np.arange(1.0, 9.01, 0.5)

    def work():
        out = {}
        for kind in ("busemann", "holmes-thompson"):
            a = {name: asvol_estimate(P, kind, R, sandwich=False).value
                 for name, P in (("tri", simplex(2)), ("sq", cube(2)),
                                 ("hex", regular_polygon(6)))}
            out[kind] = (a["sq"] / a["tri"], a["hex"] / a["tri"])
        return out
    out, t = _timed(work)
    ok = all(abs(sq / (4 / 3) - 1) <= 0.05 and abs(hx / 2 - 1) <= 0.05
             for sq, hx in out.values())
    detail = ", ".join(f"{k}: square/tri {sq:.4f}, hex/tri {hx:.4f}"
                       for k, (sq, hx) in out.items())
    return _record(4, "Asvol flag ratios at R_max=9", ok, detail, t, 900)


def criterion_5():
    def work():
        simp = [flag_count(simplex(d)) == factorial(d + 1) for d in (1, 2, 3, 4)]
        c3 = flag_count(cube(3))
        rng = np.random.default_rng(5)
        agree = 0
        for _ in range(50):
            P = convex_hull(rng.standard_normal((int(rng.integers(5, 21)), 3)), 3)
            agree += flag_count(P) == len(enumerate_flags(P))
        return all(simp), c3, agree
    (simp, c3, agree), t = _timed(work)
    return _record(5, "flag combinatorics", simp and c3 == 48 and agree == 50,
                   f"simplices ok={simp}, 3-cube {c3}, recursion=enumeration on {agree}/50",
                   t, 30)


def criterion_6():
    def work():
        fixtures = {"disk": Ellipsoid.ball(2), "ellipse": Ellipsoid([0, 0], [2, 1]),
                    "pentagon": regular_polygon(5), "tetrahedron": simplex(3)}
        total = {}
        for name, body in fixtures.items():
            c = body.certificate.center
            off = c + 0.4 * body.certificate.inner * np.ones(body.dim) / np.sqrt(body.dim)
            v = 0
            for k, y in enumerate((c, off)):
                for R in (0.5, 2.0, 5.0):
                    v += asymptotic_sandwich_violations(body, y, R, 10_000, seed=k)
                v += macbeath_sandwich_violations(body, y, 10_000, seed=k)
            total[name] = v
        return total
    total, t = _timed(work)
    return _record(6, "sandwich suites", sum(total.values()) == 0,
                   "violations " + ", ".join(f"{k}={v}" for k, v in total.items()), t, 60)


def criterion_7():
    def work():
        disk = flag_approx_estimate(Ellipsoid.ball(2), EPS_LADDER_2D)
        ball = flag_approx_estimate(Ellipsoid.ball(3), EPS_LADDER_3D)
        ent = entropy_estimate(Ellipsoid.ball(2), "holmes-thompson")
        return disk, ball, ent.slope / (2 * disk.slope)
    (disk, ball, ratio), t = _timed(work)
    ok = 0.45 <= disk.slope <= 0.55 and 0.85 <= ball.slope <= 1.15 and 0.9 <= ratio <= 1.1
    detail = (f"disk {disk.slope:.4f} (eps 2^-4..2^-14), 3D ball {ball.slope:.4f} "
              f"(eps 2^-4..2^-10), ent/(2 flagapprox) {ratio:.4f}")
    return _record(7, "flag approximability", ok, detail, t, 600)


def criterion_8():
    def work():
        rng = np.random.default_rng(8)
        # Hausdorff scaling: (1/lam) P2 inside P1 with lam = 1 + eps/l
        viol = pairs = 0
        while pairs < 100:
            P1 = convex_hull(rng.standard_normal((10, 2)), 2)
            P2 = convex_hull(P1.vertices + 0.05 * rng.standard_normal(P1.vertices.shape), 2)
            c = P1.base_point
            P1, P2 = P1.transformed(np.eye(2), -c), P2.transformed(np.eye(2), -c)
            l = min(P1.boundary_distance([0, 0])[0], P2.boundary_distance([0, 0])[0])
            if l <= 0:
                continue
            pairs += 1
            eps = hausdorff_distance(P1, P2)
            inner = scale_about(P2, [0, 0], 1 / (1 + eps / l))
            x = inner.vertices
            w = rng.dirichlet(np.ones(len(x)), 50) @ x
            viol += int(np.sum(~P1.contains(np.vstack([x, w]), tol=1e-12)))
        # centroid bound |px| >= |pq| / (d + 1)
        worst = np.inf
        for k in range(1000):
            d = 2 + k % 3
            P = convex_hull(rng.standard_normal((d + 5, d)), d)
            x = centroid(P)
            u = rng.standard_normal(d)
            tm, tp = chord_endpoints(P, x, u / np.linalg.norm(u))
            worst = min(worst, tm - (tm + tp) / (d + 1))
        # Funk symmetrisation
        body = regular_polygon(7)
        p = rng.uniform(-0.6, 0.6, (1000, 2))
        q = rng.uniform(-0.6, 0.6, (1000, 2))
        funk = float(np.max(np.abs(0.5 * (funk_distances(body, p, q) + funk_distances(body, q, p))
                                   - hilbert_distances(body, p, q))))
        # closed-form radial extent against bisection
        bodies = [Ellipsoid([0, 0], [2, 1]), regular_polygon(5), simplex(3)]
        rad = 0.0
        for k in range(1000):
            b = bodies[k % 3]
            p0 = b.certificate.center + 0.3 * b.certificate.inner * rng.uniform(-1, 1, b.dim)
            u = rng.standard_normal(b.dim)
            u /= np.linalg.norm(u)
            R = rng.uniform(0.05, 3)
            tp = b.ray_hit(p0, u)[0]
            ref = brentq(lambda s: hilbert_distance(b, p0, p0 + s * u) - R, 0, tp * (1 - 1e-9),
                         xtol=1e-15, rtol=1e-15)
            rad = max(rad, abs(ball_radial_extent(b, p0, u, R) - ref))
        return viol, worst, funk, rad
    (viol, worst, funk, rad), t = _timed(work)
    ok = viol == 0 and worst >= -1e-9 and funk < 1e-12 and rad < 1e-10
    detail = (f"scaling violations {viol}, centroid margin {worst:.3e}, "
              f"Funk identity {funk:.1e}, radial extent {rad:.1e}")
    return _record(8, "lemma suites", ok, detail, t, 60)


def criterion_9():
    R = np.arange(6.0, 10.01, 0.5)

    def work():
        P = regular_polygon(5)
        curve = ball_growth_curve(P, P.base_point, "holmes-thompson", R)
        V = np.array([e.value for _, e in curve])
        return np.polyfit(np.log(R), np.log(V), 1)[0]
    slope, t = _timed(work)
    return _record(9, "pentagon polynomial growth", abs(slope - 2) <= 0.2,
                   f"log-log slope {slope:.4f} over R in [6, 10]", t, 300)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("crit", CRITERIA, ids=[f"criterion_{k}" for k in range(1, 10)])
def test_acceptance(crit):
    assert crit()


if __name__ == "__main__":
    passed = sum(bool(c()) for c in CRITERIA)
    print(f"{passed}/{len(CRITERIA)} criteria passed")
    sys.exit(0 if passed == len(CRITERIA) else 1)
