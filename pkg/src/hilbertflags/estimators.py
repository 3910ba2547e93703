"""Asymptotic volume, volume entropy and flag approximability estimators.

All three are limits, estimated from finite ladders: Asvol by
extrapolating Vol/R^d in 1/R, entropy by a tail fit of log Vol, and flag
approximability by the log-log slope of flag counts of inscribed
approximating polytopes.  Reports are plain dicts ready for JSON.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from math import factorial

import numpy as np

from .convex_core import hausdorff_distance
from .errors import EpsilonTooSmall, NonConvergentFit, NonPolytopeBody
from .hilbert_metric import HOLMES_THOMPSON, volume_kind
from .nets import angular_net, fibonacci_sphere
from .parallel import parallel_map
from .polytope_lattice import Polytope, convex_hull, flag_count, simplex
from .volume_engine import ASYMPTOTIC, METRIC, ball_growth_curve, flag_cone_volumes

ASVOL_LADDER = tuple(np.arange(1.0, 9.01, 0.5))
ENTROPY_LADDER = tuple(np.arange(6.0, 10.01, 0.5))
EPS_LADDER_2D = tuple(2.0 ** -k for k in range(4, 15))
EPS_LADDER_3D = tuple(2.0 ** -k for k in range(4, 11))
VERTEX_BUDGET = {2: 100_000, 3: 10_000}
FIT_RMS_LIMIT = 0.05


@dataclass
class SlopeFit:
    abscissa: list
    ordinate: list
    slope: float
    intercept: float
    residual_rms: float
    window: tuple
    uncertainty: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _tail(x, y, window):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    lo, hi = window if window is not None else (x.min(), x.max())
    m = (x >= lo - 1e-12) & (x <= hi + 1e-12)
    if m.sum() < 3:
        raise NonConvergentFit("a tail window needs at least 3 points")
    return x[m], y[m], (float(x[m].min()), float(x[m].max()))


def _lstsq(A, y):
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(len(y) - A.shape[1], 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.pinv(A.T @ A)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return coef, cov, rms


def fit_slope(x, y, window=None, rms_limit=FIT_RMS_LIMIT):
    """Least-squares line through (x, y) restricted to the tail window."""
    xs, ys, win = _tail(x, y, window)
    A = np.column_stack([xs, np.ones_like(xs)])
    coef, cov, rms = _lstsq(A, ys)
    if rms > rms_limit:
        raise NonConvergentFit(f"residual RMS {rms:.3g} exceeds {rms_limit}")
    return SlopeFit(xs.tolist(), ys.tolist(), float(coef[0]), float(coef[1]), rms, win,
                    float(np.sqrt(cov[0, 0])))


# --- asymptotic volume ---------------------------------------------------------------

@dataclass
class AsvolEstimate:
    value: float
    uncertainty: float
    kind: str
    ball: str
    window: tuple
    sandwich: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)


def _extrapolate(R, V, d, window):
    """Fit V / R^d = a + b/R + c/R^2 and return a with an error bar.

    The error bar is the change in ``a`` when the 1/R^2 term is dropped,
    plus the propagated quadrature error.
    """
    Rs, ys, win = _tail(R, np.asarray(V) / np.asarray(R) ** d, window)
    A3 = np.column_stack([np.ones_like(Rs), 1 / Rs, 1 / Rs ** 2])
    c3, _, rms = _lstsq(A3, ys)
    c2, _, _ = _lstsq(A3[:, :2], ys)
    if rms > FIT_RMS_LIMIT * abs(c3[0]):
        raise NonConvergentFit("Vol/R^d is not settling along the ladder")
    return float(c3[0]), float(abs(c3[0] - c2[0])), win


def _tail_window(R, frac=0.5):
    R = np.asarray(R, dtype=float)
    return (float(R.max() * frac), float(R.max()))


def asvol_estimate(P, kind=HOLMES_THOMPSON, R_ladder=ASVOL_LADDER, center=None,
                   ball=ASYMPTOTIC, budget=None, window=None, sandwich=True):
    """Asymptotic volume lim Vol(B(R)) / R^d of a polytope.

    Uses asymptotic balls by default; with ``sandwich`` the metric-ball
    estimate is reported alongside, since the two limits coincide.
    """
    if not isinstance(P, Polytope):
        raise NonPolytopeBody("the asymptotic volume is finite only for polytopes")
    kind = volume_kind(kind)
    R = np.asarray(R_ladder, dtype=float)
    p = P.base_point if center is None else np.asarray(center, dtype=float)
    window = _tail_window(R) if window is None else window

    def run(b):
        curve = ball_growth_curve(P, p, kind, R, ball=b, budget=budget)
        V = np.array([e.value for _, e in curve])
        E = np.array([e.stderr for _, e in curve])
        a, err, win = _extrapolate(R, V, P.dim, window)
        qerr = float(np.max((E / R ** P.dim)[R >= win[0]]))
        return a, err + qerr, win

    a, err, win = run(ball)
    extra = {}
    if sandwich:
        other = METRIC if ball == ASYMPTOTIC else ASYMPTOTIC
        a2, err2, _ = run(other)
        extra = {other: a2, ball: a, "relative_gap": abs(a2 - a) / a,
                 "uncertainty": err + err2}
    return AsvolEstimate(a, err, kind, ball, win, extra)


# --- entropy ----------------------------------------------------------------------------

def entropy_estimate(body, kind=HOLMES_THOMPSON, R_ladder=ENTROPY_LADDER, center=None,
                     budget=None, window=None, model="corrected"):
    """Exponential growth rate of Vol(B(p, R)) from a tail fit.

    ``model="linear"`` is the plain least-squares slope of log Vol in R.
    The default ``"corrected"`` fits log Vol = ent R + k log R + c, which
    removes the 2/R-type bias a polynomial prefactor puts on the plain
    slope over a finite window (for a triangle the plain slope over
    [6, 10] is about 0.25 although the growth is quadratic).  Both slopes
    are always reported, the other one in ``extra``.
    """
    kind = volume_kind(kind)
    if model not in ("corrected", "linear"):
        raise ValueError("model must be 'corrected' or 'linear'")
    R = np.asarray(R_ladder, dtype=float)
    p = body.certificate.center if center is None else np.asarray(center, dtype=float)
    curve = ball_growth_curve(body, p, kind, R, budget=budget)
    V = np.array([e.value for _, e in curve])
    E = np.array([e.stderr for _, e in curve])
    if np.any(V <= 0):
        raise NonConvergentFit("nonpositive volume on the ladder")
    Rs, ys, win = _tail(R, np.log(V), window)
    rel = (E / V)[(R >= win[0] - 1e-12) & (R <= win[1] + 1e-12)]
    lin = fit_slope(Rs, ys, rms_limit=np.inf)
    A = np.column_stack([Rs, np.log(Rs), np.ones_like(Rs)])
    coef, cov, rms = _lstsq(A, ys)
    # quadrature errors propagated through the fit
    qerr = float(np.max(np.abs(np.linalg.pinv(A)[0])) * np.max(rel) * len(Rs))
    corrected = dict(slope=float(coef[0]), log_prefactor=float(coef[1]),
                     intercept=float(coef[2]), residual_rms=rms,
                     uncertainty=float(np.sqrt(cov[0, 0])) + qerr)
    linear = dict(slope=lin.slope, intercept=lin.intercept, residual_rms=lin.residual_rms,
                  uncertainty=lin.uncertainty + qerr)
    chosen, other = (corrected, linear) if model == "corrected" else (linear, corrected)
    if chosen["residual_rms"] > FIT_RMS_LIMIT:
        raise NonConvergentFit(f"residual RMS {chosen['residual_rms']:.3g} too large")
    return SlopeFit(Rs.tolist(), ys.tolist(), chosen["slope"], chosen["intercept"],
                    chosen["residual_rms"], win, chosen["uncertainty"],
                    {"model": model, "alternative": other,
                     "volumes": V.tolist(), "R": R.tolist()})


# --- polytopal approximation ----------------------------------------------------------------

def _boundary_net(body, n):
    d = body.dim
    c = body.certificate.center
    dirs = angular_net(n) if d == 2 else fibonacci_sphere(n)
    t = body.ray_hit(np.broadcast_to(c, dirs.shape), dirs)
    return c + t[:, None] * dirs


def _initial_count(body, eps):
    # unit-disk sagitta rule, scaled by the outer radius, as a first guess
    r = body.certificate.outer
    e = min(eps / r, 1.0)
    n2 = max(3, math.ceil(math.pi / math.acos(1 - e)))
    return n2 if body.dim == 2 else max(4, math.ceil(n2 * n2 / math.pi))


def approximate_polytope(body, eps, max_vertices=None, n_check=4096):
    """Inscribed polytope within Hausdorff distance ``eps`` of the body.

    The vertices are boundary points along an angular net (2D) or a
    Fibonacci net (3D).  The net is refined by doubling until the distance
    check passes, then the vertex count is bisected down to the smallest
    passing size.  Polytopes are returned unchanged.
    """
    if eps <= 0:
        raise EpsilonTooSmall("eps must be positive")
    if isinstance(body, Polytope):
        return body
    d = body.dim
    if d not in VERTEX_BUDGET:
        raise ValueError("approximation nets are implemented for d = 2, 3")
    budget = VERTEX_BUDGET[d] if max_vertices is None else max_vertices

    def build(n):
        if n > budget:
            raise EpsilonTooSmall(f"eps = {eps:g} needs more than {budget} vertices")
        P = convex_hull(_boundary_net(body, n), d)
        return P, hausdorff_distance(body, P, n_check) <= eps

    n = _initial_count(body, eps)
    lo = d  # largest count known (or assumed) to fail
    P, ok = build(n)
    while not ok:
        lo = n
        n *= 2
        P, ok = build(n)
    hi, best = n, P
    while hi - lo > max(1, hi // 200):
        mid = (lo + hi) // 2
        Q, ok = build(mid)
        if ok:
            hi, best = mid, Q
        else:
            lo = mid
    return best


def flag_number(body, eps, **kw):
    """Flag count of the inscribed approximation: an upper bound on a(eps, body)."""
    return flag_count(approximate_polytope(body, eps, **kw))


def flag_approx_estimate(body, eps_ladder=None, window=None, **kw):
    """Slope of log flag_number against -log eps over the ladder."""
    if eps_ladder is None:
        eps_ladder = EPS_LADDER_2D if body.dim == 2 else EPS_LADDER_3D
    eps = np.asarray(eps_ladder, dtype=float)
    if np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ValueError("eps ladder must be positive and decreasing")
    counts = parallel_map(lambda e: flag_number(body, e, **kw), eps)
    x = -np.log(eps)
    fit = fit_slope(x, np.log(counts), None if window is None else window)
    fit.extra = {"eps": eps.tolist(), "flags": [int(c) for c in counts]}
    return fit


# --- theorem harnesses --------------------------------------------------------------------

def verify_flag_ratio(P, kind=HOLMES_THOMPSON, R_max=9.0, budget=None):
    """Compare Asvol(P) / Asvol(simplex) with |Flags(P)| / (d+1)!.

    Also reports the extrapolated volume of each flag cone, which should
    be Asvol(simplex) / (d+1)! for every flag.
    """
    kind = volume_kind(kind)
    d = P.dim
    R = np.arange(1.0, R_max + 1e-9, 0.5)
    win = _tail_window(R)
    S = simplex(d)
    a_p = asvol_estimate(P, kind, R, budget=budget, sandwich=False)
    a_s = asvol_estimate(S, kind, R, budget=budget, sandwich=False)
    n_flags = flag_count(P)
    expected = n_flags / factorial(d + 1)
    ratio = a_p.value / a_s.value
    fv = flag_cone_volumes(P, kind, R, budget=budget)
    per_flag = [_extrapolate(R, v, d, win)[0] for v in fv.volumes]
    unit = a_s.value / factorial(d + 1)
    rel = np.array(per_flag) / unit
    unc = ratio * (a_p.uncertainty / a_p.value + a_s.uncertainty / a_s.value)
    return {
        "quantity": "asvol_ratio",
        "estimate": ratio,
        "uncertainty": unc,
        "expected": expected,
        "relative_discrepancy": abs(ratio - expected) / expected,
        "window": list(win),
        "fixtures": {"flags": n_flags, "dim": d, "kind": kind,
                     "asvol": a_p.value, "asvol_simplex": a_s.value},
        "per_flag_relative": rel.tolist(),
        "per_flag_spread": float(rel.max() - rel.min()),
    }


def verify_entropy_identity(body, kind=HOLMES_THOMPSON, R_ladder=ENTROPY_LADDER,
                            eps_ladder=None, tol=0.1):
    """ent(body) against twice the flag approximability, plus ent <= d - 1."""
    ent = entropy_estimate(body, kind, R_ladder)
    fa = flag_approx_estimate(body, eps_ladder)
    d = body.dim
    twice = 2 * fa.slope
    if abs(twice) < tol and abs(ent.slope) < tol:
        ratio, unc = None, None
    else:
        ratio = ent.slope / twice
        unc = abs(ratio) * (ent.uncertainty / abs(ent.slope)
                            + fa.uncertainty / abs(fa.slope))
    return {
        "quantity": "entropy_flag_identity",
        "estimate": ratio,
        "uncertainty": unc,
        "window": {"R": list(ent.window), "eps": [float(np.exp(-w)) for w in fa.window]},
        "fixtures": {"dim": d, "kind": volume_kind(kind)},
        "entropy": ent.slope,
        "entropy_uncertainty": ent.uncertainty,
        "twice_flag_approximability": twice,
        "flag_approximability_uncertainty": fa.uncertainty,
        "entropy_bound_ok": bool(ent.slope <= d - 1 + tol),
        "flag_bound_ok": bool(fa.slope <= (d - 1) / 2 + 0.05),
    }


def shrink_ratio(eps, d):
    """eps' / eps with 1 - eps' = (1 - eps) / lambda^2 and lambda = 1 + 2 d eps.

    Evaluated without cancellation.  The limit as eps -> 0 is 4d + 1.
    """
    lam2 = (1 + 2 * d * eps) ** 2
    eps_p = (4 * d * eps + 4 * d * d * eps * eps + eps) / lam2
    return eps_p / eps


def report_json(report):
    """Serialise a report dict (numpy scalars included) as JSON text."""
    def conv(o):
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"cannot serialise {type(o).__name__}")
    return json.dumps(report, indent=2, sort_keys=True, default=conv)
