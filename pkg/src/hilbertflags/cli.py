"""Command-line front end.

Every subcommand loads a body spec (``--body``), runs one computation and
writes a number, a CSV table or a JSON report to ``--out`` (default
stdout).  ``--config`` points at a JSON file whose keys supply defaults;
flags given on the command line win.  Exit codes: 0 success, 1 invalid
input, 2 a fit flagged as non-convergent.
"""

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import estimators as est
from .bodyio import load_body, save_body
from .errors import BadConfig, HilbertError, NonConvergentFit, UnknownCommand
from .hilbert_metric import density, funk_distance, hilbert_distance, volume_kind
from .polytope_lattice import Polytope, flag_count, flag_decomposition
from .volume_engine import (
    BallSpec,
    QuadratureBudget,
    ball_growth_curve,
    region_volume,
    write_growth_csv,
)

COMMANDS = ("distance", "density", "ball-volume", "flags", "decompose", "asvol",
            "entropy", "approximate", "flag-approx", "verify-ratio", "verify-identity")


@dataclass
class ExperimentConfig:
    command: str
    body: str = None
    kind: str = "holmes-thompson"
    R: list = None
    eps: list = None
    budget: dict = field(default_factory=dict)
    out: str = None
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.command not in COMMANDS:
            raise UnknownCommand(f"unknown command {self.command!r}")
        if self.body is None:
            raise BadConfig("--body is required")
        volume_kind(self.kind)
        if self.R is not None:
            R = np.asarray(self.R, dtype=float)
            if np.any(R < 0) or np.any(np.diff(R) <= 0):
                raise BadConfig("R values must be nonnegative and increasing")
        if self.eps is not None:
            e = np.asarray(self.eps, dtype=float)
            if np.any(e <= 0) or np.any(np.diff(e) >= 0):
                raise BadConfig("eps values must be positive and decreasing")
        return self


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise BadConfig(message)


def _add_common(p):
    p.add_argument("--body", help="body spec (.json) or vertex list (.txt)")
    p.add_argument("--config", help="JSON file with default option values")
    p.add_argument("--kind", help="busemann or holmes-thompson")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--seed", type=int)


def build_parser():
    parser = _Parser(prog="hilbertflags", description="Hilbert geometry experiments.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("distance", help="Hilbert (or Funk) distance between two points")
    _add_common(p)
    p.add_argument("--p", nargs="+", type=float, required=True)
    p.add_argument("--q", nargs="+", type=float, required=True)
    p.add_argument("--funk", action="store_true")

    p = sub.add_parser("density", help="volume density at points or on a 2D grid")
    _add_common(p)
    p.add_argument("--point", nargs="+", type=float, action="append")
    p.add_argument("--grid", type=int, help="grid size per axis (2D bodies)")

    p = sub.add_parser("ball-volume", help="volume of balls along an R ladder (CSV)")
    _add_common(p)
    p.add_argument("--center", nargs="+", type=float)
    p.add_argument("--R", nargs="+", type=float)
    p.add_argument("--ball", choices=("metric", "asymptotic"))
    p.add_argument("--method", choices=("quadrature", "monte-carlo"))
    p.add_argument("--samples", type=int)
    p.add_argument("--n-dirs", type=int)

    p = sub.add_parser("flags", help="number of maximal flags")
    _add_common(p)
    p.add_argument("--lattice", action="store_true", help="also dump the face lattice")

    p = sub.add_parser("decompose", help="barycentric flag simplices (CSV)")
    _add_common(p)

    for name, hlp in (("asvol", "asymptotic volume of a polytope"),
                      ("entropy", "volume entropy slope"),
                      ("verify-ratio", "Asvol ratio against the flag count")):
        p = sub.add_parser(name, help=hlp)
        _add_common(p)
        p.add_argument("--R", nargs="+", type=float,
                       help="R ladder (verify-ratio: a single R_max)")

    p = sub.add_parser("approximate", help="inscribed polytope within Hausdorff eps")
    _add_common(p)
    p.add_argument("--eps", nargs="+", type=float)
    p.add_argument("--save", help="write the polytope spec here")

    p = sub.add_parser("flag-approx", help="flag approximability slope")
    _add_common(p)
    p.add_argument("--eps", nargs="+", type=float)

    p = sub.add_parser("verify-identity", help="entropy against twice flag approximability")
    _add_common(p)
    p.add_argument("--R", nargs="+", type=float)
    p.add_argument("--eps", nargs="+", type=float)
    return parser


def make_config(args):
    """Merge a parsed namespace over the optional ``--config`` file."""
    file_cfg = {}
    if getattr(args, "config", None):
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise BadConfig(f"cannot read config: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise BadConfig("config file must hold a JSON object")
    ns = {k: v for k, v in vars(args).items() if v is not None and k != "config"}
    merged = {**file_cfg, **ns}
    known = {"command", "body", "kind", "R", "eps", "budget", "out", "seed"}
    cfg = ExperimentConfig(**{k: merged[k] for k in known if k in merged})
    cfg.extra = {k: v for k, v in merged.items() if k not in known}
    return cfg.validate()


def _emit(cfg, text):
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _budget(cfg):
    b = dict(cfg.budget or {})
    if cfg.extra.get("n_dirs"):
        b["n_dirs"] = cfg.extra["n_dirs"]
    return QuadratureBudget(**b) if b else None


def _cmd_distance(cfg, body):
    p, q = cfg.extra["p"], cfg.extra["q"]
    f = funk_distance if cfg.extra.get("funk") else hilbert_distance
    return f"{f(body, p, q):.10g}\n"


def _cmd_density(cfg, body):
    kind = volume_kind(cfg.kind)
    if cfg.extra.get("grid"):
        if body.dim != 2:
            raise BadConfig("--grid needs a 2D body")
        lo, hi = body.bounding_box()
        n = int(cfg.extra["grid"])
        xs, ys = np.linspace(lo[0], hi[0], n + 2)[1:-1], np.linspace(lo[1], hi[1], n + 2)[1:-1]
        X, Y = np.meshgrid(xs, ys)
        pts = np.column_stack([X.ravel(), Y.ravel()])
        pts = pts[body.contains(pts) & (body.boundary_distance(pts) > 1e-9)]
        vals = density(body, pts, kind)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "density", "kind"])
        for (x, y), v in zip(pts, vals):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(v)), kind])
        return buf.getvalue()
    pts = cfg.extra.get("point")
    if not pts:
        raise BadConfig("density needs --point or --grid")
    vals = density(body, np.array(pts, dtype=float), kind)
    return "".join(f"{v:.10g}\n" for v in vals)


def _cmd_ball_volume(cfg, body):
    kind = volume_kind(cfg.kind)
    center = cfg.extra.get("center") or body.certificate.center.tolist()
    R = cfg.R or [1.0, 2.0, 3.0]
    ball = cfg.extra.get("ball", "metric")
    method = cfg.extra.get("method", "quadrature")
    if method == "monte-carlo":
        n = int(cfg.extra.get("samples", 100_000))
        curve = [(r, region_volume(BallSpec(body, center, r, ball), kind, n, method, cfg.seed))
                 for r in R]
    else:
        curve = ball_growth_curve(body, center, kind, R, ball=ball, budget=_budget(cfg))
    buf = io.StringIO()
    write_growth_csv(buf, curve, Path(cfg.body).stem)
    return buf.getvalue()


def _need_polytope(body):
    if not isinstance(body, Polytope):
        raise BadConfig("this command needs a polytope body")
    return body


def _cmd_flags(cfg, body):
    P = _need_polytope(body)
    text = f"{flag_count(P)}\n"
    if cfg.extra.get("lattice"):
        text += P.lattice.dump()
        if not text.endswith("\n"):
            text += "\n"
    return text


def _cmd_decompose(cfg, body):
    P = _need_polytope(body)
    d = P.dim
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"face{k}" for k in range(d + 1)]
               + [f"x{k}_{j}" for k in range(d + 1) for j in range(d)] + ["volume"])
    for fs in flag_decomposition(P):
        w.writerow(list(fs.flag.faces) + [repr(float(x)) for x in fs.points.ravel()]
                   + [repr(float(fs.volume))])
    return buf.getvalue()


def _cmd_asvol(cfg, body):
    kind = volume_kind(cfg.kind)
    R = cfg.R or list(est.ASVOL_LADDER)
    a = est.asvol_estimate(body, kind, R, budget=_budget(cfg))
    return est.report_json({"quantity": "asvol", "estimate": a.value,
                            "uncertainty": a.uncertainty, "window": list(a.window),
                            "fixtures": {"body": cfg.body, "kind": kind, "ball": a.ball},
                            "sandwich": a.sandwich}) + "\n"


def _cmd_entropy(cfg, body):
    kind = volume_kind(cfg.kind)
    fit = est.entropy_estimate(body, kind, cfg.R or list(est.ENTROPY_LADDER),
                               budget=_budget(cfg))
    return est.report_json({"quantity": "entropy", "estimate": fit.slope,
                            "uncertainty": fit.uncertainty, "window": list(fit.window),
                            "fixtures": {"body": cfg.body, "kind": kind},
                            "fit": fit.to_dict()}) + "\n"


def _cmd_approximate(cfg, body):
    from .convex_core import hausdorff_distance
    eps = (cfg.eps or [1e-2])[0]
    P = est.approximate_polytope(body, eps)
    if cfg.extra.get("save"):
        save_body(cfg.extra["save"], P)
    return est.report_json({"quantity": "approximation", "estimate": flag_count(P),
                            "uncertainty": 0, "window": [eps],
                            "fixtures": {"body": cfg.body, "vertices": len(P.vertices),
                                         "facets": len(P.facets),
                                         "hausdorff": hausdorff_distance(body, P)}}) + "\n"


def _cmd_flag_approx(cfg, body):
    fit = est.flag_approx_estimate(body, cfg.eps)
    return est.report_json({"quantity": "flag_approximability", "estimate": fit.slope,
                            "uncertainty": fit.uncertainty, "window": list(fit.window),
                            "fixtures": {"body": cfg.body, **fit.extra}}) + "\n"


def _cmd_verify_ratio(cfg, body):
    P = _need_polytope(body)
    R_max = (cfg.R or [9.0])[-1]
    rep = est.verify_flag_ratio(P, volume_kind(cfg.kind), R_max, _budget(cfg))
    rep["fixtures"]["body"] = cfg.body
    return est.report_json(rep) + "\n"


def _cmd_verify_identity(cfg, body):
    rep = est.verify_entropy_identity(body, volume_kind(cfg.kind),
                                      cfg.R or list(est.ENTROPY_LADDER), cfg.eps)
    rep["fixtures"]["body"] = cfg.body
    return est.report_json(rep) + "\n"


_HANDLERS = {
    "distance": _cmd_distance, "density": _cmd_density, "ball-volume": _cmd_ball_volume,
    "flags": _cmd_flags, "decompose": _cmd_decompose, "asvol": _cmd_asvol,
    "entropy": _cmd_entropy, "approximate": _cmd_approximate,
    "flag-approx": _cmd_flag_approx, "verify-ratio": _cmd_verify_ratio,
    "verify-identity": _cmd_verify_identity,
}


def run(argv=None):
    """Run one subcommand and return its exit code."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        if argv and not argv[0].startswith("-") and argv[0] not in COMMANDS:
            raise UnknownCommand(f"unknown command {argv[0]!r}")
        cfg = make_config(build_parser().parse_args(argv))
        body = load_body(cfg.body)
        _emit(cfg, _HANDLERS[cfg.command](cfg, body))
    except NonConvergentFit as exc:
        print(f"error: non-convergent fit: {exc}", file=sys.stderr)
        return 2
    except (HilbertError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())
