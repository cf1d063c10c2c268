"""Command-line front end: every operation as a subcommand.

Conventions shared by all subcommands:

  * inputs are CSV measures / panels or inline JSON domain specs
    (`@path` loads the JSON from a file);
  * polynomials use the infix grammar over x, y, z, w ("xy + x^3 - 3*x*y^2");
  * artifacts are written atomically (temp file, then rename) with
    17-significant-digit floats, so repeat runs are byte-identical;
  * exactly one JSON summary line goes to standard output;
  * exit status: 0 success, 1 failed verification checks, 2 invalid
    configuration, 3 numerical/runtime failure (module message verbatim);
  * `--plot` additionally renders a PNG next to the delimited artifact;
  * worker counts: `--workers` flag, else GMT_LAB_THREADS, else 1.
"""

from __future__ import annotations

import json
import os
import sys
from dataclasses import dataclass, field

import click
import numpy as np

from . import acceptance
from ._util import atomic_write_text, fmt_float, worker_count
from .measure import (
    Ball,
    SolverError,
    dimension_slope,
    doubling_profile,
    f_ball,
    f_r,
    measure_from_csv,
    measure_to_csv,
)
from .polycore import (
    ConstantEllipticMatrix,
    Polynomial,
    apply_operator,
    check_ellipticity,
    harmonic_basis,
    identity_matrix,
    parse_polynomial,
    symmetrize_sqrt,
)

SUMMARY_ERRORS = (ValueError, SolverError, KeyError, OverflowError,
                  FloatingPointError, np.linalg.LinAlgError)


class ValidationFailure(Exception):
    """Configuration rejected before any computation ran (exit 2)."""


# ---------------------------------------------------------------------------
# experiment configs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """One fully-specified run: subcommand, parameters, seed, output dir."""

    subcommand: str
    params: dict
    seed: int | None = None
    out_dir: str = "."

    @classmethod
    def from_json_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ValidationFailure("config must be a JSON object")
        allowed = {"subcommand", "params", "seed", "out_dir"}
        unknown = set(d) - allowed
        if unknown:
            raise ValidationFailure(
                f"unknown config fields: {', '.join(sorted(unknown))}")
        if "subcommand" not in d:
            raise ValidationFailure("config needs a 'subcommand' field")
        params = d.get("params", {})
        if not isinstance(params, dict):
            raise ValidationFailure("'params' must be an object")
        seed = d.get("seed")
        if seed is not None and not isinstance(seed, int):
            raise ValidationFailure("'seed' must be an integer")
        return cls(str(d["subcommand"]), params, seed,
                   str(d.get("out_dir", ".")))


@dataclass(frozen=True)
class SubcommandSpec:
    required: frozenset
    optional: frozenset
    stochastic: bool = False
    handler: object = field(default=None, compare=False)


REGISTRY: dict[str, SubcommandSpec] = {}


def register(name: str, required=(), optional=(), stochastic=False):
    def deco(fn):
        REGISTRY[name] = SubcommandSpec(frozenset(required),
                                        frozenset(optional), stochastic, fn)
        return fn
    return deco


def run(config: ExperimentConfig, *, workers: int | None = None,
        plot: bool = False) -> tuple[int, dict]:
    """Validate strictly, dispatch, and return (exit_code, summary)."""
    try:
        spec = REGISTRY.get(config.subcommand)
        if spec is None:
            raise ValidationFailure(
                f"unknown subcommand {config.subcommand!r}")
        keys = set(config.params)
        unknown = keys - spec.required - spec.optional
        if unknown:
            raise ValidationFailure(
                f"unknown fields for {config.subcommand}: "
                f"{', '.join(sorted(unknown))}")
        missing = spec.required - keys
        if missing:
            raise ValidationFailure(
                f"missing required fields for {config.subcommand}: "
                f"{', '.join(sorted(missing))}")
        if spec.stochastic and config.seed is None:
            raise ValidationFailure(
                f"{config.subcommand} is stochastic: an explicit --seed "
                "is required")
    except ValidationFailure as e:
        return 2, {"error": str(e)}
    try:
        os.makedirs(config.out_dir, exist_ok=True)
        summary = spec.handler(config, worker_count(workers), plot)
        return int(summary.pop("__exit__", 0)), summary
    except ValidationFailure as e:
        return 2, {"error": str(e)}
    except SUMMARY_ERRORS as e:
        return 3, {"error": f"{type(e).__name__}: {e}"
                   if not isinstance(e, (ValueError, SolverError))
                   else str(e)}


def _finish(code: int, summary: dict) -> None:
    click.echo(json.dumps(summary, sort_keys=True))
    sys.exit(code)


def _dispatch(name, params, seed=None, out_dir=".", workers=None, plot=False):
    cfg = ExperimentConfig(name, {k: v for k, v in params.items()
                                  if v is not None}, seed, out_dir)
    _finish(*run(cfg, workers=workers, plot=plot))


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------

def _floats(text, what="value list") -> list[float]:
    try:
        return [float(t) for t in str(text).split(",") if t.strip() != ""]
    except ValueError:
        raise ValidationFailure(f"cannot parse {what}: {text!r}") from None


def _vec(text, what="point") -> np.ndarray:
    return np.array(_floats(text, what))


def _matrix(text) -> ConstantEllipticMatrix:
    t = str(text).strip()
    if t.upper().startswith("I"):
        return identity_matrix(int(t[1:]) if len(t) > 1 else 2)
    vals = _floats(t, "matrix")
    n = int(round(len(vals) ** 0.5))
    if n * n != len(vals):
        raise ValidationFailure(
            f"matrix needs a square number of entries, got {len(vals)}")
    return check_ellipticity(np.array(vals).reshape(n, n))


def _poly(text, dim=None) -> Polynomial:
    try:
        return parse_polynomial(str(text), dim=dim)
    except ValueError as e:
        raise ValidationFailure(str(e)) from None


def _ball(text) -> Ball:
    center, _, radius = str(text).rpartition(":")
    if not center:
        raise ValidationFailure(
            f"ball spec {text!r} must look like 'cx,cy:radius'")
    return Ball(_vec(center, "ball center"), float(radius))


def _radii(text) -> list[float]:
    r = _floats(text, "radius list")
    if not r:
        raise ValidationFailure("radius list is empty")
    return r


def _read_text(path, what="input") -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise ValidationFailure(f"cannot read {what} {path!r}: {e}") from None


def _measure(path):
    try:
        return measure_from_csv(_read_text(path, "measure"))
    except ValueError as e:
        raise ValidationFailure(f"bad measure CSV {path!r}: {e}") from None


def _domain(text):
    from .stochastic import ImplicitDomain

    raw = str(text)
    if raw.startswith("@"):
        raw = _read_text(raw[1:], "domain spec")
    try:
        d = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ValidationFailure(f"domain spec is not JSON: {e}") from None
    try:
        return ImplicitDomain.from_json_dict(d)
    except (ValueError, KeyError, TypeError) as e:
        raise ValidationFailure(f"bad domain spec: {e}") from None


def _cone(text, a=None):
    from .cone import make_cone

    name = str(text).strip()
    a = a if a is not None else identity_matrix(2)
    if name.upper() in ("F1", "FLAT"):
        return make_cone(a.dim, "flat-planes", a)
    if name.upper().startswith("F") and name[1:].isdigit():
        return make_cone(a.dim, f"homogeneous({int(name[1:])})", a)
    if name.upper().startswith("P") and name[1:].isdigit():
        return make_cone(a.dim, f"poly-up-to({int(name[1:])})", a)
    try:
        return make_cone(a.dim, name, a)
    except ValueError as e:
        raise ValidationFailure(str(e)) from None


def _write(out_dir, name, text) -> str:
    path = os.path.join(out_dir, name)
    atomic_write_text(path, text)
    return path


def _panel(path, ball):
    from .weights import WeightPanel

    try:
        return WeightPanel.from_csv(_read_text(path, "panel"), ball)
    except ValueError as e:
        raise ValidationFailure(f"bad panel CSV {path!r}: {e}") from None


# ---------------------------------------------------------------------------
# handlers: polycore
# ---------------------------------------------------------------------------

@register("polycore.basis", required=("dim", "degree"),
          optional=("a", "output"))
def _h_basis(cfg, workers, plot):
    p = cfg.params
    dim, k = int(p["dim"]), int(p["degree"])
    a = _matrix(p["a"]) if "a" in p else identity_matrix(dim)
    basis = harmonic_basis(dim, k, a)
    path = _write(cfg.out_dir, p.get("output", "basis.json"), json.dumps(
        [b.to_json_dict() for b in basis], sort_keys=True) + "\n")
    return {"count": len(basis), "degree": k, "artifact": path}


@register("polycore.apply", required=("h",), optional=("a", "dim"))
def _h_apply(cfg, workers, plot):
    p = cfg.params
    h = _poly(p["h"], int(p["dim"]) if "dim" in p else None)
    a = _matrix(p["a"]) if "a" in p else identity_matrix(h.dim)
    out = apply_operator(a, h)
    return {"result": out.to_json_dict(), "max_abs_coeff": out.max_abs_coeff()}


@register("polycore.sqrt", required=("a",), optional=("output",))
def _h_sqrt(cfg, workers, plot):
    dec = symmetrize_sqrt(_matrix(cfg.params["a"]))
    blob = {"s": dec.s.tolist(), "s_inv": dec.s_inv.tolist(),
            "det_s": dec.det_s, "a_sym": dec.a_sym.tolist()}
    path = _write(cfg.out_dir, cfg.params.get("output", "sqrt.json"),
                  json.dumps(blob, sort_keys=True) + "\n")
    return {"det_s": dec.det_s, "artifact": path}


# ---------------------------------------------------------------------------
# handlers: measure
# ---------------------------------------------------------------------------

@register("measure.fr", required=("input", "r"))
def _h_fr(cfg, workers, plot):
    mu = _measure(cfg.params["input"])
    return {"F_r": f_r(mu, float(cfg.params["r"]))}


@register("measure.fball", required=("mu", "center", "radius"),
          optional=("sigma",))
def _h_fball(cfg, workers, plot):
    p = cfg.params
    mu = _measure(p["mu"])
    sigma = _measure(p["sigma"]) if "sigma" in p else None
    b = Ball(_vec(p["center"], "ball center"), float(p["radius"]))
    return {"f_ball": f_ball(mu, sigma, b)}


@register("measure.pushforward", required=("input", "matrix"),
          optional=("scale", "output"))
def _h_pushforward(cfg, workers, plot):
    from .polymeasure import linear_pushforward

    p = cfg.params
    mu = _measure(p["input"])
    vals = _floats(p["matrix"], "matrix")
    n = int(round(len(vals) ** 0.5))
    if n * n != len(vals):
        raise ValidationFailure("matrix needs a square number of entries")
    out = linear_pushforward(mu, np.array(vals).reshape(n, n),
                             float(p.get("scale", 1.0)))
    path = _write(cfg.out_dir, p.get("output", "pushforward.csv"),
                  measure_to_csv(out))
    return {"artifact": path, "atoms": len(out.points)}


@register("measure.doubling", required=("input", "xi", "radii"),
          optional=("output",))
def _h_doubling(cfg, workers, plot):
    p = cfg.params
    mu = _measure(p["input"])
    radii = _radii(p["radii"])
    prof = doubling_profile(mu, _vec(p["xi"], "center"), radii)
    lines = ["r,doubling_ratio"]
    for r, v in zip(radii, prof):
        lines.append(f"{fmt_float(r)},{'' if v is None else fmt_float(v)}")
    path = _write(cfg.out_dir, p.get("output", "doubling.csv"),
                  "\n".join(lines) + "\n")
    return {"artifact": path, "rows": len(radii)}


@register("measure.dimension", required=("input", "xi", "radii"))
def _h_dimension(cfg, workers, plot):
    p = cfg.params
    mu = _measure(p["input"])
    slope = dimension_slope(mu, _vec(p["xi"], "center"), _radii(p["radii"]))
    return {"slope": slope}


# ---------------------------------------------------------------------------
# handlers: polymeasure
# ---------------------------------------------------------------------------

@register("polymeasure.sample", required=("h",),
          optional=("R", "eps", "grid", "a", "output"))
def _h_sample(cfg, workers, plot):
    from .polymeasure import PolyMeasureSpec, sample_polymeasure

    p = cfg.params
    h = _poly(p["h"])
    a = _matrix(p["a"]) if "a" in p else identity_matrix(h.dim)
    try:
        spec = PolyMeasureSpec(
            h, a, radius=float(p.get("R", 1.0)),
            shell_eps=float(p["eps"]) if "eps" in p else None,
            grid_n=int(p["grid"]) if "grid" in p else None)
    except ValueError as e:
        raise ValidationFailure(str(e)) from None
    mu = sample_polymeasure(spec)
    path = _write(cfg.out_dir, p.get("output", "measure.csv"),
                  measure_to_csv(mu))
    summary = {"F1": f_r(mu, 1.0), "atoms": len(mu.points), "artifact": path}
    if plot:
        from .plots import save_measure_scatter

        summary["plot"] = save_measure_scatter(
            mu, os.path.splitext(path)[0] + ".png")
    return summary


@register("polymeasure.weakpair", required=("h",),
          optional=("a", "center", "radius", "power", "q", "grid"))
def _h_weakpair(cfg, workers, plot):
    from .polymeasure import (BumpSpec, PolyMeasureSpec, sample_polymeasure,
                              weak_pairing)

    p = cfg.params
    h = _poly(p["h"])
    a = _matrix(p["a"]) if "a" in p else identity_matrix(h.dim)
    phi = BumpSpec(h.dim,
                   center=tuple(_vec(p["center"])) if "center" in p else None,
                   radius=float(p.get("radius", 1.0)),
                   power=int(p.get("power", 2)),
                   poly=_poly(p["q"], h.dim) if "q" in p else None)
    weak = weak_pairing(h, a, phi,
                        grid_n=int(p["grid"]) if "grid" in p else None)
    mu = sample_polymeasure(PolyMeasureSpec(h, a, radius=phi.radius
                                            + float(np.linalg.norm(phi.center))))
    surface = float(np.sum(mu.weights * phi(mu.points)))
    rel = abs(weak - surface) / max(abs(weak), 1e-30)
    return {"weak": weak, "surface": surface, "rel_diff": rel}


@register("polymeasure.scaling", required=("h", "radii"),
          optional=("a", "grid", "output"))
def _h_scaling(cfg, workers, plot):
    from .polymeasure import scaling_report

    p = cfg.params
    h = _poly(p["h"])
    a = _matrix(p["a"]) if "a" in p else identity_matrix(h.dim)
    rows = scaling_report(h, a, _radii(p["radii"]),
                          grid_n=int(p["grid"]) if "grid" in p else None)
    lines = ["r,measured,predicted,rel_err,dilation_fball"]
    for r in rows:
        lines.append(",".join(fmt_float(v) for v in
                              (r.r, r.measured, r.predicted, r.rel_err,
                               r.dilation_fball)))
    path = _write(cfg.out_dir, p.get("output", "scaling.csv"),
                  "\n".join(lines) + "\n")
    summary = {"artifact": path,
               "max_rel_err": max(r.rel_err for r in rows),
               "max_dilation_fball": max(r.dilation_fball for r in rows)}
    if plot:
        from .plots import save_profile

        summary["plot"] = save_profile(
            os.path.splitext(path)[0] + ".png",
            [r.r for r in rows],
            {"measured": [r.measured for r in rows],
             "predicted": [r.predicted for r in rows]},
            ylabel="F_r / F_1", loglog=True)
    return summary


# ---------------------------------------------------------------------------
# handlers: cone
# ---------------------------------------------------------------------------

@register("cone.distance", required=("input", "cone"),
          optional=("r", "a", "restarts", "seed", "output"))
def _h_cone_distance(cfg, workers, plot):
    from .cone import cone_distance

    p = cfg.params
    mu = _measure(p["input"])
    a = _matrix(p["a"]) if "a" in p else None
    cone = _cone(p["cone"], a)
    res = cone_distance(mu, cone, float(p.get("r", 1.0)),
                        restarts=int(p.get("restarts", 32)),
                        seed=int(p.get("seed", cfg.seed or 0)),
                        workers=workers)
    path = _write(cfg.out_dir, p.get("output", "witness.json"),
                  res.to_json() + "\n")
    return {"d": res.value, "witness_degree": res.witness.degree(),
            "artifact": path}


@register("cone.scan", required=("input", "xi", "cone", "radii"),
          optional=("a", "restarts", "seed", "output"))
def _h_cone_scan(cfg, workers, plot):
    from .cone import scale_scan

    p = cfg.params
    mu = _measure(p["input"])
    a = _matrix(p["a"]) if "a" in p else None
    cone = _cone(p["cone"], a)
    radii = _radii(p["radii"])
    rows = scale_scan(mu, _vec(p["xi"], "center"), cone, radii,
                      restarts=int(p.get("restarts", 32)),
                      seed=int(p.get("seed", cfg.seed or 0)),
                      workers=workers)
    lines = ["r,d1,witness_degree"]
    for row in rows:
        lines.append(f"{fmt_float(row.r)},{fmt_float(row.d1)},"
                     f"{row.witness_degree}")
    path = _write(cfg.out_dir, p.get("output", "scan.csv"),
                  "\n".join(lines) + "\n")
    d1 = [row.d1 for row in rows]
    summary = {"artifact": path, "rows": len(rows),
               "monotone_decreasing": all(b < a_ for a_, b in zip(d1, d1[1:])),
               "d1_last": d1[-1]}
    if plot:
        from .plots import save_profile

        summary["plot"] = save_profile(
            os.path.splitext(path)[0] + ".png", [row.r for row in rows],
            {"d1": d1}, ylabel="distance to cone", loglog=True)
    return summary


@register("cone.degree", required=("input", "xi", "kmax", "radii"),
          optional=("a", "restarts", "seed", "threshold", "output"))
def _h_cone_degree(cfg, workers, plot):
    from .cone import detect_degree

    p = cfg.params
    mu = _measure(p["input"])
    a = _matrix(p["a"]) if "a" in p else None
    k, table = detect_degree(mu, _vec(p["xi"], "center"), int(p["kmax"]),
                             _radii(p["radii"]), a=a,
                             threshold=float(p.get("threshold", 0.05)),
                             restarts=int(p.get("restarts", 32)),
                             seed=int(p.get("seed", cfg.seed or 0)),
                             workers=workers)
    lines = ["k,r,d1"]
    for kk in sorted(table):
        for row in table[kk]:
            lines.append(f"{kk},{fmt_float(row.r)},{fmt_float(row.d1)}")
    path = _write(cfg.out_dir, p.get("output", "degree_table.csv"),
                  "\n".join(lines) + "\n")
    return {"k": k, "artifact": path}


@register("cone.theta", required=("input", "x", "r", "candidates"),
          optional=("resolution",))
def _h_cone_theta(cfg, workers, plot):
    from .cone import flatness_theta

    p = cfg.params
    mu = _measure(p["input"])
    cands = [_poly(t) for t in str(p["candidates"]).split(";") if t.strip()]
    theta = flatness_theta(mu.points, _vec(p["x"], "center"), float(p["r"]),
                           cands,
                           resolution_grid_n=int(p.get("resolution", 256)))
    return {"theta": theta}


# ---------------------------------------------------------------------------
# handlers: wos
# ---------------------------------------------------------------------------

def _queries(p):
    from .stochastic import ball_query, slit_side_query

    out = []
    for q in p.get("query", ()):
        parts = str(q).split(":")
        if len(parts) != 3:
            raise ValidationFailure(
                f"query {q!r} must look like 'label:cx,cy:radius'")
        out.append(ball_query(parts[0], _vec(parts[1], "query center"),
                              float(parts[2])))
    if p.get("slit_sides"):
        out.extend([slit_side_query("top"), slit_side_query("bottom")])
    if not out:
        raise ValidationFailure(
            "need at least one --query or --slit-sides")
    return out


def _walk_cfg(p, seed):
    from .stochastic import WalkConfig

    try:
        return WalkConfig(
            n_walks=int(p.get("walks", 100_000)), seed=int(seed),
            eps_shell=float(p["eps_shell"]) if "eps_shell" in p else None,
            max_steps=int(p.get("max_steps", 1_000_000)))
    except ValueError as e:
        raise ValidationFailure(str(e)) from None


@register("wos.measure", required=("domain", "pole"),
          optional=("query", "slit_sides", "walks", "eps_shell", "max_steps",
                    "output"),
          stochastic=True)
def _h_wos_measure(cfg, workers, plot):
    from .stochastic import estimate_from_hits, wos_boundary_hits

    p = cfg.params
    domain = _domain(p["domain"])
    queries = _queries(p)
    wcfg = _walk_cfg(p, cfg.seed)
    proj, raw, aborted = wos_boundary_hits(domain, _vec(p["pole"], "pole"),
                                           wcfg, workers=workers)
    est = estimate_from_hits(queries, proj, raw, aborted, wcfg.n_walks)
    path = _write(cfg.out_dir, p.get("output", "estimate.json"),
                  est.to_json() + "\n")
    summary = {"artifact": path,
               "aborted_fraction": est.aborted_fraction,
               "warnings": list(est.warnings),
               "queries": {q.label: [float(pp), float(ss)] for q, pp, ss in
                           zip(est.queries, est.probabilities, est.stderrs)}}
    if plot:
        from .plots import save_boundary_histogram

        summary["plot"] = save_boundary_histogram(
            proj, os.path.splitext(path)[0] + ".png")
    return summary


@register("wos.reduce", required=("a", "domain", "pole"),
          optional=("output",))
def _h_wos_reduce(cfg, workers, plot):
    from .stochastic import elliptic_reduce

    p = cfg.params
    dom, pole, s = elliptic_reduce(_matrix(p["a"]), _domain(p["domain"]),
                                   _vec(p["pole"], "pole"))
    blob = {"domain": dom.to_json_dict(), "pole": pole.tolist(),
            "s": s.tolist()}
    path = _write(cfg.out_dir, p.get("output", "reduced.json"),
                  json.dumps(blob, sort_keys=True) + "\n")
    return {"artifact": path, "pole": pole.tolist(),
            "det_s": float(np.linalg.det(s))}


@register("wos.blowup",
          required=("domain_plus", "domain_minus", "pole_plus", "pole_minus",
                    "xi", "radii"),
          optional=("cone", "walks", "eps_shell", "max_steps", "bins",
                    "restarts", "output"),
          stochastic=True)
def _h_wos_blowup(cfg, workers, plot):
    from .stochastic import blowup_experiment

    p = cfg.params
    cone = _cone(p.get("cone", "flat-planes"))
    rep = blowup_experiment(
        (_domain(p["domain_plus"]), _domain(p["domain_minus"])),
        (_vec(p["pole_plus"], "pole"), _vec(p["pole_minus"], "pole")),
        _vec(p["xi"], "center"), _radii(p["radii"]), cone,
        _walk_cfg(p, cfg.seed), n_bins=int(p.get("bins", 16)),
        cone_restarts=int(p.get("restarts", 12)), workers=workers)
    path = _write(cfg.out_dir, p.get("output", "blowup.csv"), rep.to_csv())
    summary = {"artifact": path, "slope_plus": rep.slope_plus,
               "slope_minus": rep.slope_minus,
               "aborted_plus": rep.aborted_plus,
               "aborted_minus": rep.aborted_minus}
    if plot:
        from .plots import save_profile

        rows = rep.rows
        summary["plot"] = save_profile(
            os.path.splitext(path)[0] + ".png", [row.r for row in rows],
            {"d1_plus": [row.d1_plus for row in rows],
             "d1_minus": [row.d1_minus for row in rows],
             "ratio": [row.ratio for row in rows]},
            ylabel="profile", loglog=False)
    return summary


# ---------------------------------------------------------------------------
# handlers: weights
# ---------------------------------------------------------------------------

@register("weights.k", required=("input",), optional=("ball",))
def _h_weights_k(cfg, workers, plot):
    from .weights import a_inf_quantity

    panel = _panel(cfg.params["input"],
                   _ball(cfg.params.get("ball", "0,0:1")))
    return {"K": a_inf_quantity(panel)}


@register("weights.bmo", required=("input",), optional=("ball",))
def _h_weights_bmo(cfg, workers, plot):
    from .weights import bmo_oscillation

    panel = _panel(cfg.params["input"],
                   _ball(cfg.params.get("ball", "0,0:1")))
    return {"osc": bmo_oscillation(panel)}


@register("weights.korey", required=("input",), optional=("ball",))
def _h_weights_korey(cfg, workers, plot):
    from .weights import korey_check

    panel = _panel(cfg.params["input"],
                   _ball(cfg.params.get("ball", "0,0:1")))
    res = korey_check(panel)
    return {"osc": res.osc, "K": res.k, "bound": res.bound,
            "satisfied": res.satisfied}


@register("weights.hru", required=("input", "delta"), optional=("ball",))
def _h_weights_hru(cfg, workers, plot):
    from .weights import hru_moduli

    panel = _panel(cfg.params["input"],
                   _ball(cfg.params.get("ball", "0,0:1")))
    res = hru_moduli(panel, float(cfg.params["delta"]))
    return {"fractional": res.fractional, "integral": res.integral,
            "integral_exact": res.integral_exact, "gap": res.gap}


@register("weights.scan", required=("inputs", "radii"), optional=("output",))
def _h_weights_scan(cfg, workers, plot):
    from .weights import va_inf_scan

    p = cfg.params
    paths = [t for t in str(p["inputs"]).split(",") if t.strip()]
    radii = _radii(p["radii"])
    if len(paths) != len(radii):
        raise ValidationFailure(
            f"{len(paths)} panels but {len(radii)} radii")
    panels = [_panel(path, Ball(np.zeros(2), r))
              for path, r in zip(paths, radii)]
    prof = va_inf_scan(panels)
    path = _write(cfg.out_dir, p.get("output", "profile.csv"), prof.to_csv())
    summary = {"artifact": path, "vanishing": prof.vanishing,
               "trend_monotone": prof.trend_monotone}
    if plot:
        from .plots import save_profile

        summary["plot"] = save_profile(
            os.path.splitext(path)[0] + ".png",
            [row.r for row in prof.rows],
            {"K": [row.k for row in prof.rows],
             "osc": [row.osc for row in prof.rows]},
            ylabel="density diagnostics", loglog=False)
    return summary


# ---------------------------------------------------------------------------
# handlers: verify
# ---------------------------------------------------------------------------

@register("verify.all", required=(), optional=("out_subdir",))
def _h_verify_all(cfg, workers, plot):
    ctx = acceptance.SuiteContext(
        out_dir=os.path.join(cfg.out_dir,
                             cfg.params.get("out_subdir", "verify_artifacts")),
        workers=workers)
    os.makedirs(ctx.out_dir, exist_ok=True)
    results = acceptance.run_all(ctx)
    failed = [r.check_id for r in results if not r.passed]
    return {"total": len(results), "passed": len(results) - len(failed),
            "failed": failed, "artifact_dir": ctx.out_dir,
            "runtime_s": round(sum(r.runtime_s for r in results), 3),
            "__exit__": 0 if not failed else 1}


@register("verify.one", required=("check",), optional=("out_subdir",))
def _h_verify_one(cfg, workers, plot):
    ctx = acceptance.SuiteContext(
        out_dir=os.path.join(cfg.out_dir,
                             cfg.params.get("out_subdir", "verify_artifacts")),
        workers=workers)
    os.makedirs(ctx.out_dir, exist_ok=True)
    res = acceptance.run_check(str(cfg.params["check"]), ctx)
    return {"check": res.check_id, "passed": res.passed,
            "details": acceptance._jsonable(res.details),
            "runtime_s": round(res.runtime_s, 3),
            "__exit__": 0 if res.passed else 1}


# ---------------------------------------------------------------------------
# click wiring
# ---------------------------------------------------------------------------

@click.group()
def main():
    """Variety measures, cone distances, and boundary-walk experiments."""


def _common(fn):
    fn = click.option("--out-dir", default=".", show_default=True,
                      help="artifact directory")(fn)
    fn = click.option("--workers", type=int, default=None,
                      help="worker threads (default: GMT_LAB_THREADS or 1)")(fn)
    return fn


@main.command("run")
@click.option("--config", "config_path", required=True,
              help="JSON experiment config (strict schema)")
@click.option("--workers", type=int, default=None)
@click.option("--plot", is_flag=True, default=False)
def run_config(config_path, workers, plot):
    """Run one experiment from a JSON config file."""
    try:
        cfg = ExperimentConfig.from_json_dict(
            json.loads(_read_text(config_path, "config")))
    except (ValidationFailure, json.JSONDecodeError) as e:
        _finish(2, {"error": str(e)})
    _finish(*run(cfg, workers=workers, plot=plot))


# --- polycore ---------------------------------------------------------------

@main.group()
def polycore():
    """Polynomial algebra and elliptic matrices."""


@polycore.command("basis")
@click.option("--dim", type=int, required=True)
@click.option("--degree", "-k", type=int, required=True)
@click.option("--a", default=None, help="matrix entries 'a11,a12,...' or I")
@click.option("--output", default=None)
@_common
def polycore_basis(dim, degree, a, output, out_dir, workers):
    _dispatch("polycore.basis",
              {"dim": dim, "degree": degree, "a": a, "output": output},
              out_dir=out_dir, workers=workers)


@polycore.command("apply")
@click.option("--h", required=True, help="polynomial expression")
@click.option("--a", default=None)
@click.option("--dim", type=int, default=None)
@_common
def polycore_apply(h, a, dim, out_dir, workers):
    _dispatch("polycore.apply", {"h": h, "a": a, "dim": dim},
              out_dir=out_dir, workers=workers)


@polycore.command("sqrt")
@click.option("--a", required=True)
@click.option("--output", default=None)
@_common
def polycore_sqrt(a, output, out_dir, workers):
    _dispatch("polycore.sqrt", {"a": a, "output": output},
              out_dir=out_dir, workers=workers)


# --- measure ----------------------------------------------------------------

@main.group()
def measure():
    """Discrete measures: masses, ball LP, transforms."""


@measure.command("fr")
@click.option("--input", "input_", required=True, type=click.Path())
@click.option("--r", type=float, required=True)
@_common
def measure_fr(input_, r, out_dir, workers):
    _dispatch("measure.fr", {"input": input_, "r": r},
              out_dir=out_dir, workers=workers)


@measure.command("fball")
@click.option("--mu", required=True, type=click.Path())
@click.option("--sigma", default=None, type=click.Path())
@click.option("--center", required=True)
@click.option("--radius", type=float, required=True)
@_common
def measure_fball(mu, sigma, center, radius, out_dir, workers):
    _dispatch("measure.fball",
              {"mu": mu, "sigma": sigma, "center": center, "radius": radius},
              out_dir=out_dir, workers=workers)


@measure.command("pushforward")
@click.option("--input", "input_", required=True, type=click.Path())
@click.option("--matrix", required=True)
@click.option("--scale", type=float, default=None)
@click.option("--output", default=None)
@_common
def measure_pushforward(input_, matrix, scale, output, out_dir, workers):
    _dispatch("measure.pushforward",
              {"input": input_, "matrix": matrix, "scale": scale,
               "output": output}, out_dir=out_dir, workers=workers)


@measure.command("doubling")
@click.option("--input", "input_", required=True, type=click.Path())
@click.option("--xi", required=True)
@click.option("--radii", required=True)
@click.option("--output", default=None)
@_common
def measure_doubling(input_, xi, radii, output, out_dir, workers):
    _dispatch("measure.doubling",
              {"input": input_, "xi": xi, "radii": radii, "output": output},
              out_dir=out_dir, workers=workers)


@measure.command("dimension")
@click.option("--input", "input_", required=True, type=click.Path())
@click.option("--xi", required=True)
@click.option("--radii", required=True)
@_common
def measure_dimension(input_, xi, radii, out_dir, workers):
    _dispatch("measure.dimension",
              {"input": input_, "xi": xi, "radii": radii},
              out_dir=out_dir, workers=workers)


# --- polymeasure ------------------------------------------------------------

@main.group()
def polymeasure():
    """Sampling of polynomial variety measures."""


@polymeasure.command("sample")
@click.option("--h", required=True, help="polynomial expression, e.g. 'xy'")
@click.option("--R", "radius", type=float, default=None)
@click.option("--eps", type=float, default=None, help="shell half-width")
@click.option("--grid", type=int, default=None)
@click.option("--a", default=None)
@click.option("--output", default=None)
@click.option("--plot", is_flag=True, default=False)
@_common
def polymeasure_sample(h, radius, eps, grid, a, output, plot, out_dir,
                       workers):
    _dispatch("polymeasure.sample",
              {"h": h, "R": radius, "eps": eps, "grid": grid, "a": a,
               "output": output}, out_dir=out_dir, workers=workers, plot=plot)


@polymeasure.command("weakpair")
@click.option("--h", required=True)
@click.option("--a", default=None)
@click.option("--center", default=None)
@click.option("--radius", type=float, default=None)
@click.option("--power", type=int, default=None)
@click.option("--q", default=None, help="modulating polynomial")
@click.option("--grid", type=int, default=None)
@_common
def polymeasure_weakpair(h, a, center, radius, power, q, grid, out_dir,
                         workers):
    _dispatch("polymeasure.weakpair",
              {"h": h, "a": a, "center": center, "radius": radius,
               "power": power, "q": q, "grid": grid},
              out_dir=out_dir, workers=workers)


@polymeasure.command("scaling")
@click.option("--h", required=True)
@click.option("--radii", required=True)
@click.option("--a", default=None)
@click.option("--grid", type=int, default=None)
@click.option("--output", default=None)
@click.option("--plot", is_flag=True, default=False)
@_common
def polymeasure_scaling(h, radii, a, grid, output, plot, out_dir, workers):
    _dispatch("polymeasure.scaling",
              {"h": h, "radii": radii, "a": a, "grid": grid,
               "output": output}, out_dir=out_dir, workers=workers, plot=plot)


# --- cone -------------------------------------------------------------------

@main.group()
def cone():
    """Distances to scaling-invariant cones of variety measures."""


@cone.command("distance")
@click.option("--input", "input_", required=True, type=click.Path())
@click.option("--cone", "cone_", required=True,
              help="F1/flat, F2, ... or homogeneous(k)/poly-up-to(k)")
@click.option("--r", type=float, default=None)
@click.option("--a", default=None)
@click.option("--restarts", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--output", default=None)
@_common
def cone_distance_cmd(input_, cone_, r, a, restarts, seed, output, out_dir,
                      workers):
    _dispatch("cone.distance",
              {"input": input_, "cone": cone_, "r": r, "a": a,
               "restarts": restarts, "seed": seed, "output": output},
              out_dir=out_dir, workers=workers)


@cone.command("scan")
@click.option("--input", "input_", required=True, type=click.Path())
@click.option("--xi", required=True)
@click.option("--cone", "cone_", required=True)
@click.option("--radii", required=True)
@click.option("--a", default=None)
@click.option("--restarts", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--output", default=None)
@click.option("--plot", is_flag=True, default=False)
@_common
def cone_scan_cmd(input_, xi, cone_, radii, a, restarts, seed, output, plot,
                  out_dir, workers):
    _dispatch("cone.scan",
              {"input": input_, "xi": xi, "cone": cone_, "radii": radii,
               "a": a, "restarts": restarts, "seed": seed, "output": output},
              out_dir=out_dir, workers=workers, plot=plot)


@cone.command("degree")
@click.option("--input", "input_", required=True, type=click.Path())
@click.option("--xi", required=True)
@click.option("--kmax", type=int, required=True)
@click.option("--radii", required=True)
@click.option("--a", default=None)
@click.option("--restarts", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--output", default=None)
@_common
def cone_degree_cmd(input_, xi, kmax, radii, a, restarts, seed, threshold,
                    output, out_dir, workers):
    _dispatch("cone.degree",
              {"input": input_, "xi": xi, "kmax": kmax, "radii": radii,
               "a": a, "restarts": restarts, "seed": seed,
               "threshold": threshold, "output": output},
              out_dir=out_dir, workers=workers)


@cone.command("theta")
@click.option("--input", "input_", required=True, type=click.Path())
@click.option("--x", required=True)
@click.option("--r", type=float, required=True)
@click.option("--candidates", required=True,
              help="semicolon-separated polynomial expressions")
@click.option("--resolution", type=int, default=None)
@_common
def cone_theta_cmd(input_, x, r, candidates, resolution, out_dir, workers):
    _dispatch("cone.theta",
              {"input": input_, "x": x, "r": r, "candidates": candidates,
               "resolution": resolution}, out_dir=out_dir, workers=workers)


# --- wos --------------------------------------------------------------------

@main.group()
def wos():
    """Walk-on-spheres harmonic-measure estimation."""


@wos.command("measure")
@click.option("--domain", required=True,
              help="inline JSON domain spec, or @file")
@click.option("--pole", required=True)
@click.option("--query", multiple=True, help="'label:cx,cy:radius'")
@click.option("--slit-sides", "slit_sides", is_flag=True, default=False)
@click.option("--walks", type=int, default=None)
@click.option("--eps-shell", "eps_shell", type=float, default=None)
@click.option("--max-steps", "max_steps", type=int, default=None)
@click.option("--seed", type=int, default=None, help="required")
@click.option("--output", default=None)
@click.option("--plot", is_flag=True, default=False)
@_common
def wos_measure_cmd(domain, pole, query, slit_sides, walks, eps_shell,
                    max_steps, seed, output, plot, out_dir, workers):
    params = {"domain": domain, "pole": pole, "walks": walks,
              "eps_shell": eps_shell, "max_steps": max_steps,
              "output": output}
    if query:
        params["query"] = list(query)
    if slit_sides:
        params["slit_sides"] = True
    _dispatch("wos.measure", params, seed=seed, out_dir=out_dir,
              workers=workers, plot=plot)


@wos.command("reduce")
@click.option("--a", required=True)
@click.option("--domain", required=True)
@click.option("--pole", required=True)
@click.option("--output", default=None)
@_common
def wos_reduce_cmd(a, domain, pole, output, out_dir, workers):
    _dispatch("wos.reduce",
              {"a": a, "domain": domain, "pole": pole, "output": output},
              out_dir=out_dir, workers=workers)


@wos.command("blowup")
@click.option("--domain-plus", "domain_plus", required=True)
@click.option("--domain-minus", "domain_minus", required=True)
@click.option("--pole-plus", "pole_plus", required=True)
@click.option("--pole-minus", "pole_minus", required=True)
@click.option("--xi", required=True)
@click.option("--radii", required=True)
@click.option("--cone", "cone_", default=None)
@click.option("--walks", type=int, default=None)
@click.option("--bins", type=int, default=None)
@click.option("--restarts", type=int, default=None)
@click.option("--seed", type=int, default=None, help="required")
@click.option("--output", default=None)
@click.option("--plot", is_flag=True, default=False)
@_common
def wos_blowup_cmd(domain_plus, domain_minus, pole_plus, pole_minus, xi,
                   radii, cone_, walks, bins, restarts, seed, output, plot,
                   out_dir, workers):
    _dispatch("wos.blowup",
              {"domain_plus": domain_plus, "domain_minus": domain_minus,
               "pole_plus": pole_plus, "pole_minus": pole_minus, "xi": xi,
               "radii": radii, "cone": cone_, "walks": walks, "bins": bins,
               "restarts": restarts, "output": output},
              seed=seed, out_dir=out_dir, workers=workers, plot=plot)


# --- weights ----------------------------------------------------------------

@main.group()
def weights():
    """Two-measure density panels: K, oscillation, moduli."""


def _weights_cmd(name):
    @click.option("--input", "input_", required=True, type=click.Path())
    @click.option("--ball", default=None, help="'cx,cy:radius'")
    @_common
    def cmd(input_, ball, out_dir, workers, **extra):
        params = {"input": input_, "ball": ball}
        params.update(extra)
        _dispatch(name, params, out_dir=out_dir, workers=workers)
    return cmd


weights.command("k")(_weights_cmd("weights.k"))
weights.command("bmo")(_weights_cmd("weights.bmo"))
weights.command("korey")(_weights_cmd("weights.korey"))
weights.command("hru")(
    click.option("--delta", type=float, required=True)(
        _weights_cmd("weights.hru")))


@weights.command("scan")
@click.option("--inputs", required=True, help="comma-separated panel CSVs")
@click.option("--radii", required=True)
@click.option("--output", default=None)
@click.option("--plot", is_flag=True, default=False)
@_common
def weights_scan_cmd(inputs, radii, output, plot, out_dir, workers):
    _dispatch("weights.scan",
              {"inputs": inputs, "radii": radii, "output": output},
              out_dir=out_dir, workers=workers, plot=plot)


# --- verify -----------------------------------------------------------------

@main.group()
def verify():
    """The acceptance suite: run everything, one check, or list."""


@verify.command("all")
@_common
def verify_all_cmd(out_dir, workers):
    """Run every check; exit 0 iff all pass."""
    _dispatch("verify.all", {}, out_dir=out_dir, workers=workers)


@verify.command("list")
def verify_list_cmd():
    """Print the suite manifest: anchors, tolerances, estimated runtimes."""
    rows = acceptance.manifest()
    width = max(len(r["check_id"]) for r in rows)
    total = 0.0
    for r in rows:
        total += r["est_runtime_s"]
        click.echo(f"{r['check_id']:<{width}}  ~{r['est_runtime_s']:>4.0f}s  "
                   f"{r['tolerance']}")
        click.echo(f"{'':<{width}}  anchor: {r['anchor']}")
    click.echo(f"total: {len(rows)} checks, ~{total / 60.0:.1f} min estimated")


@verify.command("check")
@click.argument("check_id")
@_common
def verify_check_cmd(check_id, out_dir, workers):
    """Run a single check by id; exit 0 iff it passes."""
    _dispatch("verify.one", {"check": check_id}, out_dir=out_dir,
              workers=workers)


if __name__ == "__main__":
    main()
