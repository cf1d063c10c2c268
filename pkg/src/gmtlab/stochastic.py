"""Walk-on-spheres estimation of harmonic measure and related experiments.

A walk starts at an interior pole and repeatedly jumps to a uniform point on
the sphere of radius dist_to_boundary(x); because the rotation-invariant
process exits each such sphere uniformly, the landing points reproduce the
Brownian exit distribution of the domain.  Once the walk comes within a thin
shell of the boundary it is terminated, projected to the nearest boundary
point, and attributed to the matching query patch.  Frequencies over many
independent walks estimate the harmonic measure of each patch with binomial
standard errors.

Elliptic measure for a constant coefficient matrix A reduces to the harmonic
case: mapping the domain through the inverse symmetric square root of the
symmetrized A turns L_A-solutions into solutions of a scalar multiple of the
Laplacian, so the walk runs on the transformed domain and the pushforward
carries the estimate back.

The blow-up experiment runs two domains sharing a boundary, histograms both
hit distributions near a common boundary point, and reports the scale
profile of cone distances, mass ratios, growth exponents, and the density
diagnostics of the weights module.

Distances to the boundary may be conservative (lower bounds): the walk stays
correct, only slower.  For a polynomial superlevel domain {h > 0} the bound
floors |h| against a monotone majorant of |grad h| on the surrounding ball;
for half-spaces, balls, and slit complements the exact distance is used.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._util import fmt_float, worker_count
from .measure import Ball, DiscreteMeasure, dimension_slope
from .polycore import ConstantEllipticMatrix, Polynomial, symmetrize_sqrt

BATCH_SIZE = 1 << 15
ESCAPE_FACTOR = 1e100
ABORT_WARN_FRACTION = 0.01
PROJECT_TOL = 1e-10


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImplicitDomain:
    """An open domain described by a distance oracle and a boundary projector.

    `dist` maps an (m, dim) array to conservative lower bounds on the
    distance to the boundary (exact for halfspace/ball/slit kinds);
    `project` maps near-boundary points to their nearest boundary points.
    `params` carries the constructor data for JSON round trips; the
    `generic` kind wraps user callables and is not serializable.
    """

    dim: int
    kind: str
    dist: Callable[[np.ndarray], np.ndarray]
    project: Callable[[np.ndarray], np.ndarray]
    scale: float
    params: dict = field(default_factory=dict)
    escape_radius: float | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("domain dimension must be at least 1")
        if self.scale <= 0:
            raise ValueError("domain scale must be positive")

    def dist_to_boundary(self, pts: np.ndarray) -> np.ndarray:
        return self.dist(np.atleast_2d(np.asarray(pts, dtype=float)))

    def boundary_project(self, pts: np.ndarray) -> np.ndarray:
        return self.project(np.atleast_2d(np.asarray(pts, dtype=float)))

    def to_json_dict(self) -> dict:
        if self.kind == "generic":
            raise ValueError("generic domains carry user callables; no JSON form")
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_json_dict(cls, d: dict) -> "ImplicitDomain":
        d = dict(d)
        kind = d.pop("kind")
        if kind == "halfspace":
            return halfspace_domain(np.array(d["normal"], dtype=float),
                                    float(d.get("offset", 0.0)))
        if kind == "ball":
            return ball_domain(np.array(d["center"], dtype=float),
                               float(d["radius"]))
        if kind == "polynomial-superlevel":
            return superlevel_domain(Polynomial.from_json_dict(d["h"]))
        if kind == "slit-complement":
            return slit_domain(np.array(d["p"], dtype=float),
                               np.array(d["q"], dtype=float))
        raise ValueError(f"unknown domain kind {kind!r}")


def halfspace_domain(normal, offset: float = 0.0) -> ImplicitDomain:
    """The open halfspace {x : normal . x > offset}; exact distance."""
    nu = np.asarray(normal, dtype=float)
    norm = float(np.linalg.norm(nu))
    if norm == 0:
        raise ValueError("halfspace normal must be nonzero")
    nu = nu / norm
    b = float(offset) / norm

    def dist(pts):
        return pts @ nu - b

    def project(pts):
        return pts - np.outer(pts @ nu - b, nu)

    return ImplicitDomain(len(nu), "halfspace", dist, project,
                          scale=max(1.0, abs(b)),
                          params={"normal": list(map(float, nu)), "offset": b})


def upper_halfplane() -> ImplicitDomain:
    return halfspace_domain([0.0, 1.0])


def lower_halfplane() -> ImplicitDomain:
    return halfspace_domain([0.0, -1.0])


def ball_domain(center, radius: float) -> ImplicitDomain:
    """The open ball; exact distance."""
    c = np.asarray(center, dtype=float)
    if radius <= 0:
        raise ValueError("ball radius must be positive")

    def dist(pts):
        return radius - np.linalg.norm(pts - c, axis=1)

    def project(pts):
        v = pts - c
        n = np.linalg.norm(v, axis=1)
        safe = np.where(n > 0, n, 1.0)
        out = c + v * (radius / safe)[:, None]
        # the center projects to an arbitrary but fixed boundary point
        deg = n == 0
        if np.any(deg):
            e = np.zeros(len(c))
            e[0] = radius
            out[deg] = c + e
        return out

    return ImplicitDomain(len(c), "ball", dist, project,
                          scale=float(radius),
                          params={"center": list(map(float, c)),
                                  "radius": float(radius)})


def _abs_poly(p: Polynomial) -> Polynomial:
    return Polynomial(p.dim, {a: abs(c) for a, c in p.terms.items()})


def superlevel_domain(h: Polynomial) -> ImplicitDomain:
    """The open set {h > 0} with a conservative distance lower bound.

    On the ball of radius rho around x, |grad h| is at most G(|x| + rho)
    where G sums the gradient's absolute coefficients, so no zero of h can
    lie within |h(x)| / G(|x| + rho_0) once rho_0 already bounds the step;
    one fixed-point refinement of that radius is both conservative and
    within a constant of the true distance away from critical points.
    """
    if h.degree() < 1:
        raise ValueError("superlevel polynomial must be nonconstant")
    grads = [h.partial(i) for i in range(h.dim)]
    abs_grads = [_abs_poly(g) for g in grads]
    coeff_scale = max(h.max_abs_coeff(), 1.0)

    def grad_majorant(pts_abs):
        return np.sqrt(sum(g(pts_abs) ** 2 for g in abs_grads))

    def dist(pts):
        hv = np.abs(h(pts))
        g0 = np.maximum(grad_majorant(np.abs(pts)), 1e-300)
        rho0 = hv / g0
        g1 = np.maximum(grad_majorant(np.abs(pts) + rho0[:, None]), 1e-300)
        return hv / g1

    def project(pts):
        x = np.array(pts, dtype=float)
        hv = h(x)
        tol = PROJECT_TOL * coeff_scale
        for _ in range(80):
            live = np.abs(hv) > tol
            if not np.any(live):
                break
            g = np.stack([gr(x[live]) for gr in grads], axis=1)
            gg = np.maximum(np.einsum("ij,ij->i", g, g), 1e-300)
            step = (hv[live] / gg)[:, None] * g
            trial = x[live] - step
            # damp steps that fail to shrink |h|
            for _ in range(5):
                worse = np.abs(h(trial)) > np.abs(hv[live])
                if not np.any(worse):
                    break
                step[worse] *= 0.5
                trial = x[live] - step
            x[live] = trial
            hv = h(x)
        return x

    # keep polynomial evaluations inside float64 range for wandering walkers
    escape = 10.0 ** (250.0 / max(h.degree(), 1))
    return ImplicitDomain(h.dim, "polynomial-superlevel", dist, project,
                          scale=1.0, params={"h": h.to_json_dict()},
                          escape_radius=escape)


def slit_domain(p=(-1.0, 0.0), q=(1.0, 0.0)) -> ImplicitDomain:
    """The plane minus a closed segment; exact distance to the segment."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != (2,) or q.shape != (2,):
        raise ValueError("slit endpoints must be planar points")
    seg = q - p
    L2 = float(seg @ seg)
    if L2 == 0:
        raise ValueError("slit endpoints must be distinct")

    def closest(pts):
        t = np.clip(((pts - p) @ seg) / L2, 0.0, 1.0)
        return p + t[:, None] * seg

    def dist(pts):
        return np.linalg.norm(pts - closest(pts), axis=1)

    return ImplicitDomain(2, "slit-complement", dist, closest,
                          scale=float(np.sqrt(L2)) / 2.0,
                          params={"p": list(map(float, p)),
                                  "q": list(map(float, q))})


def generic_domain(dim: int, dist: Callable, project: Callable,
                   scale: float = 1.0) -> ImplicitDomain:
    """Wrap user oracles; `dist` must be a conservative lower bound."""
    return ImplicitDomain(dim, "generic", dist, project, scale=scale)


def affine_image_domain(base: ImplicitDomain, m: np.ndarray) -> ImplicitDomain:
    """The preimage {y : M y in base} with a conservative distance bound.

    If y is within d of the boundary then M y is within ||M||_op d of the
    base boundary, so dist_base(M y) / ||M||_op is a valid lower bound.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (base.dim, base.dim):
        raise ValueError("matrix shape must match the base domain dimension")
    op_norm = float(np.linalg.norm(m, 2))
    if op_norm == 0:
        raise ValueError("affine map must be nonsingular")
    m_inv = np.linalg.inv(m)

    def dist(pts):
        return base.dist(pts @ m.T) / op_norm

    def project(pts):
        return base.project(pts @ m.T) @ m_inv.T

    inv_norm = float(np.linalg.norm(m_inv, 2))
    return ImplicitDomain(base.dim, f"affine-image({base.kind})", dist, project,
                          scale=base.scale * inv_norm)


# ---------------------------------------------------------------------------
# queries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryQuery:
    """A labeled boundary patch a terminated walk can be attributed to.

    kind "ball": hits whose projected boundary point lies in the closed ball.
    kind "slit-side": hits on a horizontal slit attributed by the sign of the
    walker's vertical coordinate at termination (side "top" or "bottom").
    """

    kind: str
    label: str
    center: np.ndarray | None = None
    radius: float = 0.0
    side: str = ""

    def __post_init__(self):
        if self.kind == "ball":
            if self.center is None or self.radius <= 0:
                raise ValueError("ball query needs a center and positive radius")
            object.__setattr__(
                self, "center", np.asarray(self.center, dtype=float))
        elif self.kind == "slit-side":
            if self.side not in ("top", "bottom"):
                raise ValueError("slit-side query needs side 'top' or 'bottom'")
        else:
            raise ValueError(f"unknown query kind {self.kind!r}")

    def matches(self, proj: np.ndarray, raw: np.ndarray) -> np.ndarray:
        if self.kind == "ball":
            return np.linalg.norm(proj - self.center, axis=1) <= self.radius
        vert = raw[:, -1]
        return vert > 0 if self.side == "top" else vert < 0

    def to_json_dict(self) -> dict:
        d = {"kind": self.kind, "label": self.label}
        if self.kind == "ball":
            d["center"] = list(map(float, self.center))
            d["radius"] = float(self.radius)
        else:
            d["side"] = self.side
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "BoundaryQuery":
        if d["kind"] == "ball":
            return cls("ball", d["label"], center=np.array(d["center"]),
                       radius=float(d["radius"]))
        return cls("slit-side", d["label"], side=d["side"])


def ball_query(label: str, center, radius: float) -> BoundaryQuery:
    return BoundaryQuery("ball", label, center=center, radius=radius)


def slit_side_query(side: str) -> BoundaryQuery:
    return BoundaryQuery("slit-side", side, side=side)


# ---------------------------------------------------------------------------
# configuration and walking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WalkConfig:
    """Walk counts, termination shell, step cap, and the RNG seed."""

    n_walks: int
    seed: int
    eps_shell: float | None = None
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.n_walks < 1:
            raise ValueError("n_walks must be at least 1")
        if self.eps_shell is not None and self.eps_shell <= 0:
            raise ValueError("eps_shell must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.seed is None:
            raise ValueError("stochastic runs need an explicit seed")

    def shell_for(self, domain: ImplicitDomain) -> float:
        return self.eps_shell if self.eps_shell is not None \
            else 1e-5 * domain.scale


def _unit_vectors(rng: np.random.Generator, m: int, dim: int) -> np.ndarray:
    if dim == 2:
        ang = rng.uniform(0.0, 2.0 * np.pi, size=m)
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    v = rng.standard_normal((m, dim))
    n = np.linalg.norm(v, axis=1, keepdims=True)
    return v / np.maximum(n, 1e-300)


def _walk_batch(domain: ImplicitDomain, pole: np.ndarray, m: int,
                eps: float, max_steps: int, stream_key: tuple,
                ) -> tuple[np.ndarray, np.ndarray, int]:
    """Run m walks on one deterministic RNG stream.

    Returns (projected hits, raw termination points, aborted count); the
    stream is keyed by (seed, side, batch) so batch results merge identically
    for any worker count.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=stream_key))
    escape = domain.escape_radius if domain.escape_radius is not None \
        else ESCAPE_FACTOR * max(1.0, domain.scale)
    x = np.tile(pole, (m, 1))
    proj_hits = np.empty_like(x)
    raw_hits = np.empty_like(x)
    done = np.zeros(m, dtype=bool)
    live_idx = np.arange(m)
    aborted = 0
    for _ in range(max_steps):
        if len(live_idx) == 0:
            break
        d = domain.dist(x)
        hit = d <= eps
        if np.any(hit):
            idx = live_idx[hit]
            raw_hits[idx] = x[hit]
            proj_hits[idx] = domain.project(x[hit])
            done[idx] = True
        run = ~hit
        x = x[run]
        live_idx = live_idx[run]
        d = d[run]
        far = np.linalg.norm(x, axis=1) > escape
        if np.any(far):
            aborted += int(far.sum())
            x = x[~far]
            live_idx = live_idx[~far]
            d = d[~far]
        if len(x) == 0:
            continue
        x = x + d[:, None] * _unit_vectors(rng, len(x), domain.dim)
    aborted += len(live_idx)
    keep = done
    return proj_hits[keep], raw_hits[keep], aborted


def wos_boundary_hits(domain: ImplicitDomain, pole, cfg: WalkConfig, *,
                      side_index: int = 0, workers: int | None = None,
                      ) -> tuple[np.ndarray, np.ndarray, int]:
    """All boundary hits of n_walks walk-on-spheres runs from the pole.

    Returns (projected hits, raw termination points, aborted count).
    Batches of 2^15 walks run on independent RNG streams keyed by
    (seed, side_index, batch), merged in batch order: results are identical
    for any worker count.
    """
    pole = np.asarray(pole, dtype=float)
    if pole.shape != (domain.dim,):
        raise ValueError("pole dimension does not match the domain")
    eps = cfg.shell_for(domain)
    d0 = float(domain.dist(pole[None, :])[0])
    if d0 <= eps:
        raise ValueError(
            f"pole must lie strictly inside the domain: dist {d0:.3g} <= "
            f"shell {eps:.3g}"
        )
    sizes = [BATCH_SIZE] * (cfg.n_walks // BATCH_SIZE)
    if cfg.n_walks % BATCH_SIZE:
        sizes.append(cfg.n_walks % BATCH_SIZE)

    def run(batch: int):
        return _walk_batch(domain, pole, sizes[batch], eps, cfg.max_steps,
                           (cfg.seed, side_index, batch))

    n_workers = worker_count(workers)
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(b) for b in range(len(sizes))]
    proj = np.concatenate([p for p, _, _ in parts], axis=0)
    raw = np.concatenate([r for _, r, _ in parts], axis=0)
    aborted = sum(a for _, _, a in parts)
    return proj, raw, aborted


@dataclass(frozen=True)
class HarmonicMeasureEstimate:
    """Per-query hit frequencies with binomial standard errors."""

    queries: tuple[BoundaryQuery, ...]
    probabilities: np.ndarray
    stderrs: np.ndarray
    hits: np.ndarray
    n_walks: int
    aborted_fraction: float
    unmatched_fraction: float
    warnings: tuple[str, ...]

    def __getitem__(self, label: str) -> tuple[float, float]:
        for q, p, s in zip(self.queries, self.probabilities, self.stderrs):
            if q.label == label:
                return float(p), float(s)
        raise KeyError(label)

    def to_json(self) -> str:
        return json.dumps({
            "n_walks": self.n_walks,
            "aborted_fraction": self.aborted_fraction,
            "unmatched_fraction": self.unmatched_fraction,
            "warnings": list(self.warnings),
            "queries": [
                {"label": q.label, "p": float(p), "stderr": float(s),
                 "hits": int(h)}
                for q, p, s, h in zip(self.queries, self.probabilities,
                                      self.stderrs, self.hits)
            ],
        })


def attribute_hits(queries, proj: np.ndarray, raw: np.ndarray) -> np.ndarray:
    """First-match attribution; returns per-query hit counts."""
    counts = np.zeros(len(queries), dtype=np.int64)
    unclaimed = np.ones(len(proj), dtype=bool)
    for j, q in enumerate(queries):
        m = q.matches(proj, raw) & unclaimed
        counts[j] = int(m.sum())
        unclaimed &= ~m
    return counts


def wos_harmonic_measure(domain: ImplicitDomain, pole, queries,
                         cfg: WalkConfig, *, workers: int | None = None,
                         ) -> HarmonicMeasureEstimate:
    """Estimate the harmonic measure of each boundary query from the pole."""
    queries = tuple(queries)
    if not queries:
        raise ValueError("need at least one boundary query")
    proj, raw, aborted = wos_boundary_hits(domain, pole, cfg, workers=workers)
    return estimate_from_hits(queries, proj, raw, aborted, cfg.n_walks)


def estimate_from_hits(queries, proj: np.ndarray, raw: np.ndarray,
                       aborted: int, n: int) -> HarmonicMeasureEstimate:
    """Assemble the per-query estimate from an existing hit ensemble."""
    queries = tuple(queries)
    counts = attribute_hits(queries, proj, raw)
    p = counts / n
    stderr = np.sqrt(p * (1.0 - p) / n)
    aborted_fraction = aborted / n
    unmatched = (n - aborted - int(counts.sum())) / n
    warnings = []
    if aborted_fraction > ABORT_WARN_FRACTION:
        warnings.append(
            f"aborted-walk fraction {aborted_fraction:.4f} exceeds "
            f"{ABORT_WARN_FRACTION:.0%}: estimates may be biased low"
        )
    return HarmonicMeasureEstimate(
        queries=queries,
        probabilities=p,
        stderrs=stderr,
        hits=counts,
        n_walks=n,
        aborted_fraction=float(aborted_fraction),
        unmatched_fraction=float(unmatched),
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# elliptic reduction
# ---------------------------------------------------------------------------

def elliptic_reduce(a: ConstantEllipticMatrix, domain: ImplicitDomain, pole,
                    ) -> tuple[ImplicitDomain, np.ndarray, np.ndarray]:
    """Reduce L_A-harmonic measure to harmonic measure on a mapped domain.

    Returns (domain', pole', S) with S the symmetric square root of the
    symmetrized A: the L_A measure of E from the pole equals the harmonic
    measure of S^{-1} E from pole' = S^{-1} pole on domain' = S^{-1} domain.
    A scalar matrix reduces to a pure rescaling, which leaves harmonic
    measures of corresponding sets unchanged.
    """
    if a.dim != domain.dim:
        raise ValueError("matrix and domain dimensions differ")
    dec = symmetrize_sqrt(a)
    s, s_inv = dec.s, dec.s_inv
    pole = np.asarray(pole, dtype=float)
    if pole.shape != (domain.dim,):
        raise ValueError("pole dimension does not match the domain")
    if np.allclose(s, np.eye(domain.dim)):
        return domain, pole, s
    if domain.kind == "halfspace":
        nu = np.array(domain.params["normal"], dtype=float)
        b = float(domain.params["offset"])
        reduced = halfspace_domain(s.T @ nu, b)
    else:
        reduced = affine_image_domain(domain, s)
    return reduced, pole @ s_inv.T, s


# ---------------------------------------------------------------------------
# blow-up experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlowupRow:
    """One radius of the two-sided blow-up profile."""

    r: float
    mass_plus: float
    mass_minus: float
    d1_plus: float | None
    d1_minus: float | None
    ratio: float | None
    k: float | None
    osc: float | None
    insufficient: bool


@dataclass(frozen=True)
class BlowupReport:
    """Scale profile of the two-sided boundary experiment."""

    rows: tuple[BlowupRow, ...]
    slope_plus: float | None
    slope_minus: float | None
    aborted_plus: float
    aborted_minus: float

    def to_csv(self) -> str:
        lines = ["r,mass_plus,mass_minus,d1_plus,d1_minus,ratio,K,osc,insufficient"]
        for row in self.rows:
            vals = [row.r, row.mass_plus, row.mass_minus, row.d1_plus,
                    row.d1_minus, row.ratio, row.k, row.osc]
            cells = ["" if v is None else fmt_float(v) for v in vals]
            cells.append("1" if row.insufficient else "0")
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def _empirical_blowup(hits: np.ndarray, xi: np.ndarray, r: float,
                      ) -> DiscreteMeasure | None:
    """Normalized empirical blow-up of a hit cloud around xi at scale r."""
    inside = hits[np.linalg.norm(hits - xi, axis=1) < r]
    if len(inside) == 0:
        return None
    pts = (inside - xi) / r
    w = np.full(len(inside), 1.0 / len(inside))
    return DiscreteMeasure(pts, w)


def _histogram_panel(hp: np.ndarray, hm: np.ndarray, xi: np.ndarray,
                     r: float, n_bins: int) -> "WeightPanel | None":
    """Bin both hit clouds over B(xi, r) by the first coordinate."""
    from .weights import WeightPanel

    sel_p = hp[np.linalg.norm(hp - xi, axis=1) < r][:, 0]
    sel_m = hm[np.linalg.norm(hm - xi, axis=1) < r][:, 0]
    if len(sel_p) == 0 or len(sel_m) == 0:
        return None
    edges = np.linspace(xi[0] - r, xi[0] + r, n_bins + 1)
    cp, _ = np.histogram(sel_p, bins=edges)
    cm, _ = np.histogram(sel_m, bins=edges)
    keep = (cp > 0) | (cm > 0)
    if not np.any(cp[keep] > 0):
        return None
    return WeightPanel(Ball(xi, r), cp[keep].astype(float),
                       cm[keep].astype(float))


def blowup_experiment(domains: tuple[ImplicitDomain, ImplicitDomain],
                      poles, xi, radii, cone, cfg: WalkConfig, *,
                      n_bins: int = 16, cone_restarts: int = 12,
                      workers: int | None = None) -> BlowupReport:
    """Two-sided boundary blow-up profile at a common boundary point.

    Walks both domains, then per radius reports the hit masses, the cone
    distance of each normalized empirical blow-up, the mass ratio, and the
    density diagnostics of the binned hit histograms.  Radii with no hits
    on either side are flagged insufficient and skipped.
    """
    from .cone import cone_distance
    from .weights import a_inf_quantity, bmo_oscillation

    radii = [float(r) for r in radii]
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    xi = np.asarray(xi, dtype=float)
    dom_p, dom_m = domains
    pole_p, pole_m = (np.asarray(p, dtype=float) for p in poles)

    hp, _, ab_p = wos_boundary_hits(dom_p, pole_p, cfg, side_index=0,
                                    workers=workers)
    hm, _, ab_m = wos_boundary_hits(dom_m, pole_m, cfg, side_index=1,
                                    workers=workers)

    rows = []
    masses_p, masses_m, used_radii = [], [], []
    for r in radii:
        in_p = int((np.linalg.norm(hp - xi, axis=1) < r).sum())
        in_m = int((np.linalg.norm(hm - xi, axis=1) < r).sum())
        mass_p, mass_m = in_p / cfg.n_walks, in_m / cfg.n_walks
        if in_p == 0 or in_m == 0:
            rows.append(BlowupRow(r, mass_p, mass_m, None, None, None, None,
                                  None, insufficient=True))
            continue
        masses_p.append(mass_p)
        masses_m.append(mass_m)
        used_radii.append(r)

        d1 = []
        for hits in (hp, hm):
            emp = _empirical_blowup(hits, xi, r)
            res = cone_distance(emp, cone, 1.0, restarts=cone_restarts,
                                workers=workers)
            d1.append(res.value)
        panel = _histogram_panel(hp, hm, xi, r, n_bins)
        k = osc = None
        if panel is not None and not panel.mutual_ac_violations():
            try:
                k = a_inf_quantity(panel)
                osc = bmo_oscillation(panel)
            except ValueError:
                k = osc = None
        rows.append(BlowupRow(r, mass_p, mass_m, d1[0], d1[1],
                              mass_m / mass_p, k, osc, insufficient=False))

    def slope(masses):
        if len(used_radii) < 2:
            return None
        logr = np.log(np.array(used_radii))
        logm = np.log(np.array(masses))
        return float(np.polyfit(logr, logm, 1)[0])

    return BlowupReport(tuple(rows), slope(masses_p), slope(masses_m),
                        ab_p / cfg.n_walks, ab_m / cfg.n_walks)


def hits_dimension_slope(hits: np.ndarray, xi, radii) -> float:
    """Growth exponent of the empirical hit measure around xi."""
    xi = np.asarray(xi, dtype=float)
    mu = DiscreteMeasure(hits, np.full(len(hits), 1.0 / len(hits)))
    return dimension_slope(mu, xi, radii)
