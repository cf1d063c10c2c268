"""Distances from a measure to cones of variety measures.

The distance being minimized is the normalized ball duality gap

    d_r(mu, M) = inf { F_{B(0,r)}(mu / F_r(mu), nu) : nu in M, F_r(nu) = 1 },

which is always at most 1 and is invariant under the blow-up rescaling
T_{0,r}: d_r(mu, M) = d_1(T_{0,r}[mu], M).  The implementation exploits the
invariance literally: every call blows the measure up to the unit ball and
optimizes there, so the scale identity holds by construction, and the
witness is converted back to the requested radius through the dilation law
F_r(omega_{h(x/r)}) = r^n F_1(omega_h).

Candidate measures omega_h are parametrized by coefficient vectors on the
unit sphere of the cone's polynomial basis (the normalization F_r = 1 is
then enforced exactly by rescaling sampled weights, using omega_{ch} =
c omega_h).  The objective is nonconvex, so the search is multi-start
Nelder-Mead; the reported value is an upper bound on the infimum.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import cKDTree

from ._util import worker_count
from .measure import (
    Ball,
    DiscreteMeasure,
    f_ball,
    f_r,
    hash_coarsen,
    translate_dilate,
)
from .polycore import (
    ConstantEllipticMatrix,
    Polynomial,
    apply_operator,
    harmonic_basis,
)
from .polymeasure import PolyMeasureSpec, sample_polymeasure

COARSE_GRID_N = 200
COARSE_SPACING = 0.08
FINE_SIDE_LIMIT = 600
DEFAULT_RESTARTS = 32
PENALTY = 2.0


@dataclass(frozen=True)
class ConeSpec:
    """A family of variety measures closed under scaling and dilation."""

    dim: int
    kind: str
    a: ConstantEllipticMatrix
    basis: tuple[Polynomial, ...]

    def __post_init__(self):
        if not self.basis:
            raise ValueError("cone basis must be nonempty")
        object.__setattr__(self, "basis", tuple(self.basis))
        for p in self.basis:
            if p.dim != self.dim or self.a.dim != self.dim:
                raise ValueError("basis/matrix dimension mismatch")
            residual = apply_operator(self.a, p)
            if residual.max_abs_coeff() > 1e-10 * max(p.max_abs_coeff(), 1.0):
                raise ValueError(
                    "basis element is not annihilated by the operator of A"
                )
        if self.kind.startswith("homogeneous"):
            k = self.degree
            for p in self.basis:
                if not p.is_homogeneous() or p.degree() != k:
                    raise ValueError(
                        f"homogeneous({k}) basis must be homogeneous of degree {k}"
                    )

    @property
    def degree(self) -> int:
        return max(p.degree() for p in self.basis)


def make_cone(dim: int, kind: str, a: ConstantEllipticMatrix,
              k: int | None = None) -> ConeSpec:
    """Build the named cone: 'flat-planes', 'homogeneous(k)', 'poly-up-to(k)'.

    kind may carry the degree inline ("homogeneous(2)") or via `k`.
    """
    name = kind.strip()
    if "(" in name:
        base, _, rest = name.partition("(")
        k = int(rest.rstrip(")"))
        name = base
    if name == "flat-planes":
        basis = harmonic_basis(dim, 1, a)
        return ConeSpec(dim, "flat-planes", a, tuple(basis))
    if k is None or k < 1:
        raise ValueError(f"cone kind {kind!r} needs a positive degree")
    if name == "homogeneous":
        basis = harmonic_basis(dim, k, a)
        return ConeSpec(dim, f"homogeneous({k})", a, tuple(basis))
    if name == "poly-up-to":
        basis = [p for j in range(1, k + 1) for p in harmonic_basis(dim, j, a)]
        return ConeSpec(dim, f"poly-up-to({k})", a, tuple(basis))
    raise ValueError(f"unknown cone kind {kind!r}")


@dataclass(frozen=True)
class ConeDistanceResult:
    """Best upper bound found for d_r(mu, cone), with its witness."""

    value: float
    witness: Polynomial
    restarts: int
    trace: tuple[float, ...]
    coarsening_error: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "value": self.value,
                "witness_poly": json.loads(self.witness.to_json()),
                "restarts": self.restarts,
                "trace": list(self.trace),
                "upper_bound": True,
            }
        )


class ScanRow(NamedTuple):
    r: float
    d1: float
    witness_degree: int


def _combine(basis, coeffs) -> Polynomial:
    h = None
    for c, p in zip(coeffs, basis):
        term = p * float(c)
        h = term if h is None else h + term
    return h.prune()


def _normalized_sample(h: Polynomial, a: ConstantEllipticMatrix,
                       grid_n: int | None, spacing: float | None,
                       ) -> tuple[DiscreteMeasure, float] | None:
    """Sample omega_h on the unit ball, rescaled so F_1 = 1 exactly.

    Returns (normalized measure, raw F_1 of the sample) or None when the
    candidate degenerates.
    """
    try:
        mu = sample_polymeasure(PolyMeasureSpec(h, a, radius=1.0, grid_n=grid_n))
    except ValueError:
        return None
    if spacing is not None:
        mu, _ = hash_coarsen(mu, spacing)
    f1 = f_r(mu, 1.0)
    if f1 <= 0:
        return None
    return mu.scaled(1.0 / f1), f1


def _coarsen_side(mu: DiscreteMeasure, limit: int) -> tuple[DiscreteMeasure, float]:
    """Hash-coarsen into at most `limit` atoms; renormalize F_1 to 1 exactly."""
    spacing = 0.004
    out, moved = mu, 0.0
    while len(out) > limit:
        out, moved = hash_coarsen(mu, spacing)
        spacing *= 1.4
    f1 = f_r(out, 1.0)
    if f1 > 0:
        out = out.scaled(1.0 / f1)
    return out, moved


def cone_distance(mu: DiscreteMeasure, cone: ConeSpec, r: float = 1.0, *,
                  restarts: int = DEFAULT_RESTARTS, seed: int = 0,
                  nm_maxfev: int = 80, workers: int | None = None,
                  ) -> ConeDistanceResult:
    """Upper bound on d_r(mu, cone) by multi-start search over the basis sphere.

    The returned value is the exact ball LP evaluated between the exactly
    renormalized coarsened measure and the fine resample of the best witness;
    it is an upper bound on the true infimum.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    blow = translate_dilate(mu, np.zeros(mu.dim), r) if r != 1.0 else mu
    f1 = f_r(blow, 1.0)
    if f1 <= 0:
        raise ValueError("F_r(mu) = 0: no mass in the ball")
    hat = blow.scaled(1.0 / f1)

    ball = Ball(np.zeros(mu.dim), 1.0)
    coarse_hat, _ = hash_coarsen(hat, COARSE_SPACING)
    c_f1 = f_r(coarse_hat, 1.0)
    coarse_hat = coarse_hat.scaled(1.0 / c_f1)

    m = len(cone.basis)
    cache: dict[tuple, float] = {}

    def objective(c: np.ndarray) -> float:
        norm = np.linalg.norm(c)
        if not np.isfinite(norm) or norm < 1e-12:
            return PENALTY
        unit = c / norm
        # quantized cache: coefficient resolution 1e-3 costs ~1e-6 in value
        # near a quadratic minimum but makes revisited basins free
        key = tuple(np.round(unit, 3))
        if key in cache:
            return cache[key]
        h = _combine(cone.basis, unit)
        got = _normalized_sample(h, cone.a, COARSE_GRID_N, COARSE_SPACING)
        val = PENALTY if got is None else f_ball(coarse_hat, got[0], ball)
        cache[key] = val
        return val

    rng = np.random.default_rng(seed)
    starts = []
    for i in range(m):
        e = np.zeros(m)
        e[i] = 1.0
        starts.append(e)
        starts.append(-e)
    while len(starts) < restarts:
        v = rng.standard_normal(m)
        v /= max(np.linalg.norm(v), 1e-12)
        starts.append(v)
        if len(starts) < restarts:
            starts.append(-v)
    starts = starts[:restarts]

    def run_start(c0):
        res = minimize(objective, c0, method="Nelder-Mead",
                       options={"maxfev": nm_maxfev, "xatol": 1e-4,
                                "fatol": 1e-5})
        c = res.x / max(np.linalg.norm(res.x), 1e-12)
        return float(res.fun), tuple(np.round(c, 12))

    n_workers = worker_count(workers)
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            outcomes = list(pool.map(run_start, starts))
    else:
        outcomes = [run_start(c0) for c0 in starts]

    trace = tuple(v for v, _ in outcomes)
    feasible = sorted([(v, c) for v, c in outcomes if v < PENALTY],
                      key=lambda t: (t[0], t[1]))
    if not feasible:
        raise ValueError(
            "optimizer exhausted restarts without a feasible normalized witness"
        )
    # fine re-evaluation; deterministic reduction picked min value with ties
    # broken by coefficient order, falling back if a winner degenerates on
    # the fine grid
    h_best, fine, fine_f1 = None, None, None
    for _, c in feasible:
        h_try = _combine(cone.basis, np.array(c))
        got = _normalized_sample(h_try, cone.a, None, None)
        if got is not None:
            h_best, (fine, fine_f1) = h_try, got
            break
    if h_best is None:
        raise ValueError(
            "optimizer exhausted restarts without a feasible normalized witness"
        )
    side_a, moved_a = _coarsen_side(hat, FINE_SIDE_LIMIT)
    side_b, moved_b = _coarsen_side(fine, FINE_SIDE_LIMIT)
    value = f_ball(side_a, side_b, ball)

    # witness scaled so its sampled measure has F_1 = 1, then carried back
    # to radius r through the dilation law (F_r of h(x/r)/r^n is 1)
    witness = h_best * (1.0 / fine_f1)
    if r != 1.0:
        n = mu.dim - 1
        witness = witness.dilate(1.0 / r) * (r ** -n)
    return ConeDistanceResult(
        value=float(value),
        witness=witness,
        restarts=restarts,
        trace=trace,
        coarsening_error=float(moved_a + moved_b),
    )


def scale_scan(mu: DiscreteMeasure, xi, cone: ConeSpec, radii, *,
               restarts: int = DEFAULT_RESTARTS, seed: int = 0,
               workers: int | None = None) -> list[ScanRow]:
    """d_1(T_{xi,r}[mu], cone) for each radius in a decreasing list."""
    radii = [float(r) for r in radii]
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    xi = np.asarray(xi, dtype=float)
    rows = []
    for r in radii:
        blow = translate_dilate(mu, xi, r)
        res = cone_distance(blow, cone, 1.0, restarts=restarts, seed=seed,
                            workers=workers)
        rows.append(ScanRow(r, res.value, res.witness.degree()))
    return rows


def detect_degree(mu: DiscreteMeasure, xi, kmax: int, radii, *,
                  a: ConstantEllipticMatrix | None = None,
                  threshold: float = 0.05, tail: int = 2,
                  restarts: int = DEFAULT_RESTARTS, seed: int = 0,
                  workers: int | None = None,
                  ) -> tuple[int | None, dict[int, list[ScanRow]]]:
    """Smallest k whose homogeneous(k) scan tail falls below the threshold.

    Returns (k, table) with the full per-degree profile table; k is None if
    no degree up to kmax qualifies.
    """
    if kmax > 8:
        raise ValueError("kmax must be at most 8")
    if a is None:
        from .polycore import identity_matrix

        a = identity_matrix(mu.dim)
    table: dict[int, list[ScanRow]] = {}
    found = None
    for k in range(1, kmax + 1):
        cone = make_cone(mu.dim, f"homogeneous({k})", a)
        rows = scale_scan(mu, xi, cone, radii, restarts=restarts, seed=seed,
                          workers=workers)
        table[k] = rows
        if found is None and all(row.d1 < threshold for row in rows[-tail:]):
            found = k
    return found, table


def growth_exponent(mu: DiscreteMeasure, xi, radii) -> float:
    """Least-squares exponent of the mass profile r -> mu(B(xi, r))."""
    from .measure import dimension_slope

    return dimension_slope(mu, np.asarray(xi, dtype=float), radii)


def flatness_theta(sample_a: np.ndarray, x, r: float,
                   candidates: list[Polynomial], *,
                   resolution_grid_n: int = 256) -> float:
    """Bilateral approximation number of a point sample by candidate varieties.

    For each candidate h, the zero set x + {h = 0} is itself point-sampled
    (at resolution <= r/100) and the two normalized one-sided Hausdorff
    gaps inside B(x, r) are combined by max; the result is the inf over
    candidates.  Candidates whose zero set misses the ball are skipped.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    if resolution_grid_n < 200:
        raise ValueError("resolution too coarse: zero sets must be sampled at <= r/100")
    pts = np.atleast_2d(np.asarray(sample_a, dtype=float))
    x = np.asarray(x, dtype=float)
    inside = pts[np.linalg.norm(pts - x, axis=1) <= r]
    if len(inside) == 0:
        raise ValueError("no sample points of A inside the ball")
    if not candidates:
        raise ValueError("candidate list is empty")
    from .polycore import identity_matrix

    best = np.inf
    any_candidate = False
    for h in candidates:
        a = identity_matrix(h.dim)
        try:
            var = sample_polymeasure(
                PolyMeasureSpec(h, a, radius=r, grid_n=resolution_grid_n)
            )
        except ValueError:
            continue
        zpts = var.points + x
        zin = zpts[np.linalg.norm(zpts - x, axis=1) <= r]
        if len(zin) == 0:
            continue
        any_candidate = True
        gap_a = cKDTree(zin).query(inside)[0].max() / r
        gap_z = cKDTree(inside).query(zin)[0].max() / r
        best = min(best, max(gap_a, gap_z))
    if not any_candidate:
        raise ValueError("every candidate zero set misses the ball")
    return float(best)


def _diameter_measure(n: int, angle: float) -> DiscreteMeasure:
    """Arclength measure on the diameter at the given angle, F_1 = 1 exactly."""
    t = (np.arange(n) + 0.5) * (2.0 / n) - 1.0
    base = np.stack([t, np.zeros(n)], axis=1)
    w = np.full(n, 2.0 / n)
    w = w / np.sum(w * np.maximum(1.0 - np.abs(t), 0.0))
    rot = np.array([[np.cos(angle), -np.sin(angle)],
                    [np.sin(angle), np.cos(angle)]])
    return DiscreteMeasure(base @ rot.T, w)


def brute_force_flat_distance(mu: DiscreteMeasure, *, angles: int = 3600,
                              ) -> tuple[float, float]:
    """1-parameter exhaustive minimum of d_1(mu, flat lines) in the plane.

    Sweeps line angles in [0, pi); each candidate is the arclength measure
    on a diameter, exactly normalized to F_1 = 1 (scale freedom is removed
    by the normalization).  The sweep ranks angles with reduced-size exact
    LPs, then the leaders are re-evaluated at fine resolution.  Returns
    (min distance, argmin angle); the independent check of the optimizer
    on the flat-planes cone.
    """
    if mu.dim != 2:
        raise ValueError("brute force flat sweep is planar only")
    f1 = f_r(mu, 1.0)
    if f1 <= 0:
        raise ValueError("no mass in the unit ball")
    hat = mu.scaled(1.0 / f1)
    ball = Ball(np.zeros(2), 1.0)
    side_coarse, _ = _coarsen_side(hat, 80)
    sweep = []
    for i in range(angles):
        ang = np.pi * i / angles
        val = f_ball(side_coarse, _diameter_measure(60, ang), ball)
        sweep.append((val, ang))
    sweep.sort(key=lambda t: (t[0], t[1]))
    side_fine, _ = _coarsen_side(hat, FINE_SIDE_LIMIT)
    best_val, best_ang = np.inf, 0.0
    for _, ang in sweep[:8]:
        val = f_ball(side_fine, _diameter_measure(500, ang), ball)
        if val < best_val:
            best_val, best_ang = val, ang
    return float(best_val), float(best_ang)
