"""Discrete Radon measures, blow-ups, and bounded-Lipschitz ball functionals.

A measure is a finite weighted point cloud.  The two workhorse functionals:

* ``f_r(mu, r)``: the exact tent-function mass  sum_i w_i (r - |x_i|)_+ ,
  which equals the pairing of mu against the optimal 1-Lipschitz function
  supported on the closed ball of radius r when the second measure is zero.
* ``f_ball(mu, sigma, ball)``: the bounded-Lipschitz pairing
  sup { integral f d(mu - sigma) : f 1-Lipschitz, supported on the ball },
  computed as a linear program over function values at the atom locations
  with pairwise Lipschitz constraints and the boundary-distance cap.

Blow-ups are the affine rescalings x -> (x - a)/r applied atomwise.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.spatial import cKDTree

from ._util import FLOAT_FMT, fmt_float

MERGE_TOL = 1e-12
COARSEN_ABOVE = 700
COARSEN_TARGET = 600


class SolverError(RuntimeError):
    """Raised when the LP backend fails; carries residual diagnostics."""


@dataclass(frozen=True)
class Ball:
    """Euclidean ball with strictly positive radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        object.__setattr__(self, "center", c)
        c.setflags(write=False)
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return self.center.shape[0]


class DiscreteMeasure:
    """Immutable finite weighted point cloud in R^dim (weights >= 0)."""

    __slots__ = ("dim", "points", "weights")

    def __init__(self, points, weights):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        if pts.shape[0] == 0:
            pts = pts.reshape(0, max(pts.shape[1] if pts.ndim == 2 else 1, 1))
        if pts.shape[0] != w.shape[0]:
            raise ValueError(
                f"{pts.shape[0]} points but {w.shape[0]} weights"
            )
        if w.size and np.min(w) < 0:
            raise ValueError("weights must be nonnegative")
        if w.size and not np.all(np.isfinite(w)) or not np.all(np.isfinite(pts)):
            raise ValueError("points and weights must be finite")
        self.points = pts
        self.weights = w
        self.dim = pts.shape[1]
        pts.setflags(write=False)
        w.setflags(write=False)

    @classmethod
    def empty(cls, dim: int) -> "DiscreteMeasure":
        return cls(np.zeros((0, dim)), np.zeros(0))

    @classmethod
    def dirac(cls, point, weight: float = 1.0) -> "DiscreteMeasure":
        return cls(np.atleast_2d(np.asarray(point, dtype=float)), [weight])

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def scaled(self, c: float) -> "DiscreteMeasure":
        if c < 0:
            raise ValueError("scale must be nonnegative")
        return DiscreteMeasure(self.points, self.weights * c)

    def restricted(self, ball: Ball) -> "DiscreteMeasure":
        """Atoms strictly inside the ball."""
        mask = np.linalg.norm(self.points - ball.center, axis=1) < ball.radius
        return DiscreteMeasure(self.points[mask], self.weights[mask])

    def drop_tiny(self, rel: float = 0.0) -> "DiscreteMeasure":
        """Drop zero-weight atoms (and optionally tiny relative weights)."""
        thr = rel * (self.weights.max() if len(self) else 0.0)
        mask = self.weights > thr
        return DiscreteMeasure(self.points[mask], self.weights[mask])

    def merged(self, tol: float = MERGE_TOL) -> "DiscreteMeasure":
        """Merge clusters of atoms within `tol`, summing weights.

        Positions of merged atoms are weight-averaged (zero-weight clusters
        take plain averages), keeping the result deterministic.
        """
        n = len(self)
        if n <= 1:
            return self
        pairs = cKDTree(self.points).query_pairs(r=tol, output_type="ndarray")
        if pairs.size == 0:
            return self
        parent = np.arange(n)

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i, j in pairs:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
        roots = np.array([find(i) for i in range(n)])
        order = np.argsort(roots, kind="stable")
        roots_sorted = roots[order]
        starts = np.flatnonzero(np.r_[True, roots_sorted[1:] != roots_sorted[:-1]])
        pts_out, w_out = [], []
        for s, e in zip(starts, np.r_[starts[1:], n]):
            idx = order[s:e]
            w = self.weights[idx]
            tw = w.sum()
            if tw > 0:
                pts_out.append((self.points[idx] * w[:, None]).sum(0) / tw)
            else:
                pts_out.append(self.points[idx].mean(0))
            w_out.append(tw)
        return DiscreteMeasure(np.array(pts_out), np.array(w_out))

    def __repr__(self) -> str:
        return (
            f"DiscreteMeasure(dim={self.dim}, atoms={len(self)}, "
            f"mass={self.total_mass:.6g})"
        )


# ---------------------------------------------------------------------------
# blow-ups and the tent functional
# ---------------------------------------------------------------------------

def translate_dilate(mu: DiscreteMeasure, a, r: float) -> DiscreteMeasure:
    """Image measure under x -> (x - a)/r; mass is preserved."""
    if not r > 0:
        raise ValueError(f"dilation scale must be positive, got {r}")
    a = np.asarray(a, dtype=float)
    return DiscreteMeasure((mu.points - a) / r, mu.weights)


def f_r(mu: DiscreteMeasure, r: float) -> float:
    """Exact tent-function mass sum_i w_i (r - |x_i|)_+ ."""
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    if len(mu) == 0:
        return 0.0
    d = np.linalg.norm(mu.points, axis=1)
    return float(np.sum(mu.weights * np.maximum(r - d, 0.0)))


def ball_mass(mu: DiscreteMeasure, b: Ball) -> float:
    """Mass of the open ball (strict inequality at the sphere)."""
    if len(mu) == 0:
        return 0.0
    d = np.linalg.norm(mu.points - b.center, axis=1)
    return float(mu.weights[d < b.radius].sum())


def doubling_profile(mu: DiscreteMeasure, xi, radii) -> list[float | None]:
    """mu(B(xi,2r))/mu(B(xi,r)) per radius; None when the denominator is 0."""
    xi = np.asarray(xi, dtype=float)
    out = []
    for r in radii:
        denom = ball_mass(mu, Ball(xi, r))
        if denom == 0.0:
            out.append(None)
        else:
            out.append(ball_mass(mu, Ball(xi, 2 * r)) / denom)
    return out


def dimension_slope(mu: DiscreteMeasure, xi, radii) -> float:
    """Least-squares slope of log mu(B(xi,r)) against log r."""
    radii = list(radii)
    if len(radii) < 3:
        raise ValueError("need at least 3 radii for a slope")
    xi = np.asarray(xi, dtype=float)
    masses = []
    for r in radii:
        m = ball_mass(mu, Ball(xi, r))
        if m <= 0.0:
            raise ValueError(f"zero mass in ball of radius {r}; cannot take log")
        masses.append(m)
    lr = np.log(np.asarray(radii, dtype=float))
    lm = np.log(np.asarray(masses))
    a = np.vstack([lr, np.ones_like(lr)]).T
    slope, _ = np.linalg.lstsq(a, lm, rcond=None)[0]
    return float(slope)


# ---------------------------------------------------------------------------
# the bounded-Lipschitz ball LP
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FBallDetail:
    """LP value plus diagnostics: duality gap, size, coarsening error bound."""

    value: float
    duality_gap: float
    n_points: int
    n_constraints: int
    coarsening_error: float = 0.0


def _union_signed(mu: DiscreteMeasure, sigma: DiscreteMeasure, tol=MERGE_TOL):
    """Merge atom sets of mu and sigma into one cloud with signed weights."""
    pts = np.vstack([mu.points, sigma.points])
    g = np.concatenate([mu.weights, -sigma.weights])
    if pts.shape[0] <= 1:
        return pts, g
    pairs = cKDTree(pts).query_pairs(r=tol, output_type="ndarray")
    if pairs.size == 0:
        return pts, g
    n = pts.shape[0]
    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(i) for i in range(n)])
    uniq = np.unique(roots)
    pts_out = np.array([pts[roots == r0].mean(0) for r0 in uniq])
    g_out = np.array([g[roots == r0].sum() for r0 in uniq])
    return pts_out, g_out


def coarsen(mu: DiscreteMeasure, target: int, seed: int = 0,
            iters: int = 25) -> tuple[DiscreteMeasure, float]:
    """Weighted k-means coarsening to <= target atoms.

    Returns (coarse measure, error bound) where the bound is the transport
    cost of moving every atom to its cluster center: sum_i w_i |x_i - c_i|.
    """
    if len(mu) <= target:
        return mu, 0.0
    rng = np.random.default_rng(seed)
    # k-means++ style seeding on weights, deterministic given the seed
    probs = mu.weights / mu.weights.sum()
    first = int(np.argmax(probs))
    centers = [mu.points[first]]
    d2 = np.sum((mu.points - centers[0]) ** 2, axis=1)
    for _ in range(target - 1):
        p = probs * d2
        s = p.sum()
        if s <= 0:
            idx = int(rng.integers(len(mu)))
        else:
            idx = int(rng.choice(len(mu), p=p / s))
        centers.append(mu.points[idx])
        d2 = np.minimum(d2, np.sum((mu.points - centers[-1]) ** 2, axis=1))
    centers = np.array(centers)
    for _ in range(iters):
        assign = cKDTree(centers).query(mu.points)[1]
        new_centers = centers.copy()
        for k in range(centers.shape[0]):
            m = assign == k
            wk = mu.weights[m]
            if wk.sum() > 0:
                new_centers[k] = (mu.points[m] * wk[:, None]).sum(0) / wk.sum()
        if np.allclose(new_centers, centers, atol=1e-14):
            centers = new_centers
            break
        centers = new_centers
    assign = cKDTree(centers).query(mu.points)[1]
    moved = float(np.sum(mu.weights * np.linalg.norm(mu.points - centers[assign], axis=1)))
    w_out = np.zeros(centers.shape[0])
    np.add.at(w_out, assign, mu.weights)
    keep = w_out > 0
    return DiscreteMeasure(centers[keep], w_out[keep]), moved


def hash_coarsen(mu: DiscreteMeasure, spacing: float) -> tuple[DiscreteMeasure, float]:
    """Deterministic grid-bin coarsening: atoms in one bin merge to their
    weighted centroid.  Returns (coarse measure, transport error bound)."""
    if len(mu) == 0 or spacing <= 0:
        return mu, 0.0
    keys = np.floor(mu.points / spacing).astype(np.int64)
    order = np.lexsort(keys.T[::-1])
    ks = keys[order]
    starts = np.flatnonzero(np.r_[True, np.any(ks[1:] != ks[:-1], axis=1)])
    pts_out, w_out = [], []
    moved = 0.0
    for s, e in zip(starts, np.r_[starts[1:], len(mu)]):
        idx = order[s:e]
        w = mu.weights[idx]
        tw = w.sum()
        if tw <= 0:
            continue
        c = (mu.points[idx] * w[:, None]).sum(0) / tw
        moved += float(np.sum(w * np.linalg.norm(mu.points[idx] - c, axis=1)))
        pts_out.append(c)
        w_out.append(tw)
    if not pts_out:
        return DiscreteMeasure.empty(mu.dim), 0.0
    return DiscreteMeasure(np.array(pts_out), np.array(w_out)), moved


def f_ball_detailed(mu: DiscreteMeasure, sigma: DiscreteMeasure | None,
                    b: Ball) -> FBallDetail:
    """Solve the bounded-Lipschitz pairing LP; see :func:`f_ball`.

    Variables are function values at the union of atom locations; the
    objective is sum_i f_i (mu_i - sigma_i) under |f_i - f_j| <= |x_i - x_j|
    and |f_i| <= (r - |x_i - c|)_+.  Pairs whose distance exceeds the sum of
    caps are dropped (those constraints are implied by the caps), and atoms
    with zero cap are dropped (f is pinned to 0 there).
    """
    if sigma is None:
        sigma = DiscreteMeasure.empty(mu.dim)
    if mu.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {sigma.dim}")
    coarsen_err = 0.0
    if len(mu) > COARSEN_ABOVE:
        mu, e = coarsen(mu, COARSEN_TARGET)
        coarsen_err += e
    if len(sigma) > COARSEN_ABOVE:
        sigma, e = coarsen(sigma, COARSEN_TARGET)
        coarsen_err += e
    pts, g = _union_signed(mu, sigma)
    if pts.shape[0] == 0:
        return FBallDetail(0.0, 0.0, 0, 0, coarsen_err)
    cap = np.maximum(b.radius - np.linalg.norm(pts - b.center, axis=1), 0.0)
    live = cap > 0
    pts, g, cap = pts[live], g[live], cap[live]
    n = pts.shape[0]
    if n == 0:
        return FBallDetail(0.0, 0.0, 0, 0, coarsen_err)
    if n == 1:
        return FBallDetail(float(abs(g[0]) * cap[0]), 0.0, 1, 0, coarsen_err)
    iu, ju = np.triu_indices(n, 1)
    d = np.linalg.norm(pts[iu] - pts[ju], axis=1)
    act = d < cap[iu] + cap[ju]  # only pairs the caps do not already imply
    iu, ju, d = iu[act], ju[act], d[act]
    m = iu.shape[0]
    if m:
        rows = np.repeat(np.arange(2 * m), 2)
        cols = np.empty(4 * m, dtype=np.int64)
        vals = np.empty(4 * m)
        cols[0::4], cols[1::4], vals[0::4], vals[1::4] = iu, ju, 1.0, -1.0
        cols[2::4], cols[3::4], vals[2::4], vals[3::4] = iu, ju, -1.0, 1.0
        a_ub = sparse.csr_matrix((vals, (rows, cols)), shape=(2 * m, n))
        b_ub = np.repeat(d, 2)  # rows interleave the +/- directions per pair
    else:
        a_ub, b_ub = None, None
    res = linprog(-g, A_ub=a_ub, b_ub=b_ub,
                  bounds=np.column_stack([-cap, cap]), method="highs")
    if res.status != 0:
        raise SolverError(
            f"bounded-Lipschitz LP failed (status {res.status}): {res.message}"
        )
    value = -float(res.fun)
    # duality gap from the returned marginals: for min c.x with A x <= b and
    # box bounds, the dual objective is b.y + l.lam_l + u.lam_u
    gap = 0.0
    try:
        dual = 0.0
        if m:
            dual += float(b_ub @ res.ineqlin.marginals)
        dual += float((-cap) @ res.lower.marginals + cap @ res.upper.marginals)
        gap = abs(dual - float(res.fun))
    except (AttributeError, TypeError):
        gap = float("nan")
    return FBallDetail(value, gap, n, 2 * m, coarsen_err)


def f_ball(mu: DiscreteMeasure, sigma: DiscreteMeasure | None, b: Ball) -> float:
    """Bounded-Lipschitz pairing of (mu - sigma) on a ball (LP optimum)."""
    return f_ball_detailed(mu, sigma, b).value


def bl_bruteforce(mu: DiscreteMeasure, sigma: DiscreteMeasure, b: Ball,
                  grid: int = 13, refine_rounds: int = 60, top: int = 24) -> float:
    """Independent brute-force oracle for f_ball on tiny instances.

    Enumerates function values on a per-atom grid spanning [-cap, cap],
    keeps feasible candidates, then runs exact coordinate-wise maximization
    (each coordinate in turn is pushed to the end of its feasible interval
    favored by the objective) from the best grid points.  Intended for
    unions of <= 5 atoms.
    """
    pts, g = _union_signed(mu, sigma)
    cap = np.maximum(b.radius - np.linalg.norm(pts - b.center, axis=1), 0.0)
    live = cap > 0
    pts, g, cap = pts[live], g[live], cap[live]
    n = pts.shape[0]
    if n == 0:
        return 0.0
    if n > 6:
        raise ValueError("brute force is for unions of at most 6 atoms")
    dmat = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)

    axes = [np.linspace(-c, c, grid) for c in cap]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    feas = np.ones(mesh.shape[0], dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            feas &= np.abs(mesh[:, i] - mesh[:, j]) <= dmat[i, j] + 1e-12
    cand = mesh[feas]
    if cand.shape[0] == 0:
        cand = np.zeros((1, n))
    obj = cand @ g
    best_idx = np.argsort(obj)[-top:]
    best_val = -np.inf
    for idx in best_idx:
        f = cand[idx].copy()
        for _ in range(refine_rounds):
            changed = False
            for i in range(n):
                others = np.arange(n) != i
                lo = max(-cap[i],
                         np.max(f[others] - dmat[i, others], initial=-np.inf))
                hi = min(cap[i],
                         np.min(f[others] + dmat[i, others], initial=np.inf))
                if hi < lo:  # numerically wedged; skip
                    continue
                target = hi if g[i] > 0 else lo if g[i] < 0 else f[i]
                if abs(target - f[i]) > 1e-15:
                    f[i] = target
                    changed = True
            if not changed:
                break
        best_val = max(best_val, float(f @ g))
    return best_val


# ---------------------------------------------------------------------------
# serialization: CSV and binary, both bit-exact round-trips
# ---------------------------------------------------------------------------

def measure_to_csv(mu: DiscreteMeasure) -> str:
    """CSV text: header coord0..coordN,weight; floats at 17 significant digits."""
    cols = [f"coord{i}" for i in range(mu.dim)] + ["weight"]
    lines = [",".join(cols)]
    for p, w in zip(mu.points, mu.weights):
        lines.append(",".join(fmt_float(v) for v in p) + "," + fmt_float(w))
    return "\n".join(lines) + "\n"


def measure_from_csv(text: str) -> DiscreteMeasure:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty measure CSV")
    header = lines[0].split(",")
    if header[-1] != "weight" or not header[0].startswith("coord"):
        raise ValueError("measure CSV must have header coord0,...,weight")
    dim = len(header) - 1
    if not lines[1:]:
        return DiscreteMeasure.empty(dim)
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    if rows.shape[1] != dim + 1:
        raise ValueError("row width does not match header")
    return DiscreteMeasure(rows[:, :dim], rows[:, dim])


_BIN_MAGIC = b"GMTM"


def measure_to_binary(mu: DiscreteMeasure) -> bytes:
    """Binary layout: magic, int64 dim, int64 count, float64 rows (coords, w)."""
    buf = io.BytesIO()
    buf.write(_BIN_MAGIC)
    buf.write(struct.pack("<qq", mu.dim, len(mu)))
    rows = np.hstack([mu.points, mu.weights[:, None]]).astype("<f8")
    buf.write(rows.tobytes(order="C"))
    return buf.getvalue()


def measure_from_binary(data: bytes) -> DiscreteMeasure:
    if data[:4] != _BIN_MAGIC:
        raise ValueError("bad magic in binary measure")
    dim, count = struct.unpack("<qq", data[4:20])
    rows = np.frombuffer(data[20:], dtype="<f8").reshape(count, dim + 1)
    return DiscreteMeasure(rows[:, :dim].copy(), rows[:, dim].copy())
