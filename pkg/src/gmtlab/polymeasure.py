"""Surface measures of polynomial zero sets as discrete measures.

For a polynomial h with zero set S = {h = 0} and positive side O = {h > 0},
the boundary measure studied here has surface density (grad h . A grad h)/|grad h|
with respect to arc/area measure on S.  It is discretized by co-area shell
quadrature: the surface integral is traded for a volume integral over the
thin shell {|h| < eps},

    integral_S g dsigma  ~=  (1/2eps) integral_{|h|<eps} g |grad h| dx ,

so each grid cell contributes weight  cell_volume * fraction * (g.Ag)/(2 eps),
where `fraction` is the exact volume fraction of the cell lying in the shell
under the local linearization of h (this removes the quantization noise a
binary |h(center)| < eps test would suffer on grid-aligned zero sets).  Atom
positions are Newton-projected onto S.

An independent oracle for the construction is `weak_pairing`: integration by
parts against a C^2 bump phi turns the boundary pairing into the volume
integral of h * (sum_ij a_ij d_i d_j phi) over {h > 0}, which needs no surface
geometry at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .measure import Ball, DiscreteMeasure, f_ball, f_r, translate_dilate
from .polycore import ConstantEllipticMatrix, Polynomial, apply_operator, homogeneous_parts

GRID_N_DEFAULTS = {2: 800, 3: 160, 4: 64}
NEWTON_MAX_STEPS = 20
GRAD_FLOOR_REL = 1e-8


@dataclass(frozen=True)
class PolyMeasureSpec:
    """Recipe for sampling the boundary measure of {h = 0} inside B(0, R).

    shell_eps defaults to 1e-3 * R; grid_n defaults to 800 (2-D), 160 (3-D),
    64 (4-D).  The slab-fraction quadrature resolves shells thinner than a
    grid cell exactly under linearization, so shell_eps may be below the
    cell size; the grid only needs to resolve the variety's geometry.
    """

    h: Polynomial
    a: ConstantEllipticMatrix
    radius: float = 1.0
    shell_eps: float | None = None
    grid_n: int | None = None

    def __post_init__(self):
        if self.h.degree() < 1:
            raise ValueError("h must be nonconstant")
        if self.h.dim != self.a.dim:
            raise ValueError(f"dimension mismatch: h {self.h.dim} vs A {self.a.dim}")
        if not self.radius > 0:
            raise ValueError("truncation radius must be positive")
        if self.shell_eps is None:
            object.__setattr__(self, "shell_eps", 1e-3 * self.radius)
        if not self.shell_eps > 0:
            raise ValueError("shell_eps must be positive")
        if self.grid_n is None:
            object.__setattr__(self, "grid_n", GRID_N_DEFAULTS[self.h.dim])
        if self.grid_n < 16:
            raise ValueError("grid_n must be at least 16")
        if 2 * self.radius / self.grid_n > self.radius / 10:
            raise ValueError("grid too coarse to resolve the variety (cell > R/10)")

    @property
    def cell(self) -> float:
        return 2 * self.radius / self.grid_n


@dataclass
class SampleDiagnostics:
    """Bookkeeping from one sampling sweep."""

    n_atoms: int = 0
    newton_failures: int = 0
    skipped_cells: int = 0
    skipped_mass: float = 0.0
    h_sup_grid: float = 0.0
    grad_sup_shell: float = 0.0
    grad_sup_grid: float = 0.0
    grad_sup_atoms: float = 0.0


@lru_cache(maxsize=8)
def _grid_centers(dim: int, grid_n: int) -> np.ndarray:
    """Cell centers of the uniform grid on [-1, 1]^dim, C-ordered, cached."""
    axis = (np.arange(grid_n) + 0.5) * (2.0 / grid_n) - 1.0
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    pts.setflags(write=False)
    return pts


def _iter_grid_chunks(dim: int, grid_n: int, target: int = 500_000):
    """Yield C-ordered chunks of the unit grid without materializing it.

    Chunks are whole slabs of leading-coordinate values, so concatenating
    them reproduces the full C-ordered grid; peak memory stays near
    `target` points regardless of dimension.
    """
    if dim == 1:
        yield _grid_centers(1, grid_n)
        return
    axis = (np.arange(grid_n) + 0.5) * (2.0 / grid_n) - 1.0
    tail = _grid_centers(dim - 1, grid_n)
    rows = max(1, target // len(tail))
    for lo in range(0, grid_n, rows):
        lead = np.repeat(axis[lo:lo + rows], len(tail))
        block = np.tile(tail, (min(rows, grid_n - lo), 1))
        yield np.column_stack([lead, block])


def slab_fraction(h0: np.ndarray, grad_abs: np.ndarray, halfwidth: float,
                  eps: float) -> np.ndarray:
    """Volume fraction of each cell lying in {|h| < eps}, h linearized.

    h0: (m,) values at cell centers; grad_abs: (m, d) absolute gradient
    components; halfwidth: half the cell edge.  The linearized h over the
    cell is h0 + sum_i g_i U_i with U_i uniform on [-hw, hw], so the answer
    is the CDF difference of a sum of independent centered uniforms, with
    the classical inclusion-exclusion closed form.
    """
    m, d = grad_abs.shape
    c = 2.0 * grad_abs * halfwidth  # full spans per axis
    # tiny floor keeps the d-fold formula nondegenerate when a component
    # vanishes; the induced error is ~1e-9 relative
    floor = 1e-9 * (eps + c.max(initial=0.0))
    c = np.maximum(c, max(floor, 1e-300))
    total = c.sum(axis=1)
    norm = math.factorial(d) * np.prod(c, axis=1)

    def cdf(s):
        s = np.clip(s, 0.0, total)
        acc = np.zeros(m)
        for mask in range(1 << d):
            sub = np.zeros(m)
            bits = 0
            for i in range(d):
                if mask >> i & 1:
                    sub += c[:, i]
                    bits += 1
            acc += (-1.0) ** bits * np.maximum(s - sub, 0.0) ** d
        return np.clip(acc / norm, 0.0, 1.0)

    half_span = 0.5 * total
    s_hi = (eps - h0) + half_span
    s_lo = (-eps - h0) + half_span
    return cdf(s_hi) - cdf(s_lo)


def _newton_project(h: Polynomial, pts: np.ndarray, tol: float,
                    max_steps: int = NEWTON_MAX_STEPS) -> tuple[np.ndarray, int]:
    """Damped Newton projection of points onto {h = 0}.

    Steps along -h * grad h / |grad h|^2 with halving damping; points that
    fail to reach |h| <= tol within max_steps revert to their start and are
    counted.  Returns (projected points, failure count).
    """
    x = pts.copy()
    start = pts
    active = np.abs(h(x)) > tol
    for _ in range(max_steps):
        if not active.any():
            break
        xa = x[active]
        hv = h(xa)
        g = h.grad_at(xa)
        g2 = np.sum(g * g, axis=1)
        g2 = np.where(g2 > 0, g2, 1.0)
        step = -(hv / g2)[:, None] * g
        lam = np.ones(len(xa))
        best = xa + step
        best_h = np.abs(h(best))
        cur_h = np.abs(hv)
        for _ in range(5):  # damping: halve while not improving
            worse = best_h >= cur_h
            if not worse.any():
                break
            lam[worse] *= 0.5
            trial = xa + lam[:, None] * step
            th = np.abs(h(trial))
            best[worse] = trial[worse]
            best_h[worse] = th[worse]
        x[active] = best
        sub = np.abs(h(x[active])) > tol
        idx = np.flatnonzero(active)
        active[idx] = sub
    failed = np.abs(h(x)) > tol
    x[failed] = start[failed]
    return x, int(failed.sum())


def sample_polymeasure_detailed(
    spec: PolyMeasureSpec,
) -> tuple[DiscreteMeasure, SampleDiagnostics]:
    """Co-area shell sampler; see the module docstring for the scheme."""
    h, a, R, eps, n = spec.h, spec.a, spec.radius, spec.shell_eps, spec.grid_n
    d = h.dim
    diag = SampleDiagnostics()
    halfwidth = 0.5 * spec.cell
    cell_vol = spec.cell ** d
    A = a.entries

    h_sup = 0.0
    g_sup = 0.0
    shell_pts, shell_g, shell_h = [], [], []
    for block in _iter_grid_chunks(d, n):
        pts = block * R
        inside = np.linalg.norm(pts, axis=1) < R
        pts = pts[inside]
        if pts.size == 0:
            continue
        hv = h(pts)
        h_sup = max(h_sup, float(np.abs(hv).max(initial=0.0)))
        g = h.grad_at(pts)
        g_sup = max(g_sup, float(np.linalg.norm(g, axis=1).max(initial=0.0)))
        # support prefilter: the linearized h can reach [-eps, eps] only if
        # |h(center)| < eps + sum_i |g_i| hw
        reach = np.abs(g).sum(axis=1) * halfwidth
        cand = np.abs(hv) < eps + reach
        if not cand.any():
            continue
        shell_pts.append(pts[cand])
        shell_g.append(g[cand])
        shell_h.append(hv[cand])
    diag.h_sup_grid = h_sup
    diag.grad_sup_grid = g_sup
    if not shell_pts:
        raise ValueError("no shell cells found: variety misses B(0,R) at this grid")
    pts = np.vstack(shell_pts)
    g = np.vstack(shell_g)
    hv = np.concatenate(shell_h)

    gnorm = np.linalg.norm(g, axis=1)
    diag.grad_sup_shell = float(gnorm.max(initial=0.0))
    floor = GRAD_FLOOR_REL * diag.grad_sup_shell
    frac = slab_fraction(hv, np.abs(g), halfwidth, eps)
    density = np.einsum("ij,jk,ik->i", g, A, g) / (2.0 * eps)
    w = cell_vol * frac * density

    degenerate = gnorm <= floor
    if degenerate.all():
        raise ValueError("gradient degenerate on the entire shell")
    diag.skipped_cells = int(degenerate.sum())
    diag.skipped_mass = float(w[degenerate].sum())
    keep = (~degenerate) & (w > 0)
    pts, w = pts[keep], w[keep]

    tol = 1e-12 * max(h_sup, 1e-300)
    proj, failures = _newton_project(h, pts, tol)
    diag.newton_failures = failures
    diag.n_atoms = len(w)
    # the surface density vanishes wherever grad h = 0 on the zero set; if
    # that happens at every atom the limiting measure is zero and the
    # variety is degenerate for this construction (e.g. h = x^2 or x^3)
    diag.grad_sup_atoms = float(np.linalg.norm(h.grad_at(proj), axis=1).max())
    if diag.grad_sup_atoms <= 1e-5 * g_sup:
        raise ValueError(
            "degenerate variety: gradient vanishes on the zero set, the "
            "surface measure is zero"
        )
    return DiscreteMeasure(proj, w), diag


def sample_polymeasure(spec: PolyMeasureSpec) -> DiscreteMeasure:
    """Discretize the boundary measure of {h = 0} inside B(0, R)."""
    mu, _ = sample_polymeasure_detailed(spec)
    return mu


def poly_sup_on_ball(h: Polynomial, r: float, grid_n: int = 241) -> float:
    """Max |h| over a grid restricted to the closed ball of radius r."""
    pts = _grid_centers(h.dim, grid_n) * r
    mask = np.linalg.norm(pts, axis=1) <= r
    return float(np.abs(h(pts[mask])).max())


# ---------------------------------------------------------------------------
# weak-form volume oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BumpSpec:
    """C^1,1 test bump  phi(x) = q(x) * (1 - |x - c|^2 / R^2)_+^power .

    With q = 1 this is the radial bump; any polynomial q modulates it.
    power >= 2 keeps the second derivatives bounded.
    """

    dim: int
    center: np.ndarray = None
    radius: float = 1.0
    power: int = 2
    poly: Polynomial | None = None

    def __post_init__(self):
        c = np.zeros(self.dim) if self.center is None else np.asarray(self.center, float)
        object.__setattr__(self, "center", c)
        if self.power < 2:
            raise ValueError("bump power must be >= 2 for a C^1,1 test function")
        if not self.radius > 0:
            raise ValueError("bump radius must be positive")
        if self.poly is not None and self.poly.dim != self.dim:
            raise ValueError("modulating polynomial dimension mismatch")

    def interior_polynomial(self) -> Polynomial:
        """The polynomial that equals phi inside the support ball."""
        d = self.dim
        u = Polynomial.constant(d, 1.0)
        sq = Polynomial.zero(d)
        for i in range(d):
            xi = Polynomial.variable(d, i) - Polynomial.constant(d, float(self.center[i]))
            sq = sq + xi * xi
        u = u - sq * (1.0 / self.radius ** 2)
        out = u ** self.power
        if self.poly is not None:
            out = out * self.poly
        return out

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, float))
        u = 1.0 - np.sum((pts - self.center) ** 2, axis=1) / self.radius ** 2
        vals = np.maximum(u, 0.0) ** self.power
        if self.poly is not None:
            vals = vals * self.poly(pts)
        return vals


def weak_pairing(h: Polynomial, a: ConstantEllipticMatrix, phi: BumpSpec,
                 grid_n: int | None = None) -> float:
    """Volume-quadrature pairing  integral_{h>0} h * (sum a_ij d_i d_j phi) dx.

    The sign convention makes the result nonnegative for nonnegative phi;
    it equals the pairing of phi against the sampled boundary measure and
    serves as its independent oracle (no surface geometry involved).
    """
    if h.dim != a.dim or h.dim != phi.dim:
        raise ValueError("dimension mismatch between h, A, and phi")
    if h.degree() < 1:
        raise ValueError("h must be nonconstant")
    residual = apply_operator(a, h)
    if residual.max_abs_coeff() > 1e-10 * max(h.max_abs_coeff(), 1.0):
        raise ValueError(
            "h is not annihilated by the operator of A; the volume pairing "
            "equals the boundary pairing only for such h"
        )
    if grid_n is None:
        grid_n = GRID_N_DEFAULTS[h.dim]
    lphi = apply_operator(a, phi.interior_polynomial())
    d = h.dim
    # midpoint rule over the bump's bounding box
    cell = 2.0 * phi.radius / grid_n
    total = 0.0
    for block in _iter_grid_chunks(d, grid_n):
        pts = block * phi.radius + phi.center
        r2 = np.sum((pts - phi.center) ** 2, axis=1)
        pts = pts[r2 < phi.radius ** 2]
        if pts.size == 0:
            continue
        hv = h(pts)
        pos = hv > 0
        if pos.any():
            total += float((hv[pos] * lphi(pts[pos])).sum())
    return total * cell ** d


# ---------------------------------------------------------------------------
# pushforwards and scaling checks
# ---------------------------------------------------------------------------

def linear_pushforward(mu: DiscreteMeasure, m, scale: float) -> DiscreteMeasure:
    """Image measure with matrix parameter m: atoms map x -> m^{-1} x and
    weights multiply by `scale`.

    The parameter convention matches the blow-up maps: passing m = r*I with
    scale 1 reproduces translate_dilate(mu, 0, r), whose atoms move to x/r.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (mu.dim, mu.dim):
        raise ValueError(f"matrix shape {m.shape} does not match measure dim {mu.dim}")
    if not np.isfinite(np.linalg.cond(m)) or np.linalg.cond(m) > 1e14:
        raise ValueError("matrix is singular or near-singular")
    if not scale > 0:
        raise ValueError("scale must be positive")
    inv = np.linalg.inv(m)
    return DiscreteMeasure(mu.points @ inv.T, mu.weights * scale)


@dataclass(frozen=True)
class ScalingRow:
    r: float
    measured: float
    predicted: float
    rel_err: float
    dilation_fball: float


def scaling_report(h: Polynomial, a: ConstantEllipticMatrix, radii,
                   grid_n: int | None = None) -> list[ScalingRow]:
    """Check the two dilation laws on sampled measures.

    Per radius r: (i) for homogeneous h of degree k in R^(n+1), the ratio
    F_r/F_1 against the exact power r^(n+k); (ii) the ball-LP discrepancy
    between the blow-up T_{0,r} of the sampled measure and r^(n-1) times a
    directly sampled measure of h(r x), both restricted to B(0,1).
    """
    parts = homogeneous_parts(h)
    if len(parts) != 1:
        raise ValueError(
            f"F_r power law needs homogeneous h; got degrees {[d for d, _ in parts]}"
        )
    k = parts[0][0]
    n = h.dim - 1
    radii = [float(r) for r in radii]
    R = max(radii + [1.0])
    spec = PolyMeasureSpec(h, a, radius=R, grid_n=grid_n)
    mu = sample_polymeasure(spec)
    f1 = f_r(mu, 1.0)
    rows = []
    unit_ball = Ball(np.zeros(h.dim), 1.0)
    for r in radii:
        measured = f_r(mu, r) / f1
        predicted = r ** (n + k)
        rel = abs(measured - predicted) / predicted
        lhs = translate_dilate(mu, np.zeros(h.dim), r)
        rhs_spec = PolyMeasureSpec(h.dilate(r), a, radius=1.0, grid_n=grid_n)
        rhs = sample_polymeasure(rhs_spec).scaled(r ** (n - 1))
        disc = f_ball(lhs, rhs, unit_ball)
        rows.append(ScalingRow(r, float(measured), float(predicted), float(rel), float(disc)))
    return rows
