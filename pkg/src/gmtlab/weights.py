"""Quantitative density diagnostics between two measures over a ball.

Both measures arrive as masses over a common cell partition of a ball (the
natural output of Monte Carlo boundary histograms), the density f being the
cellwise ratio nu/mu.  The diagnostics are averages against the normalized
mu-masses:

  * the Jensen-gap quantity K = (avg f) * exp(-avg log f) >= 1, with K = 1
    exactly when f is constant;
  * the mean oscillation of log f around its mu-average;
  * the bound osc <= log(2K) relating the two (stated in the literature for
    halving probability spaces; finite atomic panels can violate it once the
    density spread grows past e^4 with a ~3:1 mass imbalance, so the random
    suites keep the spread moderate where the discrete analogue holds);
  * the worst mass ratio nu(F)/nu(B) over cell unions F with a mu-budget,
    whose fractional relaxation is solved exactly by the greedy density
    ordering;
  * a profile of K and the oscillation over shrinking balls, flagging the
    vanishing trend K -> 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._util import fmt_float
from .measure import Ball

HRU_ENUM_LIMIT = 20
JENSEN_TOL = 1e-12


@dataclass(frozen=True)
class WeightPanel:
    """Two nonnegative mass vectors over a common cell partition of a ball."""

    ball: Ball
    mu_mass: np.ndarray
    nu_mass: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        mu = np.asarray(self.mu_mass, dtype=float)
        nu = np.asarray(self.nu_mass, dtype=float)
        if mu.ndim != 1 or nu.shape != mu.shape:
            raise ValueError("mu_mass and nu_mass must be 1-d arrays of equal length")
        if len(mu) == 0:
            raise ValueError("panel needs at least one cell")
        if np.any(mu < 0) or np.any(nu < 0):
            raise ValueError("cell masses must be nonnegative")
        if not np.all(np.isfinite(mu)) or not np.all(np.isfinite(nu)):
            raise ValueError("cell masses must be finite")
        if mu.sum() <= 0:
            raise ValueError("total mu_mass must be positive")
        object.__setattr__(self, "mu_mass", mu)
        object.__setattr__(self, "nu_mass", nu)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != len(mu):
                raise ValueError("labels length must match the cell count")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.mu_mass)

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else f"cell-{i}"

    def mutual_ac_violations(self) -> list[str]:
        """Cells carrying nu-mass where mu vanishes (nu not << mu there)."""
        bad = np.flatnonzero((self.mu_mass == 0) & (self.nu_mass > 0))
        return [self.label(int(i)) for i in bad]

    def scaled_nu(self, t: float) -> "WeightPanel":
        if t <= 0:
            raise ValueError("scaling factor must be positive")
        return WeightPanel(self.ball, self.mu_mass, self.nu_mass * t, self.labels)

    def to_csv(self) -> str:
        lines = ["cell_id,mu_mass,nu_mass"]
        for i, (m, n) in enumerate(zip(self.mu_mass, self.nu_mass)):
            lines.append(f"{self.label(i)},{fmt_float(m)},{fmt_float(n)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, ball: Ball) -> "WeightPanel":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if not lines or lines[0].split(",") != ["cell_id", "mu_mass", "nu_mass"]:
            raise ValueError("panel CSV must have header cell_id,mu_mass,nu_mass")
        labels, mu, nu = [], [], []
        for ln in lines[1:]:
            cid, m, n = ln.split(",")
            labels.append(cid)
            mu.append(float(m))
            nu.append(float(n))
        return cls(ball, np.array(mu), np.array(nu), tuple(labels))


def _active_density(panel: WeightPanel):
    """Normalized mu-weights and density on the mu-carried cells.

    Raises on any cell where the log-density diverges (positive mu-mass,
    zero nu-mass), naming the first offending cell.
    """
    mu, nu = panel.mu_mass, panel.nu_mass
    active = mu > 0
    dead = np.flatnonzero(active & (nu == 0))
    if len(dead):
        raise ValueError(
            f"log-divergence: cell {panel.label(int(dead[0]))} has nu_mass = 0 "
            "under positive mu_mass"
        )
    w = mu[active] / mu.sum()
    f = nu[active] / mu[active]
    return w, f


def a_inf_quantity(panel: WeightPanel) -> float:
    """Jensen gap K = (avg f) * exp(-avg log f) >= 1 with mu-weighted averages."""
    w, f = _active_density(panel)
    k = float(np.dot(w, f) * np.exp(-np.dot(w, np.log(f))))
    if k < 1.0 - JENSEN_TOL:
        raise ArithmeticError(f"Jensen gap {k} fell below 1 beyond tolerance")
    return max(k, 1.0)


def bmo_oscillation(panel: WeightPanel) -> float:
    """Mean absolute oscillation of log f around its mu-average."""
    w, f = _active_density(panel)
    g = np.log(f)
    return float(np.dot(w, np.abs(g - np.dot(w, g))))


class KoreyResult(NamedTuple):
    osc: float
    k: float
    bound: float
    satisfied: bool


def korey_check(panel: WeightPanel) -> KoreyResult:
    """Check the mean oscillation of log f against log(2K)."""
    osc = bmo_oscillation(panel)
    k = a_inf_quantity(panel)
    bound = float(np.log(2.0 * k))
    return KoreyResult(osc, k, bound, osc <= bound + 1e-12)


@dataclass(frozen=True)
class HruModuli:
    """Worst nu(F)/nu(B) over cell unions F with mu(F)/mu(B) <= delta.

    `fractional` solves the relaxation where cells may be taken partially
    (the greedy density ordering is exact for it); `integral` is the best
    whole-cell union, exact when the panel is small enough to enumerate,
    otherwise the greedy prefix lower bound.
    """

    delta: float
    fractional: float
    integral: float
    integral_exact: bool

    @property
    def gap(self) -> float:
        return self.fractional - self.integral


def hru_moduli(panel: WeightPanel, delta: float) -> HruModuli:
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie strictly between 0 and 1")
    mu, nu = panel.mu_mass, panel.nu_mass
    mu_total, nu_total = float(mu.sum()), float(nu.sum())
    if nu_total <= 0:
        return HruModuli(delta, 0.0, 0.0, True)
    budget = delta * mu_total
    slack = 1e-12 * mu_total

    # zero-mu cells cost nothing and are always taken first; among the rest,
    # greedy by density is exact for the fractional relaxation
    with np.errstate(divide="ignore"):
        dens = np.where(mu > 0, nu / np.where(mu > 0, mu, 1.0), np.inf)
    order = np.argsort(-dens, kind="stable")
    m_sorted, n_sorted = mu[order], nu[order]

    taken_mu = 0.0
    frac_nu = 0.0
    int_nu = 0.0
    for m, n in zip(m_sorted, n_sorted):
        if taken_mu + m <= budget + slack:
            taken_mu += m
            frac_nu += n
            int_nu += n
        else:
            room = budget - taken_mu
            if m > 0 and room > 0:
                frac_nu += n * (room / m)
            break
    fractional = frac_nu / nu_total

    n_cells = len(mu)
    if n_cells <= HRU_ENUM_LIMIT:
        bits = (np.arange(1 << n_cells, dtype=np.int64)[:, None]
                >> np.arange(n_cells)) & 1
        mu_sums = bits @ mu
        nu_sums = bits @ nu
        ok = mu_sums <= budget + slack
        integral = float(nu_sums[ok].max() / nu_total)
        exact = True
    else:
        integral = int_nu / nu_total
        exact = False
    return HruModuli(delta, float(fractional), integral, exact)


def hru_delta_recipe(k: float) -> float:
    """The constructive mu-budget for which the worst nu-ratio stays below 2(K-1).

    Follows the classical proof: pick alpha with K^((1+alpha)/(1-alpha)) - 1
    = 2(K-1), then shrink delta below alpha until the binary entropy
    phi(delta) is dominated by alpha*log K.
    """
    if k <= 1.0:
        raise ValueError("the recipe needs K > 1")
    rho = np.log(1.0 + 2.0 * (k - 1.0)) / np.log(k)
    alpha = (rho - 1.0) / (rho + 1.0)
    target = 0.999 * alpha * np.log(k)

    def phi(d):
        return -(d * np.log(d) + (1.0 - d) * np.log1p(-d))

    lo, hi = 1e-300, min(0.5, 0.999 * alpha)
    if phi(hi) <= target:
        return float(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi(mid) <= target:
            lo = mid
        else:
            hi = mid
    return float(lo)


class VaInfRow(NamedTuple):
    r: float
    k: float
    osc: float


@dataclass(frozen=True)
class VaInfProfile:
    """K and oscillation over shrinking balls, with the vanishing-trend flags."""

    rows: tuple[VaInfRow, ...]
    trend_monotone: bool
    vanishing: bool

    def to_csv(self) -> str:
        lines = ["r,K,osc"]
        for row in self.rows:
            lines.append(",".join(fmt_float(v) for v in row))
        return "\n".join(lines) + "\n"


def va_inf_scan(panels: list[WeightPanel], *, vanish_tol: float = 0.05,
                monotone_slack: float = 0.0) -> VaInfProfile:
    """Profile (r, K, osc) over panels ordered by strictly decreasing radius.

    `vanishing` holds when the smallest-scale K has come within vanish_tol
    of 1; `trend_monotone` when K never increases by more than the slack
    (useful against Monte Carlo noise) along the shrinking sequence.
    """
    if not panels:
        raise ValueError("need at least one panel")
    radii = [p.ball.radius for p in panels]
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("panels must be ordered by strictly decreasing radius")
    rows = tuple(
        VaInfRow(r, a_inf_quantity(p), bmo_oscillation(p))
        for r, p in zip(radii, panels)
    )
    ks = [row.k for row in rows]
    trend = all(b <= a + monotone_slack for a, b in zip(ks, ks[1:]))
    vanishing = ks[-1] <= 1.0 + vanish_tol
    return VaInfProfile(rows, trend, vanishing)
