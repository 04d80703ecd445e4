"""Marked-point theory on the disk: admissibility, drifts, partition
functions, volume laws, and conformal-covariance predictions.

Marked points absorb into the Gaussian law as a deterministic drift
H(x) = sum_i alpha_i G(x, z_i) + sum_j (beta_j / 2) G(x, s_j) plus an
explicit constant, leaving a zero-mode integral over the global shift c.
The reduced partition function in the flat background metric is

    Pi = prod_i g_P(z_i)^{alpha_i^2/4} e^{C(z, s)}
         int e^{s_total c} E[ exp(-mu e^{gamma c} I
                                  - mu_b e^{(gamma/2) c} J) ] dc,

with I and J the drifted bulk/boundary chaos totals and s_total =
sum alpha + sum beta/2 - Q.  When mu_b = 0 the c-integral is a Gamma
integral and the total volume follows a Gamma(s_total/gamma, mu) law,
independent of the normalized measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.special

from .errors import (
    ConfigurationError,
    DomainError,
    GridError,
    NotAdmissibleError,
    ResamplingError,
)
from .geometry import (
    BOUNDARY_TOL,
    LiouvilleParams,
    conformal_weight,
    green,
    poincare_density,
)
from .gff import FieldSampler, truncated_boundary_variance
from .gmc import AtomicMeasure, graded_disk_grid

__all__ = [
    "InsertionSet",
    "AdmissibilityVerdict",
    "ShiftedChaosPair",
    "ChaosBasis",
    "seiberg_check",
    "insertion_drift",
    "log_constant",
    "shifted_chaos",
    "volume_law_params",
    "sample_liouville_triple",
    "partition_estimate",
    "unit_volume_expectation",
    "mobius_moved",
    "kpz_log_weight",
    "kpz_ratio_test",
]


# ---------------------------------------------------------------------------
# insertion sets and admissibility
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InsertionSet:
    """Bulk marked points (z_i, alpha_i), boundary marked points (s_j, beta_j)."""

    params: LiouvilleParams
    bulk: tuple = ()
    boundary: tuple = ()

    def __post_init__(self):
        bulk = tuple((complex(z), float(a)) for z, a in self.bulk)
        boundary = tuple((complex(s), float(b)) for s, b in self.boundary)
        object.__setattr__(self, "bulk", bulk)
        object.__setattr__(self, "boundary", boundary)
        for z, _ in bulk:
            if abs(z) >= 1.0 - BOUNDARY_TOL:
                raise DomainError(f"bulk point {z} is not interior")
        for s, _ in boundary:
            if abs(abs(s) - 1.0) > BOUNDARY_TOL:
                raise DomainError(f"boundary point {s} is not on the unit circle")
        pts = [z for z, _ in bulk] + [s for s, _ in boundary]
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if pts[i] == pts[j]:
                    raise DomainError("marked points must be pairwise distinct")

    @property
    def s_total(self):
        return (
            sum(a for _, a in self.bulk)
            + 0.5 * sum(b for _, b in self.boundary)
            - self.params.Q
        )

    def marked_points(self):
        return np.array([z for z, _ in self.bulk] + [s for s, _ in self.boundary])


@dataclass(frozen=True)
class AdmissibilityVerdict:
    case: str
    bound1_ok: bool
    bound2_ok: bool
    bound3_ok: bool
    admissible: bool
    s_total: float


def seiberg_check(ins):
    """Admissibility verdict for an insertion set.

    With mu > 0 all three bounds are required; with mu = 0 and a positive
    boundary constant the bulk-weight bound is not (bulk weights may reach
    or exceed Q).  All inequalities are strict.
    """
    p = ins.params
    q = p.Q
    s_total = ins.s_total
    bound1 = s_total > 0.0
    bound2 = all(a < q for _, a in ins.bulk)
    bound3 = all(b < q for _, b in ins.boundary)
    if p.mu > 0.0:
        case = "mu_positive"
        admissible = bound1 and bound2 and bound3
    elif p.mu_boundary > 0.0:
        case = "mu_zero_boundary_positive"
        admissible = bound1 and bound3
    else:
        case = "degenerate"
        admissible = False
    return AdmissibilityVerdict(case, bound1, bound2, bound3, admissible, s_total)


def require_admissible(ins):
    verdict = seiberg_check(ins)
    if not verdict.admissible:
        raise NotAdmissibleError(f"insertion set rejected: {verdict}")
    return verdict


def insertion_drift(ins, x):
    """Drift H(x) = sum alpha_i G(x, z_i) + sum (beta_j/2) G(x, s_j)."""
    xa = np.asarray(x, dtype=complex)
    out = np.zeros(xa.shape if xa.ndim else ())
    for z, a in ins.bulk:
        out = out + a * green(xa, z)
    for s, b in ins.boundary:
        out = out + 0.5 * b * green(xa, s)
    return float(out) if out.ndim == 0 else out


def log_constant(ins):
    """Interaction constant C(z, s) of the reduced partition function.

    Pairwise Green interactions of the marked points, cross terms with
    the half-weighted boundary points, minus sum beta_j^2 / 8.
    """
    c = 0.0
    bulk, bdry = ins.bulk, ins.boundary
    for i in range(len(bulk)):
        for k in range(i + 1, len(bulk)):
            c += bulk[i][1] * bulk[k][1] * green(bulk[i][0], bulk[k][0])
    for j in range(len(bdry)):
        for k in range(j + 1, len(bdry)):
            c += 0.25 * bdry[j][1] * bdry[k][1] * green(bdry[j][0], bdry[k][0])
    for i in range(len(bulk)):
        for j in range(len(bdry)):
            c += 0.5 * bulk[i][1] * bdry[j][1] * green(bulk[i][0], bdry[j][0])
    c -= sum(b**2 for _, b in bdry) / 8.0
    return c


def volume_law_params(ins):
    """Shape and rate of the Gamma law of the total volume (mu_b = 0 only)."""
    if ins.params.mu_boundary != 0.0:
        raise ConfigurationError("the Gamma volume law requires mu_boundary = 0")
    require_admissible(ins)
    return ins.s_total / ins.params.gamma, ins.params.mu


def mobius_moved(ins, psi):
    """The same weights at Mobius-moved marked points."""
    bulk = tuple((psi(z), a) for z, a in ins.bulk)
    boundary = tuple((psi(s) / abs(psi(s)), b) for s, b in ins.boundary)
    return InsertionSet(params=ins.params, bulk=bulk, boundary=boundary)


def kpz_log_weight(ins, psi):
    """log of prod |psi'(z_i)|^{-2 D_{alpha_i}} prod |psi'(s_j)|^{-D_{beta_j}}.

    The predicted partition-function ratio between Mobius-moved and
    original insertions.
    """
    p = ins.params
    out = 0.0
    for z, a in ins.bulk:
        out += -2.0 * conformal_weight(a, p) * math.log(abs(psi.derivative(z)))
    for s, b in ins.boundary:
        out += -conformal_weight(b, p) * math.log(abs(psi.derivative(s)))
    return out


# ---------------------------------------------------------------------------
# drifted chaos replicas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShiftedChaosPair:
    """Drifted bulk and boundary chaos measures of one replica."""

    bulk: AtomicMeasure
    boundary: AtomicMeasure

    def __post_init__(self):
        if self.bulk.total <= 0.0 or self.boundary.total <= 0.0:
            raise DomainError("drifted chaos totals must be positive")

    @property
    def ratio(self):
        return self.bulk.total / self.boundary.total**2


class ChaosBasis:
    """Replicated plain chaos measures on a fixed grid, ready for drifting.

    Holds per-replica bulk atom masses and boundary arc masses of the
    undrifted measures; any insertion set at the same gamma can then be
    applied as a deterministic atomwise drift, so several insertion
    configurations can share one set of field replicas (paired-replica
    comparisons of partition functions use exactly this).
    """

    def __init__(
        self,
        gamma,
        n_replicas,
        rng,
        depth=7,
        rings_per_band=2,
        aspect=2.0,
        n_modes=1024,
        n_arcs=256,
    ):
        if not (0.0 < gamma < 2.0):
            raise DomainError("gamma must lie in (0, 2)")
        self.gamma = float(gamma)
        self.n_replicas = int(n_replicas)
        self.grid = graded_disk_grid(depth, rings_per_band, aspect)
        self.sampler = FieldSampler(self.grid.centers, self.grid.eps)
        self.n_modes = int(n_modes)
        self.n_arcs = int(n_arcs)
        self.arc_theta = 2.0 * np.pi * (np.arange(n_arcs) + 0.5) / n_arcs
        self.arc_points = np.exp(1j * self.arc_theta)

        g = self.gamma
        variances = np.diag(self.sampler.covariance)
        weights = self.grid.density_weights(0.5 * g**2)
        var_n = truncated_boundary_variance(self.n_modes)
        modes = np.arange(1, self.n_modes + 1)
        amp = np.sqrt(2.0 / modes)
        cosb = np.cos(np.outer(self.arc_theta, modes)) * amp
        sinb = np.sin(np.outer(self.arc_theta, modes)) * amp

        m = self.grid.size
        self.bulk_masses = np.empty((self.n_replicas, m))
        self.bdry_masses = np.empty((self.n_replicas, self.n_arcs))
        factor = self.sampler._factor
        for r in range(self.n_replicas):
            gen_f = rng.child(2 * r).generator()
            vals = factor @ gen_f.standard_normal(m)
            self.bulk_masses[r] = np.exp(g * vals - 0.5 * g**2 * variances) * weights
            gen_t = rng.child(2 * r + 1).generator()
            coef = gen_t.standard_normal((2, self.n_modes))
            x = cosb @ coef[0] + sinb @ coef[1]
            self.bdry_masses[r] = (
                np.exp(-0.125 * g**2)
                * np.exp(0.5 * g * x - 0.125 * g**2 * var_n)
                * (2.0 * np.pi / self.n_arcs)
            )

    def drift_factors(self, ins):
        """Atomwise drift weights for an insertion set on this basis grid."""
        if abs(ins.params.gamma - self.gamma) > 1e-12:
            raise ConfigurationError("insertion set gamma does not match the basis")
        g = self.gamma
        fb = bulk_drift_factors(ins, self.grid, g)
        fd = boundary_drift_factors(ins, self.arc_theta, g)
        return fb, fd

    def drifted_totals(self, ins):
        """Per-replica totals (I_r, J_r) of the drifted measures."""
        fb, fd = self.drift_factors(ins)
        return self.bulk_masses @ fb, self.bdry_masses @ fd

    def drifted_pair(self, ins, r):
        """Full drifted measure pair of replica r."""
        fb, fd = self.drift_factors(ins)
        meta = {"gamma": self.gamma, "replica": int(r)}
        bulk = AtomicMeasure("bulk", self.grid.centers, self.bulk_masses[r] * fb, meta)
        bdry = AtomicMeasure("boundary", self.arc_points, self.bdry_masses[r] * fd, meta)
        return ShiftedChaosPair(bulk, bdry)

    def functional_values(self, ins, fn):
        """fn evaluated on every replica's drifted pair."""
        return np.array([fn(self.drifted_pair(ins, r)) for r in range(self.n_replicas)])


def bulk_drift_factors(ins, grid, gamma, subgrid=24, near_cells=2.0):
    """Cellwise factors e^{gamma H} for the bulk measure atoms.

    Cells within a few cell widths of a marked point get the mass-weighted
    average of e^{gamma H} over a subgrid refinement of the cell instead of
    the center value: the drift is integrable there but singular, so a
    single sample would either hit the singularity or misstate the cell's
    drifted mass.  A marked point exactly on an atom raises GridError.
    """
    marked = ins.marked_points()
    centers = grid.centers
    if len(marked) == 0:
        return np.ones(len(centers))
    dist = np.min(np.abs(centers[:, None] - marked[None, :]), axis=1)
    if np.any(dist == 0.0):
        raise GridError("a grid atom coincides with a marked point")
    factors = np.exp(gamma * insertion_drift(ins, centers))
    near = dist < near_cells * grid.cell_scale()
    s = 0.5 * gamma**2
    for c in np.nonzero(near)[0]:
        r0, r1 = grid.r_lo[c], grid.r_hi[c]
        th = np.angle(centers[c])
        dth = grid.dtheta[c]
        rr = r0 + (np.arange(subgrid) + 0.5) * (r1 - r0) / subgrid
        tt = th - dth / 2.0 + (np.arange(subgrid) + 0.5) * dth / subgrid
        pts = (rr[:, None] * np.exp(1j * tt[None, :])).ravel()
        ok = np.min(np.abs(pts[:, None] - marked[None, :]), axis=1) > 0.0
        pts = pts[ok]
        dens = (1.0 - np.abs(pts) ** 2) ** (-s) * np.abs(pts)
        drift = np.exp(gamma * insertion_drift(ins, pts))
        factors[c] = float(np.sum(drift * dens) / np.sum(dens))
    return factors


def boundary_drift_factors(ins, arc_theta, gamma, subgrid=64, near_arcs=2.0):
    """Arcwise factors e^{(gamma/2) H} for the boundary measure atoms.

    Arcs near a marked point average the drift over a subdivision of the
    arc, mirroring the bulk treatment.
    """
    marked = ins.marked_points()
    arc_points = np.exp(1j * arc_theta)
    if len(marked) == 0:
        return np.ones(len(arc_points))
    dist = np.min(np.abs(arc_points[:, None] - marked[None, :]), axis=1)
    if np.any(dist == 0.0):
        raise GridError("a boundary atom coincides with a marked point")
    factors = np.exp(0.5 * gamma * insertion_drift(ins, arc_points))
    dth = 2.0 * np.pi / len(arc_theta)
    near = dist < near_arcs * dth
    for c in np.nonzero(near)[0]:
        tt = arc_theta[c] - dth / 2.0 + (np.arange(subgrid) + 0.5) * dth / subgrid
        pts = np.exp(1j * tt)
        ok = np.min(np.abs(pts[:, None] - marked[None, :]), axis=1) > 0.0
        pts = pts[ok]
        factors[c] = float(np.mean(np.exp(0.5 * gamma * insertion_drift(ins, pts))))
    return factors


def shifted_chaos(ins, field, grid, trace, n_arcs=256):
    """Drifted chaos pair (Z0, Z0_boundary) from one field and one trace.

    Applies e^{gamma H} atomwise to the bulk measure and e^{(gamma/2) H}
    to the boundary measure, with subgrid-averaged factors on the cells
    nearest to marked points.  Raises for non-admissible insertion sets.
    """
    from .gmc import boundary_measure, bulk_measure

    if ins.bulk or ins.boundary:
        require_admissible(ins)
    g = ins.params.gamma
    bulk = bulk_measure(field, g, grid)
    bdry = boundary_measure(trace, g, n_arcs)
    arc_theta = 2.0 * np.pi * (np.arange(n_arcs) + 0.5) / n_arcs
    fb = bulk_drift_factors(ins, grid, g)
    fd = boundary_drift_factors(ins, arc_theta, g)
    return ShiftedChaosPair(
        AtomicMeasure("bulk", bulk.points, bulk.masses * fb, dict(bulk.metadata)),
        AtomicMeasure("boundary", bdry.points, bdry.masses * fd, dict(bdry.metadata)),
    )


# ---------------------------------------------------------------------------
# partition function
# ---------------------------------------------------------------------------

def log_prefactor(ins):
    """log of prod g_P(z_i)^{alpha_i^2/4} e^{C(z, s)}.

    The g_P power is the bulk insertion compensator
    epsilon^{alpha^2/2} e^{(alpha^2/2) Var X_eps(z)} = (1 - |z|^2)^{-alpha^2/2};
    it is what makes the Mobius covariance of the partition function come
    out at the conformal weights (alpha/2)(Q - alpha/2).
    """
    out = log_constant(ins)
    for z, a in ins.bulk:
        out += 0.25 * a**2 * math.log(poincare_density(z))
    return out


def _log_c_integral(s_total, gamma, mu_i, mub_j):
    """log of int e^{s c} exp(-mu_i e^{gamma c} - mub_j e^{(gamma/2) c}) dc.

    The integrand is log-concave with a unique interior maximum whenever
    s_total > 0 and mu_i + mub_j > 0; integrates around the peak after an
    exact location of the stationary point.
    """
    if s_total <= 0.0:
        raise NotAdmissibleError("the zero-mode integral diverges for s_total <= 0")
    g = gamma
    # stationary point: s = mu_i g u^2 + mub_j (g/2) u with u = e^{(g/2) c}
    if mu_i > 0.0:
        disc = (mub_j * g / 2.0) ** 2 + 4.0 * mu_i * g * s_total
        u_star = (-mub_j * g / 2.0 + math.sqrt(disc)) / (2.0 * mu_i * g)
    else:
        u_star = 2.0 * s_total / (g * mub_j)
    c_star = (2.0 / g) * math.log(u_star)

    def log_f(c):
        return s_total * c - mu_i * math.exp(g * c) - mub_j * math.exp(g * c / 2.0)

    peak = log_f(c_star)
    # expand the bracket until the integrand is negligible at both ends
    lo, hi = c_star - 1.0, c_star + 1.0
    while log_f(lo) - peak > math.log(1e-14):
        lo -= 1.0 + (c_star - lo)
    while log_f(hi) - peak > math.log(1e-14):
        hi += 1.0 + (hi - c_star)
    val, err = scipy.integrate.quad(
        lambda c: math.exp(log_f(c) - peak), lo, hi, limit=200, epsabs=0.0, epsrel=1e-10
    )
    if not np.isfinite(val) or val <= 0.0 or err > 1e-8 * val:
        raise ResamplingError(
            f"zero-mode quadrature did not converge (value {val}, err {err})"
        )
    return peak + math.log(val)


def partition_estimate(ins, n_replicas=None, rng=None, basis=None, method="auto", **basis_kw):
    """Monte Carlo estimate of the reduced partition function.

    Returns (value, stderr).  With mu_boundary = 0 and method "auto" or
    "gamma" the zero-mode integral is reduced in closed form to
    gamma^-1 Gamma(s/gamma) mu^{-s/gamma} E[I^{-s/gamma}]; method
    "quadrature" evaluates the c-integral numerically per replica (the two
    paths agree to quadrature accuracy on identical replicas).
    """
    require_admissible(ins)
    p = ins.params
    if basis is None:
        if n_replicas is None or rng is None:
            raise ConfigurationError("need either a basis or (n_replicas, rng)")
        if n_replicas < 100:
            raise ConfigurationError("at least 100 replicas are required")
        basis = ChaosBasis(p.gamma, n_replicas, rng, **basis_kw)
    bulk_tot, bdry_tot = basis.drifted_totals(ins)

    if method == "auto":
        method = "gamma" if p.mu_boundary == 0.0 else "quadrature"
    if method == "gamma":
        if p.mu_boundary != 0.0:
            raise ConfigurationError("the closed-form reduction requires mu_boundary = 0")
        q = ins.s_total / p.gamma
        log_k = (
            -math.log(p.gamma)
            + math.lgamma(q)
            - q * math.log(p.mu)
            - q * np.log(bulk_tot)
        )
    elif method == "quadrature":
        log_k = np.array(
            [
                _log_c_integral(ins.s_total, p.gamma, p.mu * i_r, p.mu_boundary * j_r)
                for i_r, j_r in zip(bulk_tot, bdry_tot)
            ]
        )
    else:
        raise ConfigurationError(f"unknown method {method!r}")

    shift = float(np.max(log_k))
    scaled = np.exp(log_k - shift)
    pref = math.exp(log_prefactor(ins) + shift)
    value = pref * float(scaled.mean())
    stderr = pref * float(scaled.std(ddof=1) / math.sqrt(len(scaled)))
    return value, stderr


def kpz_ratio_test(ins, psi, basis, basis_moved=None):
    """Deviation of the measured Mobius covariance from its prediction.

    Estimates log Pi(moved) - log Pi(original) and subtracts the predicted
    log weight; returns (deviation, stderr).  With one basis the two
    configurations share replicas (paired, small stderr); with a second
    basis the moved configuration uses its own independent replicas and
    the stderr combines the two jackknife errors.  mu_boundary = 0.
    """
    if ins.params.mu_boundary != 0.0:
        raise ConfigurationError("the ratio test is implemented for mu_boundary = 0")
    require_admissible(ins)
    moved = mobius_moved(ins, psi)
    q = ins.s_total / ins.params.gamma
    i_orig, _ = basis.drifted_totals(ins)
    i_moved, _ = (basis_moved or basis).drifted_totals(moved)
    w_orig = i_orig ** (-q)
    w_moved = i_moved ** (-q)
    log_ratio = (
        math.log(w_moved.mean())
        - math.log(w_orig.mean())
        + log_prefactor(moved)
        - log_prefactor(ins)
    )
    if basis_moved is None:
        n = len(w_orig)
        loo = np.log((w_moved.sum() - w_moved) / (n - 1)) - np.log(
            (w_orig.sum() - w_orig) / (n - 1)
        )
        stderr = math.sqrt((n - 1) / n * float(np.sum((loo - loo.mean()) ** 2)))
    else:
        stderr = math.sqrt(_log_mean_jackknife_var(w_moved) + _log_mean_jackknife_var(w_orig))
    return log_ratio - kpz_log_weight(ins, psi), stderr


def _log_mean_jackknife_var(w):
    n = len(w)
    loo = np.log((w.sum() - w) / (n - 1))
    return (n - 1) / n * float(np.sum((loo - loo.mean()) ** 2))


# ---------------------------------------------------------------------------
# joint volume law
# ---------------------------------------------------------------------------

def sample_liouville_triple(ins, n_draws, rng, basis=None, functionals=None, **basis_kw):
    """Draws of (V, L) with per-draw functionals of the normalized measures.

    Replicas of the drifted chaos pair are importance-weighted by the
    boundary total to the power -(2/gamma) s_total times the one-dimensional
    y-integral; a replica is selected per draw and y is drawn from the
    density proportional to y^{(2/gamma) s_total - 1}
    e^{-mu y^2 R - mu_b y}.  Returns a dict with arrays V, L, replica, and
    one column per requested functional (evaluated on the selected
    replica's normalized pair).
    """
    require_admissible(ins)
    p = ins.params
    if basis is None:
        basis = ChaosBasis(p.gamma, basis_kw.pop("n_replicas", 400), rng.child(0), **basis_kw)
    bulk_tot, bdry_tot = basis.drifted_totals(ins)
    ratio = bulk_tot / bdry_tot**2
    a_exp = 2.0 * ins.s_total / p.gamma

    # replica log-weights: y-integral times J^{-a}
    if p.mu_boundary == 0.0:
        log_y_int = (
            math.log(0.5) + math.lgamma(a_exp / 2.0) - (a_exp / 2.0) * np.log(p.mu * ratio)
        )
    else:
        log_y_int = np.array(
            [
                _log_y_integral(a_exp, p.mu * r_r, p.mu_boundary)
                for r_r in ratio
            ]
        )
    log_w = log_y_int - a_exp * np.log(bdry_tot)
    shift = float(np.max(log_w))
    w = np.exp(log_w - shift)
    if not np.any(w > 0.0):
        raise ResamplingError("all replica weights underflowed")
    prob = w / w.sum()

    gen = rng.generator()
    idx = gen.choice(len(prob), size=n_draws, p=prob)
    if p.mu_boundary == 0.0:
        volume = gen.gamma(shape=a_exp / 2.0, scale=1.0 / p.mu, size=n_draws)
        length = np.sqrt(volume / ratio[idx])
    else:
        length = np.array(
            [_draw_y(a_exp, p.mu * ratio[i], p.mu_boundary, gen) for i in idx]
        )
        volume = length**2 * ratio[idx]

    out = {"V": volume, "L": length, "replica": idx, "weight": prob[idx]}
    if functionals:
        for name, fn in functionals.items():
            per_replica = basis.functional_values(ins, fn)
            out[name] = per_replica[idx]
    return out


def _log_y_integral(a_exp, mu_r, mu_b):
    """log of int_0^inf y^{a-1} e^{-mu_r y^2 - mu_b y} dy."""
    def log_f(t):
        # substitute y = e^t
        return a_exp * t - mu_r * math.exp(2.0 * t) - mu_b * math.exp(t)

    # stationary point of the log-integrand in t
    disc = mu_b**2 + 8.0 * mu_r * a_exp
    y_star = (-mu_b + math.sqrt(disc)) / (4.0 * mu_r) if mu_r > 0 else a_exp / mu_b
    t_star = math.log(y_star)
    peak = log_f(t_star)
    lo, hi = t_star - 1.0, t_star + 1.0
    while log_f(lo) - peak > math.log(1e-14):
        lo -= 1.0 + (t_star - lo)
    while log_f(hi) - peak > math.log(1e-14):
        hi += 1.0 + (hi - t_star)
    val, _ = scipy.integrate.quad(
        lambda t: math.exp(log_f(t) - peak), lo, hi, limit=200, epsabs=0.0, epsrel=1e-10
    )
    return peak + math.log(val)


def _draw_y(a_exp, mu_r, mu_b, gen, n_grid=2048):
    """Inverse-CDF draw from the density prop to y^{a-1} e^{-mu_r y^2 - mu_b y}."""
    disc = mu_b**2 + 8.0 * mu_r * a_exp
    y_star = (-mu_b + math.sqrt(disc)) / (4.0 * mu_r) if mu_r > 0 else a_exp / mu_b
    t_star = math.log(y_star)
    t = np.linspace(t_star - 40.0, t_star + 8.0, n_grid)
    log_pdf = a_exp * t - mu_r * np.exp(2.0 * t) - mu_b * np.exp(t)
    pdf = np.exp(log_pdf - log_pdf.max())
    cdf = np.cumsum(pdf)
    cdf /= cdf[-1]
    u = gen.uniform()
    return float(np.exp(np.interp(u, cdf, t)))


# ---------------------------------------------------------------------------
# fixed-volume expectations
# ---------------------------------------------------------------------------

def unit_volume_expectation(ins, fn, n_replicas=None, rng=None, basis=None, **basis_kw):
    """Expectation of a measure functional at unit total volume.

    Requires mu_boundary = 0 and exactly three boundary insertions of
    weight gamma.  The estimator is the I^{-s/gamma}-weighted average of
    fn over replicas of the normalized pair, with a jackknife standard
    error; returns (value, stderr, effective_sample_size).
    """
    p = ins.params
    if p.mu_boundary != 0.0:
        raise ConfigurationError("unit-volume expectations require mu_boundary = 0")
    betas = [b for _, b in ins.boundary]
    if len(ins.bulk) != 0 or len(betas) != 3 or any(abs(b - p.gamma) > 1e-12 for b in betas):
        raise ConfigurationError(
            "unit-volume expectations require exactly three boundary insertions of weight gamma"
        )
    require_admissible(ins)
    if basis is None:
        basis = ChaosBasis(p.gamma, n_replicas, rng, **basis_kw)
    bulk_tot, _ = basis.drifted_totals(ins)
    q = ins.s_total / p.gamma  # equals 3/2 - Q/gamma
    w = bulk_tot ** (-q)
    f_vals = basis.functional_values(ins, fn)
    ess = float(w.sum() ** 2 / np.sum(w**2))
    if ess < 10.0:
        import warnings

        warnings.warn(f"effective sample size {ess:.1f} < 10", RuntimeWarning)
    n = len(w)
    value = float(np.sum(w * f_vals) / w.sum())
    loo = (np.sum(w * f_vals) - w * f_vals) / (w.sum() - w)
    stderr = math.sqrt((n - 1) / n * float(np.sum((loo - loo.mean()) ** 2)))
    return value, stderr, ess
