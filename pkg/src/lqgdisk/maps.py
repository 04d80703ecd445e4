"""Exact and asymptotic enumeration of quadrangulations with a simple
boundary, Boltzmann sampling, and the joint volume/perimeter density check.

The closed count of maps with n quadrilaterals, a simple boundary of
length 2p, and a marked boundary point is

    T(n, p) = 3^(n-p) (3p)! / (p! (2p-1)!) * (2n+p-1)! / ((n-p+1)! (n+2p)!),

a nonnegative integer, zero when n < p - 1.  Its n, p -> infinity
asymptotics at fixed p^2/n read

    T(n, p) ~ 12^n (9/2)^p n^{-5/2} sqrt(3 p) / (2 pi) e^{-9 p^2 / (4 n)},

which fixes the critical weights: e^{-mu_bar n - mu_bar_b 2p} T(n, p) is
summable exactly when mu_bar exceeds ln 12 or the per-edge boundary weight
mu_bar_b exceeds (1/2) ln(9/2).  Under the scaling V = a^2 n, l = 2 a p
the Boltzmann law converges to the density

    V^{-3/2} l^{1/2} e^{-mu V} e^{-mu_b l} e^{-9 l^2 / (16 V)} dl dV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.special
import scipy.stats

from .errors import ConfigurationError, DomainError

__all__ = [
    "count_exact",
    "log_count_exact",
    "log_count_asymptotic",
    "log_count_exact_certified",
    "log_bigint",
    "BULK_CRITICAL_WEIGHT",
    "BOUNDARY_CRITICAL_WEIGHT_PER_EDGE",
    "BoltzmannConfig",
    "BoltzmannSampler",
    "boltzmann_sample",
    "joint_density_check",
    "histogram_check",
    "conjectured_log_density",
]

BULK_CRITICAL_WEIGHT = math.log(12.0)
BOUNDARY_CRITICAL_WEIGHT_PER_EDGE = 0.5 * math.log(4.5)


def count_exact(n, p):
    """Exact number of boundary-marked quadrangulations, as a Python int.

    Single integer division with a zero-remainder check; the rational
    prefactors of the closed formula always cancel.  For n beyond about
    10^5 prefer log_count_exact_certified, which factors the count over
    primes instead of dividing multi-million-digit integers.
    """
    if n < 0 or p < 1:
        raise DomainError("need n >= 0 and p >= 1")
    if n - p + 1 < 0:
        return 0
    num = math.factorial(3 * p) * 3**n * math.factorial(2 * n + p - 1)
    den = (
        3**p
        * math.factorial(p)
        * math.factorial(2 * p - 1)
        * math.factorial(n - p + 1)
        * math.factorial(n + 2 * p)
    )
    q, r = divmod(num, den)
    if r != 0:
        raise ArithmeticError(f"count formula gave a non-integer at n={n}, p={p}")
    return q


def _prime_exponents_in_count(n, p):
    """Primes up to 2n+p and their exponents in the exact count.

    Legendre's formula applied to every factorial in the closed form; a
    negative exponent would contradict integrality and raises.
    """
    limit = max(3 * p, 2 * n + p - 1, 2)
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for q in range(2, int(limit**0.5) + 1):
        if sieve[q]:
            sieve[q * q :: q] = False
    primes = np.nonzero(sieve)[0].astype(np.int64)

    def legendre(m):
        e = np.zeros(len(primes), dtype=np.int64)
        pk = primes.copy()
        active = pk <= m
        while np.any(active):
            e[active] += m // pk[active]
            nxt = pk[active] * primes[active]
            pk = pk.copy()
            pk[active] = nxt
            active = active & (pk <= m)
        return e

    exps = (
        legendre(3 * p)
        - legendre(p)
        - legendre(2 * p - 1)
        + legendre(2 * n + p - 1)
        - legendre(n - p + 1)
        - legendre(n + 2 * p)
    )
    exps[primes == 3] += n - p
    if np.any(exps < 0):
        raise ArithmeticError(f"negative prime exponent at n={n}, p={p}")
    return primes, exps


def log_count_exact_certified(n, p):
    """ln of the exact count through its prime factorization.

    Exact integer arithmetic throughout (and a certificate of integrality:
    every prime exponent is nonnegative); only the final compensated sum
    of e_q ln q is floating point.  Cost is near-linear in n, which makes
    counts at n around 10^6 available in seconds.
    """
    if n < 0 or p < 1:
        raise DomainError("need n >= 0 and p >= 1")
    if n - p + 1 < 0:
        return -np.inf
    primes, exps = _prime_exponents_in_count(n, p)
    nz = exps > 0
    return math.fsum(np.log(primes[nz].astype(float)) * exps[nz].astype(float))


def log_count_exact(n, p):
    """ln of the exact count via log-gamma (for weight tables)."""
    n = np.asarray(n, dtype=float)
    pf = float(p)
    out = (
        (n - pf) * math.log(3.0)
        + scipy.special.gammaln(3 * pf + 1.0)
        - scipy.special.gammaln(pf + 1.0)
        - scipy.special.gammaln(2 * pf)
        + scipy.special.gammaln(2 * n + pf)
        - scipy.special.gammaln(n - pf + 2.0)
        - scipy.special.gammaln(n + 2 * pf + 1.0)
    )
    return np.where(n - pf + 1 < 0, -np.inf, out)


def log_count_asymptotic(n, p):
    """ln of the large-n asymptotic count at fixed p^2/n."""
    if n < 1 or p < 1:
        raise DomainError("need n >= 1 and p >= 1")
    return (
        n * math.log(12.0)
        + p * math.log(4.5)
        - 2.5 * math.log(n)
        + 0.5 * math.log(3.0 * p)
        - math.log(2.0 * math.pi)
        - 9.0 * p**2 / (4.0 * n)
    )


def log_bigint(x):
    """ln of a (possibly huge) positive integer without float overflow."""
    if x <= 0:
        raise DomainError("log_bigint needs a positive integer")
    bits = x.bit_length()
    if bits <= 900:
        return math.log(float(x))
    shift = bits - 60
    return math.log(float(x >> shift)) + shift * math.log(2.0)


def conjectured_log_density(volume, length, mu, mu_boundary):
    """ln of the unnormalized limit density of (V, l)."""
    v = np.asarray(volume, dtype=float)
    ell = np.asarray(length, dtype=float)
    return (
        -1.5 * np.log(v)
        + 0.5 * np.log(ell)
        - mu * v
        - mu_boundary * ell
        - 9.0 * ell**2 / (16.0 * v)
    )


# ---------------------------------------------------------------------------
# Boltzmann ensemble
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoltzmannConfig:
    """Mesh size and off-critical weights of the Boltzmann ensemble.

    The total weights are mu_bar = mu_c + a^2 mu per quadrilateral and
    mu_bar_boundary = mu_c_boundary + a mu_boundary per boundary edge
    (applied to all 2p edges).  The critical constants default to ln 12
    and (1/2) ln(9/2), the values that make the weighted counts exactly
    summable; both are configurable.

    With interior_marked (the default) each map additionally carries a
    uniformly marked quadrilateral, multiplying the weight by n.  That is
    the ensemble whose rescaled (V, l) law converges to
    V^{-3/2} l^{1/2} e^{-mu V - mu_b l - 9 l^2/(16 V)}; without the
    interior marking the V exponent would be -5/2.
    """

    a: float
    mu: float = 1.0
    mu_boundary: float = 1.0
    n_max: int | None = None
    p_max: int | None = None
    mu_c: float = BULK_CRITICAL_WEIGHT
    mu_c_boundary: float = BOUNDARY_CRITICAL_WEIGHT_PER_EDGE
    tail_bound: float = 1e-9
    interior_marked: bool = True

    def __post_init__(self):
        if self.a <= 0.0:
            raise ConfigurationError("mesh a must be positive")
        if self.mu < 0.0 or self.mu_boundary < 0.0:
            raise ConfigurationError("mu and mu_boundary must be nonnegative")
        if self.mu + self.mu_boundary <= 0.0:
            raise ConfigurationError("mu + mu_boundary must be positive")
        if self.n_max is None:
            if self.mu <= 0.0:
                raise ConfigurationError("n_max must be given when mu = 0")
            object.__setattr__(self, "n_max", int(math.ceil(20.0 / (self.a**2 * self.mu))))
        gauss_cap = int(math.ceil(math.sqrt(80.0 * self.n_max / 9.0))) + 8
        if self.p_max is None:
            if self.mu_boundary > 0.0:
                object.__setattr__(
                    self,
                    "p_max",
                    min(int(math.ceil(20.0 / (self.a * self.mu_boundary))), gauss_cap),
                )
            else:
                object.__setattr__(self, "p_max", gauss_cap)

    @property
    def mu_bar(self):
        return self.mu_c + self.a**2 * self.mu

    @property
    def mu_bar_boundary(self):
        return self.mu_c_boundary + self.a * self.mu_boundary


class BoltzmannSampler:
    """Exact two-stage sampler over the truncated (n, p) weight table.

    Builds the log-marginal over p by streaming one n-row at a time (the
    full table would not fit in memory at small mesh); sampling draws p
    from the marginal and then n from the regenerated row by inverse CDF.
    Construction validates the truncation tails against the configured
    bound and raises ConfigurationError if the caps are too small.
    """

    def __init__(self, cfg):
        self.cfg = cfg
        self._n = np.arange(cfg.n_max + 1, dtype=float)
        log_m = np.full(cfg.p_max, -np.inf)
        edge_n = np.full(cfg.p_max, -np.inf)
        for p in range(1, cfg.p_max + 1):
            row = self.log_weight_row(p)
            log_m[p - 1] = scipy.special.logsumexp(row)
            edge_n[p - 1] = row[-1]
        self.log_p_marginal = log_m
        self.log_total = float(scipy.special.logsumexp(log_m))
        self._check_tails(edge_n)

    def log_weight_row(self, p):
        """log weights of n = 0..n_max at half-perimeter p.

        e^{-mu_bar n - mu_bar_b 2p} T(n, p), times n when the ensemble
        carries an interior marked quadrilateral.
        """
        cfg = self.cfg
        row = (
            log_count_exact(self._n, p)
            - cfg.mu_bar * self._n
            - cfg.mu_bar_boundary * 2.0 * p
        )
        if cfg.interior_marked:
            with np.errstate(divide="ignore"):
                row = row + np.log(self._n)
        return row

    def _check_tails(self, edge_n):
        cfg = self.cfg
        # n-direction: geometric envelope with the exact per-step decay
        log_edge_n = float(scipy.special.logsumexp(edge_n))
        decay_n = cfg.mu_bar - math.log(12.0)  # asymptotic per-step log decay
        if decay_n <= 0.0:
            raise ConfigurationError("mu_bar must exceed the critical weight ln 12")
        log_tail_n = log_edge_n - math.log(-math.expm1(-decay_n))
        # p-direction: envelope from the last marginal entry
        log_edge_p = float(self.log_p_marginal[-1])
        if cfg.p_max >= 2:
            step = float(self.log_p_marginal[-1] - self.log_p_marginal[-2])
        else:
            step = -1.0
        if step >= -1e-3:
            step = -1e-3
        log_tail_p = log_edge_p - math.log(-math.expm1(step))
        worst = max(log_tail_n, log_tail_p) - self.log_total
        if worst > math.log(cfg.tail_bound):
            raise ConfigurationError(
                f"estimated truncation tail mass e^{worst:.1f} exceeds the bound "
                f"{cfg.tail_bound:g}; increase n_max/p_max"
            )

    def p_probabilities(self):
        return np.exp(self.log_p_marginal - self.log_total)

    def log_prob(self, n, p):
        if not (1 <= p <= self.cfg.p_max) or not (0 <= n <= self.cfg.n_max):
            return -np.inf
        return float(self.log_weight_row(p)[n] - self.log_total)

    def sample(self, n_draws, rng):
        """n_draws exact draws of (n, p); deterministic under the stream."""
        gen = rng.generator()
        probs = self.p_probabilities()
        p_draws = gen.choice(self.cfg.p_max, size=n_draws, p=probs) + 1
        u = gen.uniform(size=n_draws)
        n_draws_out = np.empty(n_draws, dtype=np.int64)
        for p in np.unique(p_draws):
            sel = p_draws == p
            row = self.log_weight_row(int(p))
            w = np.exp(row - row.max())
            cdf = np.cumsum(w)
            cdf /= cdf[-1]
            n_draws_out[sel] = np.searchsorted(cdf, u[sel], side="left")
        return n_draws_out, p_draws.astype(np.int64)


def boltzmann_sample(cfg, rng, n_draws=1):
    """Draws of (n, p) from the truncated Boltzmann law."""
    return BoltzmannSampler(cfg).sample(n_draws, rng)


# ---------------------------------------------------------------------------
# goodness of fit
# ---------------------------------------------------------------------------

@dataclass
class DensityReport:
    chi2: float
    dof: int
    p_value: float
    observed: np.ndarray
    expected: np.ndarray
    v_edges: np.ndarray
    l_edges: np.ndarray
    underpowered: np.ndarray
    n_in_range: int
    n_draws: int

    def summary(self):
        return {
            "chi2": self.chi2,
            "dof": self.dof,
            "p_value": self.p_value,
            "n_in_range": self.n_in_range,
            "n_draws": self.n_draws,
            "n_bins": int(self.observed.size),
            "n_underpowered": int(self.underpowered.sum()),
        }


def _density_bin_probs(sampler, v_edges, l_edges):
    """Lattice-summed conjectured-density mass of each (V, l) bin.

    Evaluates the density on the draw lattice (V, l) = (a^2 n, 2 a p) so
    that observed and expected are binned identically; normalization is
    over the binned range.
    """
    cfg = sampler.cfg
    n_lo = max(1, int(math.floor(v_edges[0] / cfg.a**2)))
    n_hi = min(cfg.n_max, int(math.ceil(v_edges[-1] / cfg.a**2)))
    n = np.arange(n_lo, n_hi + 1, dtype=float)
    v = cfg.a**2 * n
    nv, nl = len(v_edges) - 1, len(l_edges) - 1
    mass = np.zeros((nv, nl))
    v_idx = np.searchsorted(v_edges, v, side="right") - 1
    ok_v = (v_idx >= 0) & (v_idx < nv) & (v >= v_edges[0]) & (v < v_edges[-1])
    shift = None
    for p in range(1, cfg.p_max + 1):
        ell = 2.0 * cfg.a * p
        if not (l_edges[0] <= ell < l_edges[-1]):
            continue
        l_idx = int(np.searchsorted(l_edges, ell, side="right") - 1)
        logf = conjectured_log_density(v, ell, cfg.mu, cfg.mu_boundary)
        if shift is None:
            shift = float(logf.max())
        f = np.exp(logf - shift)
        np.add.at(mass[:, l_idx], v_idx[ok_v], f[ok_v])
    total = mass.sum()
    if total <= 0.0:
        raise ConfigurationError("no conjectured-density mass inside the binned range")
    return mass / total


def joint_density_check(
    cfg,
    n_draws,
    rng,
    bins=(20, 20),
    window=None,
    tail_quantile=0.998,
    min_expected=5.0,
):
    """Chi-square of rescaled Boltzmann draws against the limit density.

    Draws are rescaled to (V, l) = (a^2 n, 2 a p); the comparison runs on
    the macroscopic window V >= window[0], l >= window[1] (the limit
    density describes maps that are large on the mesh scale; the ensemble
    also carries an atom of microscopic maps that no continuum density
    reproduces).  The default window keeps maps of at least 600
    quadrilaterals and half-perimeter at least 12, where the count
    asymptotics are accurate to well under a percent.  Bin edges are draw
    quantiles inside the window with the length edges snapped to
    half-lattice; expected masses come from the density evaluated on the
    same lattice and normalized over the binned range.  Bins with expected
    count below `min_expected` are flagged underpowered and excluded
    (degrees of freedom adjust accordingly).
    """
    if window is None:
        window = (max(0.05, 600.0 * cfg.a**2), max(0.2, 24.0 * cfg.a))
    sampler = BoltzmannSampler(cfg)
    n_arr, p_arr = sampler.sample(n_draws, rng)
    volume = cfg.a**2 * n_arr
    length = 2.0 * cfg.a * p_arr

    lat = 2.0 * cfg.a
    win = (volume >= window[0]) & (length >= window[1])
    if win.sum() < 100:
        raise ConfigurationError(
            f"only {int(win.sum())} draws fall in the macroscopic window; increase n_draws"
        )
    qv = np.linspace(0.0, tail_quantile, bins[0] + 1)
    ql = np.linspace(0.0, tail_quantile, bins[1] + 1)
    v_edges = np.unique(np.quantile(volume[win], qv))
    l_edges = np.quantile(length[win], ql)
    l_edges = np.unique(np.floor(l_edges / lat) * lat + 0.5 * lat)
    l_edges[0] = window[1] - 0.5 * lat

    in_range = (
        (volume >= v_edges[0])
        & (volume < v_edges[-1])
        & (length >= l_edges[0])
        & (length < l_edges[-1])
    )
    observed = np.histogram2d(volume[in_range], length[in_range], bins=[v_edges, l_edges])[0]
    probs = _density_bin_probs(sampler, v_edges, l_edges)
    expected = probs * in_range.sum()

    use = expected >= min_expected
    chi2 = float(np.sum((observed[use] - expected[use]) ** 2 / expected[use]))
    dof = int(use.sum()) - 1
    p_value = float(scipy.stats.chi2.sf(chi2, dof))
    return DensityReport(
        chi2=chi2,
        dof=dof,
        p_value=p_value,
        observed=observed,
        expected=expected,
        v_edges=v_edges,
        l_edges=l_edges,
        underpowered=~use,
        n_in_range=int(in_range.sum()),
        n_draws=n_draws,
    )


def histogram_check(cfg, n_draws, rng, min_expected=100.0):
    """Exact-law histogram test of the sampler against its own table.

    Compares observed cell counts with table probabilities on every (n, p)
    cell whose expected count reaches `min_expected`; returns (max |z|,
    number of cells tested) where z is the deviation in multinomial
    standard errors.
    """
    sampler = BoltzmannSampler(cfg)
    n_arr, p_arr = sampler.sample(n_draws, rng)
    zmax = 0.0
    n_cells = 0
    thresh = min_expected / n_draws
    for p in range(1, cfg.p_max + 1):
        row = np.exp(sampler.log_weight_row(p) - sampler.log_total)
        hot = np.nonzero(row >= thresh)[0]
        if len(hot) == 0:
            continue
        counts = np.bincount(n_arr[p_arr == p], minlength=cfg.n_max + 1)
        for n in hot:
            prob = row[n]
            se = math.sqrt(n_draws * prob * (1.0 - prob))
            z = abs(counts[n] - n_draws * prob) / se
            zmax = max(zmax, z)
            n_cells += 1
    return zmax, n_cells
