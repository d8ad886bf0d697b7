"""Exact scalar random variate samplers on top of ``Generator.random()``.

Every random draw in the package (Poisson deposit counts, binomial
cancellation thinning, Pareto run lengths, P_zeta volume fractions, fair
coins) comes from these functions, in both the pure-Python book operations
and the compiled simulation kernel.  A single pathway keeps the two step
implementations bit-identical for the same seed and makes runs reproducible.

All samplers are inverse-CDF based and exact; none approximates.
"""

import math

import numpy as np
from numba import njit

#: run lengths above this are truncated (hit with negligible probability
#: for alpha in the empirical range at desk scales).
RUN_LENGTH_CAP = 10_000_000

#: size of the precomputed (1-p)^n table used by the binomial sampler.
POW_TABLE_SIZE = 1 << 16


def binomial_table(p: float):
    """Precompute ``(1-p)^n`` and the largest safely representable n.

    Returns ``(table, n_safe, odds)`` where ``odds = p/(1-p)``.  The BINV
    recursion starts from ``table[n]`` and must not underflow; draws with
    ``n >= n_safe`` are split into chunks of ``n_safe - 1`` by the sampler.
    Requires ``0 <= p <= 0.5`` (callers flip larger probabilities).
    """
    if not 0.0 <= p <= 0.5:
        raise ValueError("binomial_table requires 0 <= p <= 0.5")
    if p == 0.0:
        return np.ones(2), 2, 0.0
    log_q = math.log1p(-p)
    # keep table[n] > ~1e-282 so the pmf recursion stays in normal floats
    n_safe = min(POW_TABLE_SIZE, int(650.0 / -log_q) + 1)
    table = np.exp(np.arange(n_safe, dtype=np.float64) * log_q)
    return table, n_safe, p / (1.0 - p)


@njit(cache=True)
def poisson_draw(rng, lam):
    """Poisson(lam) by inverse-CDF stepping, chunked so exp() never underflows."""
    if lam <= 0.0:
        return 0
    total = 0
    remaining = lam
    while remaining > 30.0:
        total += _poisson_small(rng, 30.0)
        remaining -= 30.0
    return total + _poisson_small(rng, remaining)


@njit(cache=True)
def _poisson_small(rng, lam):
    u = rng.random()
    p = math.exp(-lam)
    s = p
    k = 0
    while u > s:
        k += 1
        p *= lam / k
        s += p
    return k


@njit(cache=True)
def binomial_draw(rng, n, table, n_safe, odds):
    """Binomial(n, p) given a table from :func:`binomial_table`.

    Exact for any n: draws with n >= n_safe are summed over independent
    chunks (Binomial(n, p) = sum of binomials over a partition of n).
    """
    if n <= 0:
        return 0
    total = 0
    while n >= n_safe:
        total += _binv(rng, n_safe - 1, table, odds)
        n -= n_safe - 1
    return total + _binv(rng, n, table, odds)


@njit(cache=True)
def _binv(rng, n, table, odds):
    if n <= 0 or odds <= 0.0:
        return 0
    u = rng.random()
    pk = table[n]
    s = pk
    k = 0
    while u > s and k < n:
        k += 1
        pk *= ((n - k + 1) * odds) / k
        s += pk
    return k


@njit(cache=True)
def run_length_draw(rng, alpha):
    """Same-sign run length: ceil(X), X Pareto with tail P(X > x) = x^-alpha.

    P(L > l) ~ l^-alpha, so the run-length density exponent is alpha + 1 and
    the induced sign autocorrelation decays with gamma = alpha - 1.
    """
    u = rng.random()
    x = (1.0 - u) ** (-1.0 / alpha)
    if x >= RUN_LENGTH_CAP:
        return RUN_LENGTH_CAP
    return int(math.ceil(x))


#: table size for the discrete power-law run-length CDF
PMF_TABLE_SIZE = 4096


def run_length_pmf_table(alpha: float):
    """CDF table for the discrete power law P(L = l) propto l^-(alpha+1).

    Returns (cdf, c_tail): ``cdf[l-1] = P(L <= l)`` for l up to the table
    size; beyond it the tail continues as P(L > l) = c_tail * l^-alpha
    (matched continuously at the table edge, asymptotically exact).
    """
    if alpha <= 1.0:
        raise ValueError("alpha must exceed 1")
    ls = np.arange(1, PMF_TABLE_SIZE + 1, dtype=np.float64)
    pmf = ls ** -(alpha + 1.0)
    # normalization: sum over the table plus the analytic tail integral
    tail_mass = ((PMF_TABLE_SIZE + 0.5) ** -alpha) / alpha
    z = pmf.sum() + tail_mass
    cdf = np.cumsum(pmf) / z
    c_tail = (1.0 - cdf[-1]) * PMF_TABLE_SIZE ** alpha
    return cdf, c_tail


@njit(cache=True)
def run_length_pmf_draw(rng, alpha, cdf, c_tail):
    """Draw from the discrete power law via the table from
    :func:`run_length_pmf_table` (continuous tail beyond it)."""
    u = rng.random()
    n = cdf.shape[0]
    if u < cdf[n - 1]:
        lo = 0
        hi = n - 1
        while lo < hi:
            mid = (lo + hi) >> 1
            if cdf[mid] < u:
                lo = mid + 1
            else:
                hi = mid
        return lo + 1
    x = (c_tail / (1.0 - u)) ** (1.0 / alpha)
    if x >= RUN_LENGTH_CAP:
        return RUN_LENGTH_CAP
    return int(math.ceil(x))


@njit(cache=True)
def fraction_draw(rng, zeta):
    """Volume fraction f with density zeta*(1-f)^(zeta-1) on (0, 1).

    Inverse CDF: f = 1 - u^(1/zeta).  Redraws the measure-zero edge cases so
    the result is strictly inside (0, 1).
    """
    while True:
        u = rng.random()
        if u <= 0.0:
            continue
        f = 1.0 - u ** (1.0 / zeta)
        if 0.0 < f < 1.0:
            return f


@njit(cache=True)
def sign_draw(rng):
    """Fair coin on {-1, +1}."""
    if rng.random() < 0.5:
        return 1
    return -1


@njit(cache=True)
def uniform_bin(rng, n_bins):
    """Uniform integer in [0, n_bins)."""
    return int(rng.random() * n_bins)
