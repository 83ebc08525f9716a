"""Special-function kernels for chunk and document level detection.

Everything here is exact-or-stable scalar math on top of ``math.lgamma``:

* binomial lower/upper tails, summed in log space with compensated
  (Kahan) accumulation so the n <= 30 cases agree with exact rational
  enumeration to 1e-12 and large-n tails do not underflow;
* the max-of-s-binomials CDF, which is just the single-trial CDF raised
  to the s-th power;
* the chunk p-value P(Z >= z_obs) = 1 - F(z_obs - 1)^s, evaluated through
  ``log1p``/``expm1`` so values down to 1e-300 keep full relative accuracy;
* the chi-square survival function for even degrees of freedom (the only
  case Fisher's combination produces), via its closed Poisson-sum form;
* Fisher's combined probability test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, InputError

MIN_PVALUE = 1e-300


@dataclass(frozen=True)
class ChunkTestParams:
    """Null model of one chunk: n tokens, green probability p, s seeds."""

    n: int
    p: float
    s: int

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"chunk length must be >= 1, got {self.n}")
        if not 0.0 < self.p < 1.0:
            raise DomainError(f"green probability must lie in (0,1), got {self.p}")
        if self.s < 1:
            raise DomainError(f"seed count must be >= 1, got {self.s}")


def _log_binom_pmf(j: int, n: int, logp: float, log1mp: float) -> float:
    return (
        math.lgamma(n + 1)
        - math.lgamma(j + 1)
        - math.lgamma(n - j + 1)
        + j * logp
        + (n - j) * log1mp
    )


def _kahan_sum(values) -> float:
    total = 0.0
    comp = 0.0
    for v in values:
        y = v - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def _log_binom_tail(lo: int, hi: int, n: int, p: float) -> float:
    """log of sum_{j=lo}^{hi} C(n,j) p^j (1-p)^(n-j), -inf if empty."""
    if lo > hi:
        return -math.inf
    logp = math.log(p)
    log1mp = math.log1p(-p)
    terms = [_log_binom_pmf(j, n, logp, log1mp) for j in range(lo, hi + 1)]
    m = max(terms)
    if m == -math.inf:
        return -math.inf
    return m + math.log(_kahan_sum(math.exp(t - m) for t in terms))


def binom_cdf(z: int, n: int, p: float) -> float:
    """P(X <= z) for X ~ Binomial(n, p); z < 0 gives 0, z >= n gives 1."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0,1), got {p}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if z < 0:
        return 0.0
    if z >= n:
        return 1.0
    # Sum whichever tail is shorter and complement if needed: both the sum
    # and its complement are then accurate near 0 and near 1.
    if z <= n // 2:
        return min(1.0, math.exp(_log_binom_tail(0, z, n, p)))
    return max(0.0, -math.expm1(_log_binom_tail(z + 1, n, n, p)))


def binom_sf(z: int, n: int, p: float) -> float:
    """P(X > z), the exact complement of :func:`binom_cdf`."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0,1), got {p}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if z < 0:
        return 1.0
    if z >= n:
        return 0.0
    if z <= n // 2:
        return max(0.0, -math.expm1(_log_binom_tail(0, z, n, p)))
    return min(1.0, math.exp(_log_binom_tail(z + 1, n, n, p)))


def max_binom_cdf(z: int, params: ChunkTestParams) -> float:
    """CDF of the maximum of ``s`` independent Binomial(n, p) draws."""
    return binom_cdf(z, params.n, params.p) ** params.s


def chunk_pvalue(z_obs: int, params: ChunkTestParams) -> float:
    """P(max of s binomial counts >= z_obs) under the null.

    Computed as -expm1(s * log(F(z_obs - 1))) with the log taken on
    whichever of F or 1-F is smaller, so tiny p-values (hard-watermarked
    chunks) and p-values near 1 are both fully accurate.
    """
    if z_obs < 0 or z_obs > params.n:
        raise InputError(
            f"observed count {z_obs} outside [0, {params.n}]"
        )
    if z_obs == 0:
        return 1.0
    n, p, s = params.n, params.p, params.s
    cdf = binom_cdf(z_obs - 1, n, p)
    if cdf <= 0.0:
        return 1.0
    if cdf >= 0.5:
        log_cdf = math.log1p(-binom_sf(z_obs - 1, n, p))
    else:
        log_cdf = math.log(cdf)
    return min(1.0, -math.expm1(s * log_cdf))


def chisq_sf(x: float, df: int) -> float:
    """Survival function of chi-square with even df.

    Uses the closed form exp(-x/2) * sum_{i<df/2} (x/2)^i / i!, accumulated
    in log space so that large statistics from long documents do not
    overflow the partial sums.
    """
    if df < 2 or df % 2 != 0:
        raise DomainError(f"df must be a positive even integer, got {df}")
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    if x == 0.0:
        return 1.0
    m = x / 2.0
    logm = math.log(m)
    terms = [i * logm - math.lgamma(i + 1) for i in range(df // 2)]
    peak = max(terms)
    total = _kahan_sum(math.exp(t - peak) for t in terms)
    return min(1.0, math.exp(-m + peak + math.log(total)))


def fisher_combine(pvals: list[float]) -> tuple[float, float]:
    """Fisher's combined probability test.

    Returns (statistic, document p-value) where the statistic is
    -2 * sum(ln p_i) and the p-value is its chi-square survival value at
    2 * len(pvals) degrees of freedom.  Inputs must lie in (0, 1]; callers
    clamp to MIN_PVALUE beforehand.
    """
    if not pvals:
        raise InputError("fisher_combine needs at least one p-value")
    for p in pvals:
        if not 0.0 < p <= 1.0:
            raise DomainError(f"p-value outside (0,1]: {p}")
    statistic = -2.0 * _kahan_sum(math.log(p) for p in pvals)
    statistic = max(0.0, statistic)
    return statistic, chisq_sf(statistic, 2 * len(pvals))


def clamp_pvalue(p: float) -> float:
    """Clamp into [MIN_PVALUE, 1] before taking logs."""
    return min(1.0, max(MIN_PVALUE, p))
