"""Interaction-intensity inference under the symmetric (mean-field) family.

The test statistic for H0: iota >= iota0 is

    2 * (iota0 - 1/2) * ||S_t - mean(S_t) * 1||^2 / mean(S_t)

which is asymptotically chi-square with N - 1 degrees of freedom when the
spectral-gap condition holds, i.e. when iota0 > 1/2.  The statistic grows
linearly in iota0, so one statistic serves the whole one-sided sweep.

Also here: a self-contained chi-square survival function (regularized
incomplete gamma via series / continued fraction), the maximum-likelihood
estimator of the intensity, and the gamma-function ratio used as a t^x
scaling diagnostic.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    AllZeroCounts,
    LikelihoodDegenerate,
    NegativeArgument,
    NoConvergence,
    NonpositiveX,
    ParameterOutOfRange,
)
from .model import mean_field_matrix

_GAMMA_ITER_TOL = 1e-14
_GAMMA_MAX_ITER = 500
_MLE_GRID_STEP = 0.01
_MLE_XTOL = 1e-5
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class TestResult:
    """Outcome of the intensity test at one iota0.

    validity records the spectral-gap condition iota0 > 1/2; results with
    validity False are exploratory (the chi-square law is not guaranteed)
    but still reported rather than raised.
    """

    statistic: float
    df: int
    p_value: float
    iota0: float
    delta0: float
    validity: bool


@dataclass(frozen=True, eq=False)
class MleResult:
    """Maximum-likelihood estimate of the interaction intensity.

    converged is False when the likelihood is flat or the maximizer sits
    at the open lower end of the search grid.
    """

    iota_hat: float
    log_likelihood: float
    gamma_star_used: float
    converged: bool


def chisq_sf(x: float, k: int) -> float:
    """Chi-square survival function with k degrees of freedom.

    Regularized incomplete gamma: the lower series for x < k + 1, the
    upper continued fraction (modified Lentz) otherwise.  Absolute error
    is well below 1e-10 across the usable range; at k = 2 the value is
    exp(-x/2) to full precision.
    """
    if x < 0:
        raise NegativeArgument(f"chi-square statistic must be >= 0, got {x}")
    if k < 1 or int(k) != k:
        raise ParameterOutOfRange(f"degrees of freedom must be a positive "
                                  f"integer, got {k}")
    if x == 0.0:
        return 1.0
    a = 0.5 * k
    z = 0.5 * x
    if x < k + 1.0:
        return 1.0 - _gamma_p_series(a, z)
    return _gamma_q_contfrac(a, z)


def _gamma_p_series(a: float, z: float) -> float:
    # P(a, z) = z^a e^-z / Gamma(a) * sum_n z^n / (a (a+1) ... (a+n))
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_GAMMA_MAX_ITER):
        ap += 1.0
        term *= z / ap
        total += term
        if abs(term) < abs(total) * _GAMMA_ITER_TOL:
            return total * math.exp(-z + a * math.log(z) - math.lgamma(a))
    raise NoConvergence("incomplete gamma series did not converge")


def _gamma_q_contfrac(a: float, z: float) -> float:
    # Q(a, z) via the continued fraction, modified Lentz iteration
    tiny = 1e-300
    b = z + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, _GAMMA_MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_ITER_TOL:
            return h * math.exp(-z + a * math.log(z) - math.lgamma(a))
    raise NoConvergence("incomplete gamma continued fraction did not converge")


def mean_field_test(S, t: int, iota0: float, gamma_star: float) -> TestResult:
    """One-sided intensity test on final success counts S at step t.

    Small p-values reject H0: iota >= iota0.  iota0 outside (1/2, 1]
    yields a flagged result (validity False) instead of an error so
    exploratory sweeps can cross the boundary; the statistic is then
    reported as computed (possibly negative) with p = 1.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 1 or S.shape[0] < 2:
        raise ParameterOutOfRange("need a count vector with N >= 2")
    if not (0.0 < gamma_star <= 1.0):
        raise ParameterOutOfRange(f"gamma_star must be in (0, 1], got {gamma_star}")
    n = S.shape[0]
    s_tilde = float(S.sum()) / n
    if s_tilde <= 0.0:
        raise AllZeroCounts("all success counts are zero at the tested step")
    delta0 = iota0 - 0.5
    statistic = 2.0 * delta0 * float(np.sum((S - s_tilde) ** 2)) / s_tilde
    validity = 0.5 < iota0 <= 1.0
    p_value = chisq_sf(statistic, n - 1) if statistic >= 0.0 else 1.0
    return TestResult(statistic=statistic, df=n - 1, p_value=p_value,
                      iota0=float(iota0), delta0=float(delta0),
                      validity=validity)


def mle_iota(X, gamma_star: float, theta=None, c=None,
             kernel=None) -> MleResult:
    """Maximize the joint Bernoulli likelihood over the intensity.

    X is a success matrix (rows in time order, one 0/1 column per
    category; a SuccessMatrix object or a plain array).  For each
    candidate intensity, probabilities are rebuilt from the running
    counts of X under the symmetric interaction family with the supplied
    gamma_star, and theta, c default to 1/2 and 1.  A 0.01-step grid scan
    is refined by golden-section search to 1e-5; ties resolve to the
    smallest intensity.
    """
    x = np.ascontiguousarray(getattr(X, "X", X), dtype=np.uint8)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ParameterOutOfRange("X must be a non-empty (steps, N) matrix")
    if not (0.0 < gamma_star <= 1.0):
        raise ParameterOutOfRange(f"gamma_star must be in (0, 1], got {gamma_star}")
    n = x.shape[1]
    theta = np.full(n, 0.5) if theta is None else np.asarray(theta, dtype=np.float64)
    c = np.ones(n) if c is None else np.asarray(c, dtype=np.float64)
    if np.any(theta <= 0) or np.any(c < theta):
        raise ParameterOutOfRange("need theta_h > 0 and c_h >= theta_h")
    kernel = kernel or _kernels

    def loglik(iota: float) -> float:
        ll = kernel.mean_field_loglik(x, theta, c, gamma_star, iota)
        if math.isnan(ll):
            raise LikelihoodDegenerate(
                "a probability of exactly 1 contradicts an observed failure")
        return ll

    grid = np.round(np.arange(1, int(round(1.0 / _MLE_GRID_STEP)) + 1)
                    * _MLE_GRID_STEP, 10)
    values = np.array([loglik(i) for i in grid])
    best = int(np.argmax(values))  # first maximum: smallest iota wins ties
    flat = float(values.max() - values.min()) <= 1e-12 * max(1.0, abs(values[0]))

    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.size - 1)]
    iota_hat, ll_hat = _golden_max(loglik, float(lo), float(hi))
    if values[best] > ll_hat or (values[best] == ll_hat and grid[best] < iota_hat):
        iota_hat, ll_hat = float(grid[best]), float(values[best])
    converged = not flat and iota_hat > grid[0] + 1e-9
    return MleResult(iota_hat=float(iota_hat), log_likelihood=float(ll_hat),
                     gamma_star_used=float(gamma_star), converged=converged)


def _golden_max(f, lo: float, hi: float, xtol: float = _MLE_XTOL):
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > xtol:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = f(x2)
    x = x1 if f1 >= f2 else x2
    return (x, f1 if f1 >= f2 else f2)


def zeta(t: int, x: float) -> float:
    """Gamma-function ratio Gamma(t + x) / Gamma(t), asymptotically t^x.

    Defined as 1 at t = 0.  Computed from a log-gamma difference; for
    t >= 20 the difference is evaluated through the Stirling series
    directly, avoiding the catastrophic cancellation of subtracting two
    large log-gamma values (keeps relative error near 1e-15 even at
    t = 10^6 and beyond).
    """
    if x <= 0:
        raise NonpositiveX(f"exponent must be > 0, got {x}")
    if t < 0 or int(t) != t:
        raise ParameterOutOfRange(f"t must be a non-negative integer, got {t}")
    if t == 0:
        return 1.0
    if t < 20:
        return math.exp(math.lgamma(t + x) - math.lgamma(t))
    return math.exp(_lgamma_diff_large(float(t), float(x)))


def _stirling_tail(z: float) -> float:
    # Bernoulli-number corrections of ln Gamma(z), accurate for z >= 20
    z2 = z * z
    return (1.0 / (12.0 * z)
            - 1.0 / (360.0 * z * z2)
            + 1.0 / (1260.0 * z * z2 * z2)
            - 1.0 / (1680.0 * z * z2 * z2 * z2))


def _lgamma_diff_large(t: float, x: float) -> float:
    # lgamma(t + x) - lgamma(t) without forming either value
    lead = (t - 0.5) * math.log1p(x / t) + x * math.log(t + x) - x
    return lead + _stirling_tail(t + x) - _stirling_tail(t)
