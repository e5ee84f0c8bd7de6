"""Log-log growth fits and the quantities read off them.

Success counters growing like S_t ~ A * t^a are straight lines in
log10-log10 coordinates, so everything here is least squares on
(log10 t, log10 S): a free model with one line per category, a common
model sharing a single slope across categories (the joint growth
exponent), intercept differences turned into centrality-score ratios,
and fixed-slope fits of the per-source-category counters whose intercept
differences estimate the source-label odds.

Fits accept simulated trajectories, binary success matrices, or raw
(t, counts) series; counts may be real-valued (ensemble means, synthetic
power laws).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDesign,
    EmptySample,
    MissingSplit,
    ParameterOutOfRange,
)
from .simulate import Trajectory


@dataclass(frozen=True, eq=False)
class LogLogSample:
    """Sampled (t, counts) points for log-log fitting.

    ts is strictly increasing; counts[i, h] the counter of category h at
    ts[i]; split_counts[i, k, h], when present, the per-source-category
    counters.  labels name the categories (defaults to 1..N as strings).
    """

    ts: np.ndarray
    counts: np.ndarray
    split_counts: np.ndarray | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "ts", np.asarray(self.ts, dtype=np.int64))
        object.__setattr__(self, "counts",
                           np.asarray(self.counts, dtype=np.float64))
        if self.split_counts is not None:
            object.__setattr__(self, "split_counts",
                               np.asarray(self.split_counts, dtype=np.float64))
        if np.any(np.diff(self.ts) <= 0):
            raise ParameterOutOfRange("sample ts must be strictly increasing")
        if self.labels is None:
            object.__setattr__(
                self, "labels",
                tuple(str(h + 1) for h in range(self.counts.shape[1])))

    @property
    def n(self) -> int:
        return self.counts.shape[1]


@dataclass(frozen=True, eq=False)
class FitResult:
    """Free and common-slope regression output.

    slopes and r2_free describe the per-category model; common_slope,
    intercepts and r2_common the shared-slope model (one intercept per
    category).  Both R^2 are computed on the stacked log10-counts, so the
    free value can never fall below the common one.  slope_sd is the
    dispersion (sample standard deviation) of the per-category slopes.
    """

    slopes: np.ndarray
    common_slope: float
    intercepts: np.ndarray
    r2_free: float
    r2_common: float
    slope_sd: float
    labels: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class SplitFitResult:
    """Fixed-slope fits of the per-source counters.

    intercepts[k, h] is the log10 intercept of the (source k, target h)
    series under the pinned slope; pi_ratios[k, h] the implied source
    odds 10^(intercepts[k, h] - intercepts[baseline, h]).  Series with no
    positive points carry NaN.
    """

    gamma_star: float
    intercepts: np.ndarray
    pi_ratios: np.ndarray
    baseline: int
    r2_common: float
    r2_free: float
    labels: tuple[str, ...]


def subsample(source, size: int) -> LogLogSample:
    """Geometrically spaced subsample of a counts series.

    Accepts a Trajectory, a success matrix (anything with .X and
    .categories, rows in time order), or a (ts, counts[, split]) tuple.
    Points where any category count is zero are excluded (their logs are
    undefined); the returned size is therefore at most the requested one.
    """
    if size < 10:
        raise ParameterOutOfRange(f"subsample size must be >= 10, got {size}")
    ts, counts, split, labels = _series_from(source)
    pos = np.flatnonzero(np.all(counts > 0, axis=1))
    if pos.size == 0:
        raise EmptySample("all points have at least one zero count")
    ts = ts[pos]
    counts = counts[pos]
    split = None if split is None else split[pos]

    lo, hi = math.log10(ts[0]), math.log10(ts[-1])
    targets = np.unique(np.round(10.0 ** np.linspace(lo, hi, size)).astype(np.int64))
    take = np.unique(np.searchsorted(ts, targets, side="left").clip(0, ts.size - 1))
    return LogLogSample(ts=ts[take], counts=counts[take],
                        split_counts=None if split is None else split[take],
                        labels=labels)


def fit_heaps(sample: LogLogSample) -> FitResult:
    """Free and common-slope least squares of log10 counts on log10 t.

    Per category, only points with a positive count enter (at least three
    are required).  The common model keeps one intercept per category and
    a single slope; its closed form is the pooled within-category
    regression.  R^2 of both models is one minus the residual sum over
    the total sum around the grand mean of the stacked response.
    """
    xs, ys = _log_series(sample)
    n = sample.n
    slopes = np.empty(n)
    sxx_tot = 0.0
    sxy_tot = 0.0
    for h in range(n):
        x, y = xs[h], ys[h]
        if x.size < 3:
            raise DegenerateDesign(
                f"category {sample.labels[h]} has {x.size} positive points; "
                f"need >= 3")
        sxx = float(np.sum((x - x.mean()) ** 2))
        if sxx == 0.0:
            raise DegenerateDesign(
                f"category {sample.labels[h]} has constant t")
        sxy = float(np.sum((x - x.mean()) * (y - y.mean())))
        slopes[h] = sxy / sxx
        sxx_tot += sxx
        sxy_tot += sxy
    common = sxy_tot / sxx_tot
    intercepts = np.array([ys[h].mean() - common * xs[h].mean()
                           for h in range(n)])

    ally = np.concatenate(ys)
    sst = float(np.sum((ally - ally.mean()) ** 2))
    if sst == 0.0:
        raise DegenerateDesign("stacked counts are constant")
    ssr_free = 0.0
    ssr_common = 0.0
    for h in range(n):
        x, y = xs[h], ys[h]
        a_free = y.mean() - slopes[h] * x.mean()
        ssr_free += float(np.sum((y - a_free - slopes[h] * x) ** 2))
        ssr_common += float(np.sum((y - intercepts[h] - common * x) ** 2))
    slope_sd = float(np.std(slopes, ddof=1)) if n > 1 else 0.0
    return FitResult(slopes=slopes, common_slope=float(common),
                     intercepts=intercepts,
                     r2_free=1.0 - ssr_free / sst,
                     r2_common=1.0 - ssr_common / sst,
                     slope_sd=slope_sd, labels=sample.labels)


def centrality_ratios(fit: FitResult, baseline: int) -> np.ndarray:
    """Centrality-score ratios from common-slope intercept differences.

    ratio[h] = 10^(intercept_h - intercept_baseline); the baseline entry
    is exactly one.  baseline is a 0-based category index.
    """
    if not (0 <= baseline < len(fit.intercepts)):
        raise ParameterOutOfRange(f"baseline index {baseline} out of range")
    ratios = 10.0 ** (fit.intercepts - fit.intercepts[baseline])
    ratios[baseline] = 1.0
    return ratios


def fit_split(sample: LogLogSample, gamma_star: float,
              baseline: int = -1) -> SplitFitResult:
    """Fixed-slope intercepts of every (source, target) counter series.

    With the slope pinned to gamma_star, the least-squares intercept of a
    series is the mean of log10 S - gamma_star * log10 t over its
    positive points.  Intercept differences against the baseline source
    estimate the source-label odds, one estimate per target category.
    """
    if sample.split_counts is None:
        raise MissingSplit("sample carries no split counts")
    n = sample.n
    baseline = range(n)[baseline]
    logt = np.log10(sample.ts.astype(np.float64))
    intercepts = np.full((n, n), np.nan)
    ssr_common = 0.0
    ssr_free = 0.0
    ally = []
    for k in range(n):
        for h in range(n):
            series = sample.split_counts[:, k, h]
            mask = series > 0
            if mask.sum() == 0:
                continue
            y = np.log10(series[mask])
            x = logt[mask]
            intercepts[k, h] = float(np.mean(y - gamma_star * x))
            ssr_common += float(np.sum((y - intercepts[k, h] - gamma_star * x) ** 2))
            ally.append(y)
            if mask.sum() >= 2 and np.ptp(x) > 0:
                sxx = float(np.sum((x - x.mean()) ** 2))
                b = float(np.sum((x - x.mean()) * (y - y.mean()))) / sxx
                a = y.mean() - b * x.mean()
                ssr_free += float(np.sum((y - a - b * x) ** 2))
    if not ally:
        raise EmptySample("every split series is zero")
    ally = np.concatenate(ally)
    sst = float(np.sum((ally - ally.mean()) ** 2))
    r2_common = 1.0 - ssr_common / sst if sst > 0 else math.nan
    r2_free = 1.0 - ssr_free / sst if sst > 0 else math.nan
    pi_ratios = 10.0 ** (intercepts - intercepts[baseline, :])
    return SplitFitResult(gamma_star=float(gamma_star), intercepts=intercepts,
                          pi_ratios=pi_ratios, baseline=baseline,
                          r2_common=r2_common, r2_free=r2_free,
                          labels=sample.labels)


# -- series extraction --------------------------------------------------------

def _series_from(source):
    if isinstance(source, LogLogSample):
        return source.ts, source.counts, source.split_counts, source.labels
    if isinstance(source, Trajectory):
        return source.ts, source.S.astype(np.float64), source.S_split, None
    if hasattr(source, "X") and hasattr(source, "categories"):
        return _series_from_success_matrix(source)
    if isinstance(source, tuple):
        ts = np.asarray(source[0], dtype=np.int64)
        counts = np.asarray(source[1], dtype=np.float64)
        split = np.asarray(source[2], dtype=np.float64) if len(source) > 2 else None
        return ts, counts, split, None
    raise ParameterOutOfRange(
        f"cannot extract a counts series from {type(source).__name__}")


def _series_from_success_matrix(sm):
    x = np.asarray(sm.X, dtype=np.int64)
    rows, n = x.shape
    ts = np.arange(1, rows + 1, dtype=np.int64)
    counts = np.cumsum(x, axis=0)
    labels = tuple(sm.labels)
    split = np.zeros((rows, n, n), dtype=np.float64)
    for k, lab in enumerate(labels):
        mask = np.array([cat == lab for cat in sm.categories])
        if mask.any():
            split[:, k, :] = np.cumsum(x * mask[:, None], axis=0)
    return ts, counts.astype(np.float64), split, labels


def _log_series(sample: LogLogSample):
    logt = np.log10(sample.ts.astype(np.float64))
    xs, ys = [], []
    for h in range(sample.n):
        mask = sample.counts[:, h] > 0
        xs.append(logt[mask])
        ys.append(np.log10(sample.counts[mask, h]))
    return xs, ys
