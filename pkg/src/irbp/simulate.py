"""Trajectory generation for coupled self-reinforcing Bernoulli processes.

Dynamics: at step t+1, process h succeeds with probability

    P_{t,h} = (theta_h + sum_j gamma_{j,h} * S_{t,j}) / (c_h + t)

where S_{t,j} counts the successes of process j up to step t.  The N
outcomes of one step are conditionally independent given the past.  A
shock replaces (theta_h, c_h) for one process at a scheduled step and the
new values persist.  Optionally each step also draws an independent
source-category label, feeding the per-source success counters.

Replica-level parallelism only: every replica owns its Philox stream (see
irbp._rng) and its whole state, so ensembles are reproducible under any
thread count.
"""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._rng import replica_bitgen
from .errors import (
    IncompatibleSchedules,
    InstanceTooLarge,
    ParameterOutOfRange,
    ScheduleOutOfRange,
)
from .model import InteractionMatrix

PI_SUM_TOL = 1e-12
ENUM_MAX_PATHS = 2 ** 20


@dataclass(frozen=True, eq=False)
class ShockSpec:
    """One-time parameter replacement for a single process.

    process is the 1-based process number (matching the S_1..S_N
    trajectory columns).  The new values take effect when the success
    probabilities of step t_shock are computed and persist afterwards.
    """

    t_shock: int
    process: int
    theta_new: float
    c_new: float


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Initial-condition parameters and optional extras.

    theta_h > 0 and c_h >= theta_h guarantee starting probabilities
    theta_h / c_h in (0, 1].  pi, when present, is the source-category
    law (all components in (0, 1), summing to one) and switches on
    per-source success tracking.
    """

    theta: np.ndarray
    c: np.ndarray
    pi: np.ndarray | None = None
    shocks: tuple[ShockSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "theta", np.array(self.theta, dtype=np.float64))
        object.__setattr__(self, "c", np.array(self.c, dtype=np.float64))
        if self.pi is not None:
            object.__setattr__(self, "pi", np.array(self.pi, dtype=np.float64))
        object.__setattr__(self, "shocks", tuple(self.shocks))
        self.theta.setflags(write=False)
        self.c.setflags(write=False)
        n = self.theta.shape[0]
        if self.c.shape != (n,):
            raise ParameterOutOfRange(
                f"theta has {n} components but c has {self.c.shape}")
        if np.any(self.theta <= 0):
            raise ParameterOutOfRange("every theta_h must be > 0")
        if np.any(self.c < self.theta):
            raise ParameterOutOfRange("every c_h must be >= theta_h")
        if self.pi is not None:
            self.pi.setflags(write=False)
            if self.pi.shape != (n,):
                raise ParameterOutOfRange(
                    f"pi must have {n} components, got {self.pi.shape}")
            if np.any(self.pi <= 0) or np.any(self.pi >= 1):
                raise ParameterOutOfRange("every pi_k must lie in (0, 1)")
            if abs(self.pi.sum() - 1.0) > PI_SUM_TOL:
                raise ParameterOutOfRange(
                    f"pi must sum to 1 within {PI_SUM_TOL}, got {self.pi.sum()!r}")
        seen = set()
        for i, s in enumerate(self.shocks):
            if s.t_shock < 1:
                raise ParameterOutOfRange(f"shocks[{i}].t_shock must be >= 1")
            if not (1 <= s.process <= n):
                raise ParameterOutOfRange(
                    f"shocks[{i}].process must be in 1..{n}, got {s.process}")
            if s.theta_new <= 0:
                raise ParameterOutOfRange(f"shocks[{i}].theta_new must be > 0")
            if s.c_new < s.theta_new:
                raise ParameterOutOfRange(
                    f"shocks[{i}].c_new must be >= theta_new")
            key = (s.t_shock, s.process)
            if key in seen:
                raise ParameterOutOfRange(
                    f"shocks[{i}] duplicates (t_shock, process) = {key}")
            seen.add(key)

    @property
    def n(self) -> int:
        return self.theta.shape[0]

    @property
    def track_split(self) -> bool:
        return self.pi is not None


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Checkpointed realization of one replica.

    Arrays are indexed by checkpoint: ts[i] is the step, S[i] the success
    counts, P[i] the success probabilities in force after that step, and
    S_split[i][k, h] (when source tracking is on) the successes of
    process h contributed by source category k.
    """

    ts: np.ndarray
    S: np.ndarray
    P: np.ndarray
    S_split: np.ndarray | None
    seed: int
    replica_id: int

    def __post_init__(self):
        for arr in (self.ts, self.S, self.P, self.S_split):
            if arr is not None:
                arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.S.shape[1]

    def checkpoints(self):
        """Iterate (t, S, P, S_split) tuples in time order."""
        for i in range(len(self.ts)):
            split = None if self.S_split is None else self.S_split[i]
            yield int(self.ts[i]), self.S[i], self.P[i], split


def default_checkpoints(t_max: int, per_decade: int = 200) -> np.ndarray:
    """Geometric checkpoint grid floor(10^(k / per_decade)), deduplicated.

    Log-log plots and fits get uniform coverage per decade while memory
    stays logarithmic in t_max.  t_max itself is always included.
    """
    if t_max < 1:
        raise ParameterOutOfRange("t_max must be >= 1")
    kmax = int(math.ceil(per_decade * math.log10(t_max))) if t_max > 1 else 0
    ts = np.unique(np.floor(10.0 ** (np.arange(kmax + 1) / per_decade)).astype(np.int64))
    ts = ts[(ts >= 1) & (ts <= t_max)]
    if ts.size == 0 or ts[-1] != t_max:
        ts = np.append(ts, t_max)
    return ts


def success_probabilities(S, t: int, params: ModelParams,
                          matrix: InteractionMatrix) -> np.ndarray:
    """Success probabilities after step t given counts S.

    Under the column-sum condition and c_h >= theta_h every component
    lies in (0, 1]; the upper boundary is attainable (all-success history
    with column sums one and c_h = theta_h), so values are not clamped.
    """
    S = np.asarray(S)
    return (params.theta + matrix.entries.T @ S) / (params.c + t)


def _normalize_schedule(checkpoints, t_max: int) -> np.ndarray:
    if checkpoints is None:
        return default_checkpoints(t_max)
    sched = np.unique(np.asarray(checkpoints, dtype=np.int64))
    if sched.size and (sched[0] < 1 or sched[-1] > t_max):
        raise ScheduleOutOfRange(
            f"checkpoints must lie in 1..{t_max}, got range "
            f"[{sched[0]}, {sched[-1]}]")
    return sched


def _shock_arrays(params: ModelParams):
    shocks = sorted(params.shocks, key=lambda s: (s.t_shock, s.process))
    ts = np.array([s.t_shock for s in shocks], dtype=np.int64)
    proc = np.array([s.process - 1 for s in shocks], dtype=np.int64)
    th = np.array([s.theta_new for s in shocks], dtype=np.float64)
    cc = np.array([s.c_new for s in shocks], dtype=np.float64)
    return ts, proc, th, cc


def _cum_pi(params: ModelParams) -> np.ndarray:
    if params.pi is None:
        return np.empty(0, dtype=np.float64)
    cum = np.cumsum(params.pi)
    cum[-1] = 1.0  # close the float gap; a uniform draw is < 1
    return cum


def run_replica(params: ModelParams, matrix: InteractionMatrix, t_max: int,
                seed: int, replica_id: int = 0,
                checkpoint_schedule=None, kernel=None) -> Trajectory:
    """Simulate one replica; deterministic given (seed, replica_id)."""
    if t_max < 1:
        raise ParameterOutOfRange("t_max must be >= 1")
    if params.n != matrix.n:
        raise ParameterOutOfRange(
            f"params have {params.n} processes but matrix has {matrix.n}")
    kernel = kernel or _kernels
    schedule = _normalize_schedule(checkpoint_schedule, t_max)
    n = params.n
    n_ck = schedule.size
    s_out = np.zeros((n_ck, n), dtype=np.int64)
    p_out = np.zeros((n_ck, n), dtype=np.float64)
    if params.track_split:
        split_out = np.zeros((n_ck, n, n), dtype=np.int64)
    else:
        split_out = np.zeros((0, 0, 0), dtype=np.int64)
    gamma_t = np.ascontiguousarray(matrix.entries.T)
    sh_t, sh_p, sh_th, sh_c = _shock_arrays(params)
    kernel.simulate_replica(gamma_t, params.theta.copy(), params.c.copy(),
                            _cum_pi(params), sh_t, sh_p, sh_th, sh_c,
                            schedule, t_max,
                            replica_bitgen(seed, replica_id),
                            s_out, p_out, split_out)
    return Trajectory(ts=schedule, S=s_out, P=p_out,
                      S_split=split_out if params.track_split else None,
                      seed=seed, replica_id=replica_id)


def run_ensemble(params: ModelParams, matrix: InteractionMatrix, t_max: int,
                 n_replicas: int, master_seed: int, checkpoint_schedule=None,
                 threads: int = 1, replica_start: int = 0,
                 kernel=None) -> list[Trajectory]:
    """Independent replicas with streams derived from (master_seed, id).

    The result equals the concatenation of sequential run_replica calls
    with replica ids replica_start..replica_start+n_replicas-1 and is
    independent of the thread count.
    """
    if n_replicas < 1:
        raise ParameterOutOfRange("n_replicas must be >= 1")
    ids = range(replica_start, replica_start + n_replicas)

    def one(rid: int) -> Trajectory:
        return run_replica(params, matrix, t_max, master_seed, rid,
                           checkpoint_schedule, kernel=kernel)

    if threads <= 1:
        return [one(rid) for rid in ids]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, ids))


def exact_expected_counts(params: ModelParams, matrix: InteractionMatrix,
                          t_max: int, checkpoints=None, kernel=None):
    """Exact E[S_t] by the linear recursion
    E[S_{t+1}] = E[S_t] + (theta(t) + Gamma^T E[S_t]) / (c(t) + t).

    Exact for any parameters (shocks are deterministic switches, so
    expectations pass through).  Returns (ts, values) where checkpoints
    default to every t in 0..t_max.
    """
    if t_max < 0:
        raise ParameterOutOfRange("t_max must be >= 0")
    kernel = kernel or _kernels
    if checkpoints is None:
        ts = np.arange(t_max + 1, dtype=np.int64)
    else:
        ts = np.unique(np.asarray(checkpoints, dtype=np.int64))
        if ts.size and (ts[0] < 0 or ts[-1] > t_max):
            raise ScheduleOutOfRange(
                f"expectation checkpoints must lie in 0..{t_max}")
    out = np.zeros((ts.size, params.n), dtype=np.float64)
    gamma_t = np.ascontiguousarray(matrix.entries.T)
    sh_t, sh_p, sh_th, sh_c = _shock_arrays(params)
    kernel.expected_counts(gamma_t, params.theta.copy(), params.c.copy(),
                           sh_t, sh_p, sh_th, sh_c, ts, t_max, out)
    return ts, out


@dataclass(frozen=True, eq=False)
class ExactLaw:
    """Moments of the exact joint law from exhaustive path enumeration.

    Index i of each array refers to step t = i + 1.  mean_S[i] is
    E[S_{t}], var_x[i, h] the variance of the step-t outcome of process
    h, cov_x[i] and corr_x[i] the cross-process covariance and
    correlation matrices of that step's outcomes.
    """

    ts: np.ndarray
    mean_S: np.ndarray
    var_x: np.ndarray
    cov_x: np.ndarray
    corr_x: np.ndarray


def enumerate_exact(params: ModelParams, matrix: InteractionMatrix,
                    t_max: int) -> ExactLaw:
    """Exact moments by enumerating every outcome sequence.

    All 2^(N * t_max) paths are carried with their exact probabilities;
    no sampling and no shared code with the simulation kernels, which is
    what makes this the independent oracle.  Limited to N <= 2 and
    t_max <= 10.
    """
    n = params.n
    if n > 2 or t_max > 10 or 2 ** (n * t_max) > ENUM_MAX_PATHS:
        raise InstanceTooLarge(
            f"2^(N*t_max) = 2^{n * t_max} paths; enumeration is capped at "
            f"N <= 2, t_max <= 10")
    if params.shocks:
        raise ParameterOutOfRange("enumeration does not support shocks")
    theta = [float(v) for v in params.theta]
    c = [float(v) for v in params.c]
    gamma_t = [[float(v) for v in row] for row in matrix.entries.T]
    outcomes = [bits for bits in np.ndindex(*(2,) * n)]
    rng_n = range(n)

    mean_S = np.zeros((t_max, n))
    ex = np.zeros((t_max, n))            # E[X_t]
    exx = np.zeros((t_max, n, n))        # E[X_t X_t^T]
    # level = list of (S counts, path probability); plain tuples and floats,
    # the loop runs over up to ~1e6 paths
    level: list[tuple[tuple[int, ...], float]] = [((0,) * n, 1.0)]
    for t in range(t_max):
        nxt: list[tuple[tuple[int, ...], float]] = []
        exr = [0.0] * n
        exxr = [[0.0] * n for _ in rng_n]
        meanr = [0.0] * n
        for s, prob in level:
            p = [(theta[h] + sum(gamma_t[h][j] * s[j] for j in rng_n))
                 / (c[h] + t) for h in rng_n]
            for bits in outcomes:
                w = prob
                for h in rng_n:
                    w *= p[h] if bits[h] else 1.0 - p[h]
                if w == 0.0:
                    continue
                s2 = tuple(s[j] + bits[j] for j in rng_n)
                nxt.append((s2, w))
                for h in rng_n:
                    meanr[h] += w * s2[h]
                    if bits[h]:
                        exr[h] += w
                        for j in rng_n:
                            if bits[j]:
                                exxr[h][j] += w
        mean_S[t] = meanr
        ex[t] = exr
        exx[t] = exxr
        level = nxt

    var_x = np.empty((t_max, n))
    cov_x = np.empty((t_max, n, n))
    corr_x = np.empty((t_max, n, n))
    for t in range(t_max):
        cov = exx[t] - np.outer(ex[t], ex[t])
        var = np.diag(cov).copy()
        sd = np.sqrt(var)
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = cov / np.outer(sd, sd)
        var_x[t] = var
        cov_x[t] = cov
        corr_x[t] = corr
    return ExactLaw(ts=np.arange(1, t_max + 1, dtype=np.int64),
                    mean_S=mean_S, var_x=var_x, cov_x=cov_x, corr_x=corr_x)


@dataclass(frozen=True, eq=False)
class MomentEstimates:
    """Cross-replica moment estimates of step-t outcomes with standard
    errors (influence-function based)."""

    t: int
    n_replicas: int
    mean: np.ndarray
    var: np.ndarray
    var_se: np.ndarray
    cov: np.ndarray
    cov_se: np.ndarray
    corr: np.ndarray
    corr_se: np.ndarray


def increment_moments(t: int, increments: np.ndarray) -> MomentEstimates:
    """Moments of one step's outcomes from an (replicas, N) 0/1 array."""
    x = np.asarray(increments, dtype=np.float64)
    r, n = x.shape
    mean = x.mean(axis=0)
    d = x - mean
    cov = (d.T @ d) / (r - 1)
    var = np.diag(cov).copy()
    sd = np.sqrt(var)
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = cov / np.outer(sd, sd)

    # standard errors from empirical influence functions
    var_if = d * d - var                      # per-replica IF of each variance
    var_se = var_if.std(axis=0, ddof=1) / math.sqrt(r)
    cov_se = np.empty((n, n))
    corr_se = np.empty((n, n))
    with np.errstate(invalid="ignore", divide="ignore"):
        z = d / sd
    for h in range(n):
        for j in range(n):
            cif = d[:, h] * d[:, j] - cov[h, j]
            cov_se[h, j] = cif.std(ddof=1) / math.sqrt(r)
            rif = z[:, h] * z[:, j] - 0.5 * corr[h, j] * (z[:, h] ** 2 + z[:, j] ** 2)
            corr_se[h, j] = rif.std(ddof=1) / math.sqrt(r)
    return MomentEstimates(t=t, n_replicas=r, mean=mean, var=var,
                           var_se=var_se, cov=cov, cov_se=cov_se,
                           corr=corr, corr_se=corr_se)


def empirical_moments(ensemble: list[Trajectory], t_points) -> list[MomentEstimates]:
    """Cross-replica moments of the step-t outcomes at each requested t.

    Every trajectory must carry checkpoints at both t-1 and t (t = 1 only
    needs t itself) so the increments are recoverable.
    """
    if not ensemble:
        raise IncompatibleSchedules("empty ensemble")
    ts0 = ensemble[0].ts
    for traj in ensemble[1:]:
        if traj.ts.shape != ts0.shape or np.any(traj.ts != ts0):
            raise IncompatibleSchedules(
                "trajectories do not share one checkpoint schedule")
    results = []
    for t in np.atleast_1d(np.asarray(t_points, dtype=np.int64)):
        t = int(t)
        where_t = np.flatnonzero(ts0 == t)
        if where_t.size == 0:
            raise IncompatibleSchedules(f"no checkpoint at t = {t}")
        i1 = int(where_t[0])
        if t == 1:
            x = np.stack([traj.S[i1] for traj in ensemble])
        else:
            where_p = np.flatnonzero(ts0 == t - 1)
            if where_p.size == 0:
                raise IncompatibleSchedules(
                    f"increments at t = {t} need a checkpoint at t - 1")
            i0 = int(where_p[0])
            x = np.stack([traj.S[i1] - traj.S[i0] for traj in ensemble])
        results.append(increment_moments(t, x))
    return results


# -- trajectory CSV -----------------------------------------------------------

def _traj_header(n: int, split: bool) -> list[str]:
    cols = ["t"] + [f"S_{h}" for h in range(1, n + 1)]
    cols += [f"P_{h}" for h in range(1, n + 1)]
    if split:
        cols += [f"S_{k}_{h}" for k in range(1, n + 1) for h in range(1, n + 1)]
    return cols


def _traj_rows(traj: Trajectory):
    n = traj.n
    for i in range(len(traj.ts)):
        row = [int(traj.ts[i])]
        row += [int(v) for v in traj.S[i]]
        row += [repr(float(v)) for v in traj.P[i]]
        if traj.S_split is not None:
            row += [int(v) for v in traj.S_split[i].reshape(n * n)]
        yield row


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Wide per-replica format: t, S_1.., P_1..[, S_k_h..]."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_traj_header(traj.n, traj.S_split is not None))
        w.writerows(_traj_rows(traj))


def write_ensemble_csv(ensemble: list[Trajectory], path) -> None:
    """Long format with a leading replica column."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        n = ensemble[0].n
        split = ensemble[0].S_split is not None
        w.writerow(["replica"] + _traj_header(n, split))
        for traj in ensemble:
            for row in _traj_rows(traj):
                w.writerow([traj.replica_id] + row)


def read_trajectory_csv(path, replica: int | None = None):
    """Read a wide or long trajectory CSV.

    Returns (ts, S, S_split) with S_split None when the file has no
    split columns.  For long files, `replica` picks one replica
    (default: the first replica id present).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    offset = 0
    if header and header[0] == "replica":
        offset = 1
        ids = sorted({int(r[0]) for r in rows})
        want = ids[0] if replica is None else replica
        rows = [r for r in rows if int(r[0]) == want]
    n = sum(1 for name in header if name.startswith("S_") and name.count("_") == 1)
    split_cols = sum(1 for name in header if name.count("_") == 2)
    ts = np.array([int(r[offset]) for r in rows], dtype=np.int64)
    S = np.array([[int(v) for v in r[offset + 1: offset + 1 + n]] for r in rows],
                 dtype=np.int64)
    S_split = None
    if split_cols:
        base = offset + 1 + 2 * n
        S_split = np.array(
            [[int(v) for v in r[base: base + n * n]] for r in rows],
            dtype=np.int64).reshape(len(rows), n, n)
    return ts, S, S_split
