"""Interaction matrices and their spectral analysis.

The driving object is a non-negative N x N matrix of interaction weights:
entry (j, h) measures how much a past success of process j raises the
future success probability of process h.  Two structural conditions
matter throughout the package:

* every column sums to at most one, which keeps success probabilities
  inside (0, 1];
* the support digraph (edge j -> h wherever the weight is positive) is
  strongly connected, which makes the Perron root simple and the
  eigenvectors strictly positive.

Matrices failing the second condition are still legal inputs: they are
flagged as reducible and handled by the condensation-based growth
predictor instead of the Perron analysis.

All values here are immutable after construction and safe to share
across threads.
"""

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ColumnSumExceedsOne,
    NegativeEntry,
    NoConvergence,
    NotIrreducible,
    ParameterOutOfRange,
)

COLUMN_SUM_TOL = 1e-12
SPECTRAL_TOL = 1e-10
_POWER_TOL = 1e-13
_POWER_MAX_ITER = 10 ** 6


@dataclass(frozen=True, eq=False)
class InteractionMatrix:
    """Validated interaction matrix.

    entries[j, h] is the weight with which process j reinforces process h
    (row = source, column = target).  mean_field carries the generating
    (gamma_star, iota) pair when the matrix came from mean_field_matrix,
    enabling the closed-form second eigenvalue.
    """

    n: int
    entries: np.ndarray
    irreducible: bool
    mean_field: tuple[float, float] | None = None

    def __post_init__(self):
        self.entries.setflags(write=False)

    def column_sums(self) -> np.ndarray:
        return self.entries.sum(axis=0)


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Perron root and eigenvector pair of an irreducible matrix.

    u is the left eigenvector (relative centrality scores), v the right
    one, both strictly positive and normalized so that v sums to one and
    v . u = 1.  gamma2_real is the real part of the dominant remaining
    eigenvalue after deflating the Perron pair; gap_ok records whether
    gamma2_real / gamma_star < 1/2, the condition under which the
    mean-field interaction test is exact.
    """

    gamma_star: float
    u: np.ndarray
    v: np.ndarray
    gamma2_real: float
    gap_ok: bool

    def __post_init__(self):
        self.u.setflags(write=False)
        self.v.setflags(write=False)


@dataclass(frozen=True, eq=False)
class SCCDecomposition:
    """Strongly connected components in a topological order of the
    condensation (sources first), with the condensation edge set.

    components holds 0-based process indices; component_of maps each
    process to its component position; edges are (from, to) component
    pairs along the influence direction j -> h.
    """

    components: tuple[tuple[int, ...], ...]
    component_of: tuple[int, ...]
    edges: frozenset[tuple[int, int]]


@dataclass(frozen=True, eq=False)
class GrowthPrediction:
    """Predicted long-run growth of each success counter.

    exponent[h] is the power of t in the leading term of S_{t,h};
    log_power[h] the power of ln t multiplying it.  For an irreducible
    matrix the exponent is the Perron root everywhere and all log powers
    vanish.
    """

    exponent: np.ndarray
    log_power: np.ndarray

    def __post_init__(self):
        self.exponent.setflags(write=False)
        self.log_power.setflags(write=False)


def validate(matrix) -> InteractionMatrix:
    """Validate a square array of interaction weights.

    Rejects negative entries and columns summing above one (beyond
    1e-12); reducible support digraphs are accepted but flagged, since
    they remain legal inputs for the growth predictor.
    """
    entries = np.array(matrix, dtype=np.float64)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ParameterOutOfRange(
            f"interaction matrix must be square, got shape {entries.shape}")
    n = entries.shape[0]
    if n < 1:
        raise ParameterOutOfRange("interaction matrix must be at least 1 x 1")
    if np.any(entries < 0):
        j, h = np.argwhere(entries < 0)[0]
        raise NegativeEntry(
            f"entry ({j + 1}, {h + 1}) is negative: {entries[j, h]}")
    sums = entries.sum(axis=0)
    bad = np.flatnonzero(sums > 1.0 + COLUMN_SUM_TOL)
    if bad.size:
        h = int(bad[0])
        raise ColumnSumExceedsOne(
            f"column {h + 1} sums to {sums[h]} > 1")
    scc = _tarjan(_support_adjacency(entries))
    return InteractionMatrix(n=n, entries=entries,
                             irreducible=len(scc.components) == 1)


def mean_field_matrix(gamma_star: float, iota: float, n: int) -> InteractionMatrix:
    """Symmetric one-parameter interaction family.

    Diagonal entries are gamma_star * (iota/n + 1 - iota), off-diagonal
    ones gamma_star * iota / n.  Columns sum to gamma_star, the Perron
    eigenvector is the constant vector, and the remaining eigenvalue is
    gamma_star * (1 - iota) with multiplicity n - 1.
    """
    if not (0.0 < gamma_star <= 1.0):
        raise ParameterOutOfRange(f"gamma_star must be in (0, 1], got {gamma_star}")
    if not (0.0 < iota <= 1.0):
        raise ParameterOutOfRange(f"iota must be in (0, 1], got {iota}")
    if n < 1:
        raise ParameterOutOfRange(f"n must be >= 1, got {n}")
    off = gamma_star * iota / n
    diag = gamma_star * (iota / n + (1.0 - iota))
    entries = np.full((n, n), off)
    np.fill_diagonal(entries, diag)
    return InteractionMatrix(n=n, entries=entries, irreducible=True,
                             mean_field=(float(gamma_star), float(iota)))


def strongly_connected_components(matrix: InteractionMatrix) -> SCCDecomposition:
    """Condensation of the positive-support digraph of a validated matrix."""
    return _tarjan(_support_adjacency(matrix.entries))


def perron(matrix: InteractionMatrix) -> SpectralData:
    """Perron root with left/right eigenvectors of an irreducible matrix.

    Power iteration runs on the shifted matrix (entries + I): the shift
    leaves the eigenvectors untouched, makes the Perron root strictly
    dominant even for periodic support (e.g. a permutation matrix), and
    the root is recovered from the bi-orthogonal Rayleigh quotient, which
    is quadratically accurate in the eigenvector error.
    """
    if not matrix.irreducible:
        raise NotIrreducible(
            "Perron analysis needs a strongly connected support digraph; "
            "use growth_exponents for reducible matrices")
    g = matrix.entries
    n = matrix.n
    v = _power_iteration(g)
    u = _power_iteration(g.T)
    v = v / v.sum()
    u = u / (v @ u)
    gamma_star = float((u @ g @ v) / (u @ v))

    res_u = np.max(np.abs(u @ g - gamma_star * u))
    res_v = np.max(np.abs(g @ v - gamma_star * v))
    if max(res_u, res_v) > 1e-8 * max(1.0, gamma_star):
        raise NoConvergence(
            f"eigenvector residual {max(res_u, res_v):.3e} after power iteration")

    if n == 1:
        gamma2 = math.nan
        gap_ok = True
    elif matrix.mean_field is not None:
        gs, iota = matrix.mean_field
        gamma2 = gs * (1.0 - iota)
        gap_ok = gamma2 / gamma_star < 0.5
    else:
        gamma2 = _deflated_dominant_real(g, gamma_star, u, v)
        gap_ok = gamma2 / gamma_star < 0.5
    return SpectralData(gamma_star=gamma_star, u=u, v=v,
                        gamma2_real=float(gamma2), gap_ok=bool(gap_ok))


def growth_exponents(matrix: InteractionMatrix) -> GrowthPrediction:
    """Leading-term growth prediction for every success counter.

    The counter of process h grows like t^a (ln t)^m where a is the
    largest component Perron root among strongly connected components
    with a directed influence path into h's component (its own included),
    and m + 1 is the largest number of components attaining a along one
    such path.  Chains of equal roots stack one logarithm per extra
    component, mirroring the Jordan-block structure of the condensed
    system.
    """
    scc = strongly_connected_components(matrix)
    n_comp = len(scc.components)
    comp_root = [_component_perron_value(matrix.entries, comp)
                 for comp in scc.components]
    preds: list[list[int]] = [[] for _ in range(n_comp)]
    for a, b in scc.edges:
        preds[b].append(a)

    # components arrive in topological order, so predecessors are done
    exponent = [0.0] * n_comp
    chain = [0] * n_comp  # components attaining the exponent on the best path
    for ci in range(n_comp):
        best = comp_root[ci]
        for pi in preds[ci]:
            if exponent[pi] > best:
                best = exponent[pi]
        depth = 0
        for pi in preds[ci]:
            if _close(exponent[pi], best) and chain[pi] > depth:
                depth = chain[pi]
        if _close(comp_root[ci], best):
            depth += 1
        exponent[ci] = best
        chain[ci] = depth

    exp_out = np.empty(matrix.n)
    log_out = np.empty(matrix.n, dtype=np.int64)
    for node in range(matrix.n):
        ci = scc.component_of[node]
        exp_out[node] = exponent[ci]
        log_out[node] = chain[ci] - 1
    return GrowthPrediction(exponent=exp_out, log_power=log_out)


# -- matrix I/O ---------------------------------------------------------------

def load_matrix_csv(path) -> InteractionMatrix:
    """Read a headerless N x N weight matrix (row = source process)."""
    with open(path, newline="") as fh:
        rows = [[float(cell) for cell in row] for row in csv.reader(fh) if row]
    return validate(rows)


def dump_matrix_csv(matrix: InteractionMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in matrix.entries:
            writer.writerow([repr(float(x)) for x in row])


def matrix_from_json(obj) -> InteractionMatrix:
    """Build a matrix from its JSON object form.

    Accepts {"n": N, "entries": [[...]]} or
    {"mean_field": {"gamma_star": g, "iota": i, "n": N}}.
    """
    if "mean_field" in obj:
        mf = obj["mean_field"]
        return mean_field_matrix(mf["gamma_star"], mf["iota"], mf["n"])
    entries = obj["entries"]
    if "n" in obj and len(entries) != obj["n"]:
        raise ParameterOutOfRange(
            f"matrix JSON declares n={obj['n']} but has {len(entries)} rows")
    return validate(entries)


def matrix_to_json(matrix: InteractionMatrix) -> dict:
    return {"n": matrix.n, "entries": [list(map(float, row))
                                       for row in matrix.entries]}


def load_matrix_json(path) -> InteractionMatrix:
    with open(path) as fh:
        return matrix_from_json(json.load(fh))


# -- internals ----------------------------------------------------------------

def _close(a: float, b: float) -> bool:
    # equality of component Perron roots up to spectral accuracy
    return abs(a - b) <= 1e-9 * max(1.0, abs(a), abs(b))


def _support_adjacency(entries: np.ndarray) -> list[list[int]]:
    n = entries.shape[0]
    return [[h for h in range(n) if entries[j, h] > 0.0] for j in range(n)]


def _tarjan(adj: list[list[int]]) -> SCCDecomposition:
    """Iterative Tarjan; components come out in reverse topological order
    and are flipped before returning."""
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comp_of = [-1] * n
    comps: list[tuple[int, ...]] = []
    counter = 0

    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, ptr = work[-1]
            if ptr == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for i in range(ptr, len(adj[v])):
                w = adj[v][i]
                if index[w] == -1:
                    work[-1] = (v, i + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp_of[w] = len(comps)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(tuple(sorted(comp)))

    order = len(comps)
    topo_of = [order - 1 - ci for ci in comp_of]  # sinks last
    components = tuple(comps[order - 1 - k] for k in range(order))
    edges = set()
    for j in range(n):
        for h in adj[j]:
            cj, ch = topo_of[j], topo_of[h]
            if cj != ch:
                edges.add((cj, ch))
    return SCCDecomposition(components=components,
                            component_of=tuple(topo_of),
                            edges=frozenset(edges))


def _power_iteration(mat: np.ndarray, tol: float = _POWER_TOL,
                     max_iter: int = _POWER_MAX_ITER) -> np.ndarray:
    """Dominant eigenvector of a non-negative irreducible matrix via
    shifted power iteration, normalized to unit sum (hence positive)."""
    n = mat.shape[0]
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        y = mat @ x + x
        y /= y.sum()
        if np.max(np.abs(y - x)) <= tol:
            return y
        x = y
    raise NoConvergence(
        f"power iteration did not converge within {max_iter} iterations")


def _component_perron_value(entries: np.ndarray, comp: tuple[int, ...]) -> float:
    if len(comp) == 1:
        return float(entries[comp[0], comp[0]])
    idx = np.array(comp)
    block = entries[np.ix_(idx, idx)]
    v = _power_iteration(block)
    return float(np.sum(block @ v) / np.sum(v))


def _deflated_dominant_real(g: np.ndarray, gamma_star: float,
                            u: np.ndarray, v: np.ndarray,
                            tol: float = 1e-11,
                            max_iter: int = _POWER_MAX_ITER) -> float:
    """Real part of the dominant eigenvalue after removing the Perron pair.

    Hotelling deflation (entries - gamma_star * v u^T with v . u = 1) maps
    the Perron root to zero and leaves the rest of the spectrum alone.
    Power iterates on the deflated matrix feed a two-step companion fit
    x_{k+2} ~ a x_{k+1} + b x_k whose roots recover a complex-conjugate or
    plus/minus dominant pair that plain iteration cannot resolve.
    """
    n = g.shape[0]
    d = g - gamma_star * np.outer(v, u)
    x = np.cos(np.arange(n) + 0.5) + 1.5  # fixed generic start
    x /= np.linalg.norm(x)
    last = None
    stable = 0
    for _ in range(max_iter):
        y1 = d @ x
        n1 = np.linalg.norm(y1)
        if n1 <= 1e-300:
            return 0.0
        y2 = d @ y1
        # least squares for y2 = a*y1 + b*x
        g11 = y1 @ y1
        g12 = y1 @ x
        g22 = x @ x
        det = g11 * g22 - g12 * g12
        if det <= 1e-14 * g11 * g22:
            # iterate already parallel to an eigenvector: real eigenvalue
            lam = float(x @ y1 / g22)
        else:
            r1 = y1 @ y2
            r2 = x @ y2
            a = (r1 * g22 - r2 * g12) / det
            b = (g11 * r2 - g12 * r1) / det
            disc = a * a + 4.0 * b
            if disc >= 0.0:
                roots = ((a + math.sqrt(disc)) / 2.0, (a - math.sqrt(disc)) / 2.0)
                lam = roots[0] if abs(roots[0]) >= abs(roots[1]) else roots[1]
                if math.isclose(abs(roots[0]), abs(roots[1]), rel_tol=1e-9):
                    lam = max(roots)
            else:
                lam = a / 2.0  # complex pair: real part
        if last is not None and abs(lam - last) <= tol * max(1.0, abs(lam)):
            stable += 1
            if stable >= 3:
                return float(lam)
        else:
            stable = 0
        last = lam
        x = y2 / np.linalg.norm(y2)
    raise NoConvergence(
        "deflated power iteration did not settle on a dominant eigenvalue")
