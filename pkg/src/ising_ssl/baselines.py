"""Comparison algorithms for semi-supervised two-community labeling.

All baselines take ``seeds``: a length-V int8 array holding +1 (community 1),
-1 (community 2) or 0 (label not revealed).  Outputs use the same coding;
0 means undecided and is scored as a mistake.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .rng import BASELINE, kernel_seed, make_rng
from .sbm import Graph

KINDS = ("consensus_async", "consensus_sync", "gossip", "laplacian", "poisson")
_DELTA_NAMES = {0.0: "pagerank", 0.5: "normalized", 1.0: "standard"}


@dataclass(frozen=True)
class BaselineSpec:
    kind: str
    iters: int
    gamma: float = 0.95
    delta_exp: float = 0.0
    seed: int = 0

    def __post_init__(self):
        kind = self.kind.replace("-", "_")
        if kind not in KINDS:
            raise ValueError(f"unknown baseline {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.iters <= 0:
            raise ValueError("iteration budget must be positive")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0 <= self.delta_exp <= 1:
            raise ValueError("delta_exp must lie in [0, 1]")

    @property
    def name(self) -> str:
        if self.kind == "laplacian":
            return f"laplacian_{_DELTA_NAMES.get(float(self.delta_exp), self.delta_exp)}"
        return self.kind


@dataclass
class BaselineResult:
    labels: np.ndarray
    values: np.ndarray


def seeds_from_mask(graph: Graph, revealed: np.ndarray) -> np.ndarray:
    """True spins on the revealed nodes, 0 elsewhere."""
    return np.where(np.asarray(revealed, dtype=bool), graph.truth_spins, 0).astype(np.int8)


def error_rate(graph: Graph, labels: np.ndarray) -> float:
    """Fraction of nodes whose label differs from the truth (undecided counts as wrong)."""
    return float(np.mean(np.asarray(labels) != graph.truth_spins))


def _sign_labels(values: np.ndarray) -> np.ndarray:
    return np.sign(values).astype(np.int8)


def _check_seeds(graph: Graph, seeds) -> np.ndarray:
    s = np.asarray(seeds, dtype=np.int8)
    if s.shape != (graph.V,) or not np.isin(s, (-1, 0, 1)).all():
        raise ValueError("seeds must be a length-V array over {-1, 0, +1}")
    return s


@nb.njit(cache=True)
def _async_consensus_kernel(indptr, indices, x, free_nodes, iters, seed):
    np.random.seed(seed)
    m = free_nodes.shape[0]
    if m == 0:
        return
    for _ in range(iters):
        u = free_nodes[np.random.randint(0, m)]
        lo, hi = indptr[u], indptr[u + 1]
        if hi == lo:
            continue
        acc = 0.0
        for p in range(lo, hi):
            acc += x[indices[p]]
        x[u] = acc / (hi - lo)


@nb.njit(cache=True)
def _gossip_kernel(eu, ev, x, fixed, iters, seed):
    np.random.seed(seed)
    m = eu.shape[0]
    for _ in range(iters):
        e = np.random.randint(0, m)
        u, v = eu[e], ev[e]
        avg = 0.5 * (x[u] + x[v])
        if not fixed[u]:
            x[u] = avg
        if not fixed[v]:
            x[v] = avg


def consensus(graph: Graph, seeds, mode: str = "async", iters: int = 1, seed: int = 0) -> BaselineResult:
    """Unrevealed nodes repeatedly take the mean value of their neighbors.

    ``async`` updates one uniformly chosen unrevealed node per iteration;
    ``sync`` updates all unrevealed nodes at once per iteration.  Isolated
    unrevealed nodes keep the value 0.
    """
    s = _check_seeds(graph, seeds)
    x = s.astype(np.float64)
    free = s == 0
    if mode == "async":
        free_nodes = np.flatnonzero(free).astype(np.int64)
        _async_consensus_kernel(graph.indptr, graph.indices, x, free_nodes, int(iters),
                                kernel_seed(make_rng(seed, BASELINE)))
    elif mode == "sync":
        A = graph.adjacency()
        deg = graph.degrees.astype(np.float64)
        upd = free & (deg > 0)
        inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
        for _ in range(int(iters)):
            avg = (A @ x) * inv
            x = np.where(upd, avg, x)
    else:
        raise ValueError("mode must be 'async' or 'sync'")
    return BaselineResult(_sign_labels(x), x)


def gossip(graph: Graph, seeds, iters: int, seed: int = 0) -> BaselineResult:
    """Pick a uniform edge, average its endpoints, overwrite the unrevealed ones."""
    s = _check_seeds(graph, seeds)
    e = graph.edges()
    if len(e) == 0:
        raise ValueError("gossip needs at least one edge")
    x = s.astype(np.float64)
    _gossip_kernel(e[:, 0].copy(), e[:, 1].copy(), x, s != 0, int(iters),
                   kernel_seed(make_rng(seed, BASELINE)))
    return BaselineResult(_sign_labels(x), x)


def _onehot(seeds: np.ndarray) -> np.ndarray:
    Y = np.zeros((len(seeds), 2))
    Y[seeds > 0, 0] = 1.0
    Y[seeds < 0, 1] = 1.0
    return Y


def _argmax_labels(X: np.ndarray) -> np.ndarray:
    lab = np.zeros(len(X), dtype=np.int8)
    lab[X[:, 0] > X[:, 1]] = 1
    lab[X[:, 1] > X[:, 0]] = -1
    return lab


def laplacian_method(graph: Graph, seeds, gamma: float = 0.95, delta_exp: float = 0.0,
                     iters: int = 20) -> BaselineResult:
    """Generalized Laplacian diffusion ``X <- gamma D^-d A D^(d-1) X + (1 - gamma) Y``.

    ``delta_exp`` 0, 1/2 and 1 give PageRank, normalized and standard Laplacian
    methods.  Zero-degree nodes get 0 in every power of ``D``.
    """
    s = _check_seeds(graph, seeds)
    A = graph.adjacency()
    deg = graph.degrees.astype(np.float64)
    nz = deg > 0
    left = np.zeros_like(deg)
    right = np.zeros_like(deg)
    left[nz] = deg[nz] ** (-delta_exp)
    right[nz] = deg[nz] ** (delta_exp - 1.0)
    Y = _onehot(s)
    X = np.zeros_like(Y)
    for _ in range(int(iters)):
        X = gamma * left[:, None] * (A @ (right[:, None] * X)) + (1.0 - gamma) * Y
    return BaselineResult(_argmax_labels(X), X)


def poisson_learning(graph: Graph, seeds, iters: int = 20) -> BaselineResult:
    """Poisson learning by the fixed-point iteration ``U <- U + D^-1 (B - L U)``.

    ``B`` holds, on revealed rows, the one-hot label minus the mean one-hot
    label of the revealed set.  Runs on the largest connected component;
    nodes elsewhere are left undecided.
    """
    s = _check_seeds(graph, seeds)
    if not np.any(s != 0):
        raise ValueError("poisson learning needs at least one revealed label")
    A = graph.adjacency()
    _, comp = csgraph.connected_components(A, directed=False)
    largest = np.argmax(np.bincount(comp))
    keep = np.flatnonzero(comp == largest)
    sub = A[keep][:, keep].tocsr()
    ss = s[keep]
    U_full = np.zeros((graph.V, 2))
    labels = np.zeros(graph.V, dtype=np.int8)
    if np.any(ss != 0):
        onehot = _onehot(ss)
        rev = ss != 0
        B = np.zeros_like(onehot)
        B[rev] = onehot[rev] - onehot[rev].mean(axis=0)
        deg = np.asarray(sub.sum(axis=1)).ravel()
        inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
        U = np.zeros_like(B)
        DB = inv[:, None] * B
        for _ in range(int(iters)):
            # U + D^-1 (B - (D - W) U) == D^-1 B + D^-1 W U
            U = DB + inv[:, None] * (sub @ U)
        U_full[keep] = U
        labels[keep] = _argmax_labels(U)
    return BaselineResult(labels, U_full)


def run_baseline(graph: Graph, seeds, spec: BaselineSpec) -> BaselineResult:
    if spec.kind == "consensus_async":
        return consensus(graph, seeds, "async", spec.iters, spec.seed)
    if spec.kind == "consensus_sync":
        return consensus(graph, seeds, "sync", spec.iters, spec.seed)
    if spec.kind == "gossip":
        return gossip(graph, seeds, spec.iters, spec.seed)
    if spec.kind == "laplacian":
        return laplacian_method(graph, seeds, spec.gamma, spec.delta_exp, spec.iters)
    return poisson_learning(graph, seeds, spec.iters)


def parity_budget(kind: str, V: int, a: float, b: float, lam: float, updates_per_node: int = 20) -> int:
    """Iteration count giving every node about ``updates_per_node`` updates.

    One node per iteration for asynchronous consensus, a full sweep for the
    synchronous methods, and ``(a + b) V lam / 2`` edge picks per round for gossip.
    """
    kind = kind.replace("-", "_")
    if kind == "consensus_async":
        return updates_per_node * V
    if kind == "gossip":
        return int(round(updates_per_node * (a + b) * V * lam / 2))
    if kind in KINDS:
        return updates_per_node
    raise ValueError(f"unknown baseline {kind!r}")
