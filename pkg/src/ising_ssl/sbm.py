"""Two-community stochastic block model: sampling, storage and estimation.

Community 1 always occupies node indices ``[0, V1)`` and community 2 occupies
``[V1, V1 + V2)``, so community membership is a single comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .rng import GRAPH, make_rng


class EstimationError(ValueError):
    """Raised when the revealed labels carry too little information."""


@dataclass(frozen=True)
class SbmParams:
    """Parameters of a two-community SBM.

    ``n`` is the scaling parameter, ``lam`` the mean-degree scale; the edge
    probabilities are ``a * lam / n`` inside a community and ``b * lam / n``
    across communities.
    """

    n: int
    V1: int
    V2: int
    lam: float
    a: float
    b: float

    def __post_init__(self):
        if self.n < 1 or self.V1 < 1 or self.V2 < 1:
            raise ValueError("n, V1 and V2 must be positive")
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.a < 0 or self.b < 0:
            raise ValueError("a and b must be nonnegative")
        if self.a_n > 1 or self.b_n > 1:
            raise ValueError(
                f"edge probabilities must be <= 1 (a_n={self.a_n:.4g}, b_n={self.b_n:.4g})"
            )

    @property
    def a_n(self) -> float:
        return self.a * self.lam / self.n

    @property
    def b_n(self) -> float:
        return self.b * self.lam / self.n

    @property
    def V(self) -> int:
        return self.V1 + self.V2

    @property
    def expected_mean_degree(self) -> float:
        V1, V2 = self.V1, self.V2
        intra = self.a_n * (V1 * (V1 - 1) + V2 * (V2 - 1))
        inter = self.b_n * 2 * V1 * V2
        return (intra + inter) / self.V

    @classmethod
    def symmetric(cls, n: int, a: float, b: float, lam: float | None = None) -> "SbmParams":
        """Both communities of size ``n``; ``lam`` defaults to ``log n``."""
        return cls(n=n, V1=n, V2=n, lam=math.log(n) if lam is None else lam, a=a, b=b)


def resolve_lambda(value: str | float | None, n: int) -> float:
    """Parse a mean-degree scale given as a number, ``log-n`` or ``c*log-n``."""
    if value is None:
        return math.log(n)
    if isinstance(value, (int, float)):
        return float(value)
    s = value.strip().lower().replace(" ", "")
    if s in ("log-n", "logn", "log(n)"):
        return math.log(n)
    for suffix in ("*log-n", "*logn", "log-n", "logn"):
        if s.endswith(suffix):
            coef = s[: -len(suffix)].rstrip("*") or "1"
            return float(coef) * math.log(n)
    return float(s)


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple undirected graph in CSR layout with two planted communities.

    ``indices[indptr[u]:indptr[u + 1]]`` are the neighbors of ``u`` in ascending
    order.  Nodes ``< V1`` belong to community 1.
    """

    V1: int
    V2: int
    indptr: np.ndarray
    indices: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @property
    def V(self) -> int:
        return self.V1 + self.V2

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def community(self) -> np.ndarray:
        """Community (1 or 2) of every node."""
        c = np.full(self.V, 2, dtype=np.int8)
        c[: self.V1] = 1
        return c

    @property
    def truth_spins(self) -> np.ndarray:
        """Ground-truth configuration: +1 on community 1, -1 on community 2."""
        s = -np.ones(self.V, dtype=np.int8)
        s[: self.V1] = 1
        return s

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    def edges(self) -> np.ndarray:
        """``(E, 2)`` array of edges with ``u < v``, sorted lexicographically."""
        src = np.repeat(np.arange(self.V, dtype=np.int64), self.degrees)
        mask = src < self.indices
        return np.column_stack([src[mask], self.indices[mask].astype(np.int64)])

    def adjacency(self):
        """Adjacency matrix as ``scipy.sparse.csr_matrix`` of float64."""
        from scipy import sparse

        data = np.ones(len(self.indices), dtype=np.float64)
        return sparse.csr_matrix((data, self.indices, self.indptr), shape=(self.V, self.V))

    def fingerprint(self) -> str:
        """Short content hash, used to check that runs share the same graph."""
        import hashlib

        h = hashlib.sha256()
        h.update(np.array([self.V1, self.V2], dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.indptr, dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.indices, dtype=np.int64).tobytes())
        return h.hexdigest()[:16]

    @classmethod
    def from_edges(cls, V1: int, V2: int, edges, meta: dict | None = None) -> "Graph":
        """Build a graph from an iterable of node pairs.

        Raises ``ValueError`` on self-loops, duplicate edges or out-of-range nodes.
        """
        V = V1 + V2
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(e):
            if e.min() < 0 or e.max() >= V:
                raise ValueError("edge endpoint out of range")
            if np.any(e[:, 0] == e[:, 1]):
                raise ValueError("self-loops are not allowed")
            lo = np.minimum(e[:, 0], e[:, 1])
            hi = np.maximum(e[:, 0], e[:, 1])
            key = lo * V + hi
            if len(np.unique(key)) != len(key):
                raise ValueError("duplicate edges are not allowed")
            src = np.concatenate([lo, hi])
            dst = np.concatenate([hi, lo])
        else:
            src = dst = np.zeros(0, dtype=np.int64)
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(V + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=V), out=indptr[1:])
        return cls(V1=V1, V2=V2, indptr=indptr, indices=dst.astype(np.int32), meta=dict(meta or {}))

    def check(self) -> None:
        """Assert symmetry, simplicity and sorted neighbor lists (O(E log E))."""
        V = self.V
        deg = self.degrees
        src = np.repeat(np.arange(V, dtype=np.int64), deg)
        dst = self.indices.astype(np.int64)
        if np.any(src == dst):
            raise AssertionError("self-loop present")
        for u in range(V):
            nb = self.neighbors(u)
            if len(nb) > 1 and np.any(np.diff(nb) <= 0):
                raise AssertionError(f"neighbors of {u} not strictly ascending")
        fwd = np.sort(src * V + dst)
        bwd = np.sort(dst * V + src)
        if not np.array_equal(fwd, bwd):
            raise AssertionError("adjacency not symmetric")


def _geometric_positions(rng: np.random.Generator, n_pairs: int, p: float) -> np.ndarray:
    """Indices in ``[0, n_pairs)`` each selected independently with probability ``p``."""
    if p <= 0 or n_pairs <= 0:
        return np.zeros(0, dtype=np.int64)
    if p >= 1:
        return np.arange(n_pairs, dtype=np.int64)
    out = []
    pos = -1
    mean = n_pairs * p
    chunk = int(mean + 6 * math.sqrt(mean) + 64)
    while True:
        gaps = rng.geometric(p, size=chunk).astype(np.int64)
        idx = pos + np.cumsum(gaps)
        if idx[-1] >= n_pairs:
            out.append(idx[idx < n_pairs])
            break
        out.append(idx)
        pos = int(idx[-1])
    return np.concatenate(out)


def _triangle_pairs(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map index ``k = j(j-1)/2 + i`` back to the pair ``i < j``."""
    j = np.floor((1.0 + np.sqrt(1.0 + 8.0 * k.astype(np.float64))) / 2.0).astype(np.int64)
    # float sqrt can be off by one near perfect squares
    j -= (j * (j - 1) // 2) > k
    j += ((j + 1) * j // 2) <= k
    i = k - j * (j - 1) // 2
    return i, j


def sample_sbm(params: SbmParams, seed: int) -> Graph:
    """Sample a graph from the two-community SBM.

    Every unordered pair is an independent Bernoulli trial; positions of the
    successes are drawn by geometric skipping, so the cost is proportional to
    the number of edges rather than to ``V**2``.
    """
    rng = make_rng(seed, GRAPH)
    V1, V2 = params.V1, params.V2
    blocks = []
    for offset, m in ((0, V1), (V1, V2)):
        k = _geometric_positions(rng, m * (m - 1) // 2, params.a_n)
        i, j = _triangle_pairs(k)
        blocks.append(np.column_stack([i + offset, j + offset]))
    k = _geometric_positions(rng, V1 * V2, params.b_n)
    blocks.append(np.column_stack([k // V2, V1 + k % V2]))
    edges = np.concatenate(blocks)
    meta = {"n": params.n, "lam": params.lam, "a": params.a, "b": params.b, "seed": int(seed)}
    return Graph.from_edges(V1, V2, edges, meta=meta)


def write_graph(graph: Graph, path: str | Path) -> None:
    """Write ``V V1 V2`` followed by one ``u v`` line per edge (``u < v``)."""
    e = graph.edges()
    with open(path, "w") as fh:
        fh.write(f"{graph.V} {graph.V1} {graph.V2}\n")
        if len(e):
            np.savetxt(fh, e, fmt="%d")


def read_graph(path: str | Path) -> Graph:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ValueError(f"{path}: header must be 'V V1 V2'")
        V, V1, V2 = map(int, header)
        if V != V1 + V2:
            raise ValueError(f"{path}: V != V1 + V2")
        data = np.loadtxt(fh, dtype=np.int64, ndmin=2)
    return Graph.from_edges(V1, V2, data.reshape(-1, 2))


class Interval(NamedTuple):
    """Open interval ``(lo, hi)``; may be unbounded or empty."""

    lo: float
    hi: float

    @property
    def is_empty(self) -> bool:
        return not self.lo < self.hi

    def __contains__(self, x) -> bool:
        return self.lo < x < self.hi


def _interval_formula(a: float, b: float, v1: float, v2: float) -> Interval:
    if v1 < v2:
        v1, v2 = v2, v1
    if v1 == v2:
        return Interval(-math.inf, math.inf)
    d = v1 - v2
    return Interval((b * v1 - a * v2) / d, (a * v1 - b * v2) / d)


def admissible_alpha_interval(a: float, b: float, v1: float, v2: float) -> Interval:
    """Range of penalty constants for which the mean-field limit drives the
    magnetizations to ``(1, -1)``.

    Communities are relabeled so that ``v1 >= v2``; equal sizes admit any alpha.
    """
    if not a > b > 0:
        raise ValueError("need a > b > 0")
    if v1 <= 0 or v2 <= 0:
        raise ValueError("community fractions must be positive")
    return _interval_formula(a, b, v1, v2)


@dataclass(frozen=True)
class EstimatedParams:
    V1_hat: float
    V2_hat: float
    a_hat: float
    b_hat: float
    alpha_interval: Interval
    revealed_counts: tuple[int, int]


def _as_reveal_arrays(revealed, V: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(revealed, dict):
        revealed = revealed.items()
    pairs = np.asarray(list(revealed) if not isinstance(revealed, np.ndarray) else revealed, dtype=np.int64)
    pairs = pairs.reshape(-1, 2)
    nodes, labels = pairs[:, 0], pairs[:, 1]
    if not np.isin(labels, (1, 2)).all():
        raise ValueError("labels must be 1 or 2")
    if len(nodes) and (nodes.min() < 0 or nodes.max() >= V):
        raise ValueError("revealed node out of range")
    return nodes, labels


def estimate_params(
    graph: Graph,
    revealed: Iterable[tuple[int, int]],
    eta: float,
    *,
    n: int | None = None,
    lam: float | None = None,
) -> EstimatedParams:
    """Estimate community sizes and connectivity constants from revealed labels.

    Sizes are the revealed counts divided by ``eta``; ``a`` and ``b`` are the
    edge densities among same-label and cross-label revealed pairs, rescaled
    by ``n / lam``.  ``n`` defaults to ``graph.meta['n']`` (else ``V1``) and
    ``lam`` to ``graph.meta['lam']`` (else ``log n``).
    """
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    n = int(n if n is not None else graph.meta.get("n", graph.V1))
    lam = float(lam if lam is not None else graph.meta.get("lam", math.log(n)))
    nodes, labels = _as_reveal_arrays(revealed, graph.V)
    if len(np.unique(nodes)) != len(nodes):
        raise ValueError("a node is revealed twice")
    m1 = int(np.sum(labels == 1))
    m2 = int(np.sum(labels == 2))
    if m1 < 2 or m2 < 2:
        raise EstimationError(f"need at least 2 revealed nodes per community (got {m1}, {m2})")

    label_of = np.zeros(graph.V, dtype=np.int8)
    label_of[nodes] = labels
    e = graph.edges()
    lu, lv = label_of[e[:, 0]], label_of[e[:, 1]]
    both = (lu > 0) & (lv > 0)
    same = int(np.sum(both & (lu == lv)))
    cross = int(np.sum(both & (lu != lv)))

    same_pairs = m1 * (m1 - 1) // 2 + m2 * (m2 - 1) // 2
    a_hat = same / same_pairs * n / lam
    b_hat = cross / (m1 * m2) * n / lam
    V1_hat, V2_hat = m1 / eta, m2 / eta
    interval = _interval_formula(a_hat, b_hat, V1_hat / n, V2_hat / n)
    return EstimatedParams(V1_hat, V2_hat, a_hat, b_hat, interval, (m1, m2))
