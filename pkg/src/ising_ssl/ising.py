"""Energy, flip rates and cached spin state for the magnetization-penalized Ising model.

The energy of a configuration is

    H(sigma) = -sum_{edges {u,v}} sigma(u) sigma(v) + (alpha_n / 2) * (sum_u sigma(u))**2

so flipping node ``u`` changes it by ``2 sigma(u) [S_u - alpha_n (M - sigma(u))]``
where ``S_u`` is the neighbor-spin sum and ``M`` the total spin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sbm import Graph

INFINITY = math.inf


@dataclass(frozen=True)
class IsingParams:
    """Penalty coefficient and inverse temperature.

    ``alpha`` is the scale-free penalty constant; ``alpha_n = alpha * lam / n``
    is what enters the energy.  ``beta`` may be ``math.inf``.
    """

    alpha_n: float
    beta: float = INFINITY
    alpha: float | None = None

    def __post_init__(self):
        if not (self.beta > 0):
            raise ValueError("beta must be positive or infinite")
        if not math.isfinite(self.alpha_n):
            raise ValueError("alpha_n must be finite")

    @classmethod
    def from_alpha(cls, alpha: float, lam: float, n: int, beta: float = INFINITY) -> "IsingParams":
        return cls(alpha_n=alpha * lam / n, beta=beta, alpha=alpha)

    @property
    def infinite_beta(self) -> bool:
        return math.isinf(self.beta)


def energy(graph: Graph, spins, alpha_n: float) -> float:
    """Energy of ``spins``; each edge contributes once."""
    s = np.asarray(spins, dtype=np.int64)
    if len(s) != graph.V:
        raise ValueError("spins length must equal the number of nodes")
    e = graph.edges()
    edge_term = int(np.sum(s[e[:, 0]] * s[e[:, 1]])) if len(e) else 0
    M = int(s.sum())
    return -edge_term + 0.5 * alpha_n * M * M


def flip_rate(beta: float, delta: float) -> float:
    """Glauber rate ``1 / (1 + exp(beta * delta))``.

    With infinite ``beta`` this is 1, 1/2 or 0 according to the sign of ``delta``.
    """
    if math.isinf(beta):
        if delta < 0:
            return 1.0
        return 0.5 if delta == 0 else 0.0
    x = beta * delta
    if x > 0:
        if x > 745:
            return 0.0
        e = math.exp(-x)
        return e / (1.0 + e)
    if x < -745:
        return 1.0
    return 1.0 / (1.0 + math.exp(x))


def rho_n(a_n: float, b_n: float) -> float:
    """Penalty coefficient at which the energy minimizer is the maximum-likelihood labeling."""
    if not (0 < b_n < 1 and 0 < a_n < 1):
        raise ValueError("edge probabilities must lie in (0, 1)")
    denom = math.log(b_n * (1 - a_n)) - math.log(a_n * (1 - b_n))
    if denom == 0:
        raise ValueError("invalid parameters: a_n == b_n makes rho_n undefined")
    return (math.log1p(-a_n) - math.log1p(-b_n)) / denom


def gibbs_weight(graph: Graph, spins, alpha_n: float, beta: float) -> float:
    """Unnormalized Gibbs weight ``exp(-beta * H)``."""
    if math.isinf(beta):
        raise ValueError("Gibbs weight is undefined for infinite beta")
    return math.exp(-beta * energy(graph, spins, alpha_n))


class SpinState:
    """A spin configuration with the caches the dynamics need.

    ``neighbor_sum[u]`` is the sum of the spins of ``u``'s neighbors and
    ``pos_counts[k]`` the number of ``+1`` spins in community ``k + 1``.
    The arrays are mutated in place by the simulation kernels.
    """

    def __init__(self, graph: Graph, spins, revealed=None):
        s = np.array(spins, dtype=np.int8)
        if s.shape != (graph.V,) or not np.all(np.abs(s) == 1):
            raise ValueError("spins must be a length-V array of +-1")
        self.graph = graph
        self.spins = s
        self.revealed = np.zeros(graph.V, dtype=bool) if revealed is None else np.asarray(revealed, dtype=bool)
        self.neighbor_sum = np.zeros(graph.V, dtype=np.int64)
        self.pos_counts = np.zeros(2, dtype=np.int64)
        self.rebuild()

    def rebuild(self) -> None:
        g = self.graph
        s64 = self.spins.astype(np.int64)
        src = np.repeat(np.arange(g.V), g.degrees)
        self.neighbor_sum[:] = np.bincount(src, weights=s64[g.indices], minlength=g.V).astype(np.int64)
        self.pos_counts[0] = int(np.sum(self.spins[: g.V1] > 0))
        self.pos_counts[1] = int(np.sum(self.spins[g.V1 :] > 0))

    def copy(self) -> "SpinState":
        return SpinState(self.graph, self.spins.copy(), self.revealed.copy())

    @property
    def total_spin(self) -> int:
        return int(2 * self.pos_counts.sum() - self.graph.V)

    @property
    def z(self) -> tuple[float, float]:
        """Normalized magnetization of each community."""
        V1, V2 = self.graph.V1, self.graph.V2
        return (2 * self.pos_counts[0] - V1) / V1, (2 * self.pos_counts[1] - V2) / V2

    def flip(self, u: int) -> None:
        g = self.graph
        old = int(self.spins[u])
        self.spins[u] = -old
        self.neighbor_sum[g.neighbors(u)] -= 2 * old
        self.pos_counts[0 if u < g.V1 else 1] -= old

    def deltas(self, alpha_n: float) -> np.ndarray:
        """Energy change of flipping each node, vectorized."""
        s = self.spins.astype(np.float64)
        M = float(self.total_spin)
        return 2.0 * s * (self.neighbor_sum - alpha_n * (M - s))

    def flippable_count(self, alpha_n: float) -> int:
        """Number of nodes whose flip would not raise the energy."""
        return int(np.sum(self.deltas(alpha_n) <= 0))

    def is_consistent(self) -> bool:
        fresh = SpinState(self.graph, self.spins)
        return bool(
            np.array_equal(fresh.neighbor_sum, self.neighbor_sum)
            and np.array_equal(fresh.pos_counts, self.pos_counts)
        )


def energy_delta(state: SpinState, u: int, params: IsingParams | float) -> float:
    """Energy change of flipping ``u``, from the cached sums in O(1)."""
    alpha_n = params.alpha_n if isinstance(params, IsingParams) else float(params)
    s = int(state.spins[u])
    return 2.0 * s * (int(state.neighbor_sum[u]) - alpha_n * (state.total_spin - s))
