"""Brute-force checks of the spin dynamics on graphs small enough to enumerate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .glauber import SimParams, run_continuous
from .ising import IsingParams, SpinState
from .rng import ORACLE, make_rng
from .sbm import Graph

MAX_ENUM_NODES = 20


def all_configs(V: int) -> np.ndarray:
    """``(2**V, V)`` int8 array; row ``i`` has spin +1 at node ``u`` iff bit ``u`` of ``i`` is set."""
    idx = np.arange(2**V, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(V, dtype=np.int64)) & 1
    return (2 * bits - 1).astype(np.int8)


def config_index(spins) -> np.ndarray:
    """Inverse of ``all_configs`` for one configuration or a stack of them."""
    s = np.asarray(spins)
    weights = 1 << np.arange(s.shape[-1], dtype=np.int64)
    return ((s > 0).astype(np.int64) * weights).sum(axis=-1)


def all_energies(graph: Graph, alpha_n: float, configs: np.ndarray | None = None) -> np.ndarray:
    S = all_configs(graph.V) if configs is None else configs
    S = S.astype(np.int64)
    e = graph.edges()
    edge_term = (S[:, e[:, 0]] * S[:, e[:, 1]]).sum(axis=1) if len(e) else np.zeros(len(S), dtype=np.int64)
    M = S.sum(axis=1)
    return -edge_term + 0.5 * alpha_n * M * M


@dataclass
class ExactDistribution:
    configs: np.ndarray
    probs: np.ndarray
    energies: np.ndarray

    def prob_of(self, spins) -> float:
        return float(self.probs[config_index(spins)])


def brute_force_gibbs(graph: Graph, alpha_n: float, beta: float) -> ExactDistribution:
    """Gibbs measure by enumeration of all ``2**V`` configurations."""
    if graph.V > MAX_ENUM_NODES:
        raise ValueError(f"refusing to enumerate 2**{graph.V} configurations (max V = {MAX_ENUM_NODES})")
    if math.isinf(beta):
        raise ValueError("Gibbs measure needs a finite beta")
    configs = all_configs(graph.V)
    H = all_energies(graph, alpha_n, configs)
    logw = -beta * H
    probs = np.exp(logw - logsumexp(logw))
    return ExactDistribution(configs, probs, H)


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def stationarity_check(graph: Graph, alpha_n: float, beta: float, t_burn: float = 50.0,
                       samples: int = 20_000, spacing: float = 5.0, seed: int = 0) -> float:
    """TV distance between the long-run empirical law of the chain and the Gibbs measure.

    One chain is run from a uniform random start; configurations are read at
    ``t_burn + k * spacing`` for ``k < samples``.
    """
    if graph.V > 10:
        raise ValueError("stationarity check is limited to V <= 10")
    exact = brute_force_gibbs(graph, alpha_n, beta)
    rng = make_rng(seed, ORACLE)
    start = rng.integers(0, 2, size=graph.V) * 2 - 1
    state = SpinState(graph, start)
    times = t_burn + spacing * np.arange(samples)
    params = SimParams(eta=1.0, ising=IsingParams(alpha_n=alpha_n, beta=beta),
                       t_end=float(times[-1]), sample_times=tuple(times), seed=seed)
    traj = run_continuous(graph, state, params, rng=rng, record_spins=True)
    counts = np.bincount(config_index(traj.sampled_spins), minlength=2**graph.V)
    return total_variation(counts / counts.sum(), exact.probs)


def detailed_balance_residual(graph: Graph, alpha_n: float, beta: float,
                              perturb: tuple[int, int, float] | None = None) -> float:
    """Largest relative gap ``|pi(s) r(s -> s^u) - pi(s^u) r(s^u -> s)|`` over single flips.

    ``perturb = (config, node, eps)`` adds ``eps`` to one transition rate, which
    is how the check's own sensitivity is tested.
    """
    if graph.V > 12:
        raise ValueError("detailed balance check is limited to V <= 12")
    exact = brute_force_gibbs(graph, alpha_n, beta)
    N, V = len(exact.probs), graph.V
    i = np.arange(N)[:, None]
    u = np.arange(V)[None, :]
    j = i ^ (1 << u)
    delta = exact.energies[j] - exact.energies[i]
    rate_fwd = expit(-beta * delta)
    rate_bwd = expit(beta * delta)
    if perturb is not None:
        ci, cu, eps = perturb
        rate_fwd[ci, cu] += eps
    flux_fwd = exact.probs[i] * rate_fwd
    flux_bwd = exact.probs[j] * rate_bwd
    tiny = np.finfo(float).tiny
    return float(np.max(np.abs(flux_fwd - flux_bwd) / np.maximum(flux_fwd, tiny)))


def ctmc_generator(graph: Graph, alpha_n: float, beta: float) -> np.ndarray:
    """Dense generator matrix of the Glauber chain on all configurations."""
    if graph.V > 12:
        raise ValueError("generator is limited to V <= 12")
    H = all_energies(graph, alpha_n)
    N, V = len(H), graph.V
    Q = np.zeros((N, N))
    for u in range(V):
        i = np.arange(N)
        j = i ^ (1 << u)
        Q[i, j] = expit(-beta * (H[j] - H[i]))
    Q[np.diag_indices(N)] = -Q.sum(axis=1)
    return Q


def small_graph(name: str) -> Graph:
    """Named tiny graphs: ``triangle``, ``path:k``, ``cycle:k``, ``complete:k``, ``empty:k``.

    All nodes are put in community 1 except the last, so both communities are nonempty.
    """
    kind, _, arg = name.partition(":")
    if kind == "triangle":
        kind, k = "complete", 3
    else:
        k = int(arg) if arg else 3
    if kind == "path":
        edges = [(i, i + 1) for i in range(k - 1)]
    elif kind == "cycle":
        edges = [(i, (i + 1) % k) for i in range(k)] if k > 2 else [(0, 1)]
    elif kind == "complete":
        edges = [(i, j) for i in range(k) for j in range(i + 1, k)]
    elif kind == "empty":
        edges = []
    else:
        raise ValueError(f"unknown small graph {name!r}")
    if k < 2:
        raise ValueError("small graphs need at least 2 nodes")
    return Graph.from_edges(k - 1, 1, edges)
