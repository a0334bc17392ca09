"""Seeding from a noisy label oracle and Glauber simulation of the spin system.

Continuous time is simulated exactly by uniformization: proposals arrive as a
Poisson process of rate ``V``, each picks a uniform node, and the flip is
accepted with probability equal to its Glauber rate (always <= 1).  Discrete
time uses the same proposal/acceptance step with one proposal per slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .ising import IsingParams, SpinState
from .rng import DYNAMICS, SEEDING, kernel_seed, make_rng
from .sbm import Graph

CONTINUOUS = "continuous"
DISCRETE = "discrete"
_MODE_ALIASES = {"ct": CONTINUOUS, "continuous": CONTINUOUS, "dt": DISCRETE, "discrete": DISCRETE}

STOP_T_END = 0
STOP_FROZEN = 1
STOP_FLIP_BUDGET = 2
_STOP_NAMES = {STOP_T_END: "t_end", STOP_FROZEN: "frozen", STOP_FLIP_BUDGET: "flip_budget"}

BERNOULLI = "bernoulli"
EXACT = "exact"


@dataclass(frozen=True)
class SimParams:
    """Everything one run of the algorithm needs besides the graph.

    In discrete mode ``t_end`` and ``sample_times`` count proposal slots.
    ``max_flips`` optionally caps the number of accepted flips.
    """

    eta: float
    ising: IsingParams
    t_end: float
    sample_times: tuple[float, ...] = ()
    seed: int = 0
    mode: str = CONTINUOUS
    oracle_noise: tuple[float, float] = (0.0, 0.0)
    max_flips: int | None = None
    pin_revealed: bool = False
    reveal: str = BERNOULLI

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if not all(0 <= q < 0.5 for q in self.oracle_noise):
            raise ValueError("oracle mistake probabilities must lie in [0, 1/2)")
        if not self.t_end >= 0:
            raise ValueError("t_end must be nonnegative")
        if self.reveal not in (BERNOULLI, EXACT):
            raise ValueError(f"unknown reveal scheme {self.reveal!r}")
        if self.mode not in _MODE_ALIASES:
            raise ValueError(f"unknown mode {self.mode!r}")
        object.__setattr__(self, "mode", _MODE_ALIASES[self.mode])
        ts = tuple(float(t) for t in self.sample_times)
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError("sample_times must be ascending")
        object.__setattr__(self, "sample_times", ts)


@dataclass
class Trajectory:
    times: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    accepted_flips: int
    proposed_updates: int
    frozen_at: float | None
    final_spins: np.ndarray
    t_stop: float
    stop_reason: str
    mode: str = CONTINUOUS
    sampled_spins: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "z1": self.z1.tolist(),
            "z2": self.z2.tolist(),
            "accepted_flips": int(self.accepted_flips),
            "proposed_updates": int(self.proposed_updates),
            "frozen_at": self.frozen_at,
            "t_stop": self.t_stop,
            "stop_reason": self.stop_reason,
            "mode": self.mode,
        }


def reveal_mask(graph: Graph, eta: float, rng: np.random.Generator, reveal: str = BERNOULLI) -> np.ndarray:
    """Which nodes the oracle labels.

    ``bernoulli`` reveals each node independently with probability ``eta``;
    ``exact`` reveals ``round(eta * V_k)`` uniformly chosen nodes of each community.
    """
    V = graph.V
    if reveal == BERNOULLI:
        return rng.random(V) < eta
    if reveal == EXACT:
        mask = np.zeros(V, dtype=bool)
        for offset, size in ((0, graph.V1), (graph.V1, graph.V2)):
            m = int(round(eta * size))
            mask[offset + rng.choice(size, m, replace=False)] = True
        return mask
    raise ValueError(f"unknown reveal scheme {reveal!r}")


def seed_spins(graph: Graph, eta: float, noise=(0.0, 0.0), rng: np.random.Generator | None = None,
               reveal: str = BERNOULLI) -> SpinState:
    """Initial configuration from a partially revealed, possibly noisy, labeling.

    Revealed nodes (see ``reveal_mask``) take their true spin, flipped with
    probability ``noise[k-1]`` for community ``k``; the others are uniform on {-1, +1}.
    """
    if rng is None:
        rng = make_rng(0, SEEDING)
    V = graph.V
    revealed = reveal_mask(graph, eta, rng, reveal)
    mistake_u = rng.random(V)
    coin = rng.integers(0, 2, size=V, dtype=np.int8) * 2 - 1
    truth = graph.truth_spins
    q = np.where(np.arange(V) < graph.V1, noise[0], noise[1])
    oracle = np.where(mistake_u < q, -truth, truth).astype(np.int8)
    spins = np.where(revealed, oracle, coin).astype(np.int8)
    return SpinState(graph, spins, revealed)


@nb.njit(cache=True)
def _seed_kernel_rng(seed):
    np.random.seed(seed)


@nb.njit(cache=True)
def _rate(beta, inf_beta, delta):
    if inf_beta:
        if delta < 0.0:
            return 1.0
        if delta == 0.0:
            return 0.5
        return 0.0
    x = beta * delta
    if x > 0.0:
        if x > 745.0:
            return 0.0
        e = math.exp(-x)
        return e / (1.0 + e)
    if x < -745.0:
        return 1.0
    return 1.0 / (1.0 + math.exp(x))


@nb.njit(cache=True)
def _mag(n_pos, size):
    if size == 0:
        return np.nan
    return (2.0 * n_pos - size) / size


@nb.njit(cache=True)
def _count_flippable(hist_pos, hist_neg, offset, alpha_n, M):
    # sigma=+1 flippable iff S <= alpha_n*(M-1); sigma=-1 iff S >= alpha_n*(M+1)
    thr_pos = alpha_n * (M - 1.0)
    thr_neg = alpha_n * (M + 1.0)
    c = 0
    for i in range(hist_pos.shape[0]):
        S = i - offset
        if S <= thr_pos:
            c += hist_pos[i]
        if S >= thr_neg:
            c += hist_neg[i]
    return c


@nb.njit(cache=True)
def _glauber_kernel(
    indptr, indices, spins, nsum, pos, V1, pinned,
    alpha_n, beta, inf_beta, continuous, t0, t_end, max_flips,
    sample_times, z_out, spins_out, record_spins,
):
    V = spins.shape[0]
    V2 = V - V1
    D = 0
    for u in range(V):
        d = indptr[u + 1] - indptr[u]
        if d > D:
            D = d
    hist_pos = np.zeros(2 * D + 1, dtype=np.int64)
    hist_neg = np.zeros(2 * D + 1, dtype=np.int64)
    flippable = 0
    M = 2 * (pos[0] + pos[1]) - V
    if inf_beta:
        for u in range(V):
            if pinned[u]:
                continue
            if spins[u] > 0:
                hist_pos[nsum[u] + D] += 1
            else:
                hist_neg[nsum[u] + D] += 1
        flippable = _count_flippable(hist_pos, hist_neg, D, alpha_n, M)

    ns = sample_times.shape[0]
    k = 0
    # samples before the start time see the initial state
    while k < ns and sample_times[k] < t0:
        z_out[k, 0] = _mag(pos[0], V1)
        z_out[k, 1] = _mag(pos[1], V2)
        if record_spins:
            spins_out[k, :] = spins
        k += 1

    t = t0
    proposals = 0
    flips = 0
    last_flip_t = t0
    reason = 0
    while True:
        if inf_beta and flippable == 0:
            reason = 1
            break
        if max_flips >= 0 and flips >= max_flips:
            reason = 2
            break
        if continuous:
            t_next = t + np.random.exponential(1.0 / V)
        else:
            t_next = t + 1.0
        while k < ns and sample_times[k] < t_next and sample_times[k] <= t_end:
            z_out[k, 0] = _mag(pos[0], V1)
            z_out[k, 1] = _mag(pos[1], V2)
            if record_spins:
                spins_out[k, :] = spins
            k += 1
        if t_next > t_end:
            t = t_end
            reason = 0
            break
        t = t_next
        proposals += 1
        u = np.random.randint(0, V)
        if pinned[u]:
            continue
        s = spins[u]
        delta = 2.0 * s * (nsum[u] - alpha_n * (M - s))
        r = _rate(beta, inf_beta, delta)
        if r <= 0.0:
            continue
        if r < 1.0 and np.random.random() >= r:
            continue
        # accept: flip u and update caches
        if inf_beta:
            if s > 0:
                hist_pos[nsum[u] + D] -= 1
                hist_neg[nsum[u] + D] += 1
            else:
                hist_neg[nsum[u] + D] -= 1
                hist_pos[nsum[u] + D] += 1
        spins[u] = -s
        if u < V1:
            pos[0] -= s
        else:
            pos[1] -= s
        M -= 2 * s
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            if inf_beta and not pinned[v]:
                if spins[v] > 0:
                    hist_pos[nsum[v] + D] -= 1
                    hist_pos[nsum[v] - 2 * s + D] += 1
                else:
                    hist_neg[nsum[v] + D] -= 1
                    hist_neg[nsum[v] - 2 * s + D] += 1
            nsum[v] -= 2 * s
        flips += 1
        last_flip_t = t
        if inf_beta:
            flippable = _count_flippable(hist_pos, hist_neg, D, alpha_n, M)

    # remaining samples see the state in which the run stopped
    while k < ns and (reason != 0 or sample_times[k] <= t_end):
        z_out[k, 0] = _mag(pos[0], V1)
        z_out[k, 1] = _mag(pos[1], V2)
        if record_spins:
            spins_out[k, :] = spins
        k += 1
    return proposals, flips, reason, t, last_flip_t, k


def _simulate(graph: Graph, state: SpinState, params: SimParams, continuous: bool,
              rng: np.random.Generator | None, record_spins: bool) -> Trajectory:
    if state.graph is not graph and state.graph.V != graph.V:
        raise ValueError("state does not belong to this graph")
    if rng is None:
        rng = make_rng(params.seed, DYNAMICS)
    _seed_kernel_rng(kernel_seed(rng))
    times = np.asarray(params.sample_times, dtype=np.float64)
    z_out = np.full((len(times), 2), np.nan)
    spins_out = np.zeros((len(times) if record_spins else 0, graph.V), dtype=np.int8)
    pinned = state.revealed if params.pin_revealed else np.zeros(graph.V, dtype=bool)
    ip = params.ising
    max_flips = -1 if params.max_flips is None else int(params.max_flips)
    t_end = float(params.t_end)
    proposals, flips, reason, t_stop, last_flip, k = _glauber_kernel(
        graph.indptr, graph.indices, state.spins, state.neighbor_sum, state.pos_counts,
        graph.V1, pinned, float(ip.alpha_n), float(ip.beta) if not ip.infinite_beta else 0.0,
        ip.infinite_beta, continuous, 0.0, t_end, max_flips,
        times, z_out, spins_out, record_spins,
    )
    keep = slice(0, k)
    return Trajectory(
        times=times[keep].copy(),
        z1=z_out[keep, 0].copy(),
        z2=z_out[keep, 1].copy(),
        accepted_flips=int(flips),
        proposed_updates=int(proposals),
        frozen_at=float(last_flip) if reason == STOP_FROZEN else None,
        final_spins=state.spins.copy(),
        t_stop=float(t_stop),
        stop_reason=_STOP_NAMES[int(reason)],
        mode=CONTINUOUS if continuous else DISCRETE,
        sampled_spins=spins_out[keep].copy() if record_spins else None,
    )


def run_continuous(graph: Graph, state: SpinState, params: SimParams,
                   rng: np.random.Generator | None = None, record_spins: bool = False) -> Trajectory:
    """Exact continuous-time Glauber dynamics from ``state`` (mutated in place).

    Stops at ``t_end``, when the flip budget is spent, or (infinite beta) when
    no node can flip any more; ``frozen_at`` is then the time of the last flip.
    Samples are right-continuous: a sample at time ``s`` sees every flip at
    times ``<= s``.
    """
    return _simulate(graph, state, params, True, rng, record_spins)


def run_discrete(graph: Graph, state: SpinState, params: SimParams,
                 rng: np.random.Generator | None = None, record_spins: bool = False) -> Trajectory:
    """Discrete-time dynamics: ``t_end`` proposal slots, one uniform node per slot."""
    return _simulate(graph, state, params, False, rng, record_spins)


def run_algorithm(graph: Graph, params: SimParams, state: SpinState | None = None) -> tuple[Trajectory, SpinState]:
    """Seed from the oracle (unless ``state`` is given) and simulate.

    Returns the trajectory and the final state; seeding and dynamics use
    independent streams derived from ``params.seed``.
    """
    if state is None:
        state = seed_spins(graph, params.eta, params.oracle_noise, make_rng(params.seed, SEEDING), params.reveal)
    run = run_continuous if params.mode == CONTINUOUS else run_discrete
    return run(graph, state, params, make_rng(params.seed, DYNAMICS)), state


@dataclass(frozen=True)
class ErrorMetrics:
    err_total: float
    err1: float
    err2: float
    max_dev: float

    def as_dict(self) -> dict:
        return {"err_total": self.err_total, "err1": self.err1, "err2": self.err2, "max_dev": self.max_dev}


def classification_error(graph: Graph, spins_or_z) -> ErrorMetrics:
    """Misclassification fractions and the sup-norm distance of ``z`` to ``(1, -1)``.

    Accepts either a full configuration or a magnetization pair.
    """
    arr = np.asarray(spins_or_z, dtype=np.float64)
    if arr.shape == (2,):
        z1, z2 = float(arr[0]), float(arr[1])
    else:
        if arr.shape != (graph.V,):
            raise ValueError("expected a configuration or a magnetization pair")
        z1 = float(arr[: graph.V1].mean())
        z2 = float(arr[graph.V1 :].mean())
    err1 = (1.0 - z1) / 2.0
    err2 = (1.0 + z2) / 2.0
    err_total = (graph.V1 * err1 + graph.V2 * err2) / graph.V
    return ErrorMetrics(err_total, err1, err2, max(abs(z1 - 1.0), abs(z2 + 1.0)))
