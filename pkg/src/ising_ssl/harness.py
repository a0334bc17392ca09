"""Experiment drivers: mean-field trajectories, the two comparison tables,
penalty/temperature sweeps and recovery-scaling runs.

Every driver is deterministic for a given ``seed_base``; replicate ``r`` uses
seed ``seed_base + r`` for its graph, so all algorithms evaluated within one
replicate see the same graph.  Replicates can run in worker processes and are
always reduced in replicate order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines as bl
from .glauber import EXACT, SimParams, classification_error, reveal_mask, run_algorithm
from .ising import IsingParams
from .meanfield import default_grid, deviation, t_end_for_error, z_infinity
from .rng import SEEDING, make_rng
from .sbm import SbmParams, resolve_lambda, sample_sbm

ETAS = tuple(round(0.01 * i, 2) for i in range(1, 11))
INF = math.inf


def _map(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks))


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".10g")
    return str(x)


def rows_to_csv(rows: list[dict], path: str | Path | None = None) -> str:
    """Render rows with a fixed float format so reruns are byte-identical."""
    buf = io.StringIO()
    if rows:
        w = csv.writer(buf, lineterminator="\n")
        cols = list(rows[0].keys())
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in cols])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def write_json(obj, path: str | Path) -> None:
    def default(o):
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(type(o))

    Path(path).write_text(json.dumps(obj, indent=2, default=default, allow_nan=True))


def pct_stats(errors) -> tuple[float, float]:
    """Mean and population standard deviation of errors, in percent."""
    e = 100.0 * np.asarray(errors, dtype=np.float64)
    return float(e.mean()), float(e.std())


@dataclass
class ExperimentConfig:
    """Knobs shared by the experiment drivers; unknown keys are rejected."""

    experiment: str = "table2"
    n: int | None = None
    a: float | None = None
    b: float | None = None
    lam: str | float = "log-n"
    alpha: float | None = None
    beta: float | None = None
    etas: tuple[float, ...] = ETAS
    replicates: int = 10
    seed_base: int = 0
    n_scale: float = 1.0
    workers: int = 1
    out_dir: str = "."
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str | Path, **defaults) -> "ExperimentConfig":
        """Load a JSON object, or ``key = value`` lines, into a config.

        Keys missing from the file fall back to ``defaults``, then to the field defaults.
        """
        text = Path(path).read_text()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError:
            raw = {}
            for line in text.splitlines():
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                k, _, v = line.partition("=")
                v = v.strip()
                try:
                    raw[k.strip()] = json.loads(v)
                except json.JSONDecodeError:
                    raw[k.strip()] = v
        known = {f for f in cls.__dataclass_fields__}
        extra = {k: v for k, v in raw.items() if k not in known}
        cfg = cls(**{**defaults, **{k: v for k, v in raw.items() if k in known}})
        cfg.extra.update(extra)
        if "etas" in raw:
            cfg.etas = tuple(float(e) for e in raw["etas"])
        if cfg.replicates < 1:
            raise ValueError("replicates must be >= 1")
        return cfg


# ---------------------------------------------------------------- figure 1

def _fig1_replicate(task):
    n, lam, a, b, eta, alpha, beta, grid, seed = task
    g = sample_sbm(SbmParams(n=n, V1=n, V2=n, lam=lam, a=a, b=b), seed)
    p = SimParams(eta=eta, ising=IsingParams.from_alpha(alpha, lam, n, beta), t_end=float(grid[-1]),
                  sample_times=tuple(grid), seed=seed)
    traj, _ = run_algorithm(g, p)
    return traj.z1, traj.z2


@dataclass
class Fig1Result:
    rows: list[dict]
    summary: list[dict]
    sup_devs: dict[str, list[float]]


def run_fig1(lambdas=("log-n", "3*log-n"), n: int = 5000, a: float = 5, b: float = 1, eta: float = 0.1,
             alpha: float = 0.0, beta: float = INF, replicates: int = 20, t_max: float = 5.0,
             dt: float = 0.05, seed_base: int = 0, workers: int = 1) -> Fig1Result:
    """Average magnetization trajectories with 95% bands next to the limit curve."""
    grid = default_grid(t_max, dt)
    zinf1, zinf2 = z_infinity(eta, grid)
    rows, summary, sup_devs = [], [], {}
    for label in lambdas:
        lam = resolve_lambda(label, n)
        tasks = [(n, lam, a, b, eta, alpha, beta, grid, seed_base + r) for r in range(replicates)]
        res = _map(_fig1_replicate, tasks, workers)
        Z1 = np.array([r[0] for r in res])
        Z2 = np.array([r[1] for r in res])
        devs = [float(max(np.max(np.abs(z1 - zinf1)), np.max(np.abs(z2 - zinf2)))) for z1, z2 in zip(Z1, Z2)]
        sup_devs[str(label)] = devs
        m1, m2 = Z1.mean(axis=0), Z2.mean(axis=0)
        if replicates > 1:
            h1 = 1.96 * Z1.std(axis=0, ddof=1) / math.sqrt(replicates)
            h2 = 1.96 * Z2.std(axis=0, ddof=1) / math.sqrt(replicates)
        else:
            h1 = h2 = np.zeros_like(m1)
        for i, t in enumerate(grid):
            rows.append({
                "lambda_label": str(label), "lambda": lam, "t": float(t),
                "mean_z1": float(m1[i]), "mean_z2": float(m2[i]),
                "band1_lo": float(m1[i] - h1[i]), "band1_hi": float(m1[i] + h1[i]),
                "band2_lo": float(m2[i] - h2[i]), "band2_hi": float(m2[i] + h2[i]),
                "z_inf1": float(zinf1[i]), "z_inf2": float(zinf2[i]),
            })
        summary.append({"lambda_label": str(label), "lambda": lam, "replicates": replicates,
                        "mean_sup_dev": float(np.mean(devs)), "max_sup_dev": float(np.max(devs))})
    return Fig1Result(rows, summary, sup_devs)


# ---------------------------------------------------------------- tables

@dataclass
class ResultTable:
    rows: list[dict]
    meta: dict = field(default_factory=dict)

    def cell(self, **key) -> dict:
        hits = [r for r in self.rows if all(_same(r.get(k), v) for k, v in key.items())]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match {key}")
        return hits[0]

    def csv_rows(self) -> list[dict]:
        return [{k: v for k, v in r.items() if not k.startswith("runtime")} for r in self.rows]


def _same(a, b) -> bool:
    if isinstance(a, float) or isinstance(b, float):
        try:
            return math.isclose(float(a), float(b), rel_tol=1e-12, abs_tol=1e-12) or (
                math.isinf(float(a)) and math.isinf(float(b)) and float(a) == float(b))
        except (TypeError, ValueError):
            return False
    return a == b


def _glauber_cell(g, n, lam, eta, alpha, beta, seed, mode, t_end, max_flips, reveal):
    p = SimParams(eta=eta, ising=IsingParams.from_alpha(alpha, lam, n, beta), t_end=t_end,
                  seed=seed, mode=mode, max_flips=max_flips, reveal=reveal)
    t0 = time.perf_counter()
    traj, state = run_algorithm(g, p)
    err = classification_error(g, state.spins).err_total
    return err, traj.accepted_flips, traj.proposed_updates, time.perf_counter() - t0


def _cap(per_node: float, V: int, mode: str) -> float:
    # discrete time counts slots, continuous time has V proposals per unit
    return per_node * V if mode == "discrete" else float(per_node)


def _eta_seed(seed: int, eta_index: int) -> int:
    return seed * 1000 + eta_index


# Glauber budgets count accepted flips; the proposal cap only guarantees termination
# at finite beta, where flips near the ground truth become exponentially rare.
TABLE1 = dict(n=10000, V1=10000, V2=7500, a_values=(7.0, 10.0), b=1.0, alphas=(0.0, 6.0), betas=(1.0, INF),
              max_flips=50_000, slot_cap_per_node=100)
TABLE2 = dict(n=5000, a=3.0, b=1.0, alpha=10.0, beta=INF, updates_per_node=20, slot_cap_per_node=100)


def _table1_replicate(task):
    (n, V1, V2, a, b, lam, alphas, betas, etas, seed, max_flips, slots, mode, reveal) = task
    g = sample_sbm(SbmParams(n=n, V1=V1, V2=V2, lam=lam, a=a, b=b), seed)
    out = {}
    for ei, eta in enumerate(etas):
        for alpha in alphas:
            for beta in betas:
                out[(eta, alpha, beta)] = _glauber_cell(g, n, lam, eta, alpha, beta, _eta_seed(seed, ei),
                                                        mode, _cap(slots, g.V, mode), max_flips, reveal)
    return g.fingerprint(), out


def run_table1(etas=ETAS, replicates: int = 10, seed_base: int = 0, n_scale: float = 1.0,
               a_values=TABLE1["a_values"], alphas=TABLE1["alphas"], betas=TABLE1["betas"],
               lam: str | float = "log-n", mode: str = "discrete", reveal: str = EXACT,
               workers: int = 1) -> ResultTable:
    """Penalty/temperature grid on the unbalanced SBM (V1 = n, V2 = 0.75 n).

    Each run stops after ``max_flips`` accepted flips (scaled with ``n``), when
    frozen, or at the proposal cap, whichever comes first.
    """
    n = int(round(TABLE1["n"] * n_scale))
    V1, V2 = n, int(round(0.75 * n))
    lam_v = resolve_lambda(lam, n)
    max_flips = int(round(TABLE1["max_flips"] * n_scale))
    rows, hashes = [], {}
    for a in a_values:
        tasks = [(n, V1, V2, a, TABLE1["b"], lam_v, tuple(alphas), tuple(betas), tuple(etas), seed_base + r,
                  max_flips, TABLE1["slot_cap_per_node"], mode, reveal) for r in range(replicates)]
        res = _map(_table1_replicate, tasks, workers)
        hashes[f"a={a}"] = [h for h, _ in res]
        for eta in etas:
            for alpha in alphas:
                for beta in betas:
                    cells = [out[(eta, alpha, beta)] for _, out in res]
                    mu, sd = pct_stats([c[0] for c in cells])
                    rows.append({
                        "eta": float(eta), "algorithm": "glauber", "a": float(a), "b": TABLE1["b"],
                        "alpha": float(alpha), "beta": float(beta), "mu": mu, "sigma": sd,
                        "flips_mean": float(np.mean([c[1] for c in cells])),
                        "proposals_mean": float(np.mean([c[2] for c in cells])),
                        "runtime_mean_s": float(np.mean([c[3] for c in cells])),
                    })
    meta = dict(table=1, n=n, V1=V1, V2=V2, lam=lam_v, replicates=replicates, seed_base=seed_base,
                max_flips=max_flips, mode=mode, reveal=reveal, graph_hashes=hashes)
    return ResultTable(rows, meta)


TABLE2_BASELINES = (
    ("consensus_async", 0.0), ("consensus_sync", 0.0), ("gossip", 0.0),
    ("laplacian", 1.0), ("laplacian", 0.5), ("laplacian", 0.0), ("poisson", 0.0),
)


def _table2_replicate(task):
    n, a, b, lam, alpha, beta, etas, seed, mode, reveal, baseline_kinds, upn, cap = task
    g = sample_sbm(SbmParams(n=n, V1=n, V2=n, lam=lam, a=a, b=b), seed)
    out = {}
    for ei, eta in enumerate(etas):
        es = _eta_seed(seed, ei)
        err, flips, props, rt = _glauber_cell(g, n, lam, eta, alpha, beta, es, mode, _cap(cap, g.V, mode),
                                              upn * g.V, reveal)
        out[(eta, "glauber")] = (err, flips, props, rt)
        # same revealed set as the glauber run
        mask = reveal_mask(g, eta, make_rng(es, SEEDING), reveal)
        seeds = bl.seeds_from_mask(g, mask)
        for kind, d in baseline_kinds:
            spec = bl.BaselineSpec(kind, bl.parity_budget(kind, g.V, a, b, lam, upn), delta_exp=d, seed=es)
            t0 = time.perf_counter()
            r = bl.run_baseline(g, seeds, spec)
            out[(eta, spec.name)] = (bl.error_rate(g, r.labels), 0, spec.iters, time.perf_counter() - t0)
    return g.fingerprint(), out


def run_table2(etas=ETAS, replicates: int = 10, seed_base: int = 0, n_scale: float = 1.0,
               lam: str | float = "log-n", alpha: float = TABLE2["alpha"], beta: float = TABLE2["beta"],
               baselines=TABLE2_BASELINES, mode: str = "discrete", reveal: str = EXACT,
               workers: int = 1) -> ResultTable:
    """The glauber algorithm against the five baselines on a balanced SBM, one graph per replicate.

    Glauber gets ``20 V`` accepted flips; baselines get the per-node update
    parity of ``baselines.parity_budget``.  Every algorithm in a replicate
    sees the same graph and the same revealed set.
    """
    n = int(round(TABLE2["n"] * n_scale))
    a, b = TABLE2["a"], TABLE2["b"]
    lam_v = resolve_lambda(lam, n)
    tasks = [(n, a, b, lam_v, alpha, beta, tuple(etas), seed_base + r, mode, reveal, tuple(baselines),
              TABLE2["updates_per_node"], TABLE2["slot_cap_per_node"]) for r in range(replicates)]
    res = _map(_table2_replicate, tasks, workers)
    names = ["glauber"] + [bl.BaselineSpec(k, 1, delta_exp=d).name for k, d in baselines]
    rows = []
    for name in names:
        for eta in etas:
            cells = [out[(eta, name)] for _, out in res]
            mu, sd = pct_stats([c[0] for c in cells])
            rows.append({
                "eta": float(eta), "algorithm": name, "a": a, "b": b,
                "alpha": float(alpha) if name == "glauber" else float("nan"),
                "beta": float(beta) if name == "glauber" else float("nan"),
                "mu": mu, "sigma": sd,
                "flips_mean": float(np.mean([c[1] for c in cells])),
                "proposals_mean": float(np.mean([c[2] for c in cells])),
                "runtime_mean_s": float(np.mean([c[3] for c in cells])),
            })
    meta = dict(table=2, n=n, V=2 * n, lam=lam_v, replicates=replicates, seed_base=seed_base,
                mode=mode, reveal=reveal, graph_hashes=[h for h, _ in res])
    return ResultTable(rows, meta)


def run_table(which: int, **kwargs) -> ResultTable:
    if which == 1:
        return run_table1(**kwargs)
    if which == 2:
        return run_table2(**kwargs)
    raise ValueError("which must be 1 or 2")


# ---------------------------------------------------------------- sweep

def _sweep_replicate(task):
    n, V1, V2, a, b, lam, alphas, betas, etas, seed, mode, t_end_per_node, reveal = task
    g = sample_sbm(SbmParams(n=n, V1=V1, V2=V2, lam=lam, a=a, b=b), seed)
    out = {}
    for ei, eta in enumerate(etas):
        for alpha in alphas:
            for beta in betas:
                t_end = t_end_per_node * g.V if mode == "discrete" else t_end_per_node
                out[(eta, alpha, beta)] = _glauber_cell(g, n, lam, eta, alpha, beta, _eta_seed(seed, ei),
                                                        mode, t_end, None, reveal)
    return out


def run_sweep(alphas, betas, etas=(0.05,), n: int = 5000, v2_ratio: float = 1.0, a: float = 3.0,
              b: float = 1.0, lam: str | float = "log-n", replicates: int = 10, seed_base: int = 0,
              mode: str = "discrete", t_end_per_node: float = 20.0, reveal: str = EXACT,
              workers: int = 1) -> ResultTable:
    """Error of the glauber algorithm over an (alpha, beta, eta) grid."""
    V1, V2 = n, int(round(v2_ratio * n))
    lam_v = resolve_lambda(lam, n)
    tasks = [(n, V1, V2, a, b, lam_v, tuple(alphas), tuple(betas), tuple(etas), seed_base + r, mode,
              t_end_per_node, reveal) for r in range(replicates)]
    res = _map(_sweep_replicate, tasks, workers)
    rows = []
    for eta in etas:
        for alpha in alphas:
            for beta in betas:
                cells = [out[(eta, alpha, beta)] for out in res]
                mu, sd = pct_stats([c[0] for c in cells])
                rows.append({"eta": float(eta), "algorithm": "glauber", "a": float(a), "b": float(b),
                             "alpha": float(alpha), "beta": float(beta), "mu": mu, "sigma": sd,
                             "flips_mean": float(np.mean([c[1] for c in cells])),
                             "proposals_mean": float(np.mean([c[2] for c in cells])),
                             "runtime_mean_s": float(np.mean([c[3] for c in cells]))})
    meta = dict(experiment="sweep", n=n, V1=V1, V2=V2, lam=lam_v, replicates=replicates, seed_base=seed_base)
    return ResultTable(rows, meta)


# ---------------------------------------------------------------- recovery scaling

def _recovery_replicate(task):
    n, lam_spec, a, b, eta, alpha, beta, t_end, seed = task
    lam = resolve_lambda(lam_spec, n)
    g = sample_sbm(SbmParams(n=n, V1=n, V2=n, lam=lam, a=a, b=b), seed)
    p = SimParams(eta=eta, ising=IsingParams.from_alpha(alpha, lam, n, beta), t_end=t_end, seed=seed)
    _, state = run_algorithm(g, p)
    return classification_error(g, state.spins).max_dev


def run_recovery_scaling(n_list=(2000, 8000, 32000), c: float = 0.2, a: float = 5.0, b: float = 1.0,
                         eta: float = 0.1, alpha: float = 0.0, beta: float = INF, lam: str | float = "log-n",
                         replicates: int = 10, seed_base: int = 0, eps: float | None = None,
                         workers: int = 1) -> list[dict]:
    """``max_dev`` after running to ``c log lam_n`` (or to the ``eps`` rule) for growing ``n``."""
    if not 0 <= c < 0.25:
        raise ValueError("c must lie in [0, 1/4)")
    if any(m >= k for m, k in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be ascending")
    rows = []
    for n in n_list:
        lam_v = resolve_lambda(lam, n)
        schedule = [("c_log_lambda", c * math.log(lam_v))]
        if eps is not None:
            schedule.append(("eps_rule", t_end_for_error(eta, eps)))
        for rule, t_n in schedule:
            tasks = [(n, lam, a, b, eta, alpha, beta, t_n, seed_base + r) for r in range(replicates)]
            devs = _map(_recovery_replicate, tasks, workers)
            rows.append({"n": int(n), "lambda": lam_v, "rule": rule, "t_n": float(t_n),
                         "max_dev_mean": float(np.mean(devs)), "max_dev_sd": float(np.std(devs)),
                         "max_dev_max": float(np.max(devs)),
                         "n_below_eps": int(np.sum(np.asarray(devs) <= (eps + 0.02))) if eps is not None else -1,
                         "devs": ";".join(format(d, ".6g") for d in devs)})
    return rows


# ---------------------------------------------------------------- acceptance checks

@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def check_fig1(res: Fig1Result, log_label="log-n", dense_label="3*log-n", tol: float = 0.08) -> list[Check]:
    s = {r["lambda_label"]: r["mean_sup_dev"] for r in res.summary}
    out = []
    if log_label in s:
        out.append(Check("fig1 mean sup-dev at log n", s[log_label] <= tol, f"{s[log_label]:.4f} <= {tol}"))
    if log_label in s and dense_label in s:
        out.append(Check("fig1 denser graph closer to limit", s[dense_label] < s[log_label],
                         f"{s[dense_label]:.4f} < {s[log_label]:.4f}"))
    return out


def check_table1(t: ResultTable) -> list[Check]:
    out = []
    for row in t.rows:
        if row["a"] == 7 and row["alpha"] == 6 and math.isinf(row["beta"]) and row["eta"] >= 0.02 - 1e-12:
            out.append(Check(f"table1 a=7 alpha=6 beta=inf eta={row['eta']:.2f}", row["mu"] <= 0.5,
                             f"mu={row['mu']:.3f} <= 0.5"))
    for row in t.rows:
        if row["a"] == 10 and row["alpha"] == 0 and math.isinf(row["beta"]) and _same(row["eta"], 0.03):
            out.append(Check("table1 a=10 alpha=0 beta=inf eta=0.03", 2 <= row["mu"] <= 16,
                             f"mu={row['mu']:.3f} in [2, 16]"))
    return out


def check_table2(t: ResultTable) -> list[Check]:
    out = []
    for eta in (0.02, 0.05, 0.10):
        try:
            r = t.cell(algorithm="glauber", eta=eta)
        except KeyError:
            continue
        out.append(Check(f"table2 glauber eta={eta:.2f}", r["mu"] <= 1.0, f"mu={r['mu']:.3f} <= 1"))
    targets = {"consensus_async": (4.42, 2.0), "gossip": (28.6, 4.0), "poisson": (4.26, 2.0)}
    for name, (ref, tol) in targets.items():
        try:
            r = t.cell(algorithm=name, eta=0.10)
        except KeyError:
            continue
        out.append(Check(f"table2 {name} eta=0.10", abs(r["mu"] - ref) <= tol,
                         f"mu={r['mu']:.3f} within {ref} +- {tol}"))
    flips = [r["flips_mean"] / t.meta["V"] for r in t.rows if r["algorithm"] == "glauber"]
    if flips:
        f = float(np.mean(flips))
        out.append(Check("table2 flips per node", 0.4 <= f <= 1.6, f"{f:.3f} in [0.4, 1.6]"))
    return out


def check_recovery(rows: list[dict], min_ok: int = 8) -> list[Check]:
    out = []
    trend = [r for r in rows if r["rule"] == "c_log_lambda"]
    if len(trend) >= 2:
        m = [r["max_dev_mean"] for r in trend]
        out.append(Check("recovery max_dev strictly decreasing in n", all(x > y for x, y in zip(m, m[1:])),
                         " > ".join(f"{x:.4f}" for x in m)))
    eps_rows = [r for r in rows if r["rule"] == "eps_rule"]
    if eps_rows:
        r = eps_rows[-1]
        out.append(Check(f"recovery eps rule at n={r['n']}", r["n_below_eps"] >= min_ok,
                         f"{r['n_below_eps']} seeds with max_dev <= eps + 0.02"))
    return out
