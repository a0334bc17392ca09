"""Command-line entry point: ``ising-ssl <command> ...`` (or ``python -m ising_ssl``)."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import baselines as bl
from . import harness, oracle
from .glauber import BERNOULLI, EXACT, SimParams, classification_error, reveal_mask, run_algorithm
from .ising import IsingParams, gibbs_weight
from .meanfield import DriftParams, default_grid, direction_field, square_grid, z_infinity
from .rng import SEEDING, make_rng
from .sbm import Graph, SbmParams, read_graph, resolve_lambda, sample_sbm, write_graph


def _beta(s: str) -> float:
    return math.inf if s.strip().lower() in ("inf", "infinity", "+inf") else float(s)


def _lambda(s: str):
    try:
        return float(s)
    except ValueError:
        return s


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _load_graph(spec: str) -> Graph:
    """A graph file, a named tiny graph (``triangle``, ``cycle:4``...), or a
    generator spec ``sbm:n=..,a=..,b=..[,v1=..,v2=..,lambda=..,seed=..]``."""
    if Path(spec).is_file():
        return read_graph(spec)
    if spec.startswith("sbm:"):
        kv = dict(item.split("=", 1) for item in spec[4:].split(",") if item)
        n = int(kv["n"])
        params = SbmParams(n=n, V1=int(kv.get("v1", n)), V2=int(kv.get("v2", n)),
                           lam=resolve_lambda(_lambda(kv.get("lambda", "log-n")), n),
                           a=float(kv["a"]), b=float(kv["b"]))
        return sample_sbm(params, int(kv.get("seed", 0)))
    return oracle.small_graph(spec)


def _write_csv_or_print(rows, out):
    text = harness.rows_to_csv(rows, out)
    if out is None:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_gen(args) -> int:
    lam = resolve_lambda(_lambda(args.lam), args.n)
    g = sample_sbm(SbmParams(n=args.n, V1=args.v1 or args.n, V2=args.v2 if args.v2 is not None else args.n,
                             lam=lam, a=args.a, b=args.b), args.seed)
    write_graph(g, args.out)
    print(f"wrote {args.out}: V={g.V} edges={g.n_edges} hash={g.fingerprint()}", file=sys.stderr)
    return 0


def cmd_run(args) -> int:
    g = _load_graph(args.graph)
    n = int(g.meta.get("n", g.V1))
    lam = float(g.meta.get("lam", math.log(n)))
    if args.alpha_n is not None:
        ising = IsingParams(alpha_n=args.alpha_n, beta=args.beta)
    else:
        ising = IsingParams.from_alpha(args.alpha, lam, n, args.beta)
    samples = _floats(args.samples) if args.samples else ()
    p = SimParams(eta=args.eta, ising=ising, t_end=args.t_end, sample_times=samples, seed=args.seed,
                  mode=args.mode, max_flips=args.max_flips, reveal=args.reveal)
    traj, state = run_algorithm(g, p)
    out = {
        "params": {"graph": args.graph, "graph_hash": g.fingerprint(), "V1": g.V1, "V2": g.V2,
                   "eta": args.eta, "alpha_n": ising.alpha_n, "beta": args.beta, "t_end": args.t_end,
                   "mode": p.mode, "seed": args.seed, "max_flips": args.max_flips, "reveal": args.reveal},
        "trajectory": traj.to_dict(),
        "errors": classification_error(g, state.spins).as_dict(),
    }
    text = json.dumps(out, indent=2, default=lambda o: None if o is None else str(o))
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


def cmd_meanfield(args) -> int:
    t = default_grid(args.t_max, args.dt)
    z1, z2 = z_infinity(args.eta, t)
    rows = [{"t": float(ti), "z_inf1": float(a), "z_inf2": float(b)} for ti, a, b in zip(t, z1, z2)]
    _write_csv_or_print(rows, args.out)
    return 0


def cmd_field(args) -> int:
    p = DriftParams(a=args.a, b=args.b, alpha=args.alpha, v1=args.v1, v2=args.v2)
    f = direction_field(square_grid(args.grid), p)
    rows = [{"z1": float(z[0]), "z2": float(z[1]), "sign1": int(s1), "sign2": int(s2)}
            for z, s1, s2 in zip(f.points, f.sign1, f.sign2)]
    _write_csv_or_print(rows, args.out)
    print(f"regime: {f.regime}; zero lines z2 = {f.slope1:.6g} z1 and z2 = {f.slope2:.6g} z1", file=sys.stderr)
    return 0


def cmd_baseline(args) -> int:
    g = _load_graph(args.graph)
    n = int(g.meta.get("n", g.V1))
    lam = float(g.meta.get("lam", math.log(n)))
    mask = reveal_mask(g, args.eta, make_rng(args.seed, SEEDING), args.reveal)
    seeds = bl.seeds_from_mask(g, mask)
    iters = args.iters
    if iters is None:
        iters = bl.parity_budget(args.kind, g.V, g.meta.get("a", 1.0), g.meta.get("b", 0.0), lam)
    spec = bl.BaselineSpec(args.kind, iters, gamma=args.gamma, delta_exp=args.delta, seed=args.seed)
    res = bl.run_baseline(g, seeds, spec)
    out = {"params": {"graph": args.graph, "graph_hash": g.fingerprint(), "kind": spec.kind, "name": spec.name,
                      "eta": args.eta, "iters": iters, "gamma": spec.gamma, "delta": spec.delta_exp,
                      "seed": args.seed, "reveal": args.reveal},
           "error_rate": bl.error_rate(g, res.labels), "labels": res.labels.tolist()}
    text = json.dumps(out)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(json.dumps({k: v for k, v in out.items() if k != "labels"}, indent=2))
    return 0


def cmd_verify(args) -> int:
    g = _load_graph(args.graph)
    if args.what == "gibbs":
        d = oracle.brute_force_gibbs(g, args.alpha_n, args.beta)
        norm_gap = abs(d.probs.sum() - 1.0)
        # independent path: unnormalized weights from the energy function
        w = np.array([gibbs_weight(g, s, args.alpha_n, args.beta) for s in d.configs]) if g.V <= 12 else None
        ratio_gap = 0.0 if w is None else float(np.max(np.abs(w / w.sum() - d.probs)))
        ok = norm_gap <= 1e-12 and d.probs.min() >= 0 and ratio_gap <= 1e-12
        print(f"normalization gap {norm_gap:.3g}, min prob {d.probs.min():.3g}, "
              f"max gap to direct weights {ratio_gap:.3g}")
    elif args.what == "balance":
        r = oracle.detailed_balance_residual(g, args.alpha_n, args.beta)
        ok = r < args.tol if args.tol is not None else r < 1e-12
        print(f"detailed balance residual {r:.3g}")
    else:
        tv = oracle.stationarity_check(g, args.alpha_n, args.beta, samples=args.samples, seed=args.seed)
        ok = tv < (args.tol if args.tol is not None else 0.03)
        print(f"TV distance to Gibbs {tv:.4f}")
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def _experiment_config(args, **defaults) -> harness.ExperimentConfig:
    if args.config:
        cfg = harness.ExperimentConfig.from_file(args.config, **defaults)
    else:
        cfg = harness.ExperimentConfig(**defaults)
    for k in ("n_scale", "replicates", "workers", "seed_base", "out_dir"):
        v = getattr(args, k)
        if v is not None:
            setattr(cfg, k, v)
    return cfg


def _emit(name: str, rows: list[dict], meta: dict, out_dir: str) -> None:
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    harness.rows_to_csv(rows, d / f"{name}.csv")
    harness.write_json(meta, d / f"{name}.json")
    print(f"wrote {d / (name + '.csv')} and {d / (name + '.json')}", file=sys.stderr)


def _report(checks, want_check: bool) -> int:
    for c in checks:
        print(c.line())
    if want_check:
        return 0 if all(c.passed for c in checks) else 1
    return 0


def cmd_fig1(args) -> int:
    cfg = _experiment_config(args, replicates=20)
    n = int(round((cfg.n or 5000) * cfg.n_scale))
    lambdas = cfg.extra.get("lambdas", ["log-n", "3*log-n"])
    res = harness.run_fig1(lambdas=tuple(lambdas), n=n, a=cfg.a or 5.0, b=cfg.b if cfg.b is not None else 1.0,
                           eta=cfg.extra.get("eta", 0.1), alpha=cfg.alpha or 0.0,
                           beta=math.inf if cfg.beta is None else cfg.beta,
                           replicates=cfg.replicates,
                           t_max=cfg.extra.get("t_max", 5.0), dt=cfg.extra.get("dt", 0.05),
                           seed_base=cfg.seed_base, workers=cfg.workers)
    _emit("fig1", res.rows, {"experiment": "fig1", "n": n, "summary": res.summary, "sup_devs": res.sup_devs},
          cfg.out_dir)
    _emit("fig1_summary", res.summary, {"experiment": "fig1"}, cfg.out_dir)
    return _report(harness.check_fig1(res), args.check)


def _table_cmd(which: int, args) -> int:
    cfg = _experiment_config(args)
    kw = dict(etas=cfg.etas, replicates=cfg.replicates, seed_base=cfg.seed_base, n_scale=cfg.n_scale,
              lam=cfg.lam, workers=cfg.workers)
    kw.update({k: v for k, v in cfg.extra.items() if k in ("mode", "reveal")})
    t = harness.run_table(which, **kw)
    _emit(f"table{which}", t.csv_rows(), dict(t.meta, runtimes=[
        {k: r[k] for k in ("eta", "algorithm", "alpha", "beta", "runtime_mean_s") if k in r} for r in t.rows]),
        cfg.out_dir)
    checks = harness.check_table1(t) if which == 1 else harness.check_table2(t)
    return _report(checks, args.check)


def cmd_table1(args) -> int:
    return _table_cmd(1, args)


def cmd_table2(args) -> int:
    return _table_cmd(2, args)


def cmd_recovery(args) -> int:
    cfg = _experiment_config(args)
    n_list = tuple(int(round(n * cfg.n_scale)) for n in cfg.extra.get("n_list", (2000, 8000, 32000)))
    rows = harness.run_recovery_scaling(n_list=n_list, c=cfg.extra.get("c", 0.2), a=cfg.a or 5.0,
                                        b=cfg.b if cfg.b is not None else 1.0, eta=cfg.extra.get("eta", 0.1),
                                        alpha=cfg.alpha or 0.0, beta=math.inf if cfg.beta is None else cfg.beta,
                                        lam=cfg.lam, replicates=cfg.replicates, seed_base=cfg.seed_base,
                                        eps=cfg.extra.get("eps", 0.05), workers=cfg.workers)
    _emit("recovery", rows, {"experiment": "recovery", "n_list": n_list, "seed_base": cfg.seed_base}, cfg.out_dir)
    return _report(harness.check_recovery(rows), args.check)


def cmd_sweep(args) -> int:
    cfg = _experiment_config(args, etas=(0.05,))
    ex = cfg.extra
    n = int(round((cfg.n or 5000) * cfg.n_scale))
    t = harness.run_sweep(alphas=tuple(ex.get("alphas", (0.0, 5.0, 10.0))),
                          betas=tuple(_beta(str(b)) for b in ex.get("betas", ("inf",))),
                          etas=cfg.etas,
                          n=n, v2_ratio=ex.get("v2_ratio", 1.0), a=cfg.a or 3.0,
                          b=cfg.b if cfg.b is not None else 1.0, lam=cfg.lam, replicates=cfg.replicates,
                          seed_base=cfg.seed_base, workers=cfg.workers)
    _emit("sweep", t.csv_rows(), t.meta, cfg.out_dir)
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ising-ssl", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample an SBM graph to a text file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--v1", type=int)
    p.add_argument("--v2", type=int)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--lambda", dest="lam", default="log-n")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("run", help="seed from revealed labels and run the Glauber dynamics")
    p.add_argument("--graph", required=True, help="graph file, tiny-graph name or sbm:n=..,a=..,b=..")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--alpha", type=float, default=0.0, help="penalty constant, alpha_n = alpha lam / n")
    p.add_argument("--alpha-n", type=float, help="penalty coefficient given directly")
    p.add_argument("--beta", type=_beta, default=math.inf)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--mode", choices=("ct", "dt"), default="ct")
    p.add_argument("--samples", default="", help="comma-separated sample times")
    p.add_argument("--max-flips", type=int)
    p.add_argument("--reveal", choices=(BERNOULLI, EXACT), default=BERNOULLI)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("meanfield", help="closed-form limit magnetizations on a time grid")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--t-max", type=float, default=5.0)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_meanfield)

    p = sub.add_parser("field", help="sign grid of the linearized drift")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--v1", type=float, default=1.0)
    p.add_argument("--v2", type=float, default=1.0)
    p.add_argument("--grid", type=int, default=21)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_field)

    p = sub.add_parser("baseline", help="run one comparison algorithm")
    p.add_argument("--kind", required=True,
                   choices=("consensus-async", "consensus-sync", "gossip", "laplacian", "poisson"))
    p.add_argument("--graph", required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--iters", type=int, help="default: 20 updates per node")
    p.add_argument("--gamma", type=float, default=0.95)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--reveal", choices=(BERNOULLI, EXACT), default=EXACT)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_baseline)

    p = sub.add_parser("verify", help="brute-force checks on a tiny graph")
    p.add_argument("what", choices=("gibbs", "balance", "stationarity"))
    p.add_argument("--graph", default="triangle")
    p.add_argument("--alpha-n", type=float, default=0.0)
    p.add_argument("--beta", type=_beta, default=1.0)
    p.add_argument("--samples", type=int, default=20_000)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_verify)

    for name, fn, helptext in (("fig1", cmd_fig1, "magnetization trajectories against the limit curve"),
                               ("table1", cmd_table1, "penalty/temperature grid on an unbalanced SBM"),
                               ("table2", cmd_table2, "comparison with the baselines"),
                               ("recovery", cmd_recovery, "max deviation as n grows"),
                               ("sweep", cmd_sweep, "error over an (alpha, beta, eta) grid")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="JSON or key = value file")
        p.add_argument("--n-scale", type=float)
        p.add_argument("--replicates", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--seed-base", type=int)
        p.add_argument("--out-dir")
        p.add_argument("--check", action="store_true", help="exit 1 if an acceptance tolerance is missed")
        p.set_defaults(fn=fn)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
