"""Command-line interface.

Subcommands: sample, kcrit-graphon, solve, continue, sweep, spectrum,
run <config.json>.  All randomness is keyed by --seed; experiment runs
exit 0 on success, 1 on a config schema violation (with a line-anchored
message), 2 when some tasks failed (partial results are still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, rng
from .continuation import (FOLD_TRACKING, SWEEP_BISECTION, SweepConfig, continue_branch,
                           measure_kcrit, sweep_realizations, write_branch_csv)
from .experiments import ConfigError, default_config, run_experiment
from .finite_system import FiniteSystem, newton_solve, save_sync_state
from .freqdist import empirical_step, model_from_spec
from .graphon import (SamplePoints, graphon_from_spec, sample_simple, sample_weighted,
                      write_step_binary, write_step_csv)
from .meanfield import (critical_coupling, maximize_gamma, profile_on_points, report_dict)


def _graphon_spec(args) -> dict:
    spec = {"kind": args.graphon}
    if args.p is not None:
        spec["p"] = args.p
    if args.graphon in ("small_world", "small-world", "smallworld"):
        spec.update({"hi": args.hi, "lo": args.lo, "radius": args.radius})
    return spec


def _add_graphon_args(sp):
    sp.add_argument("--graphon", default="erdos_renyi",
                    help="erdos_renyi | small_world (default erdos_renyi)")
    sp.add_argument("--p", type=float, default=0.5, help="edge probability for erdos_renyi")
    sp.add_argument("--hi", type=float, default=0.9)
    sp.add_argument("--lo", type=float, default=0.1)
    sp.add_argument("--radius", type=float, default=0.25)


def _add_model_arg(sp):
    sp.add_argument("--model", default="uniform",
                    help="uniform | arcsine-cosine | cauchy-like")


def cmd_sample(args) -> int:
    W = graphon_from_spec(_graphon_spec(args))
    pts = SamplePoints.generate(args.n, args.mode, args.seed)
    S = sample_simple(W, pts, args.seed) if args.simple else sample_weighted(W, pts)
    out = Path(args.out or f"sample_n{args.n}.{ 'csv' if args.format == 'csv' else 'gksg'}")
    if args.format == "csv":
        write_step_csv(S, out)
    else:
        write_step_binary(S, out)
    print(f"wrote {out}")
    return 0


def cmd_kcrit_graphon(args) -> int:
    model = model_from_spec({"kind": args.model})
    gamma_star, q_star = maximize_gamma(model)
    print(json.dumps({"gamma_star": gamma_star, "q_star": q_star,
                      "K_crit": critical_coupling(model, args.p)}))
    return 0


def _build_realization(args):
    model = model_from_spec({"kind": args.model})
    W = graphon_from_spec(_graphon_spec(args))
    pts = SamplePoints.generate(args.n, "iid", rng.derive_seed(args.seed, "points"))
    freq = empirical_step(model, pts)
    adj = sample_simple(W, pts, rng.derive_seed(args.seed, "edges"))
    return model, W, pts, freq, adj


def cmd_solve(args) -> int:
    model, W, pts, freq, adj = _build_realization(args)
    sys_k = FiniteSystem(freq.values, adj.weights, args.K)
    u0 = profile_on_points(model, W.p, args.K, pts.points)
    res = newton_solve(sys_k, u0 - u0.mean(), tol=args.tol)
    if not res.ok:
        print(f"newton failed: {res.reason} (residual {res.last_residual:.3e})", file=sys.stderr)
        return 2
    out = Path(args.out or "state.csv")
    save_sync_state(res.state, pts, sys_k, out)
    print(f"converged: r={res.state.r:.4f} stable={res.state.stable} -> {out}")
    return 0


def cmd_continue(args) -> int:
    model, W, pts, freq, adj = _build_realization(args)
    sys_k = FiniteSystem(freq.values, adj.weights, args.K)
    u0 = profile_on_points(model, W.p, args.K, pts.points)
    res = newton_solve(sys_k, u0 - u0.mean(), tol=args.tol)
    if not res.ok:
        print(f"seed-state failure: {res.reason}", file=sys.stderr)
        return 2
    branch = continue_branch(sys_k, res.state, ds=args.ds,
                             K_range=(args.K_min, args.K * 1.05), direction=-1,
                             max_points=args.max_points)
    out = Path(args.out or "branch.csv")
    write_branch_csv(branch, out)
    folds = ", ".join(f"{f.K:.5f}" for f in branch.folds) or "none"
    print(f"{len(branch.points)} points, folds: {folds} -> {out}")
    return 0


def cmd_sweep(args) -> int:
    model = model_from_spec({"kind": args.model})
    W = graphon_from_spec(_graphon_spec(args))
    cfg = SweepConfig(graphon=W, model=model, n_list=args.n, master_seed=args.seed,
                      num_seeds=args.seeds, strategy=args.strategy,
                      out_dir=args.out or ".", workers=args.workers)
    results = sweep_realizations(cfg)
    bad = sum(1 for r in results if r.error is not None)
    print(f"{len(results)} runs, {bad} failures -> {cfg.out_dir}/kcrit_sweep.csv")
    return 2 if bad else 0


def cmd_spectrum(args) -> int:
    model = model_from_spec({"kind": args.model})
    print(json.dumps(report_dict(model, args.p, args.K), indent=2))
    return 0


def cmd_run(args) -> int:
    path = Path(args.config)
    raw = path.read_text(encoding="utf-8")
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        print(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}", file=sys.stderr)
        return 1
    if args.seed is not None:
        cfg["master_seed"] = args.seed
    if args.workers is not None:
        cfg["workers"] = args.workers
    out_dir = args.out or cfg.get("out_dir") or f"out_{cfg.get('experiment', 'run')}"
    try:
        outcome = run_experiment(raw, cfg, out_dir, config_path=str(path))
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    print((out_dir if isinstance(out_dir, str) else str(out_dir)) + ": " +
          ("ok" if outcome.exit_code == 0 else f"failed tasks {outcome.manifest['failed_tasks']}"))
    return outcome.exit_code


def cmd_init_config(args) -> int:
    cfg = default_config(args.experiment)
    text = json.dumps(cfg, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="graphon-kuramoto",
                                 description="Graphon mean-field analysis of random Kuramoto networks")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="sample a random graph from a graphon")
    _add_graphon_args(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--mode", default="iid", choices=["iid", "deterministic", "stratified", "midpoint"])
    sp.add_argument("--simple", action="store_true", help="Bernoulli 0/1 edges instead of weights")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--format", default="csv", choices=["csv", "bin"])
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("kcrit-graphon", help="mean-field critical coupling")
    _add_model_arg(sp)
    sp.add_argument("--p", type=float, default=1.0)
    sp.set_defaults(func=cmd_kcrit_graphon)

    sp = sub.add_parser("solve", help="Newton-solve one realization at coupling K")
    _add_graphon_args(sp)
    _add_model_arg(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--K", type=float, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("continue", help="continue a branch downward from K")
    _add_graphon_args(sp)
    _add_model_arg(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--K", type=float, required=True)
    sp.add_argument("--K-min", type=float, default=0.1)
    sp.add_argument("--ds", type=float, default=0.2)
    sp.add_argument("--max-points", type=int, default=400)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_continue)

    sp = sub.add_parser("sweep", help="critical-coupling sweep over n and seeds")
    _add_graphon_args(sp)
    _add_model_arg(sp)
    sp.add_argument("--n", type=int, nargs="+", required=True)
    sp.add_argument("--seeds", type=int, default=8)
    sp.add_argument("--seed", type=int, default=0, help="master seed")
    sp.add_argument("--strategy", default=SWEEP_BISECTION,
                    choices=[FOLD_TRACKING, SWEEP_BISECTION])
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("spectrum", help="mean-field spectral report as JSON")
    _add_model_arg(sp)
    sp.add_argument("--p", type=float, default=1.0)
    sp.add_argument("--K", type=float, default=None,
                    help="query coupling (default: the onset K_crit)")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("run", help="run an experiment config")
    sp.add_argument("config")
    sp.add_argument("--seed", type=int, default=None, help="override master_seed")
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("init-config", help="print a ready-to-run experiment config")
    sp.add_argument("experiment")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_init_config)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
