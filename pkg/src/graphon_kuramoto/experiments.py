"""Deterministic experiment drivers behind `run <config.json>`.

Each experiment writes the CSV artifacts owned by the computing modules,
a JSON manifest (config hash, versions, master seed, wall time, failed
tasks), and a human-readable summary comparing finite networks against
the mean-field prediction.  Reruns with the same config and master seed
produce byte-identical CSVs.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__, rng
from .continuation import (FOLD_TRACKING, SWEEP_BISECTION, SeedStateError, SweepConfig,
                           continue_branch, measure_kcrit, sweep_realizations,
                           write_branch_csv)
from .cutnorm import cut_norm_estimate
from .finite_system import FiniteSystem, newton_solve, save_sync_state
from .freqdist import empirical_step, model_from_spec
from .graphon import (ERDOS_RENYI, SamplePoints, degree, degree_distance, degree_step,
                      embed_step, graphon_from_spec, sample_simple, sample_weighted)
from .io_utils import atomic_write_text, canonical_json, sha256_json, write_csv
from .meanfield import branch_q, critical_coupling, profile_on_points, sync_profile

EXPERIMENTS = (
    "fig1_kcrit_sweep",
    "fig2_profile_uniform",
    "fig3_profile_cauchy",
    "fig4_bifurcation_cosine",
    "fig5_smallworld",
    "convergence_diag",
)


class ConfigError(ValueError):
    """Schema violation, carrying a line-anchored message."""


def _line_of(raw: str, key: str) -> int:
    for i, line in enumerate(raw.splitlines(), start=1):
        if f'"{key}"' in line:
            return i
    return 1


def _fail(raw: str, key: str, msg: str, path: str = "config") -> None:
    raise ConfigError(f"{path}:{_line_of(raw, key)}: {msg}")


def validate_config(raw: str, cfg: dict, path: str = "config") -> dict:
    """Validate an experiment config; returns it with defaults filled in."""
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}:1: config must be a JSON object")
    exp = cfg.get("experiment")
    if exp not in EXPERIMENTS:
        _fail(raw, "experiment", f"experiment must be one of {EXPERIMENTS}, got {exp!r}", path)
    out = dict(cfg)
    out.setdefault("master_seed", 0)
    out.setdefault("workers", 1)
    out.setdefault("tolerances", {})
    for name, value in out["tolerances"].items():
        if not (isinstance(value, (int, float)) and value > 0):
            _fail(raw, name, f"tolerance {name!r} must be positive", path)
    if "n" in out and not isinstance(out["n"], list):
        out["n"] = [out["n"]]
    for n in out.get("n", [2]):
        if not (isinstance(n, int) and n >= 2):
            _fail(raw, "n", "n entries must be integers >= 2", path)
    seeds = out.get("seeds")
    if seeds is not None and (not isinstance(seeds, int) or seeds < 1):
        _fail(raw, "seeds", "seeds must be a positive integer count", path)
    if "graphon" in out:
        try:
            graphon_from_spec(out["graphon"])
        except Exception as exc:
            _fail(raw, "graphon", str(exc), path)
    if "frequency" in out:
        try:
            model_from_spec(out["frequency"])
        except Exception as exc:
            _fail(raw, "frequency", str(exc), path)
    return out


@dataclass
class ExperimentOutcome:
    exit_code: int
    manifest: dict
    out_dir: Path


def _newton_tol(cfg) -> float:
    return float(cfg.get("tolerances", {}).get("newton", 1e-10))


def _profile_comparison(cfg, model, p, out_dir, tag):
    """Solve one realization at its measured onset and dump the profile CSV."""
    n = int(cfg.get("n", [500])[0])
    seed = rng.derive_seed(int(cfg["master_seed"]), n, 0, cfg["experiment"] + tag)
    graphon = graphon_from_spec({"kind": "erdos_renyi", "p": p})
    res = measure_kcrit(n, graphon, model, seed, strategy=SWEEP_BISECTION)
    pts = SamplePoints.generate(n, "iid", rng.derive_seed(seed, "points"))
    freq = empirical_step(model, pts)
    adj = sample_simple(graphon, pts, rng.derive_seed(seed, "edges"))
    K = res.K_crit_n + 5e-4  # just above the measured onset, where the state exists
    sys = FiniteSystem(freq.values, adj.weights, K)
    u0 = profile_on_points(model, p, K, pts.points)
    sol = newton_solve(sys, u0 - u0.mean(), tol=_newton_tol(cfg))
    if not sol.ok:
        raise RuntimeError(f"profile solve failed at K={K:.5f} ({sol.reason})")
    path = out_dir / f"profile_{tag}.csv"
    save_sync_state(sol.state, pts, sys, path)
    K_ref = critical_coupling(model, p)
    q = branch_q(model, p, max(K, K_ref))
    prof = sync_profile(model, p, max(K, K_ref), q)
    sup_dev = float(np.max(np.abs(sol.state.u - (prof(pts.points) - np.mean(prof(pts.points))))))
    return path, {
        "n": n, "p": p, "K_crit_n": res.K_crit_n, "K_crit_graphon": K_ref,
        "rel_err": res.relative_error, "sup_deviation_vs_profile": sup_dev,
    }


def _run_fig1(cfg, out_dir):
    graphon = graphon_from_spec(cfg.get("graphon", {"kind": "erdos_renyi", "p": 1.0}))
    model = model_from_spec(cfg.get("frequency", {"kind": "uniform"}))
    sweep = SweepConfig(graphon=graphon, model=model,
                        n_list=[int(v) for v in cfg.get("n", [100, 200])],
                        master_seed=int(cfg["master_seed"]),
                        num_seeds=int(cfg.get("seeds", 8)),
                        strategy=cfg.get("strategy", SWEEP_BISECTION),
                        out_dir=str(out_dir), workers=int(cfg["workers"]),
                        experiment=cfg["experiment"])
    results = sweep_realizations(sweep)
    failed = [i for i, r in enumerate(results) if r.error is not None]
    ref = critical_coupling(model, graphon.p) if graphon.kind == ERDOS_RENYI else float("nan")
    lines = [f"critical-coupling sweep, graphon reference K_crit = {ref:.6f}"]
    for n in sweep.n_list:
        vals = [r.K_crit_n for r in results if r.n == n and np.isfinite(r.K_crit_n)]
        if vals:
            lines.append(f"n={n}: mean K_crit_n = {np.mean(vals):.6f} "
                         f"(std {np.std(vals, ddof=1) if len(vals) > 1 else 0.0:.6f}, "
                         f"count {len(vals)})")
    outputs = [out_dir / "kcrit_sweep.csv", out_dir / "kcrit_sweep_agg.csv"]
    return outputs, failed, "\n".join(lines)


def _run_profile(cfg, out_dir, kind):
    model = model_from_spec(cfg.get("frequency", {"kind": kind}))
    outputs, lines, failed = [], [], []
    p_list = cfg.get("p", [1.0, 0.5])
    if not isinstance(p_list, list):
        p_list = [p_list]
    for p in p_list:
        tag = f"p{str(p).replace('.', '')}"
        try:
            path, info = _profile_comparison(cfg, model, float(p), out_dir, tag)
            outputs.append(path)
            lines.append(f"p={p}: K_crit_n={info['K_crit_n']:.5f} vs graphon "
                         f"{info['K_crit_graphon']:.5f} (rel {info['rel_err']:.3%}); "
                         f"sup|u_n - u*| = {info['sup_deviation_vs_profile']:.4f}")
        except Exception as exc:
            failed.append(len(outputs))
            lines.append(f"p={p}: FAILED ({exc})")
    return outputs, failed, "\n".join(lines)


def _branch_from_high_K(sys_hi, u0, K_range, ds, tol, max_points=500):
    sol = newton_solve(sys_hi, u0 - u0.mean(), tol=tol)
    if not sol.ok:
        raise SeedStateError(f"seed-state failure ({sol.reason})")
    return continue_branch(sys_hi, sol.state, ds=ds, K_range=K_range,
                           max_points=max_points, direction=-1)


def _run_fig4(cfg, out_dir):
    model = model_from_spec(cfg.get("frequency", {"kind": "arcsine_cosine"}))
    p = float(cfg.get("graphon", {"kind": "erdos_renyi", "p": 0.5}).get("p", 0.5))
    graphon = graphon_from_spec({"kind": "erdos_renyi", "p": p})
    n = int(cfg.get("n", [500])[0])
    seed = rng.derive_seed(int(cfg["master_seed"]), n, 0, cfg["experiment"])
    K_ref = critical_coupling(model, p)
    K_hi = 3.0 * K_ref
    pts = SamplePoints.generate(n, "iid", rng.derive_seed(seed, "points"))
    freq = empirical_step(model, pts)
    adj = sample_simple(graphon, pts, rng.derive_seed(seed, "edges"))
    sys_hi = FiniteSystem(freq.values, adj.weights, K_hi)
    u0 = profile_on_points(model, p, K_hi, pts.points)
    branch = _branch_from_high_K(sys_hi, u0, (0.25 * K_ref, K_hi * 1.02), ds=0.08 * K_ref,
                                 tol=_newton_tol(cfg))
    path = out_dir / "branch_cosine.csv"
    write_branch_csv(branch, path)
    lines = [f"graphon K_crit = {K_ref:.6f}"]
    for f in branch.folds:
        lines.append(f"fold at K = {f.K:.5f} (rel err {abs(f.K - K_ref) / K_ref:.3%}, "
                     f"suspect={f.suspect})")
    if not branch.folds:
        lines.append("no fold found")
    return [path], ([] if branch.folds else [0]), "\n".join(lines)


def _run_fig5(cfg, out_dir):
    model = model_from_spec(cfg.get("frequency", {"kind": "arcsine_cosine"}))
    graphon = graphon_from_spec(cfg.get("graphon", {"kind": "small_world"}))
    m = int(cfg.get("grid_m", 800))
    n = int(cfg.get("n", [500])[0])
    K_hi = float(cfg.get("K_range", [4.0, 9.5])[1])
    K_lo = float(cfg.get("K_range", [4.0, 9.5])[0])
    tol = _newton_tol(cfg)
    outputs, lines, failed = [], [], []

    # deterministic grid system standing in for the graphon master equation
    pts_grid = SamplePoints.generate(m, "deterministic")
    freq_grid = empirical_step(model, pts_grid)
    adj_grid = sample_weighted(graphon, pts_grid)
    sys_grid = FiniteSystem(freq_grid.values, adj_grid.weights, K_hi)
    try:
        branch = _branch_from_high_K(sys_grid, np.zeros(m), (K_lo, K_hi * 1.02),
                                     ds=0.35, tol=tol, max_points=700)
        path = out_dir / "branch_grid.csv"
        write_branch_csv(branch, path)
        outputs.append(path)
        lines.append(f"grid m={m}: folds at " +
                     ", ".join(f"{f.K:.4f}" for f in branch.folds) +
                     f" (termination {branch.termination})")
    except Exception as exc:
        failed.append(0)
        lines.append(f"grid branch FAILED ({exc})")

    seed = rng.derive_seed(int(cfg["master_seed"]), n, 0, cfg["experiment"])
    pts = SamplePoints.generate(n, "iid", rng.derive_seed(seed, "points"))
    freq = empirical_step(model, pts)
    for tag, adj in (("weighted", sample_weighted(graphon, pts)),
                     ("simple", sample_simple(graphon, pts, rng.derive_seed(seed, "edges")))):
        sys_n = FiniteSystem(freq.values, adj.weights, K_hi)
        try:
            branch_n = _branch_from_high_K(sys_n, np.zeros(n), (K_lo, K_hi * 1.02),
                                           ds=0.35, tol=tol, max_points=700)
            path = out_dir / f"branch_{tag}.csv"
            write_branch_csv(branch_n, path)
            outputs.append(path)
            lines.append(f"{tag} graph n={n}: folds at " +
                         ", ".join(f"{f.K:.4f}" for f in branch_n.folds) +
                         f" (termination {branch_n.termination})")
        except Exception as exc:
            failed.append(len(outputs))
            lines.append(f"{tag}-graph branch FAILED ({exc})")
    return outputs, failed, "\n".join(lines)


DIAG_COLUMNS = ["n", "seed", "degree_dist", "degree_bound", "cutnorm_lb", "cutnorm_bound"]


def _run_convergence(cfg, out_dir):
    graphon = graphon_from_spec(cfg.get("graphon", {"kind": "erdos_renyi", "p": 0.5}))
    n_list = [int(v) for v in cfg.get("n", [100, 400])]
    seeds = int(cfg.get("seeds", 3))
    nu = float(cfg.get("tolerances", {}).get("nu", 0.05))
    d_ref = degree(graphon)
    rows = []
    for n in n_list:
        ref_step = embed_step(graphon, n)
        for idx in range(seeds):
            seed = rng.derive_seed(int(cfg["master_seed"]), n, idx, cfg["experiment"])
            pts = SamplePoints.generate(n, "iid", rng.derive_seed(seed, "points"))
            G = sample_simple(graphon, pts, rng.derive_seed(seed, "edges"))
            ddist = degree_distance(degree_step(G), d_ref)
            dbound = np.sqrt(np.log(2 * n / nu) / n)
            lb, _ = cut_norm_estimate(G, ref_step, budget=48, rng_seed=seed)
            cbound = 22.0 / np.sqrt(np.log(n))
            rows.append((n, seed, ddist, dbound, lb, cbound))
    path = out_dir / "convergence_diag.csv"
    write_csv(path, DIAG_COLUMNS, rows)
    ok_deg = sum(1 for r in rows if r[2] <= r[3])
    ok_cut = sum(1 for r in rows if r[4] <= r[5])
    summary = (f"degree bound satisfied in {ok_deg}/{len(rows)} runs; "
               f"cut-norm lower bound below 22/sqrt(log n) in {ok_cut}/{len(rows)} runs")
    return [path], [], summary


_RUNNERS = {
    "fig1_kcrit_sweep": _run_fig1,
    "fig2_profile_uniform": lambda cfg, out: _run_profile(cfg, out, "uniform"),
    "fig3_profile_cauchy": lambda cfg, out: _run_profile(cfg, out, "cauchy_like"),
    "fig4_bifurcation_cosine": _run_fig4,
    "fig5_smallworld": _run_fig5,
    "convergence_diag": _run_convergence,
}


def run_experiment(raw: str, cfg: dict, out_dir, config_path: str = "config") -> ExperimentOutcome:
    """Validate and run one experiment config; write artifacts and manifest."""
    cfg = validate_config(raw, cfg, config_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    outputs, failed, summary = _RUNNERS[cfg["experiment"]](cfg, out_dir)
    wall = time.time() - t0
    manifest = {
        "experiment": cfg["experiment"],
        "config_sha256": sha256_json(cfg),
        "master_seed": int(cfg["master_seed"]),
        "package_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "wall_time_s": wall,
        "outputs": [str(Path(p).name) for p in outputs],
        "failed_tasks": failed,
    }
    atomic_write_text(out_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    atomic_write_text(out_dir / "summary.txt", summary + "\n")
    return ExperimentOutcome(exit_code=2 if failed else 0, manifest=manifest, out_dir=out_dir)


def default_config(experiment: str) -> dict:
    """Small, quick-running config for each experiment."""
    base = {"experiment": experiment, "master_seed": 7, "workers": 1}
    if experiment == "fig1_kcrit_sweep":
        base.update({"graphon": {"kind": "erdos_renyi", "p": 1.0},
                     "frequency": {"kind": "uniform"}, "n": [100, 200], "seeds": 6,
                     "strategy": SWEEP_BISECTION})
    elif experiment == "fig2_profile_uniform":
        base.update({"frequency": {"kind": "uniform"}, "n": [300], "p": [1.0, 0.5]})
    elif experiment == "fig3_profile_cauchy":
        base.update({"frequency": {"kind": "cauchy_like"}, "n": [300], "p": [1.0, 0.5]})
    elif experiment == "fig4_bifurcation_cosine":
        base.update({"graphon": {"kind": "erdos_renyi", "p": 0.5},
                     "frequency": {"kind": "arcsine_cosine"}, "n": [500]})
    elif experiment == "fig5_smallworld":
        base.update({"graphon": {"kind": "small_world", "hi": 0.9, "lo": 0.1, "radius": 0.25},
                     "frequency": {"kind": "arcsine_cosine"}, "n": [500],
                     "grid_m": 800, "K_range": [4.0, 9.5]})
    elif experiment == "convergence_diag":
        base.update({"graphon": {"kind": "erdos_renyi", "p": 0.5}, "n": [100, 400],
                     "seeds": 3})
    return base
