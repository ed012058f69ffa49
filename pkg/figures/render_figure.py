#!/usr/bin/env python3
"""Render the five summary figures from the primary toolkit's CSV outputs.

Strict data/presentation split: every plotted data point comes verbatim
from an input CSV; the only computed overlays are the analytic reference
curves named in the figure spec.  Rendering is deterministic: fixed
canvas, fixed fonts, PNG metadata stripped, so re-rendering a spec from
the same inputs is pixel-identical.

Usage: render_figure.py --spec fig4.json --out fig4.png
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

SWEEP_COLUMNS = ["n", "seed", "K_crit_n", "method", "rel_err"]
AGG_COLUMNS = ["n", "mean", "std", "count"]
BRANCH_COLUMNS = ["idx", "K", "r", "smallest_eig", "stable", "fold_flag"]
PROFILE_COLUMNS = ["j", "x_j", "omega_j", "u_j"]


class FigureError(ValueError):
    pass


def read_csv(path: Path, expected: list[str]) -> dict:
    """Load a CSV with a known schema into float/str column arrays."""
    if not path.exists():
        raise FigureError(f"{path}: input CSV does not exist")
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    meta = None
    if lines and lines[0].startswith("#"):
        meta = json.loads(lines[0][1:])
        lines = lines[1:]
    if not lines:
        raise FigureError(f"{path}: empty CSV")
    header = lines[0].split(",")
    for col in expected:
        if col not in header:
            raise FigureError(f"{path}: missing required column {col!r}")
    if header != expected:
        raise FigureError(f"{path}: columns {header} do not match schema {expected}")
    rows = [ln.split(",") for ln in lines[1:]]
    if not rows:
        raise FigureError(f"{path}: no data rows")
    cols: dict = {}
    for i, name in enumerate(header):
        raw = [r[i] for r in rows]
        try:
            cols[name] = np.array([float(v) for v in raw])
        except ValueError:
            cols[name] = np.array(raw)
    cols["__meta__"] = meta
    return cols


def overlay_curve(spec: dict | None):
    """Analytic reference curve named by the spec (presentation layer only)."""
    if not spec or spec.get("kind") in (None, "none"):
        return None
    kind = spec["kind"]
    x = np.linspace(0.0, 1.0, 801)
    if kind == "arcsin_linear":  # arcsin(2x - 1)
        return x, np.arcsin(2 * x - 1)
    if kind == "arcsin_tan":  # arcsin(tan(pi/4 (2x - 1)))
        return x, np.arcsin(np.tan(np.pi / 4 * (2 * x - 1)))
    if kind == "arcsin_scaled_neg_cos":  # arcsin(-cos(pi x) / kappa)
        kappa = float(spec["kappa"])
        return x, np.arcsin(-np.cos(np.pi * x) / kappa)
    raise FigureError(f"unknown overlay kind {spec['kind']!r}")


def _style():
    plt.rcParams.update({
        "figure.dpi": 110,
        "savefig.dpi": 110,
        "font.size": 9,
        "axes.grid": True,
        "grid.alpha": 0.25,
    })


def _plot_branch(ax, cols, color="tab:blue", label=None, fold_markers=True):
    """Branch as r vs K: stable runs solid, unstable dashed, folds dotted."""
    K, r, stable, fold = cols["K"], cols["r"], cols["stable"], cols["fold_flag"]
    n_pts = K.size
    start = 0
    styles = set()
    first = {True: label, False: None}
    for i in range(1, n_pts + 1):
        if i == n_pts or (stable[i] != stable[start]):
            seg = slice(start, i)
            solid = bool(stable[start])
            styles.add("solid" if solid else "dashed")
            ax.plot(K[seg], r[seg], color=color, lw=1.4,
                    ls="-" if solid else "--",
                    label=first[solid] if seg.start == 0 or first[solid] else None)
            first[solid] = None
            start = i
    marked = 0
    if fold_markers:
        sel = fold > 0
        marked = int(np.sum(sel))
        if marked:
            ax.plot(K[sel], r[sel], "o", color="red", ms=5, zorder=5,
                    label="fold")
    ax.set_xlabel("K")
    ax.set_ylabel("order parameter r")
    return {"points": n_pts, "folds_marked": marked, "styles": sorted(styles)}


def render_fig1(spec, base: Path):
    sweep = read_csv(base / spec["inputs"]["sweep"], SWEEP_COLUMNS)
    agg = read_csv(base / spec["inputs"]["agg"], AGG_COLUMNS)
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.plot(sweep["n"], sweep["K_crit_n"], "k.", ms=4, alpha=0.6, label="realizations")
    ax.plot(agg["n"], agg["mean"], "r-", lw=1.6, label="mean")
    ax.fill_between(agg["n"], agg["mean"] - agg["std"], agg["mean"] + agg["std"],
                    color="tab:blue", alpha=0.18)
    ax.plot(agg["n"], agg["mean"] - agg["std"], "b--", lw=1.0)
    ax.plot(agg["n"], agg["mean"] + agg["std"], "b--", lw=1.0)
    if "reference_K" in spec.get("overlay", {}):
        ax.axhline(float(spec["overlay"]["reference_K"]), color="gray", lw=1.0,
                   ls=":", label="graphon prediction")
    ax.set_xlabel("network size n")
    ax.set_ylabel("critical coupling")
    ax.legend(loc="best", fontsize=8)
    return fig, {"points": int(sweep["n"].size), "folds_marked": 0, "styles": ["band"]}


def render_profile_fig(spec, base: Path):
    panels = spec["inputs"]["profiles"]
    fig, axes = plt.subplots(1, len(panels), figsize=(4.2 * len(panels), 3.4),
                             squeeze=False)
    total = 0
    for ax, item in zip(axes[0], panels):
        cols = read_csv(base / item["path"], PROFILE_COLUMNS)
        ax.plot(cols["x_j"], cols["u_j"], ".", color="red", ms=3.5,
                label="oscillators")
        total += int(cols["x_j"].size)
        curve = overlay_curve(spec.get("overlay"))
        if curve is not None:
            ax.plot(curve[0], curve[1], "k-", lw=1.4, label="continuum profile")
        ax.set_title(item.get("title", ""), fontsize=9)
        ax.set_xlabel("x")
        ax.set_ylabel("phase")
        ax.legend(loc="upper left", fontsize=7)
    return fig, {"points": total, "folds_marked": 0, "styles": ["scatter"]}


def render_fig4(spec, base: Path):
    cols = read_csv(base / spec["inputs"]["branch"], BRANCH_COLUMNS)
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    summary = _plot_branch(ax, cols, fold_markers=spec.get("style", {}).get("fold_markers", True))
    if "reference_K" in spec.get("overlay", {}):
        ax.axvline(float(spec["overlay"]["reference_K"]), color="gray", lw=1.0,
                   ls=":", label="graphon K_crit")
    ax.legend(loc="lower right", fontsize=8)
    inset = ax.inset_axes([0.12, 0.58, 0.3, 0.34])
    inset.plot(cols["K"], cols["smallest_eig"], "b-", lw=1.0)
    inset.axhline(0.0, color="k", lw=0.6)
    inset.set_title("nearest eigenvalue", fontsize=7)
    inset.tick_params(labelsize=6)
    return fig, summary


def render_fig5(spec, base: Path):
    panels = spec["inputs"]["panels"]
    fig, axes = plt.subplots(1, len(panels), figsize=(4.6 * len(panels), 3.6),
                             squeeze=False)
    agg = {"points": 0, "folds_marked": 0, "styles": []}
    for ax, panel in zip(axes[0], panels):
        ref = read_csv(base / panel["graphon"], BRANCH_COLUMNS)
        fin = read_csv(base / panel["finite"], BRANCH_COLUMNS)
        s1 = _plot_branch(ax, ref, color="black", label="graphon model",
                          fold_markers=spec.get("style", {}).get("fold_markers", True))
        s2 = _plot_branch(ax, fin, color="tab:blue", label="random network",
                          fold_markers=spec.get("style", {}).get("fold_markers", True))
        agg["points"] += s1["points"] + s2["points"]
        agg["folds_marked"] += s1["folds_marked"] + s2["folds_marked"]
        agg["styles"] = sorted(set(agg["styles"]) | set(s1["styles"]) | set(s2["styles"]))
        ax.set_title(panel.get("title", ""), fontsize=9)
        ax.legend(loc="lower right", fontsize=7)
    return fig, agg


RENDERERS = {1: render_fig1, 2: render_profile_fig, 3: render_profile_fig,
             4: render_fig4, 5: render_fig5}


def render(spec: dict, out_path, base: Path | None = None) -> dict:
    """Render one figure spec to out_path; returns a summary of what was drawn."""
    fig_id = spec.get("figure")
    if fig_id not in RENDERERS:
        raise FigureError(f"figure id must be 1..5, got {fig_id!r}")
    base = Path(base) if base is not None else Path(".")
    _style()
    fig, summary = RENDERERS[fig_id](spec, base)
    fig.tight_layout()
    # strip the Software tag so renders are byte-identical
    fig.savefig(out_path, metadata={"Software": None})
    plt.close(fig)
    summary["figure"] = fig_id
    return summary


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--spec", required=True, help="figure spec JSON")
    ap.add_argument("--out", required=True, help="output image path")
    args = ap.parse_args(argv)
    spec_path = Path(args.spec)
    try:
        spec = json.loads(spec_path.read_text(encoding="utf-8"))
        summary = render(spec, args.out, base=spec_path.parent)
    except FigureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
