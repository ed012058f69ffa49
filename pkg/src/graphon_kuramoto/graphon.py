"""Graphon kernels, random-graph sampling, and convergence diagnostics.

A graphon is a symmetric kernel W: [0,1]^2 -> [0,1].  Finite graphs are
drawn from it at latent sample points, either as weighted graphs (edge
weight W(x_j, x_k)) or as simple graphs (Bernoulli edges).  Sampled
graphs are compared back to the kernel through step-graphon embeddings,
degree functions, and a cut-norm lower-bound estimator (cutnorm module).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import rng
from .quadrature import gauss_legendre_01

ERDOS_RENYI = "erdos_renyi"
SMALL_WORLD = "small_world"
GRID = "grid"

IID_UNIFORM = "iid"
DETERMINISTIC = "deterministic"
STRATIFIED_UNIFORM = "stratified"
MIDPOINT = "midpoint"


@dataclass(frozen=True, eq=False)
class Graphon:
    """Symmetric kernel on [0,1]^2 with values in [0,1]."""

    kind: str
    p: float = 0.0
    hi: float = 0.0
    lo: float = 0.0
    radius: float = 0.0
    values: np.ndarray | None = None

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == ERDOS_RENYI:
            out = np.broadcast_to(self.p, np.broadcast_shapes(x.shape, y.shape)).copy()
        elif self.kind == SMALL_WORLD:
            d = np.abs(x - y)
            circ = np.minimum(d, 1.0 - d)
            out = np.where(circ <= self.radius, self.hi, self.lo)
        else:
            m = self.values.shape[0]
            i = np.minimum((x * m).astype(int), m - 1)
            j = np.minimum((y * m).astype(int), m - 1)
            out = self.values[i, j]
        return out if out.ndim else float(out)


def erdos_renyi(p: float) -> Graphon:
    if not 0.0 < p <= 1.0:
        raise ValueError("edge probability must lie in (0, 1]")
    return Graphon(ERDOS_RENYI, p=p)


def small_world(hi: float = 0.9, lo: float = 0.1, radius: float = 0.25) -> Graphon:
    if not (0.0 <= lo <= 1.0 and 0.0 <= hi <= 1.0):
        raise ValueError("weights must lie in [0, 1]")
    if not 0.0 < radius <= 0.5:
        raise ValueError("radius must lie in (0, 1/2]")
    return Graphon(SMALL_WORLD, hi=hi, lo=lo, radius=radius)


def grid_graphon(values) -> Graphon:
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
        raise ValueError("grid graphon needs a square value matrix")
    if not np.allclose(vals, vals.T, atol=1e-12):
        raise ValueError("grid graphon values must be symmetric")
    if np.any(vals < 0) or np.any(vals > 1):
        raise ValueError("grid graphon values must lie in [0, 1]")
    return Graphon(GRID, values=vals)


def graphon_from_spec(spec: dict) -> Graphon:
    kind = spec.get("kind")
    aliases = {
        "erdos_renyi": ERDOS_RENYI, "erdos-renyi": ERDOS_RENYI, "er": ERDOS_RENYI,
        "small_world": SMALL_WORLD, "small-world": SMALL_WORLD, "smallworld": SMALL_WORLD,
        "grid": GRID,
    }
    if kind not in aliases:
        raise ValueError(f"unknown graphon kind {kind!r}")
    kind = aliases[kind]
    if kind == ERDOS_RENYI:
        return erdos_renyi(float(spec["p"]))
    if kind == SMALL_WORLD:
        return small_world(float(spec.get("hi", 0.9)), float(spec.get("lo", 0.1)),
                           float(spec.get("radius", 0.25)))
    return grid_graphon(spec["values"])


@dataclass(frozen=True)
class SamplePoints:
    """Ordered n-tuple of latent points in [0, 1]."""

    points: np.ndarray
    mode: str

    @property
    def n(self) -> int:
        return self.points.size

    @classmethod
    def generate(cls, n: int, mode: str = IID_UNIFORM, seed: int = 0) -> "SamplePoints":
        if n < 1:
            raise ValueError("n must be positive")
        if mode == IID_UNIFORM:
            pts = np.sort(rng.generator(seed).random(n))
        elif mode == DETERMINISTIC:
            pts = np.arange(1, n + 1) / n
        elif mode == STRATIFIED_UNIFORM:
            pts = (np.arange(n) + rng.generator(seed).random(n)) / n
        elif mode == MIDPOINT:
            pts = (np.arange(n) + 0.5) / n
        else:
            raise ValueError(f"unknown sample mode {mode!r}")
        return cls(points=pts, mode=mode)


@dataclass(frozen=True)
class StepGraphon:
    """Piecewise-constant graphon on the n^2 uniform cells; zero diagonal."""

    weights: np.ndarray

    def __post_init__(self):
        w = self.weights
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weights must be square")
        if np.any(np.diag(w) != 0.0):
            raise ValueError("loops carry weight 0")
        if not np.array_equal(w, w.T):
            raise ValueError("weights must be symmetric")
        if np.any(w < 0) or np.any(w > 1):
            raise ValueError("weights must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.weights.shape[0]


def sample_weighted(W: Graphon, pts: SamplePoints) -> StepGraphon:
    """Weighted random graph: edge weight W(x_j, x_k) between distinct vertices."""
    x = pts.points
    weights = np.asarray(W(x[:, None], x[None, :]), dtype=float)
    weights = (weights + weights.T) / 2.0  # defensive symmetrization of round-off
    np.fill_diagonal(weights, 0.0)
    return StepGraphon(weights=weights)


def sample_simple(W: Graphon, pts: SamplePoints, rng_seed: int) -> StepGraphon:
    """Simple random graph: one Bernoulli(W(x_j, x_k)) draw per unordered pair."""
    x = pts.points
    probs = np.asarray(W(x[:, None], x[None, :]), dtype=float)
    u = rng.pair_uniforms(rng_seed, pts.n)
    weights = (u < probs).astype(float)
    np.fill_diagonal(weights, 0.0)
    return StepGraphon(weights=weights)


@dataclass(frozen=True)
class DegreeFunction:
    """Degree d_W(x) = int W(x, y) dy: either constant or per-interval values."""

    constant: float | None = None
    values: np.ndarray | None = None

    @classmethod
    def const(cls, c: float) -> "DegreeFunction":
        return cls(constant=float(c))

    @classmethod
    def step(cls, values) -> "DegreeFunction":
        return cls(values=np.asarray(values, dtype=float))


def degree(W: Graphon) -> DegreeFunction:
    """Degree function of an analytic graphon (closed form for all kinds)."""
    if W.kind == ERDOS_RENYI:
        return DegreeFunction.const(W.p)
    if W.kind == SMALL_WORLD:
        # the circle-distance ball {y : dist(x, y) <= r} has measure 2r for every x
        return DegreeFunction.const(W.hi * 2.0 * W.radius + W.lo * (1.0 - 2.0 * W.radius))
    return DegreeFunction.step(W.values.mean(axis=1))


def degree_step(S: StepGraphon) -> DegreeFunction:
    """Row means of a step graphon, d_j = (1/n) sum_k weights[j, k]."""
    return DegreeFunction.step(S.weights.mean(axis=1))


def degree_distance(a: DegreeFunction, b: DegreeFunction) -> float:
    """Sup-norm distance between two degree functions on a common grid."""
    if a.constant is not None and b.constant is not None:
        return abs(a.constant - b.constant)
    if a.constant is not None:
        return float(np.max(np.abs(b.values - a.constant)))
    if b.constant is not None:
        return float(np.max(np.abs(a.values - b.constant)))
    na, nb = a.values.size, b.values.size
    if na == nb:
        return float(np.max(np.abs(a.values - b.values)))
    if na % nb == 0:
        return float(np.max(np.abs(a.values - np.repeat(b.values, na // nb))))
    if nb % na == 0:
        return float(np.max(np.abs(np.repeat(a.values, nb // na) - b.values)))
    raise ValueError(f"degree grids {na} and {nb} admit no common refinement")


def embed_step(W: Graphon, n: int) -> StepGraphon:
    """Cell-average embedding of an analytic graphon on the n-partition.

    Averages use a 32-point tensor Gauss-Legendre rule per cell (grid
    kernels use exact overlap averages since they are piecewise constant).
    The diagonal is zeroed to match sampled graphs; this perturbs the cut
    norm by at most max(W)/n.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if W.kind == ERDOS_RENYI:
        weights = np.full((n, n), W.p)
    elif W.kind == SMALL_WORLD:
        # cell average depends only on the vertex offset j - k
        xg, wg = gauss_legendre_01(32)
        xi = xg[:, None]
        eta = xg[None, :]
        ww = np.outer(wg, wg)
        offs = np.arange(n)
        avg = np.empty(n)
        for d in offs:
            diff = np.abs(d + xi - eta) / n
            circ = np.minimum(diff, 1.0 - diff)
            avg[d] = np.sum(ww * np.where(circ <= W.radius, W.hi, W.lo))
        idx = np.abs(np.subtract.outer(offs, offs))
        weights = avg[idx]
    else:
        m = W.values.shape[0]
        # overlap matrix O[j, a] = n * |I_j^n  ∩ I_a^m| (row-stochastic)
        jn = np.arange(n)
        am = np.arange(m)
        lo = np.maximum(jn[:, None] / n, am[None, :] / m)
        hi = np.minimum((jn[:, None] + 1) / n, (am[None, :] + 1) / m)
        O = np.maximum(hi - lo, 0.0) * n
        weights = O @ W.values @ O.T
    weights = np.clip((weights + weights.T) / 2.0, 0.0, 1.0)
    np.fill_diagonal(weights, 0.0)
    return StepGraphon(weights=weights)


_MAGIC = b"GKSG"
_VERSION = 1


def write_step_csv(S: StepGraphon, path) -> None:
    n = S.n
    lines = [f"n,{n}"]
    for row in S.weights:
        lines.append(",".join(format(v, ".17g") for v in row))
    from .io_utils import atomic_write_text

    atomic_write_text(path, "\n".join(lines) + "\n")


def read_step_csv(path) -> StepGraphon:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if len(header) != 2 or header[0] != "n":
            raise ValueError(f"{path}: expected 'n,<count>' header")
        n = int(header[1])
        weights = np.loadtxt(fh, delimiter=",", ndmin=2)
    if weights.shape != (n, n):
        raise ValueError(f"{path}: expected {n}x{n} weights, got {weights.shape}")
    return StepGraphon(weights=weights)


def write_step_binary(S: StepGraphon, path) -> None:
    n = S.n
    payload = _MAGIC + struct.pack("<HI", _VERSION, n) + S.weights.astype("<f8").tobytes()
    from .io_utils import atomic_write_bytes

    atomic_write_bytes(path, payload)


def read_step_binary(path) -> StepGraphon:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        raise ValueError(f"{path}: bad magic bytes")
    version, n = struct.unpack("<HI", blob[4:10])
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    body = np.frombuffer(blob[10:], dtype="<f8")
    if body.size != n * n:
        raise ValueError(f"{path}: truncated payload")
    return StepGraphon(weights=body.reshape(n, n).copy())
