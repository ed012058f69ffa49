"""Frequency distributions on [-1, 1].

A frequency model bundles a probability density f, its CDF F, and the
quantile map Omega = F^{-1} taking latent positions x in [0, 1] to
natural frequencies.  Three closed-form families are provided (uniform,
arcsine/cosine, truncated Cauchy) plus tabulated densities with a
shape-preserving interpolated quantile.  The empirical step quantile
assigns Omega evaluated at sorted latent sample points to the uniform
partition of [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .quadrature import gauss_legendre_01

UNIFORM = "uniform"
ARCSINE_COSINE = "arcsine_cosine"
CAUCHY_LIKE = "cauchy_like"
TABLE = "table"

_NAMED_KINDS = (UNIFORM, ARCSINE_COSINE, CAUCHY_LIKE)


@dataclass(eq=False)
class FrequencyModel:
    """Density / CDF / quantile triple on [-1, 1]."""

    kind: str
    table_density: np.ndarray | None = None
    _inv: PchipInterpolator | None = field(default=None, repr=False)
    _cdf_nodes: np.ndarray | None = field(default=None, repr=False)
    _cdf_vals: np.ndarray | None = field(default=None, repr=False)
    _mean: float = field(default=0.0, repr=False)

    def __post_init__(self):
        if self.kind in _NAMED_KINDS:
            self._mean = 0.0
            return
        if self.kind != TABLE:
            raise ValueError(f"unknown frequency kind {self.kind!r}")
        vals = np.asarray(self.table_density, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("table density needs at least 2 grid values")
        if np.any(vals < 0) or np.any(vals[1:-1] <= 0):
            raise ValueError("table density must be positive in the interior")
        nodes = np.linspace(-1.0, 1.0, vals.size)
        total = np.trapezoid(vals, nodes)
        vals = vals / total
        self.table_density = vals
        # CDF of the linear interpolant on a refined grid (exact per segment)
        fine = np.linspace(-1.0, 1.0, 4 * vals.size + 1)
        fvals = np.interp(fine, nodes, vals)
        cdf = np.concatenate([[0.0], np.cumsum((fvals[1:] + fvals[:-1]) / 2 * np.diff(fine))])
        cdf /= cdf[-1]
        self._cdf_nodes = fine
        self._cdf_vals = cdf
        keep = np.concatenate([[True], np.diff(cdf) > 1e-14])
        self._inv = PchipInterpolator(cdf[keep], fine[keep])
        xg, wg = gauss_legendre_01(256)
        self._mean = float(np.sum(wg * self.quantile(xg)))

    @property
    def mean_frequency(self) -> float:
        """Mean of Omega over [0, 1] (zero for the named symmetric kinds)."""
        return self._mean

    def density(self, w):
        w = np.asarray(w, dtype=float)
        if self.kind == UNIFORM:
            out = np.where(np.abs(w) <= 1.0, 0.5, 0.0)
        elif self.kind == ARCSINE_COSINE:
            with np.errstate(divide="ignore"):
                out = np.where(np.abs(w) <= 1.0, 1.0 / (np.pi * np.sqrt(np.maximum(1.0 - w * w, 0.0))), 0.0)
        elif self.kind == CAUCHY_LIKE:
            out = np.where(np.abs(w) <= 1.0, 2.0 / (np.pi * (1.0 + w * w)), 0.0)
        else:
            nodes = np.linspace(-1.0, 1.0, self.table_density.size)
            out = np.where(np.abs(w) <= 1.0, np.interp(w, nodes, self.table_density), 0.0)
        return out if out.ndim else float(out)

    def cdf(self, w):
        w = np.asarray(w, dtype=float)
        wc = np.clip(w, -1.0, 1.0)
        if self.kind == UNIFORM:
            out = (wc + 1.0) / 2.0
        elif self.kind == ARCSINE_COSINE:
            out = 0.5 + np.arcsin(wc) / np.pi
        elif self.kind == CAUCHY_LIKE:
            out = 0.5 + 2.0 / np.pi * np.arctan(wc)
        else:
            out = np.interp(wc, self._cdf_nodes, self._cdf_vals)
        return out if out.ndim else float(out)

    def quantile(self, x):
        """Omega(x) = F^{-1}(x) for x in [0, 1]; errors outside."""
        x = np.asarray(x, dtype=float)
        if np.any(x < -1e-12) or np.any(x > 1.0 + 1e-12):
            raise ValueError("quantile argument outside [0, 1]")
        xc = np.clip(x, 0.0, 1.0)
        if self.kind == UNIFORM:
            out = 2.0 * xc - 1.0
        elif self.kind == ARCSINE_COSINE:
            out = -np.cos(np.pi * xc)
        elif self.kind == CAUCHY_LIKE:
            # closure of the truncated support: endpoints map exactly to +-1
            out = np.where(xc <= 0.0, -1.0, np.where(xc >= 1.0, 1.0, np.tan(np.pi / 4.0 * (2.0 * xc - 1.0))))
        else:
            out = np.clip(self._inv(xc), -1.0, 1.0)
        return out if out.ndim else float(out)

    def sup_abs_centered(self) -> float:
        """sup over x of |Omega(x) - mean|; Omega monotone, so check endpoints."""
        lo, hi = self.quantile(0.0), self.quantile(1.0)
        return float(max(abs(lo - self._mean), abs(hi - self._mean)))

    def density_bounded_at_support_edge(self) -> bool:
        """Whether f stays bounded at omega = +-1 (false for arcsine/cosine)."""
        if self.kind == ARCSINE_COSINE:
            return False
        return True


def uniform_model() -> FrequencyModel:
    return FrequencyModel(UNIFORM)


def arcsine_cosine_model() -> FrequencyModel:
    return FrequencyModel(ARCSINE_COSINE)


def cauchy_like_model() -> FrequencyModel:
    return FrequencyModel(CAUCHY_LIKE)


def table_density_model(values) -> FrequencyModel:
    return FrequencyModel(TABLE, table_density=np.asarray(values, dtype=float))


def model_from_spec(spec: dict) -> FrequencyModel:
    """Build a model from a config mapping {"kind": ..., [params]}."""
    kind = spec.get("kind")
    aliases = {
        "uniform": UNIFORM,
        "arcsine-cosine": ARCSINE_COSINE,
        "arcsine_cosine": ARCSINE_COSINE,
        "cauchy-like": CAUCHY_LIKE,
        "cauchy_like": CAUCHY_LIKE,
        "table": TABLE,
    }
    if kind not in aliases:
        raise ValueError(f"unknown frequency kind {kind!r}")
    kind = aliases[kind]
    if kind == TABLE:
        return table_density_model(spec["density"])
    return FrequencyModel(kind)


@dataclass(frozen=True)
class StepFrequency:
    """Step function of frequencies on the uniform n-partition of [0, 1]."""

    values: np.ndarray
    omega_star: float

    @property
    def n(self) -> int:
        return self.values.size


def empirical_step(model: FrequencyModel, pts) -> StepFrequency:
    """Frequencies Omega(x_(j)) at the sorted sample points, with their mean."""
    values = np.asarray(model.quantile(pts.points), dtype=float)
    return StepFrequency(values=values, omega_star=float(np.mean(values)))


def sup_distance_to_continuum(step: StepFrequency, model: FrequencyModel) -> float:
    """max_j sup_{x in I_j} |omega_j - Omega(x)|, using monotonicity of Omega."""
    n = step.n
    edges = model.quantile(np.arange(n + 1) / n)
    left = np.abs(step.values - edges[:-1])
    right = np.abs(step.values - edges[1:])
    return float(np.max(np.maximum(left, right)))
