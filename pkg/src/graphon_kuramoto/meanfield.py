"""Mean-field synchronization analysis for Erdos-Renyi kernels W = p.

The locked-profile family is parametrized by an amplitude scale q >= 1:
the coupling functional

    gamma(q) = (1/q^2) int sqrt(q^2 - s^2) f(s) ds
             = (1/q^2) int_0^1 sqrt(q^2 - Omega(t)^2) dt

relates coupling and profile through kappa = K p q gamma(q), with the
synchronous profile u*(x) = arcsin((Omega(x) - mean) / kappa).  The onset
of synchrony sits at gamma* = max_{q>=1} gamma(q), K_crit = 1/(p gamma*).
Spectral diagnostics of the linearization (essential interval, the
zero-eigenvalue integral condition, point eigenvalues) and the fold
normal-form coefficients a, b are computed by quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .finite_system import mean_zero_basis
from .freqdist import FrequencyModel
from .quadrature import gauss_legendre_01, integrate, integrate_01


class ProfileError(ValueError):
    """No synchronous profile exists at the requested parameters."""


@lru_cache(maxsize=4096)
def _gamma_cached(model: FrequencyModel, q: float, atol: float) -> float:
    def f(t):
        w = model.quantile(t)
        return np.sqrt(np.maximum(q * q - w * w, 0.0))

    return integrate_01(f, atol=atol) / (q * q)


def gamma_of_q(model: FrequencyModel, q: float, atol: float = 1e-12) -> float:
    """Coupling functional gamma(q) by adaptive quadrature in quantile form.

    The substitution s = Omega(t) turns the density integral into
    int_0^1 sqrt(q^2 - Omega(t)^2) dt, which also absorbs the endpoint
    singularity of the arcsine/cosine density.
    """
    if q < 1.0:
        raise ValueError("gamma(q) is defined for q >= 1")
    return _gamma_cached(model, float(q), float(atol))


def _dgamma(model: FrequencyModel, q: float, h: float = 1e-6) -> float:
    if q - h < 1.0:
        return (gamma_of_q(model, q + h) - gamma_of_q(model, q)) / h
    return (gamma_of_q(model, q + h) - gamma_of_q(model, q - h)) / (2 * h)


@lru_cache(maxsize=64)
def _maximize_gamma_cached(model: FrequencyModel, q_max: float) -> tuple[float, float]:
    h = 1e-6
    if _dgamma(model, 1.0, h) < 0.0:
        return gamma_of_q(model, 1.0), 1.0
    # golden-section bracketing of the interior maximum
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = 1.0, q_max
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = gamma_of_q(model, c), gamma_of_q(model, d)
    while b - a > 1e-5:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = gamma_of_q(model, c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = gamma_of_q(model, d)
    # bisection on the derivative sign down to |dq| < 1e-8
    lo = max(1.0, a - 1e-4)
    hi = min(q_max, b + 1e-4)
    dlo, dhi = _dgamma(model, lo, h), _dgamma(model, hi, h)
    if not (dlo > 0.0 > dhi):
        q_star = (a + b) / 2.0
        return gamma_of_q(model, q_star), q_star
    while hi - lo > 1e-8:
        mid = (lo + hi) / 2.0
        if _dgamma(model, mid, h) > 0.0:
            lo = mid
        else:
            hi = mid
    q_star = (lo + hi) / 2.0
    return gamma_of_q(model, q_star), q_star


def maximize_gamma(model: FrequencyModel, q_max: float = 10.0) -> tuple[float, float]:
    """(gamma*, q*): maximum of gamma over q >= 1 and its maximizer.

    Returns the boundary q = 1 when gamma is already decreasing there.
    The search bracket [1, q_max] is safe for densities supported in
    [-1, 1] since gamma(q) ~ 1/q for large q.
    """
    return _maximize_gamma_cached(model, float(q_max))


def critical_coupling(model: FrequencyModel, p: float) -> float:
    """K_crit = 1 / (p gamma*) for the kernel W = p."""
    if not 0.0 < p <= 1.0:
        raise ValueError("edge probability must lie in (0, 1]")
    gamma_star, _ = maximize_gamma(model)
    return 1.0 / (p * gamma_star)


def branch_q(model: FrequencyModel, p: float, K: float) -> float:
    """Amplitude scale q(K) >= q* on the branch continuous from the onset.

    Solves gamma(q) = 1/(K p) for the root with q >= q*; at that root the
    profile is an exact steady state of the mean-field equation.  For
    K > K_crit a second root with q < q* exists (the low-coherence
    branch); this function follows the branch through q*.
    """
    gamma_star, q_star = maximize_gamma(model)
    target = 1.0 / (K * p)
    if target > gamma_star * (1.0 + 1e-12):
        raise ProfileError(f"no synchronous profile: K={K} below K_crit={1.0 / (p * gamma_star)}")
    if target >= gamma_star:
        return q_star
    hi = max(2.0 * q_star, 2.0)
    while gamma_of_q(model, hi) > target:
        hi *= 2.0
        if hi > 1e8:
            raise ProfileError("branch search failed to bracket q(K)")
    from scipy.optimize import brentq

    return float(brentq(lambda q: gamma_of_q(model, q) - target, q_star, hi,
                        xtol=1e-13, rtol=8.9e-16))


@dataclass(eq=False)
class SyncProfile:
    """Synchronous profile u*(x) = arcsin((Omega(x) - mean)/kappa)."""

    model: FrequencyModel
    p: float
    K: float
    q: float
    kappa: float

    def __call__(self, x):
        w = (np.asarray(self.model.quantile(x)) - self.model.mean_frequency) / self.kappa
        out = np.arcsin(np.clip(w, -1.0, 1.0))
        return out if out.ndim else float(out)

    def grid(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        x = (np.arange(m) + 0.5) / m
        return x, self(x)


def sync_profile(model: FrequencyModel, p: float, K: float, q: float) -> SyncProfile:
    """Profile at (K, q); errors when the arcsin argument leaves [-1, 1]."""
    g = gamma_of_q(model, q)
    if g > 1.0 + 1e-12:
        raise ProfileError(f"gamma(q)={g:.6f} > 1: synchronization does not occur")
    kappa = K * p * q * g
    if kappa < model.sup_abs_centered() - 1e-12:
        raise ProfileError(f"no synchronous profile at this (K, q): kappa={kappa:.6f}")
    return SyncProfile(model=model, p=p, K=K, q=q, kappa=kappa)


def profile_on_points(model: FrequencyModel, p: float, K: float, xs: np.ndarray) -> np.ndarray:
    """Mean-field profile sampled at latent points, at the branch q(max(K, K_crit)).

    Below K_crit the profile at the onset scale q* is returned; it is the
    natural Newton seed when probing for nearby finite-n states.
    """
    K_eff = max(K, critical_coupling(model, p))
    q = branch_q(model, p, K_eff)
    prof = sync_profile(model, p, K_eff, q)
    return np.asarray(prof(xs), dtype=float)


def _require_odd(model: FrequencyModel) -> None:
    xs = np.linspace(0.0, 1.0, 17)
    sym = np.max(np.abs(model.quantile(xs) + model.quantile(1.0 - xs) - 2 * model.mean_frequency))
    if sym > 1e-9:
        raise ValueError("spectral closed forms require a quantile odd about x = 1/2; "
                         "use the finite-system diagnostics for asymmetric models")


def _zero_eig_integral(model: FrequencyModel, kappa: float) -> float:
    """int_0^1 Omega^2 / sqrt(kappa^2 - Omega^2) dy, robust down to kappa = 1.

    For kappa near 1 the y-form is endpoint singular; the substitution
    omega = kappa sin(t) makes the integrand bounded whenever the density
    is bounded at the support edge.  For edge-unbounded densities the
    integral genuinely diverges at kappa = 1.
    """
    if kappa > 1.0 + 1e-8:
        def f(y):
            w = model.quantile(y) - model.mean_frequency
            return w * w / np.sqrt(kappa * kappa - w * w)

        return integrate_01(f)
    if not model.density_bounded_at_support_edge():
        return np.inf
    tbar = np.arcsin(min(1.0, 1.0 / kappa))

    def g(t):
        st = np.sin(t)
        return kappa * kappa * st * st * model.density(kappa * st)

    return integrate(g, -tbar, tbar)


@dataclass
class SpectrumReport:
    """Spectral diagnostics of the linearization about the profile."""

    kappa: float
    C: float
    ess_lo: float
    ess_hi: float
    zero_eig_lhs: float
    stable: bool
    point_eigs: list[float]


def spectrum_report(model: FrequencyModel, p: float, K: float, q: float) -> SpectrumReport:
    """Essential interval, zero-eigenvalue check, and point spectrum at (K, q).

    point_eigs holds roots lambda* of the scaled eigenvalue equation
    I(lambda*) = 1 (true eigenvalues are K p lambda*); it is empty in the
    essential-edge case kappa <= 1 where the point problem degenerates.
    """
    _require_odd(model)
    g = gamma_of_q(model, q)
    kappa = K * p * q * g
    sup = model.sup_abs_centered()
    if kappa < sup - 1e-12:
        raise ProfileError(f"no synchronous profile at this (K, q): kappa={kappa:.6f}")

    def cosu(y):
        w = (model.quantile(y) - model.mean_frequency) / kappa
        return np.sqrt(np.maximum(1.0 - w * w, 0.0))

    C = integrate_01(cosu)
    cmin = np.sqrt(max(0.0, 1.0 - 1.0 / (kappa * kappa)))
    ess_lo = -K * p * C
    ess_hi = -K * p * cmin * C
    J = _zero_eig_integral(model, kappa)
    lhs = J / (kappa * C)
    stable = bool(lhs < 1.0 and kappa > 1.0)
    point_eigs: list[float] = []
    if kappa > 1.0 + 1e-8:
        lam = _point_eig(model, kappa, C, cmin)
        if lam is not None:
            point_eigs.append(lam)
    return SpectrumReport(kappa=kappa, C=C, ess_lo=ess_lo, ess_hi=ess_hi,
                          zero_eig_lhs=lhs, stable=stable, point_eigs=point_eigs)


def eigenvalue_equation(model: FrequencyModel, kappa: float, C: float, lam: float) -> float:
    """I(lambda*) = (1/kappa^2) int Omega^2 / (C cos(u*) + lambda*) dy."""
    def f(y):
        w = model.quantile(y) - model.mean_frequency
        c = np.sqrt(np.maximum(1.0 - (w / kappa) ** 2, 0.0))
        return w * w / (C * c + lam)

    return integrate_01(f) / (kappa * kappa)


def _point_eig(model: FrequencyModel, kappa: float, C: float, cmin: float) -> float | None:
    """Unique root of I = 1 right of the essential edge, by bisection.

    I is strictly decreasing with I -> +inf at the edge -C cmin and
    I -> 0 at +inf; when the root is closer to the edge than floating
    point can resolve it is indistinguishable from essential spectrum and
    None is returned.
    """
    edge = -C * cmin
    scale = max(C, 1.0)
    lo_off, hi_off = 1e-12 * scale, 64.0 * scale
    if eigenvalue_equation(model, kappa, C, edge + lo_off) < 1.0:
        return None
    while eigenvalue_equation(model, kappa, C, edge + hi_off) > 1.0:
        hi_off *= 4.0
        if hi_off > 1e6 * scale:
            return None
    # bisection in log-offset space resolves roots near the edge
    ulo, uhi = np.log(lo_off), np.log(hi_off)
    for _ in range(100):
        um = 0.5 * (ulo + uhi)
        if eigenvalue_equation(model, kappa, C, edge + np.exp(um)) > 1.0:
            ulo = um
        else:
            uhi = um
    return float(edge + np.exp(0.5 * (ulo + uhi)))


@dataclass(eq=False)
class SampledFunction:
    """Piecewise-linear interpolant of grid samples (clamped at the ends)."""

    x: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        out = np.interp(np.asarray(t, dtype=float), self.x, self.values)
        return out if out.ndim else float(out)


def null_vector(model: FrequencyModel, p: float, K: float, q: float,
                m: int = 2048) -> tuple[SampledFunction, float]:
    """Near-zero eigenfunction of the linearization, from an m-point grid.

    The W = p kernel makes the discretized linearization rank-2 plus
    diagonal.  Constants (the translation mode) are deflated by working
    in a Helmert basis of the mean-zero subspace; the eigenvector of the
    eigenvalue nearest 0 is interpolated linearly and L2-normalized.
    Returns (v, eigenvalue).
    """
    prof = sync_profile(model, p, K, q)
    xs = (np.arange(m) + 0.5) / m
    u = prof(xs)
    c = np.cos(u)
    s = np.sin(u)
    Cm = c.mean()
    M = (K * p) * ((np.outer(c, c) + np.outer(s, s)) / m - np.diag(Cm * c))
    Q = mean_zero_basis(m)
    eigs, vecs = np.linalg.eigh(Q.T @ M @ Q)
    idx = int(np.argmin(np.abs(eigs)))
    v = Q @ vecs[:, idx]
    v *= np.sqrt(m / np.sum(v * v))
    fn = SampledFunction(x=xs, values=v)
    xg, wg = gauss_legendre_01(1024)
    nrm = np.sqrt(np.sum(wg * fn(xg) ** 2))
    fn.values = fn.values / nrm
    return fn, float(eigs[idx])


@dataclass
class CMCoefficients:
    """Fold normal-form coefficients of the reduced dynamics."""

    a: float
    b: float
    a_from_frequency: float
    product_sign: int


def cm_coefficients(model: FrequencyModel, p: float, K_crit: float, u_star, v_star,
                    nodes: int = 256) -> CMCoefficients:
    """Coefficients a, b by tensor Gauss-Legendre quadrature on a nodes^2 grid.

    a is computed both as the double kernel integral and through the
    frequency form -(1/K_crit) int (Omega - mean) v*; the two agree for
    an exact profile.  v* must be unit L2-normalized to 1e-6.
    """
    xg, wg = gauss_legendre_01(nodes)
    v = np.asarray(v_star(xg), dtype=float)
    nrm = float(np.sum(wg * v * v))
    if abs(nrm - 1.0) > 1e-6:
        raise ValueError(f"eigenfunction not unit-normalized: ||v||^2 = {nrm:.8f}")
    u = np.asarray(u_star(xg), dtype=float)
    sind = np.sin(u[None, :] - u[:, None])  # sin(u(y) - u(x)), x rows
    wv = wg * v
    inner = sind @ wg  # int W sin(u(y) - u(x)) dy / p
    a = p * float(wv @ inner)
    wc = np.asarray(model.quantile(xg), dtype=float) - model.mean_frequency
    a_freq = -float(np.sum(wg * wc * v)) / K_crit
    dv2 = (v[None, :] - v[:, None]) ** 2
    b = -0.5 * K_crit * p * float(wv @ ((sind * dv2) @ wg))
    prod = a * b
    return CMCoefficients(a=a, b=b, a_from_frequency=a_freq,
                          product_sign=int(np.sign(prod)))


@dataclass
class MeanFieldReport:
    """Onset summary for the kernel W = p at an optional query coupling."""

    p: float
    gamma_star: float
    q_star: float
    K_crit: float
    q: float
    kappa: float


def mean_field_report(model: FrequencyModel, p: float, K: float | None = None) -> MeanFieldReport:
    gamma_star, q_star = maximize_gamma(model)
    K_crit = 1.0 / (p * gamma_star)
    if K is None:
        q = q_star
        kappa = q_star
    else:
        q = branch_q(model, p, K)
        kappa = K * p * q * gamma_of_q(model, q)
    return MeanFieldReport(p=p, gamma_star=gamma_star, q_star=q_star,
                           K_crit=K_crit, q=q, kappa=kappa)


def report_dict(model: FrequencyModel, p: float, K: float | None = None,
                cm: CMCoefficients | None = None) -> dict:
    """JSON-ready report with the canonical field names."""
    mf = mean_field_report(model, p, K)
    spec = spectrum_report(model, p, K if K is not None else mf.K_crit, mf.q)
    out = {
        "gamma_star": mf.gamma_star,
        "q_star": mf.q_star,
        "K_crit": mf.K_crit,
        "kappa": spec.kappa,
        "C": spec.C,
        "ess_lo": spec.ess_lo,
        "ess_hi": spec.ess_hi,
        "zero_eig_lhs": spec.zero_eig_lhs if np.isfinite(spec.zero_eig_lhs) else None,
        "stable": spec.stable,
        "a": cm.a if cm is not None else None,
        "b": cm.b if cm is not None else None,
        "point_eigs": spec.point_eigs,
    }
    return out
