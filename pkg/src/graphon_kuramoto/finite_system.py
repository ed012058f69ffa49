"""Finite-n Kuramoto systems: right-hand side, Jacobian, Newton, RK4.

Phase-locked states are roots of the co-rotating right-hand side
G(u, omega*) with the translation mode removed by the mean-zero gauge
sum(u) = 0.  The gauge is enforced through a bordered Newton system with
the collective frequency omega* as the extra unknown, which keeps the
Jacobian block symmetric.  Stability is read off the spectrum of the
Jacobian restricted to the mean-zero subspace via an explicit Helmert
basis, so the translation zero never pollutes the diagnostics.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import dgecon

from .graphon import SamplePoints, StepGraphon
from .freqdist import StepFrequency
from .io_utils import atomic_write_text, fmt

STABILITY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class FiniteSystem:
    """n coupled oscillators: frequencies, scaled adjacency, coupling K."""

    omega: np.ndarray
    adjacency: np.ndarray
    K: float

    def __post_init__(self):
        w = self.adjacency
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] != self.omega.size:
            raise ValueError("adjacency/frequency shapes disagree")
        if np.any(np.diag(w) != 0.0) or not np.array_equal(w, w.T):
            raise ValueError("adjacency must be symmetric with zero diagonal")
        if np.any(np.abs(self.omega) > 1.0 + 1e-12):
            raise ValueError("frequencies must lie in [-1, 1]")
        if self.K < 0:
            raise ValueError("coupling must be nonnegative")

    @property
    def n(self) -> int:
        return self.omega.size

    def at_coupling(self, K: float) -> "FiniteSystem":
        return FiniteSystem(self.omega, self.adjacency, float(K))


def build_system(adj: StepGraphon, freq: StepFrequency, K: float) -> FiniteSystem:
    if adj.n != freq.n:
        raise ValueError("graph and frequency sizes disagree")
    return FiniteSystem(omega=freq.values, adjacency=adj.weights, K=float(K))


def coupling_term(A: np.ndarray, u: np.ndarray) -> np.ndarray:
    """(1/n) sum_k A_jk sin(u_k - u_j), evaluated through complex phases."""
    z = np.exp(1j * u)
    return np.imag(np.conj(z) * (A @ z)) / A.shape[0]


def coupling_jacobian(A: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Jacobian of coupling_term: symmetric with exact zero row sums."""
    n = A.shape[0]
    cosm = np.cos(u[None, :] - u[:, None])
    off = A * cosm / n
    np.fill_diagonal(off, 0.0)
    return off - np.diag(off.sum(axis=1))


def rhs(sys: FiniteSystem, u: np.ndarray, omega_star: float) -> np.ndarray:
    """G(u, omega*): frequency mismatch plus sinusoidal coupling."""
    return sys.omega - omega_star + sys.K * coupling_term(sys.adjacency, u)


def rhs_coupling_derivative(sys: FiniteSystem, u: np.ndarray) -> np.ndarray:
    """dG/dK at fixed u."""
    return coupling_term(sys.adjacency, u)


def jacobian(sys: FiniteSystem, u: np.ndarray) -> np.ndarray:
    return sys.K * coupling_jacobian(sys.adjacency, u)


@lru_cache(maxsize=8)
def mean_zero_basis(n: int) -> np.ndarray:
    """Orthonormal (n, n-1) Helmert-style basis of the mean-zero subspace."""
    Q = np.zeros((n, n - 1))
    for k in range(1, n):
        s = 1.0 / np.sqrt(k * (k + 1))
        Q[:k, k - 1] = s
        Q[k, k - 1] = -k * s
    return Q


def reduced_eigenvalues(J: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of J restricted to the mean-zero subspace."""
    Q = mean_zero_basis(J.shape[0])
    return np.linalg.eigvalsh(Q.T @ J @ Q)


def classify_stability(eigs: np.ndarray, tol: float = STABILITY_TOL) -> str:
    top = float(eigs[-1])
    if top > tol:
        return "unstable"
    if top > -tol:
        return "marginal"
    return "stable"


@dataclass
class SyncState:
    """Converged phase-locked state in the mean-zero gauge."""

    u: np.ndarray
    omega_star: float
    K: float
    residual_norm: float
    r: float
    leading_eigs: np.ndarray
    smallest_eig: float
    stable: bool
    classification: str
    iterations: int


@dataclass
class NewtonResult:
    ok: bool
    state: SyncState | None
    reason: str
    last_residual: float
    iterations: int


def order_parameter(theta: np.ndarray) -> float:
    """r = |mean of e^{i theta}| in [0, 1]."""
    return float(np.abs(np.mean(np.exp(1j * np.asarray(theta, dtype=float)))))


def _diagnostics(sys: FiniteSystem, u: np.ndarray) -> tuple[np.ndarray, float, str]:
    eigs = reduced_eigenvalues(jacobian(sys, u))
    order = np.argsort(np.abs(eigs))
    leading = eigs[order[:5]]
    return leading, float(leading[0]), classify_stability(eigs)


def newton_solve(sys: FiniteSystem, u0: np.ndarray, tol: float = 1e-10,
                 max_iter: int = 50, compute_eigs: bool = True,
                 cond_limit: float = 1e14) -> NewtonResult:
    """Solve {G(u, omega*) = 0, sum(u) = 0} by Newton on the bordered system.

    Failure reasons: "max_iter" (residual did not reach tol), "near_fold"
    (bordered matrix condition beyond cond_limit), "diverged" (iterates
    blew up or went non-finite).
    """
    n = sys.n
    u = np.asarray(u0, dtype=float).copy()
    u -= u.mean()
    w = float(np.mean(sys.omega))
    ones = np.ones(n)
    res = np.inf
    for it in range(max_iter + 1):
        g = rhs(sys, u, w)
        res = float(np.max(np.abs(g)))
        if not np.isfinite(res) or res > 1e8:
            return NewtonResult(False, None, "diverged", res, it)
        if res <= tol:
            u -= u.mean()
            r = order_parameter(u)
            if compute_eigs:
                leading, smallest, cls = _diagnostics(sys, u)
            else:
                leading, smallest, cls = np.full(5, np.nan), np.nan, "unknown"
            state = SyncState(u=u, omega_star=w, K=sys.K, residual_norm=res, r=r,
                              leading_eigs=leading, smallest_eig=smallest,
                              stable=(cls == "stable"), classification=cls, iterations=it)
            return NewtonResult(True, state, "", res, it)
        if it == max_iter:
            break
        J = jacobian(sys, u)
        B = np.zeros((n + 1, n + 1))
        B[:n, :n] = J
        B[:n, n] = -ones
        B[n, :n] = ones
        anorm = np.linalg.norm(B, 1)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # exact singularity is handled via rcond
            lu, piv = lu_factor(B, check_finite=False)
        rcond, info = dgecon(lu, anorm, norm="1")
        if info != 0 or rcond < 1.0 / cond_limit:
            return NewtonResult(False, None, "near_fold", res, it)
        step = lu_solve((lu, piv), -np.concatenate([g, [u.sum()]]), check_finite=False)
        if not np.all(np.isfinite(step)):
            return NewtonResult(False, None, "diverged", res, it)
        u += step[:n]
        w += float(step[n])
        # phases far outside the gauge-reduced circle mean divergence, and
        # huge arguments would drag sin/cos into the slow reduction path
        if np.max(np.abs(u)) > 50.0:
            return NewtonResult(False, None, "diverged", res, it)
    return NewtonResult(False, None, "max_iter", res, max_iter)


@dataclass
class Trajectory:
    theta: np.ndarray
    times: np.ndarray
    r_series: np.ndarray
    freq_spread: float


def integrate(sys: FiniteSystem, theta0: np.ndarray, t_end: float, dt: float = 1e-2,
              omega_star: float | None = None) -> Trajectory:
    """Fixed-step RK4 on the phase equation (co-rotating if omega_star given).

    Returns final phases, the order-parameter time series, and the
    frequency-synchrony diagnostic max_j |theta_dot_j - mean(theta_dot)|
    at the final time.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    A, K, n = sys.adjacency, sys.K, sys.n
    om = sys.omega - (omega_star if omega_star is not None else 0.0)

    def f(th):
        return om + K * coupling_term(A, th)

    steps = int(round(t_end / dt))
    theta = np.asarray(theta0, dtype=float).copy()
    r_series = np.empty(steps + 1)
    r_series[0] = order_parameter(theta)
    for k in range(steps):
        k1 = f(theta)
        k2 = f(theta + 0.5 * dt * k1)
        k3 = f(theta + 0.5 * dt * k2)
        k4 = f(theta + dt * k3)
        theta = theta + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        r_series[k + 1] = order_parameter(theta)
    td = f(theta)
    spread = float(np.max(np.abs(td - td.mean())))
    return Trajectory(theta=theta, times=np.arange(steps + 1) * dt,
                      r_series=r_series, freq_spread=spread)


PROFILE_COLUMNS = ["j", "x_j", "omega_j", "u_j"]


def save_sync_state(state: SyncState, pts: SamplePoints, sys: FiniteSystem, path) -> None:
    """CSV rows (j, x_j, omega_j, u_j) under a one-line JSON comment header."""
    header = {
        "K": state.K,
        "omega_star": state.omega_star,
        "residual": state.residual_norm,
        "r": state.r,
        "stable": bool(state.stable),
        "leading_eigs": [float(v) for v in state.leading_eigs[:5]],
    }
    lines = ["# " + json.dumps(header), ",".join(PROFILE_COLUMNS)]
    for j in range(state.u.size):
        lines.append(",".join([str(j + 1), fmt(float(pts.points[j])),
                               fmt(float(sys.omega[j])), fmt(float(state.u[j]))]))
    atomic_write_text(path, "\n".join(lines) + "\n")
