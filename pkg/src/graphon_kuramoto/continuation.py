"""Pseudo-arclength continuation of phase-locked branches in the coupling K.

A secant predictor with a Newton corrector traces branches of the
extended system {G = 0, gauge, arclength constraint}; folds are detected
by K-direction reversal cross-checked against the sign of the smallest
gauge-reduced eigenvalue, then refined by bisection on the arclength
parameter until the branch tangent has zero K-component.  Two strategies
measure the finite-n critical coupling: tracking the first fold of the
branch seeded from the mean-field profile, and bisection on "Newton from
the mean-field profile converges to a stable state" for the
essential-edge cases where fold tracking is ill-conditioned.

Arclength is measured in the weighted norm with u-components scaled by
1/n (RMS) so step sizes are comparable across system sizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import rng
from .finite_system import (FiniteSystem, classify_stability, coupling_jacobian,
                            coupling_term, mean_zero_basis, newton_solve,
                            order_parameter)
from .freqdist import FrequencyModel, empirical_step
from .graphon import ERDOS_RENYI, Graphon, SamplePoints, sample_simple, sample_weighted
from .io_utils import write_csv
from .meanfield import critical_coupling, profile_on_points


class FoldLocateError(RuntimeError):
    """No turning point or eigenvalue crossing inside the requested bracket."""


class SeedStateError(RuntimeError):
    """The branch seed state failed to converge."""


@dataclass
class BranchPoint:
    K: float
    u: np.ndarray
    omega_star: float
    r: float
    smallest_eig: float
    stable: bool
    n_unstable: int
    fold_flag: bool = False


@dataclass
class Fold:
    K: float
    u: np.ndarray
    omega_star: float
    smallest_eig: float
    suspect: bool
    dK_resolution: float
    method: str = "bisection"


@dataclass
class Branch:
    points: list[BranchPoint]
    folds: list[Fold]
    direction: int
    termination: str
    _tracer: object = field(repr=False, default=None)
    _ys: list = field(repr=False, default_factory=list)
    _tangents: list = field(repr=False, default_factory=list)


class KuramotoTracer:
    """Extended system {G(u, omega*; K) = 0, sum(u) = 0} for continuation."""

    def __init__(self, omega: np.ndarray, adjacency: np.ndarray):
        self.omega = np.asarray(omega, dtype=float)
        self.adjacency = np.asarray(adjacency, dtype=float)
        n = self.omega.size
        self.n = n
        self.dim = n + 1
        self.weights = np.concatenate([np.full(n, 1.0 / n), [1.0]])

    def residual(self, x: np.ndarray, K: float) -> np.ndarray:
        u, w = x[:-1], x[-1]
        g = self.omega - w + K * coupling_term(self.adjacency, u)
        return np.concatenate([g, [u.sum()]])

    def jacobian(self, x: np.ndarray, K: float) -> np.ndarray:
        n = self.n
        J = K * coupling_jacobian(self.adjacency, x[:-1])
        B = np.zeros((n + 1, n + 1))
        B[:n, :n] = J
        B[:n, n] = -1.0
        B[n, :n] = 1.0
        return B

    def jac_K(self, x: np.ndarray, K: float) -> np.ndarray:
        return np.concatenate([coupling_term(self.adjacency, x[:-1]), [0.0]])

    def point_info(self, x: np.ndarray, K: float) -> BranchPoint:
        u = x[:-1].copy()
        J = K * coupling_jacobian(self.adjacency, u)
        Q = mean_zero_basis(self.n)
        eigs = np.linalg.eigvalsh(Q.T @ J @ Q)
        smallest = float(eigs[np.argmin(np.abs(eigs))])
        return BranchPoint(K=float(K), u=u, omega_star=float(x[-1]),
                           r=order_parameter(u), smallest_eig=smallest,
                           stable=classify_stability(eigs) == "stable",
                           n_unstable=int(np.sum(eigs > 1e-8)))

    def near_null(self, x: np.ndarray, K: float) -> np.ndarray:
        """Eigenvector of the gauge-reduced eigenvalue nearest zero."""
        J = K * coupling_jacobian(self.adjacency, x[:-1])
        Q = mean_zero_basis(self.n)
        eigs, vecs = np.linalg.eigh(Q.T @ J @ Q)
        v = Q @ vecs[:, np.argmin(np.abs(eigs))]
        return np.concatenate([v, [0.0]])

    def fold_blocks(self, x: np.ndarray, K: float, phi: np.ndarray):
        """(d(Jx phi)/dx, d(Jx phi)/dK) for the extended fold system."""
        n = self.n
        u, pu = x[:-1], phi[:-1]
        P = (K / n) * self.adjacency * np.sin(u[None, :] - u[:, None]) \
            * (pu[None, :] - pu[:, None])
        np.fill_diagonal(P, 0.0)
        H = np.zeros((n + 1, n + 1))
        H[:n, :n] = np.diag(P.sum(axis=1)) - P
        dK = np.zeros(n + 1)
        dK[:n] = coupling_jacobian(self.adjacency, u) @ pu
        return H, dK


def _wnorm(tracer, dy: np.ndarray) -> float:
    w = np.concatenate([tracer.weights, [1.0]])
    return float(np.sqrt(np.sum(w * dy * dy)))


def _wdot(tracer, a: np.ndarray, b: np.ndarray) -> float:
    w = np.concatenate([tracer.weights, [1.0]])
    return float(np.sum(w * a * b))


def _correct(tracer, y_pred, t_ref, y_ref, ds, tol, max_iter=12):
    """Damped Newton on {residual = 0, <t_ref, y - y_ref>_w = ds}.

    Backtracking on the squared merit keeps the iteration from cycling
    between the two nearby plane/branch intersections around a fold.
    """
    dim = tracer.dim

    def parts(yy):
        r = tracer.residual(yy[:-1], yy[-1])
        cons = _wdot(tracer, t_ref, yy - y_ref) - ds
        return r, cons, float(np.sum(r * r) + cons * cons)

    y = y_pred.copy()
    r, cons, merit = parts(y)
    for it in range(max_iter + 1):
        err = max(float(np.max(np.abs(r))), abs(cons))
        if not np.isfinite(err):
            return y, it, False
        if err <= tol:
            return y, it, True
        if it == max_iter:
            return y, it, False
        A = np.zeros((dim + 1, dim + 1))
        A[:dim, :dim] = tracer.jacobian(y[:-1], y[-1])
        A[:dim, dim] = tracer.jac_K(y[:-1], y[-1])
        A[dim, :dim] = tracer.weights * t_ref[:-1]
        A[dim, dim] = t_ref[-1]
        try:
            step = np.linalg.solve(A, -np.concatenate([r, [cons]]))
        except np.linalg.LinAlgError:
            return y, it, False
        if not np.all(np.isfinite(step)):
            return y, it, False
        lam = 1.0
        accepted = False
        for _ in range(12):
            y_try = y + lam * step
            if np.max(np.abs(y_try)) > 1e3:
                lam *= 0.5
                continue
            r2, c2, m2 = parts(y_try)
            if np.isfinite(m2) and m2 <= merit * (1.0 - 1e-4 * lam):
                y, r, cons, merit = y_try, r2, c2, m2
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            return y, it, False
    return y, max_iter, False


def _correct_fixed_K(tracer, x0, K, tol, max_iter=20):
    x = x0.copy()
    for it in range(max_iter + 1):
        r = tracer.residual(x, K)
        err = float(np.max(np.abs(r)))
        if not np.isfinite(err):
            return x, False
        if err <= tol:
            return x, True
        if it == max_iter:
            return x, False
        try:
            step = np.linalg.solve(tracer.jacobian(x, K), -r)
        except np.linalg.LinAlgError:
            return x, False
        x = x + step
    return x, False


def _tangent(tracer, y, t_ref):
    """Unit branch tangent at a converged point, oriented along t_ref."""
    dim = tracer.dim
    A = np.zeros((dim + 1, dim + 1))
    A[:dim, :dim] = tracer.jacobian(y[:-1], y[-1])
    A[:dim, dim] = tracer.jac_K(y[:-1], y[-1])
    A[dim, :dim] = tracer.weights * t_ref[:-1]
    A[dim, dim] = t_ref[-1]
    e = np.zeros(dim + 1)
    e[dim] = 1.0
    t = np.linalg.solve(A, e)
    t /= _wnorm(tracer, t)
    if _wdot(tracer, t, t_ref) < 0:
        t = -t
    return t


def _fold_blocks_fd(tracer, x, K, phi, h=1e-6):
    """Finite-difference fallback for d(Jx phi)/dx and d(Jx phi)/dK."""
    dim = tracer.dim
    H = np.zeros((dim, dim))
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = h
        H[:, j] = (tracer.jacobian(x + e, K) @ phi - tracer.jacobian(x - e, K) @ phi) / (2 * h)
    dK = (tracer.jacobian(x, K + h) @ phi - tracer.jacobian(x, K - h) @ phi) / (2 * h)
    return H, dK


def _fold_newton(tracer, x0, K0, phi0, tol=1e-9, max_iter=25):
    """Newton on the extended fold system {F = 0, Jx phi = 0, c.phi = 1}.

    Converges quadratically from a near-fold point with phi0 close to the
    null vector; returns (x, K, phi) at the fold or None.
    """
    dim = tracer.dim
    c = phi0 / float(phi0 @ phi0)
    x, K, phi = x0.copy(), float(K0), phi0.copy()
    for _ in range(max_iter):
        Jx = tracer.jacobian(x, K)
        F = tracer.residual(x, K)
        Jphi = Jx @ phi
        res = np.concatenate([F, Jphi, [c @ phi - 1.0]])
        if max(np.max(np.abs(F)), np.max(np.abs(Jphi))) <= tol and abs(c @ phi - 1.0) <= 1e-10:
            return x, K, phi
        if hasattr(tracer, "fold_blocks"):
            H, dJdK = tracer.fold_blocks(x, K, phi)
        else:
            H, dJdK = _fold_blocks_fd(tracer, x, K, phi)
        Z = np.zeros((2 * dim + 1, 2 * dim + 1))
        Z[:dim, :dim] = Jx
        Z[:dim, dim] = tracer.jac_K(x, K)
        Z[dim:2 * dim, :dim] = H
        Z[dim:2 * dim, dim] = dJdK
        Z[dim:2 * dim, dim + 1:] = Jx
        Z[2 * dim, dim + 1:] = c
        try:
            step = np.linalg.solve(Z, -res)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        x = x + step[:dim]
        K = K + float(step[dim])
        phi = phi + step[dim + 1:]
        if np.max(np.abs(x)) > 1e3:
            return None
    return None


def _refine_fold(tracer, y_a, t_a, s_hi, tol=1e-10, tol_K=1e-6, eig_tol=1e-4):
    """Locate the fold inside the bracketing segment starting at y_a.

    A Newton solve of the extended fold system (seeded with the near-null
    eigenvector) resolves the fold to machine precision, including the
    symmetry-degenerate folds where plane-correction bisection becomes
    ill-conditioned.  If it fails, fall back to bisection on the arclength
    parameter along the local tangent.  The fold is marked suspect when
    the eigenvalue at the refined point is not small (an eigenvalue
    crossing without a K-turning point) or when only the fallback path
    succeeded partially.
    """
    if hasattr(tracer, "near_null"):
        phi0 = tracer.near_null(y_a[:-1], y_a[-1])
    else:
        _, _, vh = np.linalg.svd(tracer.jacobian(y_a[:-1], y_a[-1]))
        phi0 = vh[-1]
    sol = _fold_newton(tracer, y_a[:-1], y_a[-1], phi0, tol=max(1e-9, tol))
    if sol is not None:
        x_f, K_f, _ = sol
        # only accept a fold belonging to this bracket, not a remote one
        if abs(K_f - y_a[-1]) <= 4.0 * max(s_hi, abs(t_a[-1]) * s_hi) + 1e-6:
            info = tracer.point_info(x_f, K_f)
            y_f = np.concatenate([x_f, [K_f]])
            # cross-check: at a genuine fold the branch tangent loses its
            # K-component; a crossing without a turn is flagged suspect
            try:
                tau_K = abs(_tangent(tracer, y_f, t_a)[-1])
            except np.linalg.LinAlgError:
                tau_K = 1.0
            suspect = tau_K > 0.5 or abs(info.smallest_eig) > 10 * eig_tol
            return Fold(K=float(K_f), u=info.u.copy(), omega_star=info.omega_star,
                        smallest_eig=info.smallest_eig, suspect=suspect,
                        dK_resolution=0.0, method="newton")
    # fallback: bisection on arclength along the local tangent through y_a
    try:
        t_a = _tangent(tracer, y_a, t_a)
    except np.linalg.LinAlgError:
        raise FoldLocateError("tangent solve failed at the bracket start")
    sign_lo = np.sign(t_a[-1])
    y_hi, _, ok = _correct(tracer, y_a + s_hi * t_a, t_a, y_a, s_hi, tol)
    if not ok:
        raise FoldLocateError("corrector failed at the bracket end")
    count_lo = tracer.point_info(y_a[:-1], y_a[-1]).n_unstable
    info_hi = tracer.point_info(y_hi[:-1], y_hi[-1])
    tau_hi = _tangent(tracer, y_hi, t_a)
    turned = np.sign(tau_hi[-1]) != sign_lo
    crossed = info_hi.n_unstable != count_lo
    if not (turned or crossed):
        raise FoldLocateError("no K-turning point or eigenvalue crossing in the bracket")
    s_lo, s_cur = 0.0, s_hi
    K_lo, K_hi = y_a[-1], y_hi[-1]
    y_best = y_hi
    suspect = False
    for _ in range(80):
        s_mid = 0.5 * (s_lo + s_cur)
        y_mid, _, ok = _correct(tracer, y_a + s_mid * t_a, t_a, y_a, s_mid, tol)
        if not ok:
            suspect = True
            break
        if crossed:
            on_lo_side = tracer.point_info(y_mid[:-1], y_mid[-1]).n_unstable == count_lo
        else:
            on_lo_side = np.sign(_tangent(tracer, y_mid, t_a)[-1]) == sign_lo
        if on_lo_side:
            s_lo, K_lo = s_mid, y_mid[-1]
        else:
            s_cur, K_hi = s_mid, y_mid[-1]
        y_best = y_mid
        if abs(K_hi - K_lo) < tol_K:
            info = tracer.point_info(y_best[:-1], y_best[-1])
            if abs(info.smallest_eig) < eig_tol:
                break
    info = tracer.point_info(y_best[:-1], y_best[-1])
    if abs(info.smallest_eig) > 10 * eig_tol:
        suspect = True
    return Fold(K=float(y_best[-1]), u=info.u.copy(), omega_star=info.omega_star,
                smallest_eig=info.smallest_eig, suspect=suspect,
                dK_resolution=abs(K_hi - K_lo), method="bisection")


def trace_branch(tracer, x0: np.ndarray, K0: float, ds: float, K_range,
                 max_points: int = 400, direction: int = -1, tol: float = 1e-10,
                 stop_at_first_fold: bool = False, refine_folds: bool = True) -> Branch:
    """Generic secant-predictor / Newton-corrector continuation driver."""
    y0 = np.concatenate([np.asarray(x0, dtype=float), [float(K0)]])
    r0 = float(np.max(np.abs(tracer.residual(y0[:-1], y0[-1]))))
    if r0 > 1e-9:
        raise ValueError(f"start state not converged: residual {r0:.2e} > 1e-9")
    points = [tracer.point_info(y0[:-1], y0[-1])]
    ys = [y0]
    tangents: list = [None]
    folds: list[Fold] = []
    K_lo, K_hi = float(K_range[0]), float(K_range[1])

    # second point by a natural-parameter step in K
    dK = direction * ds
    y1 = None
    while True:
        x1, ok = _correct_fixed_K(tracer, y0[:-1], K0 + dK, tol)
        if ok:
            y1 = np.concatenate([x1, [K0 + dK]])
            break
        dK *= 0.5
        if abs(dK) < ds / 64:
            return Branch(points=points, folds=[], direction=direction,
                          termination="stalled", _tracer=tracer, _ys=ys, _tangents=tangents)
    points.append(tracer.point_info(y1[:-1], y1[-1]))
    ys.append(y1)
    tangents.append((y1 - y0) / _wnorm(tracer, y1 - y0))

    ds_cur = ds
    easy = 0
    last_fold_idx = -10
    termination = "max_points"

    def is_duplicate(K_val):
        return any(abs(f.K - K_val) < 1e-4 for f in folds)

    def record_fold(fold, idx):
        nonlocal last_fold_idx, termination
        if is_duplicate(fold.K):
            return False
        folds.append(fold)
        last_fold_idx = idx
        points[idx].fold_flag = True
        if idx + 1 < len(points):
            points[idx + 1].fold_flag = True
        return True

    while len(points) < max_points:
        t = tangents[-1]
        y_prev = ys[-1]
        if not (K_lo <= y_prev[-1] <= K_hi):
            termination = "k_range"
            break
        t_pred = t
        refreshed = False
        stalled = False
        while True:
            y_new, iters, ok = _correct(tracer, y_prev + ds_cur * t_pred, t_pred, y_prev, ds_cur, tol)
            if ok:
                break
            if not refreshed:
                # the secant normal goes stale near sharp turns; retry with
                # the local branch tangent before shrinking the step
                try:
                    t_pred = _tangent(tracer, y_prev, t)
                except np.linalg.LinAlgError:
                    pass
                refreshed = True
                continue
            ds_cur *= 0.5
            easy = 0
            if ds_cur < ds / 64:
                stalled = True
                break
        if stalled:
            # last resort: the branch may be turning at a degenerate fold
            # where plane correction is hopeless; solve for the fold
            # directly and restart on its far side
            recovered = False
            if refine_folds and hasattr(tracer, "near_null"):
                phi0 = tracer.near_null(y_prev[:-1], y_prev[-1])
                sol = _fold_newton(tracer, y_prev[:-1], y_prev[-1], phi0, tol=max(1e-9, tol))
                if sol is not None:
                    x_f, K_f, _ = sol
                    y_f = np.concatenate([x_f, [K_f]])
                    seg = _wnorm(tracer, y_f - y_prev)
                    if seg > 1e-12 and not is_duplicate(K_f):
                        info_f = tracer.point_info(x_f, K_f)
                        try:
                            tau_f = _tangent(tracer, y_f, t)
                        except np.linalg.LinAlgError:
                            tau_f = None
                        points.append(info_f)
                        ys.append(y_f)
                        tangents.append((y_f - y_prev) / seg)
                        record_fold(Fold(K=float(K_f), u=info_f.u.copy(),
                                         omega_star=info_f.omega_star,
                                         smallest_eig=info_f.smallest_eig,
                                         suspect=abs(info_f.smallest_eig) > 1e-3,
                                         dK_resolution=0.0, method="newton"),
                                    len(points) - 1)
                        if stop_at_first_fold:
                            termination = "first_fold"
                            break
                        if tau_f is not None:
                            step_out = max(ds / 8, ds_cur)
                            y_next, _, ok2 = _correct(tracer, y_f + step_out * tau_f,
                                                      tau_f, y_f, step_out, tol)
                            if ok2 and _wnorm(tracer, y_next - y_f) > 1e-12:
                                points.append(tracer.point_info(y_next[:-1], y_next[-1]))
                                ys.append(y_next)
                                tangents.append((y_next - y_f) / _wnorm(tracer, y_next - y_f))
                                ds_cur = max(ds / 8, ds_cur)
                                recovered = True
            if not recovered:
                termination = "stalled"
                break
            continue
        t_new = (y_new - y_prev) / _wnorm(tracer, y_new - y_prev)
        points.append(tracer.point_info(y_new[:-1], y_new[-1]))
        ys.append(y_new)
        tangents.append(t_new)

        count_change = points[-2].n_unstable != points[-1].n_unstable
        turn = t[-1] != 0 and np.sign(t_new[-1]) != np.sign(t[-1])
        if (count_change or turn) and len(points) - 2 <= last_fold_idx + 1:
            count_change = turn = False  # adjacent re-detection of the last fold
        if count_change or turn:
            if refine_folds:
                try:
                    fold = _refine_fold(tracer, y_prev, t, _wnorm(tracer, y_new - y_prev), tol)
                except FoldLocateError:
                    info = points[-1]
                    fold = Fold(K=info.K, u=info.u.copy(), omega_star=info.omega_star,
                                smallest_eig=info.smallest_eig, suspect=True,
                                dK_resolution=abs(points[-1].K - points[-2].K))
            else:
                info = points[-1]
                fold = Fold(K=info.K, u=info.u.copy(), omega_star=info.omega_star,
                            smallest_eig=info.smallest_eig, suspect=False,
                            dK_resolution=abs(points[-1].K - points[-2].K))
            if record_fold(fold, len(points) - 2) and stop_at_first_fold:
                termination = "first_fold"
                break
        if iters <= 3:
            easy += 1
        else:
            easy = 0
        if easy >= 4:
            ds_cur = min(ds_cur * 1.3, 4 * ds)
            easy = 0
    return Branch(points=points, folds=folds, direction=direction,
                  termination=termination, _tracer=tracer, _ys=ys, _tangents=tangents)


def continue_branch(sys_factory, start, ds: float, K_range, max_points: int = 400,
                    direction: int = -1, tol: float = 1e-10,
                    stop_at_first_fold: bool = False) -> Branch:
    """Continue a converged SyncState of a Kuramoto system in K.

    sys_factory is either a FiniteSystem (K is then varied directly) or a
    callable K -> FiniteSystem describing the same network at variable
    coupling.
    """
    base = sys_factory(start.K) if callable(sys_factory) else sys_factory
    tracer = KuramotoTracer(base.omega, base.adjacency)
    x0 = np.concatenate([start.u, [start.omega_star]])
    return trace_branch(tracer, x0, start.K, ds, K_range, max_points=max_points,
                        direction=direction, tol=tol, stop_at_first_fold=stop_at_first_fold)


def locate_fold(branch: Branch, bracket: tuple[int, int], tol_K: float = 1e-6) -> tuple[float, np.ndarray]:
    """Refine the fold inside points[bracket[0]:bracket[1]+1] of a branch.

    Requires an eigenvalue sign change or K-direction reversal inside the
    bracket; returns (K_fold, u_fold).
    """
    i, j = bracket
    if not 0 <= i < j < len(branch.points):
        raise ValueError("bracket out of range")
    tracer = branch._tracer
    for k in range(i, j):
        a, b = branch.points[k], branch.points[k + 1]
        crossing = a.n_unstable != b.n_unstable
        t_in = branch._tangents[k] if k > 0 else branch._tangents[k + 1]
        t_out = branch._tangents[k + 1]
        turn = t_in is not None and np.sign(t_in[-1]) != np.sign(t_out[-1])
        if not (crossing or turn):
            continue
        y_a = branch._ys[k]
        t_a = branch._tangents[k + 1]  # secant direction of the bracketing segment
        s_hi = _wnorm(tracer, branch._ys[k + 1] - y_a)
        if turn and t_in is not None:
            t_a = t_in
        fold = _refine_fold(tracer, y_a, t_a, s_hi, tol_K=tol_K)
        return fold.K, fold.u
    raise FoldLocateError("no eigenvalue crossing or K reversal inside the bracket")


FOLD_TRACKING = "fold_tracking"
SWEEP_BISECTION = "sweep_bisection"


@dataclass
class CriticalCouplingResult:
    n: int
    seed: int
    K_crit_n: float
    method: str
    reference_K_crit: float
    relative_error: float
    error: str | None = None


def _realization(graphon: Graphon, model: FrequencyModel, n: int, seed: int):
    pts = SamplePoints.generate(n, "iid", rng.derive_seed(seed, "points"))
    freq = empirical_step(model, pts)
    adj = sample_simple(graphon, pts, rng.derive_seed(seed, "edges"))
    return pts, freq, adj


def _seed_state(sys: FiniteSystem, model: FrequencyModel, p: float, xs: np.ndarray,
                tol: float = 1e-10):
    u0 = profile_on_points(model, p, sys.K, xs)
    u0 = u0 - u0.mean()
    return newton_solve(sys, u0, tol=tol)


def measure_kcrit(n: int, graphon: Graphon, model: FrequencyModel, seed: int,
                  strategy: str = FOLD_TRACKING, k_hi: float | None = None,
                  k_lo: float | None = None, ds: float | None = None,
                  bisect_width: float = 1e-4) -> CriticalCouplingResult:
    """Measure the finite-n critical coupling of one random realization.

    FoldTracking seeds the stable branch from the mean-field profile at
    K_hi = 3 K_crit and continues downward to the first fold.
    SweepBisection bisects on "Newton from the mean-field profile
    converges to a stable state"; it is the robust choice when the onset
    involves the essential-spectrum edge (uniform frequencies).
    FoldTracking falls back to bisection when the branch stalls without
    a fold.
    """
    if graphon.kind != ERDOS_RENYI:
        raise ValueError("measure_kcrit needs the closed-form reference; "
                         "use continue_branch directly for non-ER graphons")
    p = graphon.p
    reference = critical_coupling(model, p)
    K_hi = 3.0 * reference if k_hi is None else float(k_hi)
    K_lo = 0.2 * reference if k_lo is None else float(k_lo)
    pts, freq, adj = _realization(graphon, model, n, seed)
    xs = pts.points
    sys_hi = FiniteSystem(freq.values, adj.weights, K_hi)
    res = _seed_state(sys_hi, model, p, xs)
    if not res.ok:
        raise SeedStateError(f"seed-state failure at K_hi={K_hi:.4f} ({res.reason})")

    def result(K_val, method):
        return CriticalCouplingResult(n=n, seed=seed, K_crit_n=float(K_val), method=method,
                                      reference_K_crit=reference,
                                      relative_error=abs(K_val - reference) / reference)

    if strategy == FOLD_TRACKING:
        step = 0.08 * max(1.0, reference) if ds is None else ds
        branch = continue_branch(sys_hi, res.state, ds=step,
                                 K_range=(max(K_lo, 1e-3), K_hi * 1.05),
                                 max_points=400, direction=-1,
                                 stop_at_first_fold=True)
        if branch.folds:
            return result(branch.folds[0].K, FOLD_TRACKING)
        strategy = SWEEP_BISECTION  # stalled without a fold
    if strategy != SWEEP_BISECTION:
        raise ValueError(f"unknown strategy {strategy!r}")

    def predicate(K_val: float) -> bool:
        sysK = FiniteSystem(freq.values, adj.weights, K_val)
        r = _seed_state(sysK, model, p, xs)
        return bool(r.ok and r.state.stable)

    lo, hi = K_lo, K_hi
    guard = 0
    while predicate(lo):
        lo *= 0.6
        guard += 1
        if guard > 12:
            raise RuntimeError("bisection bracket failure: predicate true at tiny K")
    while hi - lo > bisect_width:
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return result(0.5 * (lo + hi), SWEEP_BISECTION)


@dataclass
class SweepConfig:
    graphon: Graphon
    model: FrequencyModel
    n_list: list[int]
    master_seed: int
    num_seeds: int
    strategy: str = FOLD_TRACKING
    out_dir: str | None = None
    workers: int = 1
    experiment: str = "kcrit_sweep"


SWEEP_COLUMNS = ["n", "seed", "K_crit_n", "method", "rel_err"]
AGG_COLUMNS = ["n", "mean", "std", "count"]


def _sweep_task(args):
    graphon, model, n, task_seed, strategy = args
    try:
        return measure_kcrit(n, graphon, model, task_seed, strategy=strategy)
    except Exception as exc:  # recorded, surfaced through the manifest
        return CriticalCouplingResult(n=n, seed=task_seed, K_crit_n=float("nan"),
                                      method="failed", reference_K_crit=float("nan"),
                                      relative_error=float("nan"), error=str(exc))


def sweep_realizations(config: SweepConfig) -> list[CriticalCouplingResult]:
    """Run measure_kcrit over the (n, realization) grid with derived seeds.

    Results are ordered by task index regardless of the worker schedule,
    so reruns with the same master seed are byte-identical.
    """
    tasks = []
    for n in config.n_list:
        for idx in range(config.num_seeds):
            task_seed = rng.derive_seed(config.master_seed, n, idx, config.experiment)
            tasks.append((config.graphon, config.model, n, task_seed, config.strategy))
    if config.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]
    if config.out_dir is not None:
        write_sweep_csvs(results, config.n_list, config.out_dir)
    return results


def write_sweep_csvs(results, n_list, out_dir, prefix: str = "kcrit"):
    from pathlib import Path

    out = Path(out_dir)
    rows = [(r.n, r.seed, r.K_crit_n, r.method, r.relative_error) for r in results]
    write_csv(out / f"{prefix}_sweep.csv", SWEEP_COLUMNS, rows)
    agg_rows = []
    for n in n_list:
        vals = np.array([r.K_crit_n for r in results if r.n == n and np.isfinite(r.K_crit_n)])
        if vals.size:
            std = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
            agg_rows.append((n, float(np.mean(vals)), std, vals.size))
        else:
            agg_rows.append((n, float("nan"), float("nan"), 0))
    write_csv(out / f"{prefix}_sweep_agg.csv", AGG_COLUMNS, agg_rows)
    return out / f"{prefix}_sweep.csv", out / f"{prefix}_sweep_agg.csv"


BRANCH_COLUMNS = ["idx", "K", "r", "smallest_eig", "stable", "fold_flag"]


def write_branch_csv(branch: Branch, path) -> None:
    rows = [(i, pt.K, pt.r, pt.smallest_eig, pt.stable, pt.fold_flag)
            for i, pt in enumerate(branch.points)]
    write_csv(path, BRANCH_COLUMNS, rows)
