import numpy as np
import pytest

from graphon_kuramoto import continuation as ct
from graphon_kuramoto import finite_system as fs
from graphon_kuramoto import graphon as gp
from graphon_kuramoto import meanfield as mf
from graphon_kuramoto import rng
from graphon_kuramoto.freqdist import empirical_step


class QuadTracer:
    """Synthetic normal form u^2 = K - K0 with a fold at K0."""

    def __init__(self, K0):
        self.K0 = K0
        self.dim = 1
        self.weights = np.ones(1)

    def residual(self, x, K):
        return np.array([x[0] ** 2 - (K - self.K0)])

    def jacobian(self, x, K):
        return np.array([[2 * x[0]]])

    def jac_K(self, x, K):
        return np.array([-1.0])

    def point_info(self, x, K):
        e = float(2 * x[0])
        return ct.BranchPoint(K=float(K), u=x.copy(), omega_star=float("nan"),
                              r=float("nan"), smallest_eig=e, stable=e < -1e-8,
                              n_unstable=int(e > 1e-8))


def cosine_instance(cosine, n, seed, p=0.5):
    pts = gp.SamplePoints.generate(n, "iid", rng.derive_seed(seed, "points"))
    freq = empirical_step(cosine, pts)
    adj = gp.sample_simple(gp.erdos_renyi(p), pts, rng.derive_seed(seed, "edges"))
    return pts, freq, adj


def seeded_branch(cosine, n, seed, ds=None, stop_first=True, k_hi_mult=3.0):
    p = 0.5
    K_ref = mf.critical_coupling(cosine, p)
    K_hi = k_hi_mult * K_ref
    pts, freq, adj = cosine_instance(cosine, n, seed, p)
    sys_hi = fs.build_system(adj, freq, K_hi)
    u0 = mf.profile_on_points(cosine, p, K_hi, pts.points)
    res = fs.newton_solve(sys_hi, u0 - u0.mean())
    assert res.ok
    return ct.continue_branch(sys_hi, res.state, ds=ds or 0.08 * K_ref,
                              K_range=(0.2 * K_ref, K_hi * 1.05), max_points=400,
                              direction=-1, stop_at_first_fold=stop_first), K_ref


def test_identical_oscillators_flat_branch():
    n = 20
    A = np.ones((n, n)) - np.eye(n)
    sys = fs.FiniteSystem(np.full(n, 0.1), A, 1.0)
    res = fs.newton_solve(sys, np.zeros(n))
    branch = ct.continue_branch(sys, res.state, ds=0.1, K_range=(0.5, 2.0),
                                max_points=100, direction=+1)
    assert branch.folds == []
    assert branch.termination == "k_range"
    for pt in branch.points:
        assert np.max(np.abs(pt.u)) < 1e-9
        assert pt.r == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ct.FoldLocateError):
        ct.locate_fold(branch, (0, len(branch.points) - 1))


def test_quadratic_fold_location():
    tracer = QuadTracer(1.5)
    branch = ct.trace_branch(tracer, np.array([1.0]), 2.5, ds=0.2, K_range=(0.0, 3.0),
                             direction=-1, max_points=200)
    assert len(branch.folds) == 1
    fold = branch.folds[0]
    assert fold.K == pytest.approx(1.5, abs=1e-8)
    assert not fold.suspect
    assert abs(fold.smallest_eig) < 1e-4
    # the public bracket API refines to the same location
    flags = [i for i, pt in enumerate(branch.points) if pt.fold_flag]
    K_fold, u_fold = ct.locate_fold(branch, (max(flags[0] - 1, 0), flags[-1]))
    assert K_fold == pytest.approx(1.5, abs=1e-6)
    assert abs(u_fold[0]) < 1e-3


def test_trace_branch_requires_converged_start():
    tracer = QuadTracer(1.0)
    with pytest.raises(ValueError):
        ct.trace_branch(tracer, np.array([5.0]), 2.0, ds=0.1, K_range=(0.0, 3.0))


def test_branch_invariants_and_two_sidedness(cosine):
    ds = 0.08 * mf.critical_coupling(cosine, 0.5)
    branch, K_ref = seeded_branch(cosine, 300, seed=5, ds=ds, stop_first=False)
    tracer = branch._tracer
    for y in branch._ys:
        assert np.max(np.abs(tracer.residual(y[:-1], y[-1]))) <= 1e-9
        assert abs(y[:-2].sum()) <= 1e-10 * 300
    # consecutive spacing bounded by twice the adaptive step cap
    for a, b in zip(branch._ys, branch._ys[1:]):
        assert ct._wnorm(tracer, b - a) <= 2 * (4 * ds) + 1e-9
    assert branch.folds, "expected a fold on the cosine branch"
    fold = branch.folds[0]
    assert abs(fold.smallest_eig) < 1e-4
    assert not fold.suspect
    # two-sidedness: both signs of the near-zero eigenvalue occur near the fold
    ifold = [i for i, pt in enumerate(branch.points) if pt.fold_flag][0]
    s = 0.0
    signs = set()
    for i in range(ifold, len(branch._ys) - 1):
        signs.add(np.sign(branch.points[i].smallest_eig))
        s += ct._wnorm(tracer, branch._ys[i + 1] - branch._ys[i])
        if s > 10 * ds:
            break
    assert {-1.0, 1.0} <= signs
    # the refined fold is consistent with the branch's own K-minimum:
    # never above it, and within the sampling resolution below it
    min_K = min(pt.K for pt in branch.points)
    assert fold.K <= min_K + 1e-9
    assert min_K - fold.K <= 5e-3


def test_fold_tracking_matches_bisection(cosine):
    for seed in range(10):
        a = ct.measure_kcrit(200, gp.erdos_renyi(0.5), cosine, seed=seed,
                             strategy=ct.FOLD_TRACKING)
        b = ct.measure_kcrit(200, gp.erdos_renyi(0.5), cosine, seed=seed,
                             strategy=ct.SWEEP_BISECTION)
        assert a.method == ct.FOLD_TRACKING
        assert abs(a.K_crit_n - b.K_crit_n) <= 5e-3, f"seed {seed}"


def test_fold_near_paper_value_n300(cosine):
    branch, K_ref = seeded_branch(cosine, 300, seed=7)
    assert branch.folds
    assert 2.8 <= branch.folds[0].K <= 3.35
    assert K_ref == pytest.approx(2.9783, abs=1e-3)


def test_measure_kcrit_seed_state_failure(cosine):
    with pytest.raises(ct.SeedStateError):
        ct.measure_kcrit(100, gp.erdos_renyi(0.5), cosine, seed=1,
                         strategy=ct.FOLD_TRACKING, k_hi=0.5)


def test_measure_kcrit_rejects_non_er(cosine):
    with pytest.raises(ValueError):
        ct.measure_kcrit(100, gp.small_world(), cosine, seed=1)


def test_sweep_realizations_shape_and_determinism(tmp_path, cosine):
    cfg = ct.SweepConfig(graphon=gp.erdos_renyi(0.5), model=cosine,
                         n_list=[60, 90], master_seed=11, num_seeds=3,
                         strategy=ct.SWEEP_BISECTION, out_dir=str(tmp_path / "a"))
    results = ct.sweep_realizations(cfg)
    assert len(results) == 6
    assert all(r.error is None for r in results)
    rows = (tmp_path / "a" / "kcrit_sweep.csv").read_text()
    agg = (tmp_path / "a" / "kcrit_sweep_agg.csv").read_text()
    assert rows.splitlines()[0] == "n,seed,K_crit_n,method,rel_err"
    assert agg.splitlines()[0] == "n,mean,std,count"
    assert len(rows.splitlines()) == 7 and len(agg.splitlines()) == 3
    for line in agg.splitlines()[1:]:
        std = float(line.split(",")[2])
        assert std >= 0.0
    cfg2 = ct.SweepConfig(graphon=gp.erdos_renyi(0.5), model=cosine,
                          n_list=[60, 90], master_seed=11, num_seeds=3,
                          strategy=ct.SWEEP_BISECTION, out_dir=str(tmp_path / "b"))
    ct.sweep_realizations(cfg2)
    assert (tmp_path / "b" / "kcrit_sweep.csv").read_bytes() == \
        (tmp_path / "a" / "kcrit_sweep.csv").read_bytes()
    assert (tmp_path / "b" / "kcrit_sweep_agg.csv").read_bytes() == \
        (tmp_path / "a" / "kcrit_sweep_agg.csv").read_bytes()


def test_branch_csv_schema(tmp_path, cosine):
    branch, _ = seeded_branch(cosine, 120, seed=3)
    path = tmp_path / "branch.csv"
    ct.write_branch_csv(branch, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "idx,K,r,smallest_eig,stable,fold_flag"
    assert len(lines) == len(branch.points) + 1
    assert any(line.endswith(",1") for line in lines[1:])  # fold flags present
