import numpy as np
import pytest

from graphon_kuramoto import graphon as gp
from graphon_kuramoto.freqdist import uniform_model, empirical_step


def test_sample_weighted_constant_kernel():
    W = gp.erdos_renyi(0.5)
    pts = gp.SamplePoints.generate(6, "iid", 0)
    S = gp.sample_weighted(W, pts)
    off = S.weights[~np.eye(6, dtype=bool)]
    assert np.all(off == 0.5)
    assert np.all(np.diag(S.weights) == 0.0)


def test_sample_weighted_single_vertex():
    S = gp.sample_weighted(gp.erdos_renyi(0.7), gp.SamplePoints.generate(1, "iid", 0))
    assert S.weights.shape == (1, 1) and S.weights[0, 0] == 0.0


def test_small_world_kernel_direct_evaluation():
    W = gp.small_world(0.9, 0.1, 0.25)
    assert W(0.1, 0.2) == 0.9  # circle distance 0.1 <= 0.25
    assert W(0.1, 0.5) == 0.1  # circle distance 0.4
    assert W(0.05, 0.95) == 0.9  # wraps around: distance 0.1
    pts = gp.SamplePoints(points=np.array([0.1, 0.2]), mode="manual")
    S = gp.sample_weighted(W, pts)
    assert S.weights[0, 1] == 0.9


def test_sample_simple_probability_one_edges():
    W = gp.erdos_renyi(1.0)
    pts = gp.SamplePoints.generate(9, "iid", 1)
    S = gp.sample_simple(W, pts, 5)
    assert np.all(S.weights[~np.eye(9, dtype=bool)] == 1.0)


def test_sample_simple_density_concentration():
    p, n = 0.3, 2000
    W = gp.erdos_renyi(p)
    pts = gp.SamplePoints.generate(n, "iid", 11)
    S = gp.sample_simple(W, pts, 13)
    pairs = n * (n - 1) / 2
    density = S.weights[np.triu_indices(n, 1)].mean()
    sigma = np.sqrt(p * (1 - p) / pairs)
    assert abs(density - p) <= 3 * sigma


def test_sample_simple_deterministic():
    W = gp.erdos_renyi(0.4)
    pts = gp.SamplePoints.generate(40, "iid", 3)
    a = gp.sample_simple(W, pts, 9)
    b = gp.sample_simple(W, pts, 9)
    assert np.array_equal(a.weights, b.weights)
    c = gp.sample_simple(W, pts, 10)
    assert not np.array_equal(a.weights, c.weights)


def test_sampled_graphs_symmetric_zero_diag_invariants():
    kernels = [gp.erdos_renyi(0.5), gp.small_world(), gp.grid_graphon([[0.2, 0.8], [0.8, 0.5]])]
    for seed, W in enumerate(kernels):
        pts = gp.SamplePoints.generate(30, "iid", seed)
        for S in (gp.sample_weighted(W, pts), gp.sample_simple(W, pts, seed)):
            assert np.array_equal(S.weights, S.weights.T)
            assert np.all(np.diag(S.weights) == 0.0)
            assert np.all((S.weights >= 0) & (S.weights <= 1))


def test_sample_points_modes():
    det = gp.SamplePoints.generate(5, "deterministic")
    assert np.allclose(det.points, [0.2, 0.4, 0.6, 0.8, 1.0])
    strat = gp.SamplePoints.generate(50, "stratified", 2)
    assert np.all((strat.points >= np.arange(50) / 50) & (strat.points <= np.arange(1, 51) / 50))
    for mode in ("iid", "deterministic", "stratified", "midpoint"):
        pts = gp.SamplePoints.generate(64, mode, 4)
        assert np.all(np.diff(pts.points) >= 0)
    with pytest.raises(ValueError):
        gp.SamplePoints.generate(5, "bogus")


def test_degree_closed_forms():
    assert gp.degree(gp.erdos_renyi(0.37)).constant == pytest.approx(0.37)
    assert gp.degree(gp.small_world(0.9, 0.1, 0.25)).constant == pytest.approx(0.5, abs=1e-14)
    ones = np.ones((4, 4)) - np.eye(4)
    d = gp.degree_step(gp.StepGraphon(weights=ones))
    assert np.allclose(d.values, 0.75)


def test_degree_distance_cases():
    a = gp.DegreeFunction.const(0.5)
    b = gp.DegreeFunction.const(0.3)
    assert gp.degree_distance(a, a) == 0.0
    assert gp.degree_distance(a, b) == pytest.approx(0.2)
    s = gp.DegreeFunction.step([0.4, 0.6])
    assert gp.degree_distance(a, s) == pytest.approx(0.1)
    fine = gp.DegreeFunction.step([0.4, 0.4, 0.6, 0.6])
    assert gp.degree_distance(fine, s) == 0.0
    with pytest.raises(ValueError):
        gp.degree_distance(gp.DegreeFunction.step([0.1, 0.2, 0.3]), s)


def test_degree_concentration_bound():
    # sup|p - d_j(G(n,p))| <= sqrt(log(2n/nu)/n) in >= 95% of 200 trials
    p, n, nu = 0.5, 400, 0.05
    W = gp.erdos_renyi(p)
    bound = np.sqrt(np.log(2 * n / nu) / n)
    hits = 0
    for seed in range(200):
        pts = gp.SamplePoints.generate(n, "iid", 1000 + seed)
        G = gp.sample_simple(W, pts, 2000 + seed)
        dist = gp.degree_distance(gp.degree_step(G), gp.DegreeFunction.const(p))
        hits += dist <= bound
    assert hits >= 190


def test_degree_step_converges_to_graphon_degree():
    # sampled degrees approach the kernel degree in sup norm as n grows
    W = gp.small_world(0.9, 0.1, 0.25)
    d_ref = gp.degree(W)
    wins = 0
    trials = 50
    for seed in range(trials):
        d = []
        for n in (100, 1000):
            pts = gp.SamplePoints.generate(n, "iid", 31 * seed + n)
            S = gp.sample_weighted(W, pts)
            d.append(gp.degree_distance(gp.degree_step(S), d_ref))
        wins += d[1] < d[0]
    assert wins >= int(0.9 * trials)


def test_embed_step_constant_and_smallworld():
    E = gp.embed_step(gp.erdos_renyi(0.25), 6)
    off = E.weights[~np.eye(6, dtype=bool)]
    assert np.all(off == 0.25)
    W = gp.small_world(0.9, 0.1, 0.25)
    E = gp.embed_step(W, 16)
    assert np.array_equal(E.weights, E.weights.T)
    assert np.all(np.diag(E.weights) == 0.0)
    # interior cells (well inside / outside the radius) are exact
    assert E.weights[0, 1] == pytest.approx(0.9, abs=1e-12)
    assert E.weights[0, 8] == pytest.approx(0.1, abs=1e-12)


def test_embed_step_grid_exact_overlap():
    vals = np.array([[0.2, 0.6], [0.6, 1.0]])
    E = gp.embed_step(gp.grid_graphon(vals), 4)
    # cells align with the grid: averages are the grid values themselves
    assert E.weights[0, 1] == pytest.approx(0.2)
    assert E.weights[0, 3] == pytest.approx(0.6)
    assert E.weights[2, 3] == pytest.approx(1.0)


def test_step_graphon_validation():
    with pytest.raises(ValueError):
        gp.StepGraphon(weights=np.array([[0.0, 0.5], [0.4, 0.0]]))  # asymmetric
    with pytest.raises(ValueError):
        gp.StepGraphon(weights=np.array([[0.1, 0.5], [0.5, 0.0]]))  # loop weight
    with pytest.raises(ValueError):
        gp.StepGraphon(weights=np.array([[0.0, 1.5], [1.5, 0.0]]))  # out of range


def test_serialization_round_trips(tmp_path):
    W = gp.erdos_renyi(0.6)
    pts = gp.SamplePoints.generate(12, "iid", 8)
    S = gp.sample_simple(W, pts, 21)
    csv_path = tmp_path / "g.csv"
    bin_path = tmp_path / "g.gksg"
    gp.write_step_csv(S, csv_path)
    gp.write_step_binary(S, bin_path)
    assert np.array_equal(gp.read_step_csv(csv_path).weights, S.weights)
    assert np.array_equal(gp.read_step_binary(bin_path).weights, S.weights)
    bad = tmp_path / "bad.gksg"
    bad.write_bytes(b"NOPE" + bytes(10))
    with pytest.raises(ValueError):
        gp.read_step_binary(bad)


def test_graphon_from_spec():
    W = gp.graphon_from_spec({"kind": "small-world", "hi": 0.8, "lo": 0.2, "radius": 0.3})
    assert W.kind == gp.SMALL_WORLD and W.hi == 0.8
    with pytest.raises(ValueError):
        gp.graphon_from_spec({"kind": "erdos_renyi", "p": 0.0})
    with pytest.raises(ValueError):
        gp.graphon_from_spec({"kind": "nope"})


def test_frequencies_from_sorted_points(uniform):
    pts = gp.SamplePoints.generate(50, "iid", 9)
    step = empirical_step(uniform, pts)
    assert np.allclose(step.values, 2 * pts.points - 1)
