import numpy as np
import pytest

from graphon_kuramoto import graphon as gp
from graphon_kuramoto.cutnorm import cut_norm_estimate, cut_norm_certificate_value


def brute_force_cut_value(D: np.ndarray) -> float:
    """Exhaustive max of |s^T D t| / n^2 over ALL 2^n x 2^n subset pairs."""
    n = D.shape[0]
    count = 1 << n
    t_bits = ((np.arange(count)[:, None] >> np.arange(n)[None, :]) & 1).astype(float)
    best = 0.0
    chunk = 512
    for start in range(0, count, chunk):
        s_bits = t_bits[start:start + chunk]
        vals = np.abs(s_bits @ D @ t_bits.T)
        best = max(best, float(vals.max()))
    return best / (n * n)


def random_step_pair(n: int, seed: int):
    gen = np.random.default_rng(seed)
    def mk():
        w = gen.random((n, n))
        w = (w + w.T) / 2
        np.fill_diagonal(w, 0.0)
        return gp.StepGraphon(weights=w)
    return mk(), mk()


def test_identical_inputs_zero_with_empty_certificate():
    S, _ = random_step_pair(9, 0)
    val, (rows, cols) = cut_norm_estimate(S, S)
    assert val == 0.0
    assert rows.size == 0 and cols.size == 0


def test_size_mismatch_rejected():
    S, _ = random_step_pair(5, 1)
    T, _ = random_step_pair(6, 2)
    with pytest.raises(ValueError):
        cut_norm_estimate(S, T)


def test_estimator_matches_brute_force_on_small_corpus():
    # 50 cases across n = 2..12: the estimator must equal full enumeration
    case = 0
    sizes = list(range(2, 13)) * 5
    for n in sizes[:50]:
        S, T = random_step_pair(n, 100 + case)
        val, (rows, cols) = cut_norm_estimate(S, T, rng_seed=case)
        exact = brute_force_cut_value(S.weights - T.weights)
        assert val == pytest.approx(exact, abs=1e-12), f"case {case} (n={n})"
        assert cut_norm_certificate_value(S, T, rows, cols) == pytest.approx(val, abs=1e-12)
        case += 1


def test_estimator_matches_brute_force_n14():
    for seed in (0, 1):
        S, T = random_step_pair(14, 500 + seed)
        val, _ = cut_norm_estimate(S, T, rng_seed=seed)
        exact = brute_force_cut_value(S.weights - T.weights)
        assert val == pytest.approx(exact, abs=1e-12)


def test_certificate_achieves_reported_bound_large_n():
    S, T = random_step_pair(60, 7)
    val, (rows, cols) = cut_norm_estimate(S, T, budget=32, rng_seed=3)
    assert val > 0
    assert cut_norm_certificate_value(S, T, rows, cols) == pytest.approx(val, abs=1e-12)


def test_sampled_graph_respects_log_bound():
    # lower-bound estimate of ||W_G - W||_cut stays below 22/sqrt(log n)
    p = 0.5
    W = gp.erdos_renyi(p)
    for n in (100, 400):
        pts = gp.SamplePoints.generate(n, "iid", n)
        G = gp.sample_simple(W, pts, 17 + n)
        ref = gp.embed_step(W, n)
        val, _ = cut_norm_estimate(G, ref, budget=48, rng_seed=n)
        assert val <= 22.0 / np.sqrt(np.log(n))
        assert val >= 0.0
