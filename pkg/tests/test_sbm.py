import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ising_ssl.glauber import reveal_mask
from ising_ssl.rng import SEEDING, make_rng
from ising_ssl.sbm import (EstimationError, Graph, SbmParams, admissible_alpha_interval, estimate_params,
                           read_graph, resolve_lambda, sample_sbm, write_graph)


def _dense(g: Graph) -> np.ndarray:
    return g.adjacency().toarray()


def test_degenerate_probabilities_give_two_intra_edges():
    # a_n = 2 * 1 / 2 = 1, b_n = 0
    g = sample_sbm(SbmParams(n=2, V1=2, V2=2, lam=1.0, a=2.0, b=0.0), seed=3)
    assert g.edges().tolist() == [[0, 1], [2, 3]]


def test_rejects_probability_above_one():
    with pytest.raises(ValueError):
        SbmParams(n=10, V1=10, V2=10, lam=5.0, a=3.0, b=1.0)


@pytest.mark.parametrize("bad", [dict(V1=0), dict(lam=0.0), dict(a=-1.0)])
def test_rejects_invalid_params(bad):
    kw = dict(n=100, V1=100, V2=100, lam=2.0, a=3.0, b=1.0)
    kw.update(bad)
    with pytest.raises(ValueError):
        SbmParams(**kw)


def test_mean_degree_close_to_expectation():
    # each node has ~a_n V1 + b_n V2 = (a + b) lam neighbors when V1 = V2 = n
    p = SbmParams.symmetric(5000, 3.0, 1.0)
    target = p.expected_mean_degree
    assert target == pytest.approx(4 * math.log(5000), rel=1e-3)
    for seed in range(10):
        g = sample_sbm(p, seed)
        assert abs(g.degrees.mean() - target) / target < 0.05


def test_unbalanced_table_graph_size():
    n = 10000
    g = sample_sbm(SbmParams(n=n, V1=10000, V2=7500, lam=math.log(n), a=7.0, b=1.0), seed=0)
    assert g.V == 17500
    assert (g.community == 1).sum() == 10000
    assert g.truth_spins[:10000].min() == 1 and g.truth_spins[10000:].max() == -1


@pytest.mark.parametrize("seed", range(5))
def test_sampled_graph_is_simple_symmetric_sorted(seed):
    g = sample_sbm(SbmParams.symmetric(300, 5.0, 1.0), seed)
    g.check()
    A = _dense(g)
    assert np.array_equal(A, A.T)
    assert np.all(np.diag(A) == 0)
    assert A.max() <= 1


def test_sampling_is_reproducible():
    p = SbmParams.symmetric(1000, 3.0, 1.0)
    g1, g2 = sample_sbm(p, 42), sample_sbm(p, 42)
    assert np.array_equal(g1.indptr, g2.indptr) and np.array_equal(g1.indices, g2.indices)
    assert g1.fingerprint() == g2.fingerprint()
    assert sample_sbm(p, 43).fingerprint() != g1.fingerprint()


def test_edge_counts_within_four_sd_of_binomial_mean():
    n, V1, V2 = 200, 200, 150
    p = SbmParams(n=n, V1=V1, V2=V2, lam=math.log(n), a=5.0, b=1.0)
    intra_pairs = V1 * (V1 - 1) // 2 + V2 * (V2 - 1) // 2
    inter_pairs = V1 * V2
    for seed in range(50):
        e = sample_sbm(p, seed).edges()
        cross = np.sum((e[:, 0] < V1) != (e[:, 1] < V1))
        intra = len(e) - cross
        for count, pairs, q in ((intra, intra_pairs, p.a_n), (cross, inter_pairs, p.b_n)):
            mean, sd = pairs * q, math.sqrt(pairs * q * (1 - q))
            assert abs(count - mean) <= 4 * sd


def test_geometric_skip_matches_pair_probabilities():
    # pool many small graphs: every intra pair should appear with frequency ~ a_n
    p = SbmParams(n=6, V1=6, V2=6, lam=1.0, a=3.0, b=1.5)
    freq = np.zeros((12, 12))
    R = 4000
    for seed in range(R):
        freq += _dense(sample_sbm(p, seed))
    freq /= R
    same = np.equal.outer(np.arange(12) < 6, np.arange(12) < 6)
    off = ~np.eye(12, dtype=bool)
    sd_a = math.sqrt(0.5 * 0.5 / R)
    assert np.all(np.abs(freq[same & off] - 0.5) < 5 * sd_a)
    assert np.all(np.abs(freq[~same] - 0.25) < 5 * math.sqrt(0.25 * 0.75 / R))


def test_from_edges_validation():
    with pytest.raises(ValueError):
        Graph.from_edges(2, 1, [(0, 0)])
    with pytest.raises(ValueError):
        Graph.from_edges(2, 1, [(0, 1), (1, 0)])
    with pytest.raises(ValueError):
        Graph.from_edges(2, 1, [(0, 3)])
    g = Graph.from_edges(2, 1, [(2, 0), (1, 0)])
    assert g.neighbors(0).tolist() == [1, 2]


def test_graph_arrays_are_read_only():
    g = Graph.from_edges(2, 1, [(0, 1)])
    with pytest.raises(ValueError):
        g.indices[0] = 2


def test_file_round_trip(tmp_path):
    g = sample_sbm(SbmParams.symmetric(100, 5.0, 1.0), 7)
    path = tmp_path / "g.txt"
    write_graph(g, path)
    first = path.read_text().splitlines()[0]
    assert first == f"{g.V} {g.V1} {g.V2}"
    h = read_graph(path)
    assert h.fingerprint() == g.fingerprint()


def test_read_graph_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("5 2 2\n0 1\n")
    with pytest.raises(ValueError):
        read_graph(path)


def test_resolve_lambda():
    assert resolve_lambda("log-n", 5000) == pytest.approx(math.log(5000))
    assert resolve_lambda("3*log-n", 5000) == pytest.approx(3 * math.log(5000))
    assert resolve_lambda(2.5, 5000) == 2.5
    assert resolve_lambda("7", 10) == 7.0


# ------------------------------------------------------------ alpha interval

def test_interval_equal_sizes_is_whole_line():
    assert admissible_alpha_interval(3, 1, 1, 1) == (-math.inf, math.inf)


def test_interval_table_values():
    lo, hi = admissible_alpha_interval(7, 1, 1, 0.75)
    assert (lo, hi) == pytest.approx((-17, 25))
    assert 6 in admissible_alpha_interval(7, 1, 1, 0.75)
    assert tuple(admissible_alpha_interval(10, 1, 1, 0.75)) == pytest.approx((-26, 37))


def test_interval_swap_normalized():
    assert admissible_alpha_interval(7, 1, 0.75, 1) == admissible_alpha_interval(7, 1, 1, 0.75)


def test_interval_rejects_bad_inputs():
    with pytest.raises(ValueError):
        admissible_alpha_interval(1, 2, 1, 0.5)
    with pytest.raises(ValueError):
        admissible_alpha_interval(3, 1, 0, 0.5)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(1.1, 20), frac=st.floats(0.01, 0.99), v1=st.floats(0.1, 5), v2=st.floats(0.1, 5),
       c=st.floats(0.01, 100))
def test_interval_scale_invariant(a, frac, v1, v2, c):
    b = a * frac
    i1 = admissible_alpha_interval(a, b, v1, v2)
    i2 = admissible_alpha_interval(a, b, c * v1, c * v2)
    for x, y in zip(i1, i2):
        if math.isinf(x):
            assert x == y
        else:
            assert x == pytest.approx(y, rel=1e-9, abs=1e-9)


# ------------------------------------------------------------ estimation

def test_estimate_full_reveal_is_exact():
    n = 400
    g = sample_sbm(SbmParams(n=n, V1=400, V2=300, lam=math.log(n), a=5.0, b=1.0), 1)
    revealed = [(u, 1 if u < g.V1 else 2) for u in range(g.V)]
    est = estimate_params(g, revealed, 1.0)
    A = _dense(g)
    c1 = np.arange(g.V) < g.V1
    same = A[np.ix_(c1, c1)].sum() / 2 + A[np.ix_(~c1, ~c1)].sum() / 2
    cross = A[np.ix_(c1, ~c1)].sum()
    pairs = 400 * 399 / 2 + 300 * 299 / 2
    assert est.V1_hat == 400 and est.V2_hat == 300
    assert est.a_hat == pytest.approx(same / pairs * n / math.log(n), rel=1e-12)
    assert est.b_hat == pytest.approx(cross / (400 * 300) * n / math.log(n), rel=1e-12)
    assert est.revealed_counts == (400, 300)


def test_estimate_concentrates_on_table_two_graphs():
    p = SbmParams.symmetric(5000, 3.0, 1.0)
    for seed in range(10):
        g = sample_sbm(p, seed)
        mask = reveal_mask(g, 0.1, make_rng(seed, SEEDING))
        nodes = np.flatnonzero(mask)
        est = estimate_params(g, [(u, 1 if u < g.V1 else 2) for u in nodes], 0.1)
        assert abs(est.a_hat - 3) / 3 < 0.15
        assert abs(est.b_hat - 1) / 1 < 0.15
        assert abs(est.V1_hat - 5000) / 5000 < 0.15


def test_estimate_interval_follows_estimates():
    n = 1000
    g = sample_sbm(SbmParams(n=n, V1=n, V2=600, lam=math.log(n), a=7.0, b=1.0), 0)
    revealed = {u: 1 if u < g.V1 else 2 for u in range(0, g.V, 3)}
    est = estimate_params(g, revealed, 1 / 3)
    lo, hi = est.alpha_interval
    v1, v2 = est.V1_hat / n, est.V2_hat / n
    assert lo == pytest.approx((est.b_hat * v1 - est.a_hat * v2) / (v1 - v2))
    assert hi == pytest.approx((est.a_hat * v1 - est.b_hat * v2) / (v1 - v2))


def test_estimate_needs_two_per_community():
    g = sample_sbm(SbmParams.symmetric(100, 5.0, 1.0), 0)
    with pytest.raises(EstimationError):
        estimate_params(g, [(0, 1), (1, 1), (2, 1), (150, 2)], 0.1)


def test_estimate_rejects_bad_labels():
    g = sample_sbm(SbmParams.symmetric(100, 5.0, 1.0), 0)
    with pytest.raises(ValueError):
        estimate_params(g, [(0, 3), (1, 1)], 0.1)
