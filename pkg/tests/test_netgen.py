"""Network generators, normalization, and edge-list I/O."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmnar.netgen import (NetworkSpec, gen_powerlaw, gen_sbm,
                          generate_network, normalize, powerlaw_degree_mean,
                          read_edge_list, write_edge_list)


class TestSpec:
    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError, match="kind"):
            NetworkSpec(kind="erdos", N=10)

    def test_rejects_tiny_n(self):
        with pytest.raises(ValueError):
            NetworkSpec(kind="sbm", N=1)

    def test_rejects_bad_k(self):
        with pytest.raises(ValueError):
            NetworkSpec(kind="sbm", N=10, K=0)


class TestSBM:
    def test_two_nodes_one_block_saturates(self):
        # p_in = min(20/2, 1) = 1, so the unique off-diagonal pair is filled.
        A = gen_sbm(2, 1, seed=0)
        assert A.tolist() == [[0, 1], [1, 0]]

    def test_binary_zero_diagonal(self):
        A = gen_sbm(60, 5, seed=3)
        assert np.all((A == 0) | (A == 1))
        assert np.all(np.diag(A) == 0)

    def test_edge_rates_match_probabilities(self):
        # At N=400, K=5: within-block rate 20/N = 0.05, cross 2/N = 0.005.
        N = 400
        root = np.random.default_rng(np.random.SeedSequence(17).spawn(N + 1)[0])
        blocks = root.integers(0, 5, size=N)
        A = gen_sbm(N, 5, seed=17)
        same = blocks[:, None] == blocks[None, :]
        np.fill_diagonal(same, False)
        diff = ~same
        np.fill_diagonal(diff, False)
        rate_in = A[same].mean()
        rate_out = A[diff].mean()
        assert rate_in == pytest.approx(20.0 / N, rel=0.15)
        assert rate_out == pytest.approx(2.0 / N, rel=0.25)

    def test_deterministic_in_seed(self):
        assert np.array_equal(gen_sbm(50, 5, seed=9), gen_sbm(50, 5, seed=9))
        assert not np.array_equal(gen_sbm(50, 5, seed=9),
                                  gen_sbm(50, 5, seed=10))


class TestPowerlaw:
    def test_rejects_small_n(self):
        with pytest.raises(ValueError):
            gen_powerlaw(4, seed=0)

    def test_in_degrees_are_capped_multiples_of_four(self):
        N = 41  # k_max = 10, cap N-1 = 40 = 4 * 10 never binds below 4*k
        A = gen_powerlaw(N, seed=5)
        deg = A.sum(axis=0)
        assert np.all(deg >= 4)
        assert np.all(deg <= N - 1)
        assert np.all(deg % 4 == 0)

    def test_mean_in_degree_tracks_oracle(self):
        # In-degree is 4 x a truncated zeta(2.5) draw; compare the sample
        # mean against the exact pmf expectation.
        N = 200
        reps = [gen_powerlaw(N, seed=s).sum(axis=0).mean() for s in range(8)]
        want = 4.0 * powerlaw_degree_mean(N)
        assert np.mean(reps) == pytest.approx(want, rel=0.1)

    def test_heavy_tail_present(self):
        # Some columns should be hubs well above the minimum degree.
        A = gen_powerlaw(300, seed=1)
        deg = A.sum(axis=0)
        assert deg.max() >= 12
        assert (deg == 4).mean() > 0.5  # k^-2.5 puts most mass at k = 1

    def test_binary_zero_diagonal(self):
        A = gen_powerlaw(50, seed=2)
        assert np.all((A == 0) | (A == 1))
        assert np.all(np.diag(A) == 0)

    def test_deterministic_in_seed(self):
        assert np.array_equal(gen_powerlaw(30, seed=4),
                              gen_powerlaw(30, seed=4))


class TestNormalize:
    def test_row_mode(self):
        A = np.array([[0, 1, 1], [1, 0, 0], [0, 0, 0]], dtype=float)
        W = normalize(A, "row")
        assert np.allclose(W[0], [0, 0.5, 0.5])
        assert np.allclose(W[1], [1, 0, 0])
        assert np.allclose(W[2], 0)

    def test_column_mode(self):
        A = np.array([[0, 1], [1, 0]], dtype=float)
        W = normalize(A, "column")
        assert np.allclose(W, A)

    def test_rejects_nonbinary_and_diagonal(self):
        with pytest.raises(ValueError, match="binary"):
            normalize(np.array([[0.0, 2.0], [0.0, 0.0]]), "row")
        with pytest.raises(ValueError, match="diagonal"):
            normalize(np.eye(3), "row")
        with pytest.raises(ValueError, match="mode"):
            normalize(np.zeros((2, 2)), "both")

    @given(n=st.integers(5, 25), seed=st.integers(0, 10**6))
    @settings(max_examples=25, deadline=None)
    def test_row_sums_after_normalization(self, n, seed):
        A = gen_sbm(n, 3, seed=seed)
        W = normalize(A, "row")
        nz = A.sum(axis=1) > 0
        assert np.allclose(W[nz].sum(axis=1), 1.0)
        assert np.allclose(W[~nz], 0.0)


class TestEdgeListIO:
    def test_round_trip(self, tmp_path):
        A = gen_sbm(25, 3, seed=8)
        path = tmp_path / "net.csv"
        write_edge_list(path, A)
        assert np.array_equal(read_edge_list(path, 25), A)

    def test_header_written(self, tmp_path):
        path = tmp_path / "net.csv"
        write_edge_list(path, np.array([[0.0, 1.0], [0.0, 0.0]]))
        assert path.read_text().splitlines()[0] == "src,dst"

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "net.csv"
        path.write_text("from,to\n0,1\n")
        with pytest.raises(ValueError, match="header"):
            read_edge_list(path, 2)

    def test_rejects_out_of_range(self, tmp_path):
        path = tmp_path / "net.csv"
        path.write_text("src,dst\n0,5\n")
        with pytest.raises(ValueError, match="range"):
            read_edge_list(path, 2)


def test_generate_network_dispatch():
    assert np.array_equal(generate_network(NetworkSpec("sbm", 20, K=4, seed=1)),
                          gen_sbm(20, 4, seed=1))
    assert np.array_equal(generate_network(NetworkSpec("powerlaw", 20, seed=1)),
                          gen_powerlaw(20, seed=1))
