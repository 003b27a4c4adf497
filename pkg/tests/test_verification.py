import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from treeising.estimation import empirical_correlations, hoeffding_epsilon
from treeising.learners import chow_liu
from treeising.model import Forest, Tree, chain_model, path_between, prufer_decode
from treeising.sampling import SeedSpec, sample
from treeising.verification import (
    EventReport,
    LemmaCounterexample,
    TwoTreesWitness,
    cascade_event_bound,
    check_events,
    corr_event_bound,
    enumerate_spanning_trees,
    greedy_exchange_violations,
    product_concentration_check,
    swap_pairs,
    two_trees_sweep,
    two_trees_witness,
    witness_violations,
    zy_samples,
    zy_statistics,
)


def has_crossing_pair(t1, t2, w, wt):
    """Independent oracle: try every (edge of t1, edge of t2)."""
    p1, p2 = set(path_between(t1, w, wt)), set(path_between(t2, w, wt))
    for f in t1.edges:
        for g in t2.edges:
            if (f in p1 and g in p2 and f not in p2 and g not in p1
                    and f in path_between(t1, *g) and g in path_between(t2, *f)):
                return True
    return False


trees = st.integers(2, 9).flatmap(
    lambda p: st.tuples(
        st.lists(st.integers(0, p - 1), min_size=max(p - 2, 0), max_size=max(p - 2, 0)),
        st.lists(st.integers(0, p - 1), min_size=max(p - 2, 0), max_size=max(p - 2, 0)),
        st.just(p),
    )
)


class TestTwoTreesWitness:
    def test_three_node_example(self):
        t1 = Tree(3, ((0, 1), (1, 2)))
        t2 = Tree(3, ((0, 2), (1, 2)))
        wit = two_trees_witness(t1, t2, 0, 1)
        assert wit == TwoTreesWitness((0, 1), (0, 2))
        assert witness_violations(t1, t2, 0, 1, wit) == []

    def test_three_node_example_unique(self):
        t1 = Tree(3, ((0, 1), (1, 2)))
        t2 = Tree(3, ((0, 2), (1, 2)))
        hits = [
            (f, g) for f in t1.edges for g in t2.edges
            if witness_violations(t1, t2, 0, 1, TwoTreesWitness(f, g)) == []
        ]
        assert hits == [((0, 1), (0, 2))]

    def test_identical_trees(self):
        t = Tree(4, ((0, 1), (1, 2), (1, 3)))
        for w, wt in itertools.combinations(range(4), 2):
            assert two_trees_witness(t, t, w, wt) is None

    @settings(max_examples=200, deadline=None)
    @given(trees)
    def test_witness_valid_on_random_trees(self, args):
        s1, s2, p = args
        t1, t2 = Tree(p, tuple(prufer_decode(s1, p))), Tree(p, tuple(prufer_decode(s2, p)))
        for w, wt in itertools.combinations(range(p), 2):
            wit = two_trees_witness(t1, t2, w, wt)
            if wit is None:
                assert path_between(t1, w, wt) == path_between(t2, w, wt)
            else:
                assert witness_violations(t1, t2, w, wt, wit) == []

    def test_violations_detect_bad_witness(self):
        t1 = Tree(3, ((0, 1), (1, 2)))
        t2 = Tree(3, ((0, 2), (1, 2)))
        assert witness_violations(t1, t2, 0, 1, TwoTreesWitness((1, 2), (0, 2)))
        # correct edges, wrong orientation
        assert witness_violations(t1, t2, 0, 1, TwoTreesWitness((1, 0), (0, 2)))

    def test_rejects(self):
        t = Tree(3, ((0, 1), (1, 2)))
        with pytest.raises(ValueError):
            two_trees_witness(t, Tree(4, ((0, 1), (1, 2), (2, 3))), 0, 1)
        with pytest.raises(ValueError):
            two_trees_witness(t, t, 1, 1)
        with pytest.raises(ValueError):
            two_trees_witness(t, Forest(3, ((0, 1),)), 0, 1)

    def test_counterexample_is_assertion_error(self):
        assert issubclass(LemmaCounterexample, AssertionError)


class TestEnumeration:
    @pytest.mark.parametrize("p,count", [(2, 1), (3, 3), (4, 16), (5, 125), (6, 1296)])
    def test_counts_unique(self, p, count):
        ts = list(enumerate_spanning_trees(p))
        assert len(ts) == count
        assert len({t.edges for t in ts}) == count

    @pytest.mark.parametrize("p", [1, 8])
    def test_range(self, p):
        with pytest.raises(ValueError):
            list(enumerate_spanning_trees(p))


class TestTwoTreesSweep:
    @pytest.mark.parametrize("p", [3, 4, 5])
    def test_no_counterexamples(self, p):
        res = two_trees_sweep(p)
        assert res.passed and res.n_trees == p ** (p - 2)

    def test_instance_count_matches_oracle_p4(self):
        ts = list(enumerate_spanning_trees(4))
        expected = 0
        for t1, t2 in itertools.product(ts, ts):
            for w, wt in itertools.combinations(range(4), 2):
                if set(path_between(t1, w, wt)) != set(path_between(t2, w, wt)):
                    expected += 1
                    assert has_crossing_pair(t1, t2, w, wt)
        assert two_trees_sweep(4).instances == expected

    def test_workers_agree(self):
        a, b = two_trees_sweep(4), two_trees_sweep(4, workers=2)
        assert (a.instances, a.counterexamples) == (b.instances, b.counterexamples)

    def test_p7_guard(self):
        with pytest.raises(ValueError):
            two_trees_sweep(7)

    def test_sweep_detects_missing_witness(self):
        # a mask table where every path is a single distinct edge has no
        # crossing pair: the sweep must report it
        from treeising.verification import _sweep_block
        M = np.array([[1, 2, 4], [4, 1, 2]], dtype=np.uint32)
        checked, fails = _sweep_block((M, 0, 1))
        assert checked == 3 and len(fails) == 3


class TestLearnedTreeChecks:
    def test_greedy_exchange(self):
        c = np.array([[1.0, 0.9, 0.5], [0.9, 1.0, 0.1], [0.5, 0.1, 1.0]])
        assert greedy_exchange_violations(c, Tree(3, ((0, 1), (0, 2)))) == []
        assert greedy_exchange_violations(c, Tree(3, ((0, 1), (1, 2)))) == [((0, 2), (1, 2))]

    def test_swap_pairs(self):
        t = Tree(4, ((0, 1), (1, 2), (2, 3)))
        h = Tree(4, ((0, 1), (1, 3), (2, 3)))
        assert swap_pairs(t, h) == [((1, 2), (1, 3))]
        assert swap_pairs(t, t) == []


class TestEvents:
    def test_bounds(self):
        assert corr_event_bound(4, 1000, 0.1) == pytest.approx(1 - 32 * math.exp(-5))
        assert cascade_event_bound(4, 1000, 0.5) == pytest.approx(1 - 128 * math.exp(-250 / 32))

    def test_large_epsilon(self):
        m = chain_model([0.5, 0.5, 0.5])
        ev = check_events(m, sample(m, 10, 0), 2.0, 2.0)
        assert ev.e_corr and ev.e_cascade

    def test_huge_n_all_events(self):
        m = chain_model([0.6, -0.8, 0.4, 0.7])
        n = 1_000_000
        eps = hoeffding_epsilon(n, m.p, 0.1)
        ev = check_events(m, sample(m, n, 5), eps, eps)
        assert ev.e_corr and ev.e_strong and ev.e_cascade
        assert ev.missed_edges == () and ev.corr_close_ok is True

    def test_report_consistency_enforced(self):
        with pytest.raises(AssertionError):
            EventReport(0, True, True, True, 0.5, 0.0, (), 0.1, 0.1, 0.4, True, 0.0, (), True, None)

    def test_weak_edge_missed_is_weak(self):
        m = chain_model([math.atanh(0.9), math.atanh(0.01), math.atanh(0.9), math.atanh(0.9)])
        missed_any = False
        for t in range(30):
            s = sample(m, 4000, SeedSpec(3, t))
            eps = hoeffding_epsilon(4000, m.p, 0.1)
            ev = check_events(m, s, eps, eps)
            missed_any |= bool(ev.missed_edges)
            if ev.zy_event:
                assert ev.missing_weak_ok
            if ev.corr_close_ok is not None:
                assert ev.corr_close_ok
            assert ev.e_strong
        assert missed_any

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            check_events(chain_model([0.1]), sample(chain_model([0.1, 0.1]), 10, 0), 0.1, 0.1)


class TestZY:
    def test_adjacent_pair(self):
        m = chain_model([0.7, 0.3])
        st_ = zy_statistics(sample(m, 100, 0), m, (0, 1), 0, 1)
        assert st_.mu_A == 1.0
        assert st_.z_mean == 0.0 and st_.z_sum == 0
        assert st_.y_mean == pytest.approx(2 * math.tanh(0.7))

    def test_value_sets_and_identity(self):
        m = chain_model([0.7, -0.3, 1.1])
        s = sample(m, 2000, 1)
        z, y = zy_samples(s, (1, 2), 0, 3)
        assert set(np.unique(z)) <= {-2, 0, 2} and set(np.unique(y)) <= {-2, 0, 2}
        x = s.spins.astype(int)
        assert np.array_equal(z + y, 2 * x[:, 1] * x[:, 2])

    def test_population_means(self):
        m = chain_model([0.7, -0.3, 1.1])
        st_ = zy_statistics(sample(m, 200_000, 2), m, (1, 2), 0, 3)
        mu_A = math.tanh(0.7) * math.tanh(1.1)
        assert st_.mu_A == pytest.approx(mu_A)
        assert st_.z_sum / st_.n == pytest.approx(math.tanh(-0.3) * (1 - mu_A), abs=0.01)
        assert st_.y_sum / st_.n == pytest.approx(math.tanh(-0.3) * (1 + mu_A), abs=0.01)

    def test_edge_not_on_path(self):
        m = chain_model([0.7, 0.3, 0.2])
        with pytest.raises(ValueError):
            zy_statistics(sample(m, 10, 0), m, (2, 3), 0, 2)

    def test_swap_gives_nonpositive_product(self):
        m = chain_model([math.atanh(0.9), math.atanh(0.01), math.atanh(0.9), math.atanh(0.9)])
        found = 0
        for t in range(40):
            s = sample(m, 4000, SeedSpec(8, t))
            learned = chow_liu(empirical_correlations(s))
            for f, g in swap_pairs(m.structure, learned):
                st_ = zy_statistics(s, m, f, *g)
                assert st_.z_sum * st_.y_sum <= 0
                found += 1
        assert found > 0

    def test_deviation_within_bounds(self):
        m = chain_model([0.5, 0.8, -0.6])
        n, delta = 2000, 0.1
        eps = hoeffding_epsilon(n, m.p, delta)
        held = 0
        for t in range(100):
            s = sample(m, n, SeedSpec(4, t))
            held += zy_statistics(s, m, (1, 2), 0, 3).within_bounds(eps)
        assert held / 100 >= 1 - delta / 2


class TestProduct:
    def test_deterministic_factors(self):
        res = product_concentration_check(3, [1, -1, 1], 100, 0.1, 50)
        assert res.exceedances == 0

    def test_zero_means(self):
        res = product_concentration_check(4, [0.0] * 4, 1000, 0.5, 500)
        assert res.passed and res.rate <= res.bound

    def test_single_factor(self):
        res = product_concentration_check(1, [0.3], 2000, 0.2, 500)
        assert res.rate <= 2 * math.exp(-2000 * 0.2**2 / 2)

    @pytest.mark.parametrize("mus", [[1.5], [0.1, 0.2]])
    def test_invalid(self, mus):
        with pytest.raises(ValueError):
            product_concentration_check(1, mus, 10, 0.1, 10)

    def test_reproducible(self):
        a = product_concentration_check(2, [0.2, 0.4], 50, 0.1, 100, seed=3)
        b = product_concentration_check(2, [0.2, 0.4], 50, 0.1, 100, seed=3)
        assert a == b
