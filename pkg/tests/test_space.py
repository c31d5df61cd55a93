import numpy as np
import pytest
from hypothesis import given, strategies as st

from factorplan.space import CostTriple, FactoredPath, FactoredSpace, GoalSpec


def three_singleton_space():
    return FactoredSpace(
        factors=[[0], [1], [2]],
        bounds=[[-10, 10]] * 3,
    )


def one_factor_2d():
    return FactoredSpace(factors=[[0, 1]], bounds=[[-10, 10]] * 2)


class TestConstruction:
    def test_partition_accepted(self):
        sp = FactoredSpace(factors=[[1, 0], [2]], bounds=[[0, 1]] * 3)
        flat = sorted(i for f in sp.factors for i in f)
        assert flat == [0, 1, 2]

    @pytest.mark.parametrize(
        "factors",
        [
            [[0], [1]],          # missing index 2
            [[0, 1], [1, 2]],    # duplicate index
            [[0], [1], [2], []], # empty factor
            [[0], [1], [3]],     # out of range
        ],
    )
    def test_bad_partitions_rejected(self, factors):
        with pytest.raises(ValueError):
            FactoredSpace(factors=factors, bounds=[[0, 1]] * 3)

    def test_degenerate_bounds_rejected(self):
        with pytest.raises(ValueError):
            FactoredSpace(factors=[[0]], bounds=[[1.0, 1.0]])

    def test_nonpositive_weights_rejected(self):
        with pytest.raises(ValueError):
            FactoredSpace(factors=[[0]], bounds=[[0, 1]], weights=[0.0])


class TestDistances:
    def test_identity_is_zero(self):
        sp = three_singleton_space()
        a = np.array([1.0, -2.0, 3.0])
        assert np.allclose(sp.get_distances(a, a), 0.0)

    def test_per_factor_components(self):
        sp = three_singleton_space()
        d = sp.get_distances(np.array([0.0, 0.0, 0.0]), np.array([2.0, 0.0, 4.0]))
        assert np.allclose(d, [2.0, 0.0, 4.0])
        assert sp.distance(np.zeros(3), np.array([2.0, 0.0, 4.0])) == pytest.approx(6.0)

    def test_euclidean_within_factor(self):
        sp = one_factor_2d()
        d = sp.get_distances(np.zeros(2), np.array([3.0, 4.0]))
        assert np.allclose(d, [5.0])

    def test_weights_scale_displacement(self):
        sp = FactoredSpace(factors=[[0]], bounds=[[0, 10]], weights=[2.0])
        assert sp.distance(np.array([0.0]), np.array([3.0])) == pytest.approx(6.0)


class TestInterpolate:
    def setup_method(self):
        self.sp = three_singleton_space()
        self.a = np.array([0.0, 0.0, 0.0])
        self.b = np.array([2.0, 0.0, 4.0])

    def test_endpoints_exact(self):
        assert np.array_equal(self.sp.interpolate(self.a, self.b, 0.0), self.a)
        assert np.array_equal(self.sp.interpolate(self.a, self.b, 1.0), self.b)

    def test_midpoint_lands_in_third_factor(self):
        # segment boundaries at (1/3, 1/3, 1); t=0.5 sits in factor 2 with s=0.25
        out = self.sp.interpolate(self.a, self.b, 0.5, ordering=[0, 1, 2])
        assert np.allclose(out, [2.0, 0.0, 1.0])

    def test_boundary_selects_later_factor(self):
        out = self.sp.interpolate(self.a, self.b, 1.0 / 3.0, ordering=[0, 1, 2])
        assert np.allclose(out, [2.0, 0.0, 0.0])

    def test_zero_distance_returns_from(self):
        out = self.sp.interpolate(self.a, self.a, 0.7)
        assert np.array_equal(out, self.a)

    def test_ordering_is_respected(self):
        out = self.sp.interpolate(self.a, self.b, 0.1, ordering=[2, 0, 1])
        # factor 2 moves first: t=0.1 of total 6 -> 0.6 along dim 2
        assert np.allclose(out, [0.0, 0.0, 0.6])

    def test_random_pairs_endpoint_exactness(self):
        rng = np.random.default_rng(7)
        sp = FactoredSpace(factors=[[0, 3], [1], [2]], bounds=[[-5, 5]] * 4)
        for _ in range(1000):
            a = sp.sample_uniform(rng)
            b = sp.sample_uniform(rng)
            assert np.array_equal(sp.interpolate(a, b, 0.0), a)
            assert np.array_equal(sp.interpolate(a, b, 1.0), b)

    def test_single_factor_moves_per_segment(self):
        rng = np.random.default_rng(11)
        sp = FactoredSpace(factors=[[0, 3], [1], [2]], bounds=[[-5, 5]] * 4)
        for _ in range(200):
            a, b = sp.sample_uniform(rng), sp.sample_uniform(rng)
            order = list(rng.permutation(sp.M))
            t1, t2 = sorted(rng.uniform(0, 1, size=2))
            x1 = sp.interpolate(a, b, t1, order)
            x2 = sp.interpolate(a, b, t2, order)
            d = sp.get_distances(a, b)[order]
            cum = np.cumsum(d / d.sum()) if d.sum() > 0 else None
            if cum is not None:
                seg1 = int(np.searchsorted(cum, t1, side="right"))
                seg2 = int(np.searchsorted(cum, t2, side="right"))
                if seg1 == seg2:
                    assert len(sp.changed_factors(x1, x2)) <= 1

    def test_distance_monotone_in_t(self):
        rng = np.random.default_rng(13)
        sp = FactoredSpace(factors=[[0, 1], [2]], bounds=[[-5, 5]] * 3)
        for _ in range(100):
            a, b = sp.sample_uniform(rng), sp.sample_uniform(rng)
            ts = np.sort(rng.uniform(0, 1, size=10))
            dists = [sp.distance(a, sp.interpolate(a, b, t)) for t in ts]
            assert all(d2 >= d1 - 1e-9 for d1, d2 in zip(dists, dists[1:]))

    def test_interpolate_many_matches_scalar(self):
        rng = np.random.default_rng(17)
        sp = FactoredSpace(factors=[[0, 3], [1], [2]], bounds=[[-5, 5]] * 4)
        a, b = sp.sample_uniform(rng), sp.sample_uniform(rng)
        order = [2, 0, 1]
        ts = np.linspace(0, 1, 23)
        batch = sp.interpolate_many(a, b, ts, order)
        for t, row in zip(ts, batch):
            assert np.allclose(row, sp.interpolate(a, b, float(t), order), atol=1e-12)


class TestChangedFactors:
    def test_equal_states_empty(self):
        sp = three_singleton_space()
        a = np.array([1.0, 2.0, 3.0])
        assert sp.changed_factors(a, a) == []

    def test_single_index_difference(self):
        sp = FactoredSpace(factors=[[0, 1], [2]], bounds=[[-5, 5]] * 3)
        a = np.zeros(3)
        b = np.array([0.0, 0.0, 1.0])
        assert sp.changed_factors(a, b) == [1]

    def test_both_factors_change(self):
        sp = FactoredSpace(factors=[[0], [1]], bounds=[[-5, 5]] * 2)
        assert sp.changed_factors(np.zeros(2), np.ones(2)) == [0, 1]

    def test_tolerance_filters_noise(self):
        sp = FactoredSpace(factors=[[0], [1]], bounds=[[-5, 5]] * 2)
        b = np.array([1e-12, 0.0])
        assert sp.changed_factors(np.zeros(2), b) == []


class TestCosts:
    def test_motion_cost_identity(self):
        sp = three_singleton_space()
        a = np.zeros(3)
        assert sp.motion_cost(a, a) == CostTriple(0, 0, 0.0)

    def test_motion_cost_single_factor(self):
        sp = three_singleton_space()
        c = sp.motion_cost(np.zeros(3), np.array([2.0, 0.0, 0.0]))
        assert (c.actions, c.additive) == (1, 1)
        assert c.dist == pytest.approx(2.0)

    def test_motion_cost_two_factors(self):
        sp = three_singleton_space()
        c = sp.motion_cost(np.zeros(3), np.array([1.0, 0.0, 1.0]))
        assert (c.actions, c.additive) == (2, 2)

    def _path(self, sp, seq):
        """Unit-length edges following the factor id sequence, from the origin."""
        states = [np.zeros(sp.n)]
        for f in seq:
            s = states[-1].copy()
            s[sp.factor_indices(f)[0]] += 1.0
            states.append(s)
        return FactoredPath(states, list(seq))

    def test_runs_merge_consecutive_same_factor(self):
        sp = FactoredSpace(factors=[[0], [1]], bounds=[[-10, 10]] * 2)
        c = sp.path_cost(self._path(sp, [1, 0, 0]))
        assert c == CostTriple(2, 3, 3.0)

    def test_interleaving_costs_extra_run(self):
        sp = FactoredSpace(factors=[[0], [1]], bounds=[[-10, 10]] * 2)
        c = sp.path_cost(self._path(sp, [0, 1, 0]))
        assert c == CostTriple(3, 3, 3.0)

    def test_longer_path_same_runs(self):
        sp = FactoredSpace(factors=[[0], [1]], bounds=[[-10, 10]] * 2)
        c = sp.path_cost(self._path(sp, [1, 0, 0, 0]))
        assert c == CostTriple(2, 4, 4.0)

    def test_multi_edge_rejected(self):
        sp = FactoredSpace(factors=[[0], [1]], bounds=[[-10, 10]] * 2)
        p = FactoredPath([np.zeros(2), np.ones(2)], [None])
        with pytest.raises(ValueError):
            sp.path_cost(p)

    def test_actions_never_exceed_additive_on_random_paths(self):
        sp = FactoredSpace(factors=[[0], [1], [2]], bounds=[[-10, 10]] * 3)
        rng = np.random.default_rng(3)
        for _ in range(200):
            seq = list(rng.integers(0, 3, size=rng.integers(1, 9)))
            c = sp.path_cost(self._path(sp, seq))
            assert c.actions <= c.additive
            if all(x != y for x, y in zip(seq, seq[1:])):
                assert c.actions == c.additive

    def test_cost_triple_rejects_actions_above_additive(self):
        with pytest.raises(ValueError):
            CostTriple(3, 2, 0.0)


class TestLexicographicOrder:
    triples = st.tuples(
        st.integers(0, 5), st.integers(5, 10), st.floats(0, 100, allow_nan=False)
    )

    @given(triples, triples)
    def test_antisymmetry(self, t1, t2):
        a, b = CostTriple(*t1), CostTriple(*t2)
        assert not (a < b and b < a)
        if a < b:
            assert b > a

    @given(triples, triples, triples)
    def test_transitivity(self, t1, t2, t3):
        a, b, c = CostTriple(*t1), CostTriple(*t2), CostTriple(*t3)
        if a < b and b < c:
            assert a < c

    def test_layer_priority(self):
        assert CostTriple(1, 9, 100.0) < CostTriple(2, 2, 0.0)
        assert CostTriple(2, 3, 100.0) < CostTriple(2, 4, 0.0)
        assert CostTriple(2, 3, 1.0) < CostTriple(2, 3, 2.0)


class TestSampling:
    def test_goal_sample_pins_goal_indices(self):
        sp = three_singleton_space()
        goal = GoalSpec(indices=(1,), values=(4.5,), epsilon=0.1)
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = sp.sample_goal(goal, rng)
            assert x[1] == 4.5
            assert sp.contains(x)

    def test_uniform_mean_matches_interval(self):
        sp = FactoredSpace(factors=[[0]], bounds=[[0, 1]])
        rng = np.random.default_rng(42)
        xs = np.array([sp.sample_uniform(rng)[0] for _ in range(10_000)])
        assert abs(xs.mean() - 0.5) < 0.02


class TestGoal:
    def test_exact_match(self):
        g = GoalSpec(indices=(0, 2), values=(1.0, 2.0), epsilon=0.1)
        assert g.contains(np.array([1.0, 99.0, 2.0]))

    def test_outside_tolerance(self):
        g = GoalSpec(indices=(0,), values=(1.0,), epsilon=0.1)
        assert not g.contains(np.array([1.2]))

    def test_boundary_is_inside(self):
        # offset exactly epsilon (representable values so the comparison is exact)
        g = GoalSpec(indices=(0,), values=(1.0,), epsilon=0.25)
        assert g.contains(np.array([1.25]))
        assert g.contains(np.array([0.75]))


class TestFactoredPath:
    def test_from_states_drops_zero_edges(self):
        sp = FactoredSpace(factors=[[0], [1]], bounds=[[-5, 5]] * 2)
        states = [np.zeros(2), np.zeros(2), np.array([1.0, 0.0])]
        p = FactoredPath.from_states(states, sp)
        assert p.n_edges == 1
        assert p.edge_factors == [0]

    def test_from_states_rejects_multi_factor_edge(self):
        sp = FactoredSpace(factors=[[0], [1]], bounds=[[-5, 5]] * 2)
        with pytest.raises(ValueError):
            FactoredPath.from_states([np.zeros(2), np.ones(2)], sp)
