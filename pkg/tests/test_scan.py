import math

import numpy as np
import pytest

import oracles
from lsmrs import (
    POISSON_LOG,
    NetworkTensor,
    SelectionProbs,
    build_partition_heuristic,
    damped_update,
    draw_index_set,
    normalize_block_probs,
    update_selection_prob,
)
from lsmrs.scan import BlockPartition, ScanPlan, damping_coefficient


class TestDrawIndexSet:
    def test_all_ones_selects_everything(self, rng):
        q = np.ones(6)
        for _ in range(50):
            assert np.array_equal(draw_index_set(q, rng), np.arange(6))

    def test_single_target_always_selected(self, rng):
        for _ in range(50):
            assert np.array_equal(draw_index_set(np.array([0.05]), rng), [0])

    def test_never_empty_sorted_distinct(self, rng):
        q = np.full(8, 0.15)
        for _ in range(2000):
            idx = draw_index_set(q, rng)
            assert idx.size >= 1
            assert np.all(np.diff(idx) > 0)

    def test_size_law_matches_enumeration(self, rng):
        # P(M = m | M >= 1) for q = (0.5, 0.5, 0.5) is (3/7, 3/7, 1/7)
        q = [0.5, 0.5, 0.5]
        law = oracles.index_set_size_law(q)
        assert law[1] == pytest.approx(3 / 7)
        assert law[2] == pytest.approx(3 / 7)
        assert law[3] == pytest.approx(1 / 7)
        counts = np.zeros(4)
        n_draws = 200000
        for _ in range(n_draws):
            counts[draw_index_set(np.asarray(q), rng).size] += 1
        for m in (1, 2, 3):
            assert counts[m] / n_draws == pytest.approx(law[m], abs=0.01)


class TestUpdateSelectionProb:
    def test_at_target_is_half(self):
        assert update_selection_prob(0.234, 0.234, 0.0) == pytest.approx(0.5, abs=1e-15)

    def test_derived_values(self):
        # independent arithmetic: 1 / (1 + exp(abar - target + c))
        assert update_selection_prob(0.0, 0.234, 0.0) == pytest.approx(
            1.0 / (1.0 + math.exp(-0.234)), abs=1e-15)
        assert update_selection_prob(0.0, 0.234, 0.0) == pytest.approx(0.55823, abs=1e-5)
        assert update_selection_prob(1.0, 0.234, 0.0) == pytest.approx(
            1.0 / (1.0 + math.exp(0.766)), abs=1e-15)
        assert update_selection_prob(1.0, 0.234, 0.0) == pytest.approx(0.31734, abs=1e-5)

    def test_strictly_decreasing_in_abar_and_c(self):
        grid = np.linspace(0.0, 1.0, 21)
        vals = [update_selection_prob(a, 0.3, 0.0, epsilon=1e-9) for a in grid]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        vals_c = [update_selection_prob(0.4, 0.3, c, epsilon=1e-9)
                  for c in np.linspace(-2, 2, 21)]
        assert all(b < a for a, b in zip(vals_c, vals_c[1:]))

    def test_clamped(self):
        assert update_selection_prob(1.0, 0.0, 10.0, epsilon=0.05) == 0.05
        assert update_selection_prob(0.0, 0.9, -50.0, epsilon=0.05) == 1.0

    def test_vectorized(self):
        out = update_selection_prob(np.array([0.0, 1.0]), 0.234, 0.0)
        assert out.shape == (2,)


class TestDampedUpdate:
    def test_endpoints(self):
        assert damped_update(0.7, 0.2, 0.0) == 0.7
        assert damped_update(0.7, 0.2, 1.0) == pytest.approx(0.2)

    def test_example(self):
        assert damped_update(0.5, 0.3, 0.1) == pytest.approx(0.48, abs=1e-12)

    def test_change_bounded_by_b(self, rng):
        for _ in range(500):
            q_prev = float(rng.uniform(0.01, 1.0))
            q_star = float(rng.uniform(0.01, 1.0))
            b = float(rng.uniform(0.0, 1.0))
            out = damped_update(q_prev, q_star, b)
            assert abs(out - q_prev) <= b + 1e-12

    def test_invalid_b(self):
        with pytest.raises(ValueError):
            damped_update(0.5, 0.5, 1.5)

    def test_damping_coefficient(self):
        assert damping_coefficient("none", 12345) == 1.0
        assert damping_coefficient("one_over_h", 5) == 1.0
        assert damping_coefficient("one_over_h", 100) == pytest.approx(0.1)


class TestNormalize:
    def test_already_normalized(self):
        assert np.allclose(normalize_block_probs([0.5, 0.5]), [0.5, 0.5])

    def test_example(self):
        assert np.allclose(normalize_block_probs([0.6, 0.2]), [0.75, 0.25])

    def test_symmetry(self):
        assert np.allclose(normalize_block_probs([0.3] * 4), [0.25] * 4)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            normalize_block_probs([0.0, 0.0])
        with pytest.raises(ValueError):
            normalize_block_probs([0.5, -0.1])


def net_with_strengths(strengths):
    weights = {}
    n = len(strengths)
    # star-like construction hitting the exact strengths is fiddly; instead
    # attach each node's strength to a dedicated extra hub pair
    # -- simpler: craft weights on disjoint pairs (i, i+n) is impossible in
    # one network, so use direct pair weights on (i, j) with j > i chosen
    # to keep strengths independent: connect node i to the last node.
    # For heuristic tests we only need the ordering, so build strengths
    # via weights to a dummy final node.
    total = n + 1
    for i, s in enumerate(strengths):
        if s:
            weights[(i, n, 0, 0)] = float(s)
    return NetworkTensor(n_nodes=total, n_layers=1, n_times=1,
                         families=(POISSON_LOG,), weights=weights)


class TestPartition:
    def test_single_block(self, small_poisson_net):
        part = build_partition_heuristic(small_poisson_net, 1)
        assert part.n_blocks == 1
        assert np.array_equal(part.members(0), np.arange(5))

    def test_singletons(self, small_poisson_net):
        part = build_partition_heuristic(small_poisson_net, 5)
        assert part.n_blocks == 5
        assert sorted(int(part.members(k)[0]) for k in range(5)) == list(range(5))

    def test_strength_split(self):
        # strengths (10, 9, 1, 0) on the first four nodes, hub collects 20
        net = net_with_strengths([10, 9, 1, 0])
        part = build_partition_heuristic(net, 2)
        # hub (strength 20) + top nodes 0, 1 go to block 0; the rest below
        high = set(part.members(0).tolist())
        assert 4 in high and 0 in high
        # restricted to the four real nodes: {0, 1} vs {2, 3}
        assignment = part.assignment[:4]
        assert assignment[0] == assignment[1]
        assert assignment[2] == assignment[3]
        assert assignment[0] != assignment[2]

    def test_deterministic(self, small_poisson_net):
        a = build_partition_heuristic(small_poisson_net, 2)
        b = build_partition_heuristic(small_poisson_net, 2)
        assert np.array_equal(a.assignment, b.assignment)

    def test_blocks_cover_and_nonempty(self, small_poisson_net):
        part = build_partition_heuristic(small_poisson_net, 3)
        assert part.sizes.sum() == 5
        assert np.all(part.sizes > 0)

    def test_k_out_of_range(self, small_poisson_net):
        with pytest.raises(ValueError):
            build_partition_heuristic(small_poisson_net, 6)

    def test_partition_validation(self):
        with pytest.raises(ValueError):
            BlockPartition(assignment=np.array([0, 0, 2]), n_blocks=3)  # empty block 1


class TestSelectionProbs:
    def test_window_accumulation(self):
        sel = SelectionProbs(np.full(4, 0.5))
        sel.record(np.array([0, 2]), np.array([0.2, 0.8]))
        sel.record(np.array([0]), np.array([0.4]))
        means = sel.window_means()
        assert means[0] == pytest.approx(0.3)
        assert means[2] == pytest.approx(0.8)
        assert np.isnan(means[1]) and np.isnan(means[3])

    def test_adapt_carries_unseen_targets(self):
        sel = SelectionProbs(np.array([0.5, 0.9]))
        sel.record(np.array([0]), np.array([1.0]))
        sel.adapt(target=0.234, c=0.0, b_h=1.0)
        assert sel.q[1] == 0.9  # never selected: carried over
        assert sel.q[0] == pytest.approx(update_selection_prob(1.0, 0.234, 0.0))
        assert sel.acc_count.sum() == 0  # window cleared

    def test_bounds_maintained(self, rng):
        sel = SelectionProbs(np.full(6, 0.5), epsilon=0.05)
        for _ in range(200):
            idx = draw_index_set(sel.q, rng)
            sel.record(idx, rng.random(idx.size))
            sel.adapt(target=0.234, c=float(rng.normal()), b_h=0.5)
            assert np.all(sel.q >= 0.05) and np.all(sel.q <= 1.0)

    def test_q_validation(self):
        with pytest.raises(ValueError):
            SelectionProbs(np.array([0.5, 0.001]), epsilon=0.01)


class TestScanPlan:
    def test_block_needs_k(self):
        with pytest.raises(ValueError):
            ScanPlan(strategy="b-mrsg")

    def test_unknown_strategy(self):
        with pytest.raises(ValueError):
            ScanPlan(strategy="systematic")

    def test_flags(self):
        assert ScanPlan("amrsg").is_adaptive
        assert not ScanPlan("mrsg").is_adaptive
        assert ScanPlan("b-amrsg", n_blocks=2).is_block
