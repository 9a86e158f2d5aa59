import numpy as np
import pytest

from secu.assignment import (
    AssignmentState,
    ConstraintConfig,
    apply_assignment,
    assign_entropy,
    assign_size,
    assignment_costs,
    dual_update,
    entropy_of_counts,
    init_pass,
    objective_entropy,
    save_assignments,
)
from secu.centers import ClusterCenters
from secu.metrics import accuracy
from secu.numerics import make_rng, normalize_rows


def fresh_state(n, k, labels=None):
    state = AssignmentState(n, k)
    if labels is not None:
        apply_assignment(state, np.arange(n), labels)
    return state


class TestConstraintConfig:
    def test_mode_validation(self):
        with pytest.raises(ValueError):
            ConstraintConfig(mode="sinkhorn")

    def test_gamma_bounds(self):
        with pytest.raises(ValueError):
            ConstraintConfig(gamma=0.0)
        with pytest.raises(ValueError):
            ConstraintConfig(gamma=1.5)
        with pytest.raises(ValueError):
            ConstraintConfig(mode="size_lb_ub", gamma_prime=0.5)

    def test_alpha_auto_scaling(self):
        assert ConstraintConfig(alpha=None).resolved_alpha(50000) == 6000.0
        assert ConstraintConfig(alpha=7.0).resolved_alpha(50000) == 7.0


class TestCosts:
    def test_single_view_negated(self):
        s = np.array([0.5, -1.0, 2.0])
        np.testing.assert_array_equal(assignment_costs(s), -s)

    def test_identical_views_match_single(self):
        s = np.array([0.5, -1.0, 2.0])
        np.testing.assert_allclose(assignment_costs(s, s), assignment_costs(s))

    def test_opposite_views_tie(self):
        costs = assignment_costs(np.array([1.0, -1.0]), np.array([-1.0, 1.0]))
        np.testing.assert_array_equal(costs, [0.0, 0.0])

    def test_two_views_direct_formula(self):
        rng = make_rng(20)
        s1, s2 = rng.normal(size=6), rng.normal(size=6)
        np.testing.assert_allclose(assignment_costs(s1, s2), -(s1 + s2) / 2, atol=1e-15)


class TestAssignSize:
    def test_zero_duals_is_greedy(self):
        state = fresh_state(4, 3)
        costs = np.array([0.3, 0.1, 0.9])
        assert assign_size(costs, state) == 1

    def test_huge_dual_dominates(self):
        state = fresh_state(4, 3)
        state.duals_lb[2] = 1e6
        costs = np.array([0.0, 0.0, 100.0])
        assert assign_size(costs, state) == 2

    def test_ties_break_to_lowest_index(self):
        state = fresh_state(2, 3)
        assert assign_size(np.array([0.5, 0.5, 0.5]), state) == 0

    def test_matches_enumeration_oracle(self):
        rng = make_rng(21)
        for _ in range(300):
            state = fresh_state(1, 3)
            state.duals_lb = rng.uniform(0, 2, size=3)
            state.duals_ub = rng.uniform(0, 2, size=3)
            costs = rng.normal(size=3)
            for ub in (False, True):
                adj = [costs[j] - state.duals_lb[j] + (state.duals_ub[j] if ub else 0.0) for j in range(3)]
                best = min(range(3), key=lambda j: (adj[j], j))
                assert assign_size(costs, state, with_upper=ub) == best


class TestDualUpdate:
    def test_exact_fraction_leaves_duals_alone(self):
        """Fractions exactly gamma/K (feasible only at gamma=1) with positive
        duals: the gradient is zero and the duals stay put."""
        cfg = ConstraintConfig(mode="size_lb", gamma=1.0, eta_rho=0.5)
        state = fresh_state(8, 4)
        state.duals_lb[:] = 1.0
        dual_update(np.array([0, 1, 2, 3, 0, 1, 2, 3]), cfg, state)
        np.testing.assert_allclose(state.duals_lb, 1.0, atol=1e-15)

    def test_absent_cluster_gains_pressure(self):
        cfg = ConstraintConfig(mode="size_lb", gamma=0.9, eta_rho=0.1)
        state = fresh_state(4, 4)
        dual_update(np.array([0, 0, 1, 1]), cfg, state)
        assert state.duals_lb[3] == pytest.approx(0.1 * 0.9 / 4)

    def test_random_batch_vs_hand_computation(self):
        rng = make_rng(22)
        cfg = ConstraintConfig(mode="size_lb_ub", gamma=0.7, gamma_prime=1.3, eta_rho=0.25)
        state = fresh_state(4, 5)
        state.duals_lb = rng.uniform(0, 1, size=5)
        state.duals_ub = rng.uniform(0, 1, size=5)
        lb0, ub0 = state.duals_lb.copy(), state.duals_ub.copy()
        batch = rng.integers(0, 5, size=16)
        dual_update(batch, cfg, state)
        frac = np.bincount(batch, minlength=5) / 16
        np.testing.assert_allclose(
            state.duals_lb, np.maximum(0, lb0 - 0.25 * (frac - 0.7 / 5)), atol=1e-15
        )
        np.testing.assert_allclose(
            state.duals_ub, np.maximum(0, ub0 + 0.25 * (frac - 1.3 / 5)), atol=1e-15
        )

    def test_duals_stay_nonnegative(self):
        rng = make_rng(23)
        cfg = ConstraintConfig(mode="size_lb_ub", gamma=0.9, gamma_prime=1.1, eta_rho=2.0)
        state = fresh_state(4, 6)
        for _ in range(200):
            dual_update(rng.integers(0, 6, size=8), cfg, state)
            assert np.all(state.duals_lb >= 0)
            assert np.all(state.duals_ub >= 0)

    def test_empty_batch_rejected(self):
        with pytest.raises(ValueError):
            dual_update(np.array([], dtype=int), ConstraintConfig(), fresh_state(1, 2))


class TestEntropyOfCounts:
    def test_balanced_is_log_k(self):
        assert entropy_of_counts([5, 5, 5, 5], 20) == pytest.approx(np.log(4), abs=1e-12)

    def test_single_cluster_is_zero(self):
        assert entropy_of_counts([7, 0, 0], 7) == pytest.approx(0.0, abs=1e-15)

    def test_three_one_split(self):
        expected = -(0.75 * np.log(0.75) + 0.25 * np.log(0.25))
        assert entropy_of_counts([3, 1], 4) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.5623, abs=1e-4)

    def test_sum_mismatch_rejected(self):
        with pytest.raises(ValueError):
            entropy_of_counts([3, 1], 5)


def candidate_entropy_full(state, i, j):
    """Full-recompute oracle for the entropy after moving instance i to j."""
    counts = state.counts.copy()
    prev = state.labels[i]
    n = state.n_assigned
    if prev >= 0:
        counts[prev] -= 1
    else:
        n += 1
    counts[j] += 1
    return entropy_of_counts(counts, n)


class TestAssignEntropy:
    def test_alpha_zero_is_greedy(self):
        state = fresh_state(3, 4, labels=[0, 0, 0])
        costs = np.array([5.0, 1.0, 3.0, 2.0])
        assert assign_entropy(costs, 0, state, 0.0) == 1
        assert state.labels[0] == 1
        assert state.counts[1] == 1 and state.counts[0] == 2

    def test_incremental_matches_full_recompute(self):
        """1000 random moves: chosen cluster equals the argmin under the
        full-entropy oracle and the counts stay exact."""
        rng = make_rng(24)
        k, n = 7, 60
        state = fresh_state(n, k, labels=rng.integers(0, k, size=n))
        for _ in range(1000):
            i = int(rng.integers(n))
            costs = rng.normal(size=k)
            alpha = float(rng.uniform(0, 5))
            oracle_obj = np.array(
                [costs[j] - alpha * candidate_entropy_full(state, i, j) for j in range(k)]
            )
            expected = int(np.argmin(oracle_obj))
            got = assign_entropy(costs, i, state, alpha)
            assert got == expected
            state.check_consistent()

    def test_incremental_entropy_value_matches_oracle(self):
        rng = make_rng(25)
        k, n = 5, 40
        state = fresh_state(n, k, labels=rng.integers(0, k, size=n))
        # Compare H after a move against the oracle for 200 random moves.
        for _ in range(200):
            i = int(rng.integers(n))
            j = int(rng.integers(k))
            expected_h = candidate_entropy_full(state, i, j)
            apply_assignment(state, [i], [j])
            got_h = entropy_of_counts(state.counts, state.n_assigned)
            assert abs(got_h - expected_h) <= 1e-12

    def test_huge_alpha_maximizes_entropy(self):
        rng = make_rng(26)
        k = 6
        for _ in range(50):
            state = fresh_state(30, k, labels=rng.integers(0, k, size=30))
            i = int(rng.integers(30))
            hs = np.array([candidate_entropy_full(state, i, j) for j in range(k)])
            best = int(np.argmax(hs))
            got = assign_entropy(np.zeros(k), i, state, 1e6)
            assert hs[got] == pytest.approx(hs[best], abs=1e-12)

    def test_inconsistent_counts_rejected(self):
        state = fresh_state(3, 2, labels=[0, 0, 1])
        state.counts[0] = 0  # corrupt
        with pytest.raises(ValueError):
            assign_entropy(np.zeros(2), 0, state, 1.0)


class TestObjectiveEntropy:
    def test_alpha_zero_sums_assigned_costs(self):
        rng = make_rng(27)
        costs = rng.normal(size=(10, 3))
        labels = rng.integers(0, 3, size=10)
        state = fresh_state(10, 3, labels=labels)
        expected = sum(costs[i, labels[i]] for i in range(10))
        assert objective_entropy(costs, state, 0.0) == pytest.approx(expected, rel=1e-12)

    def test_uniform_costs_depend_only_on_entropy(self):
        costs = np.full((8, 4), 2.5)
        sa = fresh_state(8, 4, labels=[0, 0, 0, 0, 1, 1, 2, 3])
        sb = fresh_state(8, 4, labels=[0, 0, 1, 1, 2, 2, 3, 3])
        la = objective_entropy(costs, sa, 3.0)
        lb = objective_entropy(costs, sb, 3.0)
        ha = entropy_of_counts(sa.counts, 8)
        hb = entropy_of_counts(sb.counts, 8)
        assert la - lb == pytest.approx(-3.0 * (ha - hb), abs=1e-12)

    def test_direct_evaluation(self):
        rng = make_rng(28)
        costs = rng.normal(size=(6, 3))
        labels = np.array([2, 0, 1, 1, 2, 0])
        state = fresh_state(6, 3, labels=labels)
        direct = sum(costs[i, labels[i]] for i in range(6)) - 1.7 * entropy_of_counts(
            state.counts, 6
        )
        assert objective_entropy(costs, state, 1.7) == pytest.approx(direct, rel=1e-12)

    def test_unassigned_rejected(self):
        state = fresh_state(3, 2)
        with pytest.raises(ValueError):
            objective_entropy(np.zeros((3, 2)), state, 1.0)


class TestSequentialDescent:
    @pytest.mark.parametrize("alpha", [0.0, 0.7, 5.0])
    def test_each_update_never_increases_objective(self, alpha):
        """Sequential single-instance updates on a frozen cost matrix are
        coordinate-descent steps, so the penalized objective is monotone."""
        rng = make_rng(29)
        n, k = 100, 8
        costs = rng.normal(size=(n, k))
        state = fresh_state(n, k, labels=rng.integers(0, k, size=n))
        before = objective_entropy(costs, state, alpha)
        for i in range(n):
            assign_entropy(costs[i], i, state, alpha)
            after = objective_entropy(costs, state, alpha)
            assert after <= before + 1e-12
            before = after


class TestInitPass:
    def test_single_cluster_all_zero(self):
        rng = make_rng(30)
        emb = normalize_rows(rng.normal(size=(12, 4)))
        centers = ClusterCenters(emb[[0]])
        state = AssignmentState(12, 1)
        init_pass(emb, centers, ConstraintConfig(mode="entropy", alpha=1.0), state, 0.05)
        assert np.all(state.labels == 0)
        assert state.counts[0] == 12

    def test_deterministic_given_same_centers(self):
        rng = make_rng(31)
        emb = normalize_rows(rng.normal(size=(50, 6)))
        cfg = ConstraintConfig(mode="size_lb", gamma=0.9)
        runs = []
        for _ in range(2):
            centers = ClusterCenters(emb[:4].copy())
            state = AssignmentState(50, 4)
            init_pass(emb, centers, cfg, state, 0.05, batch_size=16)
            runs.append((state.labels.copy(), centers.w.copy()))
        assert np.array_equal(runs[0][0], runs[1][0])
        assert np.array_equal(runs[0][1], runs[1][1])

    def test_separable_components_map_to_distinct_clusters(self):
        """Three tight angular blobs in interleaved arrival order, entropy
        mode: perfect recovery. (Class-sorted order would let the early
        entropy pressure spread same-class instances while counts are tiny.)"""
        rng = make_rng(32)
        base = np.eye(3)
        emb = []
        truth = []
        for j in range(3):
            pts = base[j] + 0.05 * rng.normal(size=(20, 3))
            emb.append(pts)
            truth += [j] * 20
        order = np.arange(60).reshape(3, 20).T.reshape(-1)
        emb = normalize_rows(np.concatenate(emb))[order]
        truth = np.array(truth)[order]
        centers = ClusterCenters.from_embeddings(emb, 3, make_rng(33), farthest=True)
        state = AssignmentState(60, 3)
        init_pass(emb, centers, ConstraintConfig(mode="entropy", alpha=None), state, 0.05)
        assert accuracy(state.labels, truth) == 1.0


class TestStateAndExport:
    def test_counts_track_label_changes(self):
        rng = make_rng(34)
        state = fresh_state(20, 5)
        apply_assignment(state, np.arange(20), rng.integers(0, 5, size=20))
        for _ in range(100):
            i = int(rng.integers(20))
            j = int(rng.integers(5))
            apply_assignment(state, [i], [j])
            state.check_consistent()

    def test_save_assignments_format(self, tmp_path):
        path = tmp_path / "assign.csv"
        save_assignments(path, np.array([2, 0, 1]))
        assert path.read_text() == "index,cluster\n0,2\n1,0\n2,1\n"
