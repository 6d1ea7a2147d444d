import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from cbal.balance import compute_omega, l1_balance_distance, l1_score, omega_from_counts, selection_histogram
from cbal.core import BalanceTarget, CycleState, ProbabilityMatrix, SelectionVector
from cbal.errors import BudgetMismatch, DimensionMismatch, InvalidCycle


class TestOmega:
    def test_first_cycle_balanced_counts(self):
        # a balanced initial set needs b / C of each class in the first cycle
        om = omega_from_counts([2, 2, 2, 2, 2], cycle=1, budget_per_cycle=10, initial_size=10)
        np.testing.assert_array_equal(om.counts, [2, 2, 2, 2, 2])

    def test_deficits(self):
        om = omega_from_counts([4, 4, 0, 1, 1], cycle=1, budget_per_cycle=10, initial_size=10)
        np.testing.assert_array_equal(om.counts, [0, 0, 4, 3, 3])

    def test_clamped_at_zero(self):
        om = omega_from_counts([9, 1, 1, 1, 3], cycle=1, budget_per_cycle=5, initial_size=10)
        np.testing.assert_array_equal(om.counts, [0, 2, 2, 2, 0])

    def test_fractional_target_kept(self):
        om = omega_from_counts([1, 1, 1], cycle=1, budget_per_cycle=2, initial_size=3)
        np.testing.assert_allclose(om.counts, [2 / 3] * 3)

    def test_invalid_cycle(self):
        with pytest.raises(InvalidCycle):
            omega_from_counts([1, 1], cycle=0, budget_per_cycle=2, initial_size=2)

    def test_from_state(self):
        state = CycleState(np.arange(4), np.arange(4, 10), np.array([3, 1]), 1, 2, 4, 8)
        np.testing.assert_array_equal(compute_omega(state).counts, [0, 2])

    @settings(max_examples=100)
    @given(
        st.lists(st.integers(0, 30), min_size=2, max_size=8),
        st.integers(1, 5),
        st.integers(1, 20),
    )
    def test_matches_oracle_and_total_bound(self, counts, cycle, b):
        b0 = sum(counts)
        om = omega_from_counts(counts, cycle, b, b0)
        np.testing.assert_allclose(om.counts, oracles.omega(counts, cycle, b, b0), atol=1e-12)
        assert om.counts.sum() <= cycle * b + b0 + 1e-9


class TestL1Distance:
    def test_exact_match(self):
        p = ProbabilityMatrix(np.array([[1.0, 0.0], [0.0, 1.0]]))
        assert l1_balance_distance(BalanceTarget(np.array([1.0, 1.0])), p, SelectionVector((0, 1), 2)) == 0.0

    def test_hand_value(self):
        p = ProbabilityMatrix(np.array([[0.5, 0.5]]))
        assert l1_balance_distance(BalanceTarget(np.array([2.0, 0.0])), p, SelectionVector((0,), 1)) == 2.0

    def test_against_oracle(self):
        p = ProbabilityMatrix(np.array([[0.1, 0.9]]))
        d = l1_balance_distance(BalanceTarget(np.array([0.0, 1.0])), p, SelectionVector((0,), 1))
        ref = oracles.objective([0.0], [[0.1, 0.9]], [0.0, 1.0], (0,), 1.0)[2]
        assert d == pytest.approx(ref, abs=1e-15)
        assert d == pytest.approx(0.2, abs=1e-12)

    def test_dimension_mismatch(self):
        p = ProbabilityMatrix(np.array([[0.5, 0.5]]))
        with pytest.raises(DimensionMismatch):
            l1_balance_distance(BalanceTarget(np.array([1.0, 1.0, 1.0])), p, SelectionVector((0,), 1))
        with pytest.raises(DimensionMismatch):
            l1_balance_distance(BalanceTarget(np.array([1.0, 1.0])), p, SelectionVector((0,), 2))


class TestL1Score:
    def test_single_class(self):
        assert l1_score([10, 0, 0, 0, 0], 10) == 1.0

    def test_uniform(self):
        assert l1_score([2, 2, 2, 2, 2], 10) == 0.0

    def test_mixed_histogram(self):
        # |4-2|+|4-2|+|1-2|+|1-2|+|0-2| = 8, normalizer 2*10*4/5 = 16
        assert l1_score([4, 4, 1, 1, 0], 10) == pytest.approx(oracles.l1_score([4, 4, 1, 1, 0], 10))
        assert l1_score([4, 4, 1, 1, 0], 10) == pytest.approx(0.5)

    def test_budget_mismatch(self):
        with pytest.raises(BudgetMismatch):
            l1_score([1, 1], 3)
        with pytest.raises(BudgetMismatch):
            l1_score([0, 0], 0)

    @settings(max_examples=200)
    @given(st.lists(st.integers(0, 20), min_size=2, max_size=10).filter(lambda c: sum(c) > 0), st.randoms())
    def test_range_permutation_and_oracle(self, counts, rnd):
        b = sum(counts)
        v = l1_score(counts, b)
        assert -1e-12 <= v <= 1 + 1e-12
        shuffled = list(counts)
        rnd.shuffle(shuffled)
        assert l1_score(shuffled, b) == pytest.approx(v, abs=1e-12)
        assert v == pytest.approx(oracles.l1_score(counts, b), abs=1e-12)


def test_selection_histogram():
    np.testing.assert_array_equal(selection_histogram([0, 2, 2, 1, 2], 4), [1, 1, 3, 0])
