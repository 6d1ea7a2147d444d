import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cbal.core import (
    BalanceTarget,
    CycleState,
    DistanceMatrix,
    ProbabilityMatrix,
    SelectionVector,
    UncertaintyVector,
    validate_probability_matrix,
)
from cbal.errors import (
    DimensionMismatch,
    NegativeEntry,
    NonFinite,
    RowNotStochastic,
    ValidationError,
)


class TestValidateProbabilityMatrix:
    def test_exact_rows_accepted(self):
        p = validate_probability_matrix([[0.5, 0.5], [1.0, 0.0]])
        assert p.n == 2
        assert p.c_classes == 2
        np.testing.assert_array_equal(p.values, [[0.5, 0.5], [1.0, 0.0]])

    def test_row_sum_too_large_rejected(self):
        with pytest.raises(RowNotStochastic):
            validate_probability_matrix([[0.6, 0.6]])

    def test_within_tolerance_renormalized(self):
        p = validate_probability_matrix([[0.3333333, 0.3333333, 0.3333334]])
        assert abs(p.values.sum() - 1.0) < 1e-15

    def test_just_outside_tolerance_rejected(self):
        with pytest.raises(RowNotStochastic):
            validate_probability_matrix([[0.5, 0.5 + 2e-6]])

    def test_negative_entry(self):
        with pytest.raises(NegativeEntry):
            validate_probability_matrix([[1.1, -0.1]])

    @pytest.mark.parametrize("bad", [np.nan, np.inf])
    def test_non_finite(self, bad):
        with pytest.raises(NonFinite):
            validate_probability_matrix([[bad, 0.5]])

    @pytest.mark.parametrize("shape", [(0, 2), (3,), (2, 1)])
    def test_bad_shapes(self, shape):
        with pytest.raises(ValidationError):
            validate_probability_matrix(np.full(shape, 0.5))

    def test_values_are_read_only(self):
        p = validate_probability_matrix([[0.5, 0.5]])
        with pytest.raises(ValueError):
            p.values[0, 0] = 1.0

    def test_input_is_copied(self):
        raw = np.array([[0.5, 0.5]])
        p = validate_probability_matrix(raw)
        raw[0, 0] = 9.0
        assert p.values[0, 0] == 0.5

    @settings(max_examples=60)
    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(2, 5)), elements=st.floats(0.01, 1.0)))
    def test_idempotent(self, raw):
        raw = raw / raw.sum(axis=1, keepdims=True)
        once = validate_probability_matrix(raw)
        twice = validate_probability_matrix(once.values)
        np.testing.assert_array_equal(once.values, twice.values)


class TestSelectionVector:
    def test_sorted_and_masked(self):
        z = SelectionVector((3, 0, 2), 5)
        assert z.indices == (0, 2, 3)
        assert len(z) == 3
        np.testing.assert_array_equal(z.mask(), [True, False, True, True, False])

    def test_round_trip_mask(self):
        z = SelectionVector((1, 4), 6)
        assert SelectionVector.from_mask(z.mask()) == z

    def test_duplicates_rejected(self):
        with pytest.raises(ValidationError):
            SelectionVector((1, 1), 3)

    @pytest.mark.parametrize("idx", [(-1,), (3,)])
    def test_out_of_range(self, idx):
        with pytest.raises(ValidationError):
            SelectionVector(idx, 3)

    def test_soft_counts(self):
        p = ProbabilityMatrix(np.array([[0.2, 0.8], [0.5, 0.5], [1.0, 0.0]]))
        np.testing.assert_allclose(p.soft_counts(SelectionVector((0, 2), 3)), [1.2, 0.8])
        with pytest.raises(DimensionMismatch):
            p.soft_counts(SelectionVector((0,), 4))


class TestSmallTypes:
    def test_balance_target_rejects_negative(self):
        with pytest.raises(ValidationError):
            BalanceTarget(np.array([1.0, -0.5]))

    def test_uncertainty_costs_are_negated(self):
        u = UncertaintyVector(np.array([0.1, 0.9]))
        np.testing.assert_array_equal(u.as_costs(), [-0.1, -0.9])

    def test_uncertainty_rejects_nan(self):
        with pytest.raises(ValidationError):
            UncertaintyVector(np.array([np.nan]))

    def test_distance_matrix_checks(self):
        assert DistanceMatrix(np.zeros((2, 3))).shape == (2, 3)
        with pytest.raises(ValidationError):
            DistanceMatrix(np.array([[-1.0]]))
        with pytest.raises(ValidationError):
            DistanceMatrix(np.array([[np.inf]]))


class TestCycleState:
    def make(self, **kw):
        base = dict(
            labeled=np.array([0, 1, 2, 3]),
            unlabeled=np.array([4, 5, 6, 7, 8]),
            class_counts=np.array([2, 2]),
            cycle=1,
            budget_per_cycle=2,
            initial_size=4,
            total_budget=8,
        )
        base.update(kw)
        return CycleState(**base)

    def test_overlap_rejected(self):
        with pytest.raises(ValidationError):
            self.make(unlabeled=np.array([3, 4]))

    def test_count_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            self.make(class_counts=np.array([2, 1]))

    def test_advance_moves_samples_and_counts_true_labels(self):
        s = self.make()
        s.check_schedule()
        nxt = s.advance([5, 8], [1, 1])
        assert nxt.cycle == 2
        np.testing.assert_array_equal(nxt.labeled, [0, 1, 2, 3, 5, 8])
        np.testing.assert_array_equal(nxt.unlabeled, [4, 6, 7])
        np.testing.assert_array_equal(nxt.class_counts, [2, 4])
        nxt.check_schedule()
        assert nxt.labeled.size + nxt.unlabeled.size == s.labeled.size + s.unlabeled.size

    def test_advance_rejects_labeled_sample(self):
        with pytest.raises(ValidationError):
            self.make().advance([0], [0])

    def test_schedule_violation(self):
        with pytest.raises(ValidationError):
            self.make(cycle=2).check_schedule()
