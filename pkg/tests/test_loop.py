import numpy as np
import pytest

from cbal.errors import BudgetExceedsPool, ConfigInvalid
from cbal.simulator.data import DatasetSpec, make_longtail_dataset
from cbal.simulator.learner import LearnerConfig
from cbal.simulator.loop import METHODS, LoopConfig, run_al_loop

FAST = LearnerConfig(epochs=50)


@pytest.fixture(scope="module")
def small_ds():
    return make_longtail_dataset(
        DatasetSpec(n_classes=4, samples_per_class=120, feature_dim=4, imbalance_factor=0.3, seed=0, test_per_class=25)
    )


def cfg(**kw):
    base = dict(initial_size=40, budget_per_cycle=20, total_budget=100, lambda_=0.5, learner=FAST, bald_samples=3)
    base.update(kw)
    return LoopConfig(**base)


class TestConfig:
    def test_cycle_count(self):
        assert LoopConfig(100, 50, 300).n_cycles == 4

    def test_indivisible_budget(self):
        with pytest.raises(ConfigInvalid):
            LoopConfig(100, 30, 300)

    def test_bad_solver(self):
        with pytest.raises(ConfigInvalid):
            LoopConfig(10, 5, 20, solver="magic")

    def test_budget_exceeds_pool(self, small_ds):
        with pytest.raises(BudgetExceedsPool):
            run_al_loop(small_ds, "random", cfg(total_budget=40 + 20 * 100))

    def test_unknown_method(self, small_ds):
        with pytest.raises(ConfigInvalid):
            run_al_loop(small_ds, "oracle_peek", cfg())


class TestRuns:
    @pytest.mark.parametrize("method", METHODS)
    def test_every_method_completes_with_valid_records(self, small_ds, method):
        rec = run_al_loop(small_ds, method, cfg())
        assert len(rec.cycles) == 3
        sizes = [c.labeled_size for c in rec.cycles]
        assert sizes == [60, 80, 100]
        for c in rec.cycles:
            assert sum(c.histogram) == 20
            assert sum(c.class_counts) == c.labeled_size
            assert 0.0 <= c.l1_score <= 1.0
            assert 0.0 <= c.test_accuracy <= 1.0
        # cumulative counts grow by exactly the revealed histograms
        prev = np.full(4, 10)
        for c in rec.cycles:
            np.testing.assert_array_equal(np.array(c.class_counts) - prev, c.histogram)
            prev = np.array(c.class_counts)

    def test_deterministic(self, small_ds):
        a = run_al_loop(small_ds, "bald_cb", cfg(seed=3))
        b = run_al_loop(small_ds, "bald_cb", cfg(seed=3))
        assert [c.histogram for c in a.cycles] == [c.histogram for c in b.cycles]
        assert a.accuracies.tolist() == b.accuracies.tolist()

    def test_exact_solver_in_loop(self, small_ds):
        rec = run_al_loop(small_ds, "entropy_cb", cfg(solver="branch_and_bound", budget_per_cycle=4,
                                                      total_budget=48, time_limit=30))
        assert len(rec.cycles) == 2
        assert all(c.proof in ("optimal", "heuristic") for c in rec.cycles)

    def test_final_size(self):
        ds = make_longtail_dataset(DatasetSpec(4, 250, 3, imbalance_factor=1.0, seed=1, test_per_class=10))
        rec = run_al_loop(ds, "entropy", LoopConfig(100, 50, 300, learner=FAST))
        assert len(rec.cycles) == 4
        assert rec.cycles[-1].labeled_size == 300


def test_random_selection_is_uniform_on_balanced_pool():
    ds = make_longtail_dataset(DatasetSpec(4, 200, 2, imbalance_factor=1.0, seed=0, test_per_class=5))
    totals = np.zeros(4)
    seeds = 30
    for seed in range(seeds):
        rec = run_al_loop(ds, "random", LoopConfig(40, 40, 80, seed=seed, learner=LearnerConfig(epochs=5)))
        totals += rec.cycles[0].histogram
    share = totals / totals.sum()
    # 1200 draws; a class share standard error is about 0.0125
    np.testing.assert_allclose(share, 0.25, atol=0.05)
