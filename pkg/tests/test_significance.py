"""Approximate randomization test against the exhaustive enumeration oracle."""

import numpy as np
import pytest

from biasbalance import synth
from biasbalance.data import Dataset, Group, PredictionSet
from biasbalance.errors import DataFormatError
from biasbalance.significance import (
    exact_randomization_test,
    randomization_test,
)


def flip(preds: PredictionSet, ex, to_correct: bool) -> PredictionSet:
    verdicts = dict(preds.verdicts)
    a = ex.candidate_a.is_coreferent if to_correct else not ex.candidate_a.is_coreferent
    b = ex.candidate_b.is_coreferent if to_correct else not ex.candidate_b.is_coreferent
    verdicts[ex.id] = (a, b)
    return PredictionSet(verdicts=verdicts)


@pytest.fixture
def ten_example_dataset(rng):
    while True:
        ds = synth.make_dataset(rng, 10, positive_fraction=1.0)
        if (len(ds.positive_group(Group.MASCULINE)) >= 3
                and len(ds.positive_group(Group.FEMININE)) >= 3):
            return ds


class TestRandomizationTest:
    def test_identical_models_give_p_one(self, ten_example_dataset):
        ds = ten_example_dataset
        preds = synth.gold_predictions(ds)
        result = randomization_test(preds, preds, ds, iterations=500, seed=0)
        assert result.observed == 0.0
        assert result.p_value == 1.0

    def test_symmetric_in_model_order(self, ten_example_dataset, rng):
        ds = ten_example_dataset
        gold = synth.gold_predictions(ds)
        weaker = flip(gold, ds.positive()[0], to_correct=False)
        weaker = flip(weaker, ds.positive()[3], to_correct=False)
        r12 = randomization_test(gold, weaker, ds, iterations=2000, seed=5)
        r21 = randomization_test(weaker, gold, ds, iterations=2000, seed=5)
        assert r12.observed == pytest.approx(r21.observed)
        assert r12.p_value == pytest.approx(r21.p_value)

    def test_monte_carlo_matches_exact_within_ci(self, ten_example_dataset):
        ds = ten_example_dataset
        gold = synth.gold_predictions(ds)
        weaker = flip(gold, ds.positive()[1], to_correct=False)
        observed, p_exact = exact_randomization_test(gold, weaker, ds)
        iters = 4000
        result = randomization_test(gold, weaker, ds, iterations=iters, seed=11)
        assert result.observed == pytest.approx(observed)
        half_width = 2.576 * np.sqrt(p_exact * (1 - p_exact) / iters) + 2.0 / iters
        assert abs(result.p_value - p_exact) <= half_width

    def test_weighted_metric_against_exact(self, ten_example_dataset):
        from biasbalance.balancer import compute_weights

        ds = ten_example_dataset
        assignment = compute_weights(ds, [])
        gold = synth.gold_predictions(ds)
        weaker = flip(gold, ds.positive()[2], to_correct=False)
        observed, p_exact = exact_randomization_test(
            gold, weaker, ds, weights=assignment.weights, metric="weighted-bias")
        iters = 4000
        result = randomization_test(gold, weaker, ds, weights=assignment.weights,
                                    metric="weighted-bias", iterations=iters,
                                    seed=13)
        assert result.observed == pytest.approx(observed)
        half_width = 2.576 * np.sqrt(p_exact * (1 - p_exact) / iters) + 2.0 / iters
        assert abs(result.p_value - p_exact) <= half_width

    def test_deterministic_under_seed(self, ten_example_dataset):
        ds = ten_example_dataset
        gold = synth.gold_predictions(ds)
        weaker = flip(gold, ds.positive()[0], to_correct=False)
        a = randomization_test(gold, weaker, ds, iterations=1000, seed=3)
        b = randomization_test(gold, weaker, ds, iterations=1000, seed=3)
        assert a == b

    def test_p_always_positive(self, ten_example_dataset):
        ds = ten_example_dataset
        gold = synth.gold_predictions(ds)
        weaker = PredictionSet(verdicts={ex.id: (False, False) for ex in ds})
        # all-false model scores zero in every group; skip if undefined overall
        try:
            result = randomization_test(gold, weaker, ds, iterations=200, seed=0)
        except Exception:
            return
        assert result.p_value > 0.0

    def test_undefined_permutations_counted_conservatively(self, rng):
        # model 1 solves a single masculine example, model 2 a different one;
        # swapping both zeroes one model's masculine score
        while True:
            ds = synth.make_dataset(rng, 8, positive_fraction=1.0)
            masc = ds.positive_group(Group.MASCULINE)
            fem = ds.positive_group(Group.FEMININE)
            if len(masc) >= 2 and len(fem) >= 1:
                break
        none = {ex.id: (False, False) for ex in ds}
        p1 = dict(none)
        p2 = dict(none)
        gold = synth.gold_predictions(ds)
        p1[masc[0].id] = gold.verdicts[masc[0].id]
        p2[masc[1].id] = gold.verdicts[masc[1].id]
        for fx in fem:
            p1[fx.id] = gold.verdicts[fx.id]
            p2[fx.id] = gold.verdicts[fx.id]
        result = randomization_test(PredictionSet(verdicts=p1),
                                    PredictionSet(verdicts=p2), ds,
                                    iterations=500, seed=2)
        assert result.undefined_iterations > 0
        assert 0 < result.p_value <= 1.0

    def test_missing_coverage_rejected(self, ten_example_dataset):
        ds = ten_example_dataset
        gold = synth.gold_predictions(ds)
        partial = PredictionSet(verdicts=dict(list(gold.verdicts.items())[:3]))
        with pytest.raises(DataFormatError, match="cover"):
            randomization_test(gold, partial, ds)

    def test_unknown_metric_rejected(self, ten_example_dataset):
        ds = ten_example_dataset
        gold = synth.gold_predictions(ds)
        with pytest.raises(DataFormatError, match="metric"):
            randomization_test(gold, gold, ds, metric="f1-bias")


class TestExactOracle:
    def test_size_guard(self, rng):
        ds = synth.make_dataset(rng, 25, positive_fraction=1.0)
        gold = synth.gold_predictions(ds)
        with pytest.raises(DataFormatError, match="limited"):
            exact_randomization_test(gold, gold, ds)

    def test_identical_models_exact_p_one(self, ten_example_dataset):
        ds = ten_example_dataset
        gold = synth.gold_predictions(ds)
        observed, p = exact_randomization_test(gold, gold, ds)
        assert observed == 0.0 and p == 1.0
