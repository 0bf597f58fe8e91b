"""Class collapse, weight computation, trimming, and weight-file interchange."""

import json

import numpy as np
import pytest

from biasbalance import synth
from biasbalance.balancer import (
    BalancerConfig,
    assignment_metadata,
    check_weight_cover,
    collapse_classes,
    compute_weights,
    trim,
    weights_from_tsv,
    weights_to_tsv,
)
from biasbalance.data import Dataset, Group, PropertySet, derive_property_sets
from biasbalance.errors import (
    BuildError,
    DataFormatError,
    InfeasibleError,
    StaleWeightsError,
)
from biasbalance.lp import evaluate_objective
from biasbalance.simplex import SolverConfig

from conftest import random_balancing_instance


class TestCollapse:
    def test_no_properties_two_classes(self, rng):
        ds = synth.make_dataset(rng, 20, positive_fraction=1.0)
        classes = collapse_classes(ds, [])
        assert len(classes) == 2
        assert {c.group for c in classes} == {Group.MASCULINE, Group.FEMININE}
        assert sum(c.multiplicity for c in classes) == len(ds.positive())

    def test_toy_signatures(self, four_example_dataset):
        ds, props = four_example_dataset
        classes = collapse_classes(ds, props)
        members = sorted(tuple(sorted(c.member_ids)) for c in classes)
        assert members == [("a1",), ("a2",), ("b1", "b2")]

    def test_partition_of_positives(self, rng):
        ds = synth.make_dataset(rng, 30, positive_fraction=0.8)
        props = synth.random_property_sets(rng, ds, 3)
        classes = collapse_classes(ds, props)
        collected = sorted(i for c in classes for i in c.member_ids)
        assert collected == sorted(ex.id for ex in ds.positive())

    def test_unknown_ids_rejected(self, rng):
        ds = synth.make_dataset(rng, 6)
        with pytest.raises(DataFormatError, match="unknown ids"):
            collapse_classes(ds, [PropertySet("S", frozenset({"ghost"}))])


class TestComputeWeights:
    def test_uniform_for_balanced_groups(self, rng):
        ds = synth.make_dataset(rng, 20, feminine_fraction=0.5, positive_fraction=1.0)
        while len(ds.positive_group(Group.MASCULINE)) != 10:
            ds = synth.make_dataset(rng, 20, positive_fraction=1.0)
        assignment = compute_weights(ds, [])
        assert all(w == pytest.approx(1.0, abs=1e-12)
                   for w in assignment.weights.values())

    def test_hand_instance_unique_optimum(self, four_example_dataset):
        ds, props = four_example_dataset
        assignment = compute_weights(ds, props)
        assert assignment.weights["a1"] == pytest.approx(2.0, abs=1e-9)
        assert assignment.weights["a2"] == pytest.approx(0.0, abs=1e-9)
        assert assignment.weights["b1"] == pytest.approx(1.0, abs=1e-9)
        assert assignment.weights["b2"] == pytest.approx(1.0, abs=1e-9)
        assert assignment.objective == pytest.approx(3.0, abs=1e-9)
        assert assignment.lambda_a == pytest.approx(1.0)
        assert assignment.lambda_b == pytest.approx(1.0)

    def test_constraints_hold_by_direct_summation(self, rng):
        for _ in range(15):
            ds, props = random_balancing_instance(rng, int(rng.integers(6, 40)),
                                                  int(rng.integers(0, 4)))
            assignment = compute_weights(ds, props)
            positive = ds.positive()
            n = len(positive)
            assert all(w >= 0 for w in assignment.weights.values())
            total = sum(assignment.weights.values())
            assert total == pytest.approx(n, abs=1e-6)
            for group in Group:
                s = sum(assignment.weights[ex.id]
                        for ex in positive if ex.group is group)
                assert s == pytest.approx(n / 2.0, abs=1e-6)
            for ps in props:
                sa = sum(assignment.weights[ex.id] for ex in positive
                         if ex.group is Group.MASCULINE and ex.id in ps.members)
                sb = sum(assignment.weights[ex.id] for ex in positive
                         if ex.group is Group.FEMININE and ex.id in ps.members)
                assert sa == pytest.approx(sb, abs=1e-6)

    def test_collapse_equals_naive(self, rng):
        for _ in range(8):
            ds, props = random_balancing_instance(rng, int(rng.integers(6, 13)),
                                                  int(rng.integers(0, 4)))
            collapsed = compute_weights(ds, props)
            naive = compute_weights(ds, props, BalancerConfig(naive=True))
            assert collapsed.objective == pytest.approx(naive.objective, abs=1e-7,
                                                        rel=1e-7)

    def test_class_members_share_weight(self, rng):
        ds, props = random_balancing_instance(rng, 24, 2)
        assignment = compute_weights(ds, props)
        for cls in collapse_classes(ds, props):
            values = {assignment.weights[i] for i in cls.member_ids}
            assert len(values) == 1

    def test_objective_matches_definitional_sum(self, rng):
        ds, props = random_balancing_instance(rng, 30, 3)
        assignment = compute_weights(ds, props)
        positive = ds.positive()
        expanded = evaluate_objective(
            [assignment.weights[ex.id] for ex in positive],
            [0 if ex.group is Group.MASCULINE else 1 for ex in positive])
        assert expanded == pytest.approx(assignment.objective, rel=1e-9, abs=1e-9)

    def test_infeasible_raises_with_certificate(self, rng):
        ds = synth.make_dataset(rng, 12, positive_fraction=1.0)
        masc = frozenset(ex.id for ex in ds.positive()
                         if ex.group is Group.MASCULINE)
        with pytest.raises(InfeasibleError):
            compute_weights(ds, [PropertySet("S_all_masc", masc)])

    def test_one_sided_property_forces_zero_and_is_reported(self, rng):
        ds = synth.make_dataset(rng, 16, positive_fraction=1.0)
        masc = [ex.id for ex in ds.positive() if ex.group is Group.MASCULINE]
        solo = PropertySet("S_solo", frozenset({masc[0]}))
        assignment = compute_weights(ds, [solo])
        assert assignment.weights[masc[0]] == 0.0
        assert assignment.one_sided_properties == ("S_solo",)

    def test_empty_group_rejected(self, rng):
        ds = synth.make_dataset(rng, 10, feminine_fraction=0.0)
        with pytest.raises(DataFormatError, match="both groups"):
            compute_weights(ds, [])

    def test_naive_limit_guard(self, rng):
        ds = synth.make_dataset(rng, 30, positive_fraction=1.0)
        with pytest.raises(BuildError, match="naive"):
            compute_weights(ds, [], BalancerConfig(naive=True, naive_limit=10))

    def test_ablation_names_only_balances_name_sets(self, rng):
        ds = synth.make_dataset(rng, 60, positive_fraction=1.0,
                                feminine_fraction=0.4, mean_names=3.0,
                                max_names=6)
        names_only = derive_property_sets(ds, ["names"])
        assignment = compute_weights(ds, names_only)
        positive = ds.positive()
        for ps in names_only:
            sa = sum(assignment.weights[ex.id] for ex in positive
                     if ex.group is Group.MASCULINE and ex.id in ps.members)
            sb = sum(assignment.weights[ex.id] for ex in positive
                     if ex.group is Group.FEMININE and ex.id in ps.members)
            assert sa == pytest.approx(sb, abs=1e-6)
        # distance sets are intentionally not asserted balanced here; record
        # the observed imbalance to make the asymmetry visible
        distance_sets = derive_property_sets(ds, ["distance"])
        gaps = []
        for ps in distance_sets:
            sa = sum(assignment.weights[ex.id] for ex in positive
                     if ex.group is Group.MASCULINE and ex.id in ps.members)
            sb = sum(assignment.weights[ex.id] for ex in positive
                     if ex.group is Group.FEMININE and ex.id in ps.members)
            gaps.append(abs(sa - sb))
        assert all(g >= 0 for g in gaps)


class TestTrim:
    def test_identity_when_within_limits(self, rng):
        ds = synth.make_dataset(rng, 15, max_names=10, mean_rank=1.5)
        trimmed = trim(ds, max_names=20, max_rank=10)
        assert trimmed == ds

    def test_boundaries(self):
        keep_names = synth.make_example("k1", Group.MASCULINE, 15, 1)
        drop_names = synth.make_example("d1", Group.MASCULINE, 16, 2)
        keep_rank = synth.make_example("k2", Group.FEMININE, 8, 4)
        drop_rank = synth.make_example("d2", Group.FEMININE, 8, 5)
        no_rank = synth.make_example("k3", Group.FEMININE, 8, None)
        ds = Dataset(examples=(keep_names, drop_names, keep_rank, drop_rank, no_rank))
        trimmed = trim(ds)
        assert {ex.id for ex in trimmed} == {"k1", "k2", "k3"}

    def test_idempotent(self, rng):
        ds = synth.make_dataset(rng, 40, max_names=20, mean_rank=3.0)
        once = trim(ds)
        assert trim(once) == once

    def test_unmatched_candidate_passes_rank_filter(self):
        ex = synth.make_example("u1", Group.MASCULINE, 5, 1,
                                unmatched_candidate=True)
        ds = Dataset(examples=(ex,))
        assert trim(ds).n == 1


class TestWeightFiles:
    def test_roundtrip_12_digits(self, four_example_dataset):
        ds, props = four_example_dataset
        assignment = compute_weights(ds, props)
        text = weights_to_tsv(assignment)
        assert text.splitlines()[0] == "ID\tweight"
        parsed = weights_from_tsv(text)
        for k, v in assignment.weights.items():
            assert parsed[k] == pytest.approx(v, rel=1e-11, abs=1e-11)

    def test_rejects_negative_and_malformed(self):
        with pytest.raises(DataFormatError):
            weights_from_tsv("e1\t-0.5\n")
        with pytest.raises(DataFormatError):
            weights_from_tsv("e1\tspam\n")
        with pytest.raises(DataFormatError, match="duplicate"):
            weights_from_tsv("e1\t1\ne1\t2\n")

    def test_metadata_fields(self, four_example_dataset):
        ds, props = four_example_dataset
        assignment = compute_weights(ds, props)
        meta = assignment_metadata(assignment)
        assert meta["n"] == 4.0
        assert meta["property_labels"] == ["S_1"]
        assert meta["zero_weights"] == 1
        assert json.dumps(meta)  # serializable

    def test_check_weight_cover(self):
        with pytest.raises(StaleWeightsError, match="missing"):
            check_weight_cover({"a": 1.0}, ["a", "b"])


class TestDeterminism:
    def test_identical_reruns(self, rng):
        ds, props = random_balancing_instance(rng, 35, 3)
        a = compute_weights(ds, props)
        b = compute_weights(ds, props)
        assert a.weights == b.weights
        assert a.objective == b.objective

    def test_backends_agree_on_objective(self, rng):
        ds, props = random_balancing_instance(rng, 25, 2)
        auto = compute_weights(ds, props)
        forced_self = compute_weights(
            ds, props, BalancerConfig(solver=SolverConfig(backend="self")))
        forced_scipy = compute_weights(
            ds, props, BalancerConfig(solver=SolverConfig(backend="scipy")))
        assert forced_self.objective == pytest.approx(auto.objective, rel=1e-7)
        assert forced_scipy.objective == pytest.approx(auto.objective, rel=1e-7)
