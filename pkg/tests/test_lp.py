"""Balancing-LP construction, objective evaluation, and MPS export."""

import numpy as np
import pytest

from biasbalance.errors import BuildError
from biasbalance.lp import (
    Constraint,
    INF,
    LinearProgram,
    LpUnit,
    build_balancing_lp,
    canonical_unit_order,
    evaluate_objective,
    to_mps,
)


def two_per_group():
    return [LpUnit(0, 1, ()), LpUnit(0, 1, ()), LpUnit(1, 1, ()), LpUnit(1, 1, ())]


class TestBuild:
    def test_counts_two_units_per_group(self):
        lp = build_balancing_lp(two_per_group(), [], 4.0)
        assert lp.num_vars == 4 + 2  # weights + one aux per same-group pair
        kinds = [c.relation for c in lp.constraints]
        assert kinds.count("=") == 2
        assert kinds.count(">=") == 4

    def test_constraint_layout(self):
        lp = build_balancing_lp(two_per_group(), [], 4.0)
        balance, total = lp.constraints[0], lp.constraints[1]
        assert balance.rhs == 0.0 and sorted(balance.coeffs) == [-1, -1, 1, 1]
        assert total.rhs == 4.0 and set(total.coeffs) == {1.0}

    def test_property_constraint_content(self):
        units = [LpUnit(0, 1, (True,)), LpUnit(0, 1, (False,)),
                 LpUnit(1, 1, (True,)), LpUnit(1, 1, (True,))]
        lp = build_balancing_lp(units, ["S_1"], 4.0)
        prop = lp.constraints[2]
        # canonical order puts the (False,) unit first within group 0
        terms = dict(zip(prop.indices, prop.coeffs))
        assert terms == {1: 1.0, 2: -1.0, 3: -1.0}  # w_a1 = w_b1 + w_b2

    def test_permutation_invariance(self, rng):
        units = [LpUnit(0, 2, (True, False)), LpUnit(0, 3, (False, False)),
                 LpUnit(1, 1, (True, True)), LpUnit(1, 5, (False, True))]
        lp1 = build_balancing_lp(units, ["P", "Q"], 11.0)
        perm = [units[i] for i in rng.permutation(len(units))]
        lp2 = build_balancing_lp(perm, ["P", "Q"], 11.0)
        assert lp1 == lp2

    def test_duplicate_labels_rejected(self):
        units = [LpUnit(0, 1, (True, True)), LpUnit(1, 1, (True, True))]
        with pytest.raises(BuildError, match="duplicate"):
            build_balancing_lp(units, ["S", "S"], 2.0)

    def test_empty_group_rejected(self):
        with pytest.raises(BuildError, match="both groups"):
            build_balancing_lp([LpUnit(0, 1, ()), LpUnit(0, 1, ())], [], 2.0)

    def test_bad_multiplicity_rejected(self):
        with pytest.raises(BuildError, match="multiplicity"):
            build_balancing_lp([LpUnit(0, 0, ()), LpUnit(1, 1, ())], [], 1.0)

    def test_one_sided_property_still_emitted(self):
        units = [LpUnit(0, 1, (True,)), LpUnit(0, 1, (False,)),
                 LpUnit(1, 1, (False,)), LpUnit(1, 1, (False,))]
        lp = build_balancing_lp(units, ["S_only_a"], 4.0)
        assert len([c for c in lp.constraints if c.relation == "="]) == 3

    def test_multiplicity_objective_coefficients(self):
        units = [LpUnit(0, 3, ()), LpUnit(0, 2, ()), LpUnit(1, 1, ()), LpUnit(1, 4, ())]
        lp = build_balancing_lp(units, [], 10.0)
        obj = dict(zip(lp.objective_indices, lp.objective_coeffs))
        # canonical order: group 0 -> (3), (2); group 1 -> (1), (4)
        mult = {i: lp.constraints[1].coeffs[lp.constraints[1].indices.index(i)]
                for i in range(4)}
        for j, lab in enumerate(lp.labels):
            if lab.kind == "weight":
                c = mult[j]
                expected = c * (c - 1) / 2.0
                if expected:
                    assert obj[j] == expected
                else:
                    assert j not in obj
            else:
                assert obj[j] == mult[lab.unit] * mult[lab.other]

    def test_aux_labels_same_group_ordered(self):
        lp = build_balancing_lp(two_per_group(), [], 4.0)
        groups = {}
        for con in (lp.constraints[0],):
            for i, c in zip(con.indices, con.coeffs):
                groups[i] = 0 if c > 0 else 1
        for lab in lp.labels:
            if lab.kind == "aux_max":
                assert lab.unit > lab.other
                assert groups[lab.unit] == groups[lab.other]

    def test_variable_counts_deterministic_formula(self):
        for na, nb, props in [(3, 4, 0), (5, 5, 3), (2, 7, 2)]:
            units = ([LpUnit(0, 1, tuple([False] * props)) for _ in range(na)]
                     + [LpUnit(1, 1, tuple([False] * props)) for _ in range(nb)])
            lp = build_balancing_lp(units, [f"S{i}" for i in range(props)], na + nb)
            expected_aux = na * (na - 1) // 2 + nb * (nb - 1) // 2
            assert lp.num_vars == na + nb + expected_aux
            # all-False memberships make the property sets empty: no rows
            assert len(lp.constraints) == 2 + 2 * expected_aux

    def test_full_scale_aux_count_formula(self):
        # At full test-set scale without class collapse the pair count per
        # group of ~900 positive examples is ~405k, ~810k over both groups.
        per_group = 900 * 899 // 2
        assert per_group == 404_550
        assert 2 * per_group == 809_100


class TestEvaluateObjective:
    def test_uniform_three(self):
        assert evaluate_objective([1, 1, 1], [0, 0, 0]) == 3.0

    def test_hand_case(self):
        assert evaluate_objective([2, 0, 1, 1], [0, 0, 1, 1]) == 3.0

    def test_multiplicity_expansion_matches_copies(self, rng):
        for _ in range(20):
            k = int(rng.integers(2, 6))
            w = rng.uniform(0, 3, k)
            g = rng.integers(0, 2, k)
            mult = rng.integers(1, 5, k)
            expanded_w = np.repeat(w, mult)
            expanded_g = np.repeat(g, mult)
            assert evaluate_objective(w, g, mult) == pytest.approx(
                evaluate_objective(expanded_w, expanded_g), rel=1e-12)

    def test_sorted_identity(self, rng):
        # definitional pairwise sum equals sum_i i*w_(i) - sum_i w_i per group
        for _ in range(50):
            w = rng.uniform(0, 5, int(rng.integers(1, 30)))
            direct = evaluate_objective(w, np.zeros(len(w), dtype=int))
            s = np.sort(w)
            identity = float(np.arange(1, len(w) + 1) @ s) - float(w.sum())
            assert direct == pytest.approx(identity, rel=1e-12, abs=1e-12)

    def test_non_finite_rejected(self):
        with pytest.raises(BuildError):
            evaluate_objective([1.0, float("nan")], [0, 0])


class TestMaxViolation:
    def test_zero_on_feasible_point(self):
        lp = build_balancing_lp(two_per_group(), [], 4.0)
        x = np.array([1.0, 1.0, 1.0, 1.0, 1.0, 1.0])
        assert lp.max_violation(x) == 0.0

    def test_detects_equality_violation(self):
        lp = build_balancing_lp(two_per_group(), [], 4.0)
        x = np.array([2.0, 1.0, 1.0, 1.0, 2.0, 1.0])
        assert lp.max_violation(x) == pytest.approx(1.0)

    def test_detects_bound_violation(self):
        lp = LinearProgram(num_vars=1, lower=(0.0,), upper=(2.0,),
                           constraints=(), objective_indices=(0,),
                           objective_coeffs=(1.0,))
        assert lp.max_violation(np.array([-0.5])) == pytest.approx(0.5)
        assert lp.max_violation(np.array([2.75])) == pytest.approx(0.75)


class TestMps:
    def test_export_structure(self):
        units = [LpUnit(0, 1, (True,)), LpUnit(0, 1, (False,)),
                 LpUnit(1, 1, (True,)), LpUnit(1, 1, (True,))]
        lp = build_balancing_lp(units, ["S_1"], 4.0)
        text = to_mps(lp, name="HAND")
        assert text.startswith("NAME HAND\nROWS\n N OBJ\n")
        assert text.rstrip().endswith("ENDATA")
        assert " E R0" in text and " E R1" in text and " E R2" in text
        assert " G R3" in text
        assert "RHS R1 4" in text  # only the non-zero right-hand side

    def test_numbers_fixed_point(self):
        lp = LinearProgram(num_vars=1, lower=(0.25,), upper=(INF,),
                           constraints=(Constraint((0,), (1.5,), ">=", 0.1),),
                           objective_indices=(0,), objective_coeffs=(1.0 / 3.0,))
        text = to_mps(lp)
        assert "0.333333333333" in text
        assert "1.5" in text
        assert "LO BND X0 0.25" in text
        assert "e" not in text.replace("ENDATA", "").replace("NAME", "")
