"""Shared fixtures: hand-built datasets, instance generators, optional real data."""

from __future__ import annotations

import itertools
import os
from pathlib import Path

import numpy as np
import pytest

from biasbalance import synth
from biasbalance.data import Candidate, Dataset, Example, Group, PropertySet

# ---------------------------------------------------------------------------
# Hand-built fixtures


def example_with_names(ex_id: str, group: Group, name_offsets: list[int],
                       name_len: int, pronoun_offset: int,
                       correct_offset: int | None) -> Example:
    """Example over a padded text with names at exact character offsets."""
    length = max([pronoun_offset + 3] + [o + name_len for o in name_offsets]) + 8
    chars = ["x"] * length
    pronoun = "he" if group is Group.MASCULINE else "she"
    spans = []
    for i, off in enumerate(sorted(name_offsets)):
        token = f"N{i}".ljust(name_len, "n")[:name_len]
        chars[off:off + name_len] = token
        spans.append((off, off + name_len))
    chars[pronoun_offset:pronoun_offset + len(pronoun)] = pronoun
    text = "".join(chars)
    if correct_offset is not None:
        a = Candidate(text[correct_offset:correct_offset + name_len],
                      correct_offset, True)
    else:
        first = sorted(name_offsets)[0]
        a = Candidate(text[first:first + name_len], first, False)
    other = [o for o in sorted(name_offsets) if o != (correct_offset or -1)]
    b_off = other[0] if other else sorted(name_offsets)[0]
    b = Candidate(text[b_off:b_off + name_len], b_off, False)
    return Example(id=ex_id, group=group, text=text, pronoun=pronoun,
                   pronoun_offset=pronoun_offset, candidate_a=a, candidate_b=b,
                   url="http://example.invalid", name_spans=tuple(spans))


@pytest.fixture
def four_example_dataset() -> tuple[Dataset, list[PropertySet]]:
    """Two units per group with one property set tying a1 to both b's."""
    examples = (
        synth.make_example("a1", Group.MASCULINE, 3, 1),
        synth.make_example("a2", Group.MASCULINE, 2, 1),
        synth.make_example("b1", Group.FEMININE, 3, 1),
        synth.make_example("b2", Group.FEMININE, 2, 2),
    )
    dataset = Dataset(examples=examples)
    props = [PropertySet(label="S_1", members=frozenset({"a1", "b1", "b2"}))]
    return dataset, props


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260810)


# ---------------------------------------------------------------------------
# Random LP instances and the vertex-enumeration oracle


def random_box_lp(rng: np.random.Generator, n_vars: int, n_rows: int):
    """A feasible bounded LP: rows pass through a random interior point."""
    from biasbalance.lp import Constraint, LinearProgram

    lower = np.round(rng.uniform(-2.0, 0.0, n_vars), 3)
    upper = lower + np.round(rng.uniform(0.5, 3.0, n_vars), 3)
    x0 = lower + (upper - lower) * rng.uniform(0.2, 0.8, n_vars)
    constraints = []
    for _ in range(n_rows):
        coeffs = np.round(rng.uniform(-2, 2, n_vars), 3)
        kind = rng.choice(["<=", ">=", "="], p=[0.45, 0.45, 0.1])
        base = float(coeffs @ x0)
        if kind == "<=":
            rhs = base + float(rng.uniform(0.1, 1.0))
        elif kind == ">=":
            rhs = base - float(rng.uniform(0.1, 1.0))
        else:
            rhs = base
        constraints.append(Constraint(tuple(range(n_vars)),
                                      tuple(float(c) for c in coeffs), kind, rhs))
    objective = np.round(rng.uniform(-2, 2, n_vars), 3)
    return LinearProgram(
        num_vars=n_vars,
        lower=tuple(float(v) for v in lower),
        upper=tuple(float(v) for v in upper),
        constraints=tuple(constraints),
        objective_indices=tuple(range(n_vars)),
        objective_coeffs=tuple(float(c) for c in objective),
    )


def enumerate_vertices_minimum(lp) -> float:
    """Exhaustive vertex enumeration over active-set combinations."""
    n = lp.num_vars
    planes = []  # (normal, rhs)
    for con in lp.constraints:
        row = np.zeros(n)
        row[list(con.indices)] = con.coeffs
        planes.append((row, con.rhs))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        planes.append((e, lp.lower[j]))
        planes.append((e.copy(), lp.upper[j]))
    obj = np.zeros(n)
    for j, c in zip(lp.objective_indices, lp.objective_coeffs):
        obj[j] += c
    best = np.inf
    for combo in itertools.combinations(range(len(planes)), n):
        A = np.array([planes[i][0] for i in combo])
        b = np.array([planes[i][1] for i in combo])
        if abs(np.linalg.det(A)) < 1e-9:
            continue
        x = np.linalg.solve(A, b)
        if _feasible(lp, x):
            best = min(best, float(obj @ x))
    return best


def _feasible(lp, x, tol=1e-7) -> bool:
    return lp.max_violation(np.asarray(x)) <= tol


def random_balancing_instance(rng: np.random.Generator, n_examples: int,
                              n_props: int):
    """Dataset plus property sets guaranteed solvable by construction."""
    from biasbalance.balancer import compute_weights
    from biasbalance.errors import BalanceError

    for _ in range(50):
        ds = synth.make_dataset(rng, n_examples, positive_fraction=1.0)
        groups = {ex.group for ex in ds.positive()}
        if len(groups) < 2:
            continue
        props = synth.random_property_sets(rng, ds, n_props)
        try:
            compute_weights(ds, props)
        except BalanceError:
            continue
        return ds, props
    raise AssertionError("could not generate a feasible instance")


# ---------------------------------------------------------------------------
# Optional real data

GAP_FILES = {
    "dataset": "gap-test.tsv",
    "annotations": "gap-test-annotations.jsonl",
    "released_weights": "gap-test-W-weights.tsv",  # optional
}


@pytest.fixture(scope="session")
def gap_paths():
    root = Path(os.environ.get("GAP_DATA_DIR", Path(__file__).parent.parent / "data"))
    dataset = root / GAP_FILES["dataset"]
    annotations = root / GAP_FILES["annotations"]
    if not dataset.exists() or not annotations.exists():
        pytest.skip(
            f"real test-set data not present (expected {dataset} and {annotations}); "
            "see README for how to supply it"
        )
    return {
        "dataset": dataset,
        "annotations": annotations,
        "released_weights": root / GAP_FILES["released_weights"],
    }


@pytest.fixture(scope="session")
def gap_dataset(gap_paths):
    from biasbalance.data import parse_gap_tsv, parse_name_annotations

    dataset = parse_gap_tsv(gap_paths["dataset"].read_bytes())
    return parse_name_annotations(gap_paths["annotations"].read_bytes(), dataset)
