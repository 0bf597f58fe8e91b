"""Synthetic datasets in the real input format, for self-checks and tests.

Examples are built as a row of name tokens followed by the pronoun, so
character distance to the pronoun decreases with token index: the k-th closest
name is the k-th token from the end. That makes name counts and correct-
candidate ranks directly scriptable.
"""

from __future__ import annotations

import numpy as np

from .data import Candidate, Dataset, Example, Group, PredictionSet, PropertySet

_PRONOUN = {Group.MASCULINE: "he", Group.FEMININE: "she"}


def make_example(ex_id: str, group: Group, n_names: int,
                 correct_rank: int | None = None,
                 unmatched_candidate: bool = False) -> Example:
    """One synthetic example with the given name count and correct-candidate
    rank (None: no positive candidate). ``unmatched_candidate`` points the
    coreferent candidate at a token that is not annotated as a name."""
    if correct_rank is not None and not unmatched_candidate:
        if not 1 <= correct_rank <= n_names:
            raise ValueError("correct_rank must be in [1, n_names]")
    tokens = [f"Name{i:03d}" for i in range(n_names)]
    extra = "Qtoken"
    parts = tokens + [extra, _PRONOUN[group]]
    text = " ".join(parts) + " went home."
    offsets = []
    pos = 0
    for tok in parts:
        offsets.append(pos)
        pos += len(tok) + 1
    name_spans = tuple(
        (offsets[i], offsets[i] + len(tokens[i])) for i in range(n_names)
    )
    pronoun_offset = offsets[len(parts) - 1]
    extra_offset = offsets[len(tokens)]

    if correct_rank is None:
        a = Candidate(tokens[0] if tokens else extra,
                      offsets[0] if tokens else extra_offset, False)
        b = Candidate(extra, extra_offset, False)
    elif unmatched_candidate:
        a = Candidate(extra, extra_offset, True)
        b = Candidate(tokens[0] if tokens else extra,
                      offsets[0] if tokens else extra_offset, False)
    else:
        correct_idx = n_names - correct_rank  # pronoun is last: k-th closest
        a = Candidate(tokens[correct_idx], offsets[correct_idx], True)
        wrong_idx = 0 if correct_idx != 0 else min(1, n_names - 1)
        if wrong_idx == correct_idx:
            b = Candidate(extra, extra_offset, False)
        else:
            b = Candidate(tokens[wrong_idx], offsets[wrong_idx], False)
    return Example(
        id=ex_id,
        group=group,
        text=text,
        pronoun=_PRONOUN[group],
        pronoun_offset=pronoun_offset,
        candidate_a=a,
        candidate_b=b,
        url="http://example.invalid",
        name_spans=name_spans,
    )


def make_dataset(rng: np.random.Generator, n_examples: int,
                 feminine_fraction: float = 0.5,
                 mean_names: float = 5.0,
                 max_names: int = 20,
                 positive_fraction: float = 0.9,
                 unmatched_fraction: float = 0.0,
                 mean_rank: float = 2.0) -> Dataset:
    """Random dataset with roughly the given distributional shape."""
    examples = []
    for i in range(n_examples):
        group = Group.FEMININE if rng.random() < feminine_fraction else Group.MASCULINE
        k = int(np.clip(rng.poisson(mean_names) + 1, 1, max_names))
        if rng.random() >= positive_fraction:
            rank = None
            unmatched = False
        elif unmatched_fraction and rng.random() < unmatched_fraction:
            rank = 1
            unmatched = True
        else:
            rank = int(min(rng.geometric(1.0 / mean_rank), k))
            unmatched = False
        examples.append(make_example(f"syn-{i:05d}", group, k,
                                     correct_rank=rank,
                                     unmatched_candidate=unmatched))
    return Dataset(examples=tuple(examples))


def make_mirrored_dataset(n_pairs: int, rng: np.random.Generator,
                          mean_names: float = 4.0, max_names: int = 12,
                          mean_rank: float = 2.0) -> Dataset:
    """Perfectly balanced dataset: every masculine example has a feminine twin
    with the same name count and rank, so uniform weights are optimal."""
    examples = []
    for i in range(n_pairs):
        k = int(np.clip(rng.poisson(mean_names) + 1, 1, max_names))
        rank = int(min(rng.geometric(1.0 / mean_rank), k))
        examples.append(make_example(f"m-{i:04d}", Group.MASCULINE, k, rank))
        examples.append(make_example(f"f-{i:04d}", Group.FEMININE, k, rank))
    return Dataset(examples=tuple(examples))


def random_property_sets(rng: np.random.Generator, dataset: Dataset,
                         count: int, both_sides: bool = True) -> list[PropertySet]:
    """Random example subsets; with ``both_sides`` each set touches both groups
    and leaves at least one example of each group outside."""
    masc = [ex.id for ex in dataset.positive() if ex.group is Group.MASCULINE]
    fem = [ex.id for ex in dataset.positive() if ex.group is Group.FEMININE]
    sets = []
    for j in range(count):
        if both_sides and len(masc) > 1 and len(fem) > 1:
            size_m = int(rng.integers(1, len(masc)))
            size_f = int(rng.integers(1, len(fem)))
            members = set(rng.choice(masc, size=size_m, replace=False))
            members |= set(rng.choice(fem, size=size_f, replace=False))
        else:
            pool = masc + fem
            size = int(rng.integers(1, max(2, len(pool))))
            members = set(rng.choice(pool, size=min(size, len(pool)), replace=False))
        sets.append(PropertySet(label=f"S_{j}", members=frozenset(members)))
    return sets


def gold_predictions(dataset: Dataset) -> PredictionSet:
    """The perfect predictor: every verdict equals the gold flag."""
    return PredictionSet(verdicts={
        ex.id: (ex.candidate_a.is_coreferent, ex.candidate_b.is_coreferent)
        for ex in dataset
    })
