"""Unbiased reference systems: random name choice and k-th-closest selection.

Both baselines answer with an annotated personal-name span; a span is correct
when it matches the gold coreferent candidate under the same candidate/span
matching rule the rest of the pipeline uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .data import (
    Dataset,
    Example,
    Group,
    PredictionSet,
    match_candidate_span,
    names_by_distance,
)
from .errors import DataFormatError


@dataclass(frozen=True)
class BaselineSpec:
    kind: str  # "random" | "dist-k"
    k: int = 1
    repetitions: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("random", "dist-k"):
            raise DataFormatError(f"unknown baseline kind {self.kind!r}")
        if self.k < 1:
            raise DataFormatError("k must be >= 1")
        if self.repetitions < 1:
            raise DataFormatError("repetitions must be >= 1")


def _span_verdicts(example: Example, span: tuple[int, int]) -> tuple[bool, bool]:
    text = example.text
    start, end = span
    def hits(cand):
        return start <= cand.offset < end and cand.surface in text[start:end]
    return hits(example.candidate_a), hits(example.candidate_b)


def _correct_slot(example: Example) -> int:
    """Index (in stored span order) of the span matching the coreferent
    candidate, or -1 when there is none."""
    correct = example.coreferent_candidate
    if correct is None:
        return -1
    span = match_candidate_span(example, correct)
    if span is None:
        return -1
    return example.name_spans.index(span)


@dataclass(frozen=True)
class RandomBaselineResult:
    empirical_accuracy: Mapping[Group, float]
    exact_accuracy: Mapping[Group, float]
    empirical_f1: Mapping[Group, float]
    overall_empirical_accuracy: float
    overall_exact_accuracy: float
    overall_empirical_f1: float
    sample: PredictionSet
    repetitions: int
    seed: int


def random_exact_accuracy(dataset: Dataset) -> dict[Group, float]:
    """Closed-form expected accuracy of the uniform-choice baseline.

    An example contributes 1/(number of names) when its correct candidate is
    annotated, otherwise 0; examples with no names can never be answered.
    """
    out = {}
    for group in Group:
        members = dataset.positive_group(group)
        total = 0.0
        for ex in members:
            if ex.name_count == 0:
                continue
            if _correct_slot(ex) >= 0:
                total += 1.0 / ex.name_count
        out[group] = total / len(members) if members else 0.0
    return out


def random_exact_weighted_accuracy(dataset: Dataset, weights: Mapping[str, float],
                                   n: float) -> dict[Group, float]:
    """Closed-form expected weighted accuracy under a weight assignment."""
    out = {}
    for group in Group:
        total = 0.0
        for ex in dataset.positive_group(group):
            if ex.id not in weights or ex.name_count == 0:
                continue
            if _correct_slot(ex) >= 0:
                total += weights[ex.id] / ex.name_count
        out[group] = (2.0 / n) * total
    return out


def random_baseline(dataset: Dataset, repetitions: int = 10_000,
                    seed: int = 0) -> RandomBaselineResult:
    """Pick a uniformly random annotated name per example, averaged over runs.

    Deterministic in the seed; the first repetition's predictions are returned
    so the baseline can flow through the standard evaluation pipeline.
    """
    rng = np.random.default_rng(seed)
    positive = {g: dataset.positive_group(g) for g in Group}
    hits = {g: 0.0 for g in Group}
    tp = {g: np.zeros(repetitions) for g in Group}
    fp = {g: np.zeros(repetitions) for g in Group}
    fn = {g: np.zeros(repetitions) for g in Group}
    sample: dict[str, tuple[bool, bool]] = {}

    for ex in dataset:
        k = ex.name_count
        if k == 0:
            draws = None
        else:
            draws = rng.integers(0, k, size=repetitions)
        g = ex.group
        slot_correct = _correct_slot(ex)
        gold_a = ex.candidate_a.is_coreferent
        gold_b = ex.candidate_b.is_coreferent
        if k > 0:
            verdicts = [_span_verdicts(ex, span) for span in ex.name_spans]
            a_slots = np.array([v[0] for v in verdicts])
            b_slots = np.array([v[1] for v in verdicts])
            pred_a = a_slots[draws]
            pred_b = b_slots[draws]
        else:
            pred_a = np.zeros(repetitions, dtype=bool)
            pred_b = np.zeros(repetitions, dtype=bool)
        if ex.has_positive and slot_correct >= 0 and draws is not None:
            hits[g] += float(np.count_nonzero(draws == slot_correct))
        tp[g] += (pred_a & gold_a) + (pred_b & gold_b)
        fp[g] += (pred_a & (not gold_a)) + (pred_b & (not gold_b))
        fn[g] += ((~pred_a) & gold_a) + ((~pred_b) & gold_b)
        sample[ex.id] = (bool(pred_a[0]), bool(pred_b[0]))

    empirical = {}
    for g in Group:
        members = positive[g]
        empirical[g] = hits[g] / (repetitions * len(members)) if members else 0.0
    n_pos = len(dataset.positive())
    overall_emp = (sum(hits.values()) / (repetitions * n_pos)) if n_pos else 0.0

    emp_f1 = {}
    for g in Group:
        prec_den = tp[g] + fp[g]
        rec_den = tp[g] + fn[g]
        with np.errstate(invalid="ignore", divide="ignore"):
            f1 = 2.0 * tp[g] / (prec_den + rec_den)
        emp_f1[g] = float(np.nan_to_num(f1, nan=0.0).mean())
    tp_all = sum(tp.values())
    den_all = sum(tp.values()) * 2 + sum(fp.values()) + sum(fn.values())
    with np.errstate(invalid="ignore", divide="ignore"):
        f1_all = 2.0 * tp_all / den_all
    overall_f1 = float(np.nan_to_num(f1_all, nan=0.0).mean())

    exact = random_exact_accuracy(dataset)
    exact_overall = 0.0
    if n_pos:
        exact_overall = sum(
            exact[g] * len(positive[g]) for g in Group
        ) / n_pos
    return RandomBaselineResult(
        empirical_accuracy=empirical,
        exact_accuracy=exact,
        empirical_f1=emp_f1,
        overall_empirical_accuracy=overall_emp,
        overall_exact_accuracy=exact_overall,
        overall_empirical_f1=overall_f1,
        sample=PredictionSet(verdicts=sample),
        repetitions=repetitions,
        seed=seed,
    )


def dist_k_baseline(dataset: Dataset, k: int = 1) -> PredictionSet:
    """Answer with the k-th closest annotated name; no answer when there are
    fewer than k names."""
    if k < 1:
        raise DataFormatError("k must be >= 1")
    verdicts: dict[str, tuple[bool, bool]] = {}
    for ex in dataset:
        ordered = names_by_distance(ex)
        if len(ordered) < k:
            verdicts[ex.id] = (False, False)
            continue
        verdicts[ex.id] = _span_verdicts(ex, ordered[k - 1])
    return PredictionSet(verdicts=verdicts)
