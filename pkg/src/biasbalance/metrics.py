"""Plain and weighted accuracy, F1, and the feminine/masculine bias ratios.

Accuracy-based metrics score only the verdict on the coreferent candidate of
positive examples; a wrong guess on the other candidate adds noise without
changing which examples are solved. F1 keeps the original convention and
scores both candidates of every example, including non-positive ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .data import Dataset, Example, Group, PredictionSet
from .errors import StaleWeightsError, UndefinedMetricError

WEIGHT_SUM_TOLERANCE = 1e-4


@dataclass(frozen=True)
class BiasReport:
    kind: str  # "f1" | "accuracy" | "weighted-accuracy"
    weight_label: str  # "unweighted" or the weight-set label
    masculine: float
    feminine: float
    ratio: float
    overall: float | None = None


def correct_set(predictions: PredictionSet, dataset: Dataset) -> set[str]:
    """Ids of positive examples whose coreferent candidate got verdict TRUE.

    Examples without a prediction count as unsolved.
    """
    solved = set()
    for ex in dataset.positive():
        correct = ex.coreferent_candidate
        if correct is not None and predictions.verdict_for(ex, correct):
            solved.add(ex.id)
    return solved


def missing_predictions(predictions: PredictionSet, dataset: Dataset) -> list[str]:
    return [ex.id for ex in dataset.positive() if ex.id not in predictions]


def unknown_prediction_ids(predictions: PredictionSet, dataset: Dataset) -> list[str]:
    known = {ex.id for ex in dataset}
    return sorted(i for i in predictions.verdicts if i not in known)


def accuracy(solved: set[str], group_examples: Sequence[Example]) -> float:
    if not group_examples:
        raise UndefinedMetricError("accuracy undefined on an empty group")
    hits = sum(1 for ex in group_examples if ex.id in solved)
    return hits / len(group_examples)


def weighted_accuracy(solved: set[str], group_examples: Sequence[Example],
                      weights: Mapping[str, float], n: float) -> float:
    """(2/n) times the weight mass of solved examples in the group."""
    if not group_examples:
        raise UndefinedMetricError("weighted accuracy undefined on an empty group")
    missing = [ex.id for ex in group_examples if ex.id not in weights]
    if missing:
        raise StaleWeightsError(
            f"weights do not cover the group (first missing: {missing[0]!r})"
        )
    group_sum = sum(weights[ex.id] for ex in group_examples)
    if abs(group_sum - n / 2.0) > WEIGHT_SUM_TOLERANCE:
        raise StaleWeightsError(
            f"group weight sum {group_sum:.6f} deviates from n/2 = {n / 2.0:.6f}; "
            "weight file does not match this dataset"
        )
    return (2.0 / n) * sum(weights[ex.id] for ex in group_examples if ex.id in solved)


def f1_score(predictions: PredictionSet, group_examples: Sequence[Example]) -> float:
    """Micro-F1 over both candidate verdicts of every example in the group."""
    tp = fp = fn = 0
    for ex in group_examples:
        for cand in (ex.candidate_a, ex.candidate_b):
            predicted = predictions.verdict_for(ex, cand)
            if predicted and cand.is_coreferent:
                tp += 1
            elif predicted and not cand.is_coreferent:
                fp += 1
            elif not predicted and cand.is_coreferent:
                fn += 1
    if tp + fp + fn == 0:
        return 0.0
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2.0 * precision * recall / (precision + recall)


def bias_ratio(metric_feminine: float, metric_masculine: float) -> float:
    if metric_masculine <= 0.0:
        raise UndefinedMetricError(
            "bias ratio undefined: masculine metric is zero"
        )
    return metric_feminine / metric_masculine


@dataclass(frozen=True)
class WeightSet:
    label: str
    weights: Mapping[str, float]


def bias_reports(dataset: Dataset, predictions: PredictionSet,
                 weight_sets: Iterable[WeightSet] = ()) -> list[BiasReport]:
    """F1, accuracy, and one weighted-accuracy report per supplied weight set.

    Weighted metrics are evaluated over the examples the weight file covers,
    so weights computed on a trimmed dataset evaluate on that trimmed subset.
    """
    reports = []
    masc_all = dataset.group(Group.MASCULINE)
    fem_all = dataset.group(Group.FEMININE)
    f1_m = f1_score(predictions, masc_all)
    f1_f = f1_score(predictions, fem_all)
    reports.append(BiasReport(
        kind="f1", weight_label="unweighted",
        masculine=f1_m, feminine=f1_f, ratio=bias_ratio(f1_f, f1_m),
        overall=f1_score(predictions, dataset.examples),
    ))
    solved = correct_set(predictions, dataset)
    masc_pos = dataset.positive_group(Group.MASCULINE)
    fem_pos = dataset.positive_group(Group.FEMININE)
    acc_m = accuracy(solved, masc_pos)
    acc_f = accuracy(solved, fem_pos)
    reports.append(BiasReport(
        kind="accuracy", weight_label="unweighted",
        masculine=acc_m, feminine=acc_f, ratio=bias_ratio(acc_f, acc_m),
        overall=accuracy(solved, dataset.positive()),
    ))
    for ws in weight_sets:
        covered_m = [ex for ex in masc_pos if ex.id in ws.weights]
        covered_f = [ex for ex in fem_pos if ex.id in ws.weights]
        n = sum(ws.weights[ex.id] for ex in covered_m + covered_f)
        w_m = weighted_accuracy(solved, covered_m, ws.weights, n)
        w_f = weighted_accuracy(solved, covered_f, ws.weights, n)
        reports.append(BiasReport(
            kind="weighted-accuracy", weight_label=ws.label,
            masculine=w_m, feminine=w_f, ratio=bias_ratio(w_f, w_m),
            overall=(w_m + w_f) / 2.0,
        ))
    return reports
