"""Paired approximate randomization test for bias-score differences.

Two models' verdict pairs are swapped per example with probability one half;
the two-sided p-value is the add-one-smoothed fraction of permutations whose
absolute score difference reaches the observed one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .data import Dataset, Group, PredictionSet
from .errors import DataFormatError, UndefinedMetricError
from .metrics import correct_set

METRICS = ("acc-bias", "weighted-bias")


@dataclass(frozen=True)
class SignificanceResult:
    observed: float
    p_value: float
    iterations: int
    seed: int
    metric: str
    undefined_iterations: int = 0


def _setup(preds_1: PredictionSet, preds_2: PredictionSet, dataset: Dataset,
           weights: Mapping[str, float] | None, metric: str):
    if metric not in METRICS:
        raise DataFormatError(f"metric must be one of {METRICS}, got {metric!r}")
    if metric == "weighted-bias" and weights is None:
        raise DataFormatError("weighted-bias requires a weight set")
    examples = [ex for ex in dataset.positive()
                if weights is None or ex.id in weights]
    if not examples:
        raise UndefinedMetricError("no scorable examples")
    missing = [ex.id for ex in examples
               if ex.id not in preds_1 or ex.id not in preds_2]
    if missing:
        raise DataFormatError(
            f"both prediction sets must cover the dataset; missing {missing[0]!r}"
            + ("" if len(missing) == 1 else f" (+{len(missing) - 1} more)")
        )
    solved_1 = correct_set(preds_1, dataset)
    solved_2 = correct_set(preds_2, dataset)
    c1 = np.array([ex.id in solved_1 for ex in examples], dtype=float)
    c2 = np.array([ex.id in solved_2 for ex in examples], dtype=float)
    u = np.array([1.0 if weights is None else weights[ex.id] for ex in examples])
    masc = np.array([ex.group is Group.MASCULINE for ex in examples])
    den_m = float(u[masc].sum())
    den_f = float(u[~masc].sum())
    if den_m <= 0 or den_f <= 0:
        raise UndefinedMetricError("a group carries no weight")
    return examples, c1, c2, u, masc, den_m, den_f


def _ratio_diff(c1, c2, u, masc, den_m, den_f) -> float:
    num_m1 = float((u * c1)[masc].sum())
    num_f1 = float((u * c1)[~masc].sum())
    num_m2 = float((u * c2)[masc].sum())
    num_f2 = float((u * c2)[~masc].sum())
    if num_m1 <= 0 or num_m2 <= 0:
        raise UndefinedMetricError("bias ratio undefined: masculine score is zero")
    r1 = (num_f1 / den_f) / (num_m1 / den_m)
    r2 = (num_f2 / den_f) / (num_m2 / den_m)
    return abs(r1 - r2)


def randomization_test(preds_1: PredictionSet, preds_2: PredictionSet,
                       dataset: Dataset, weights: Mapping[str, float] | None = None,
                       metric: str = "acc-bias", iterations: int = 10_000,
                       seed: int = 0) -> SignificanceResult:
    """Monte-Carlo paired randomization; deterministic in the seed.

    Permutations under which the ratio is undefined (a zero masculine score)
    are counted as reaching the observed difference, which can only make the
    reported p-value more conservative.
    """
    examples, c1, c2, u, masc, den_m, den_f = _setup(
        preds_1, preds_2, dataset, weights, metric)
    observed = _ratio_diff(c1, c2, u, masc, den_m, den_f)

    rng = np.random.default_rng(seed)
    swaps = rng.random((iterations, len(examples))) < 0.5
    delta = u * (c2 - c1)
    delta_m = np.where(masc, delta, 0.0)
    delta_f = np.where(~masc, delta, 0.0)
    base_m1 = float((u * c1)[masc].sum())
    base_f1 = float((u * c1)[~masc].sum())
    base_m2 = float((u * c2)[masc].sum())
    base_f2 = float((u * c2)[~masc].sum())
    shift_m = swaps @ delta_m
    shift_f = swaps @ delta_f
    num_m1 = base_m1 + shift_m
    num_f1 = base_f1 + shift_f
    num_m2 = base_m2 - shift_m
    num_f2 = base_f2 - shift_f
    undefined = (num_m1 <= 0) | (num_m2 <= 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        diffs = np.abs((num_f1 / den_f) / (num_m1 / den_m)
                       - (num_f2 / den_f) / (num_m2 / den_m))
    diffs = np.where(undefined, np.inf, diffs)
    count = int(np.count_nonzero(diffs >= observed - 1e-12))
    p = (1 + count) / (1 + iterations)
    return SignificanceResult(
        observed=observed,
        p_value=p,
        iterations=iterations,
        seed=seed,
        metric=metric,
        undefined_iterations=int(np.count_nonzero(undefined)),
    )


def exact_randomization_test(preds_1: PredictionSet, preds_2: PredictionSet,
                             dataset: Dataset,
                             weights: Mapping[str, float] | None = None,
                             metric: str = "acc-bias",
                             max_examples: int = 20) -> tuple[float, float]:
    """Exhaustive enumeration of all 2^N swap patterns; the testing oracle.

    Returns (observed difference, exact p). p counts patterns whose difference
    reaches the observed one, identity pattern included, so p > 0.
    """
    examples, c1, c2, u, masc, den_m, den_f = _setup(
        preds_1, preds_2, dataset, weights, metric)
    n = len(examples)
    if n > max_examples:
        raise DataFormatError(f"exact test limited to {max_examples} examples, got {n}")
    observed = _ratio_diff(c1, c2, u, masc, den_m, den_f)
    count = 0
    total = 1 << n
    for pattern in range(total):
        bits = np.array([(pattern >> i) & 1 for i in range(n)], dtype=bool)
        p1 = np.where(bits, c2, c1)
        p2 = np.where(bits, c1, c2)
        try:
            diff = _ratio_diff(p1, p2, u, masc, den_m, den_f)
        except UndefinedMetricError:
            diff = np.inf
        if diff >= observed - 1e-12:
            count += 1
    return observed, count / total
