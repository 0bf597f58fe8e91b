"""Brute-force verifiers for the weighting method's optimality claims.

The worst additive noise a weight assignment can inject into a group's
accuracy, over every possible correct-answer subset, reduces to a question
about sorted prefixes: the maximizing subset always consists of the largest or
smallest weights. These oracles make that reduction executable: an exhaustive
subset enumeration, the sorted-prefix shortcut that must agree with it, the
pairwise-max/sorted-position identity, and a grid probe confirming that the
pairwise objective ranks weightings exactly as the summed noise bound does.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .data import Dataset, Group, PropertySet
from .errors import DataFormatError
from .lp import evaluate_objective

BRUTEFORCE_LIMIT = 22


@dataclass(frozen=True)
class NoiseBound:
    group: str
    deviation: float
    witness: frozenset[str]
    lam: float  # n / (2 |G|)


def _group_arrays(weights: Mapping[str, float], group_ids: Sequence[str]):
    ids = list(group_ids)
    if not ids:
        raise DataFormatError("empty group")
    missing = [i for i in ids if i not in weights]
    if missing:
        raise DataFormatError(f"weights missing for id {missing[0]!r}")
    return ids, np.array([weights[i] for i in ids], dtype=float)


def max_noise_bruteforce(weights: Mapping[str, float], group_ids: Sequence[str],
                         n: float, group: str = "") -> NoiseBound:
    """Exhaustive max over all subsets C of |weighted acc - plain acc|.

    The deviation of a subset C is ``|(2/n) sum_C w - |C|/|G||``. Enumerates
    all 2^|G| subsets via subset-sum doubling.
    """
    ids, w = _group_arrays(weights, group_ids)
    g = len(ids)
    if g > BRUTEFORCE_LIMIT:
        raise DataFormatError(
            f"group of {g} exceeds the 2^{BRUTEFORCE_LIMIT} enumeration limit; "
            "use sorted_prefix_noise"
        )
    lam = n / (2.0 * g)
    deltas = (2.0 / n) * w - 1.0 / g
    sums = np.zeros(1)
    for d in deltas:
        sums = np.concatenate([sums, sums + d])
    best = int(np.argmax(np.abs(sums)))
    witness = frozenset(ids[i] for i in range(g) if (best >> i) & 1)
    return NoiseBound(group=group, deviation=float(abs(sums[best])),
                      witness=witness, lam=lam)


def sorted_prefix_noise(weights: Mapping[str, float], group_ids: Sequence[str],
                        n: float, group: str = "") -> NoiseBound:
    """Worst deviation over the k largest- and k smallest-weight subsets.

    Agrees exactly with the exhaustive enumeration: for a fixed subset size
    the extreme deviation is reached by an extreme-weight subset.
    """
    ids, w = _group_arrays(weights, group_ids)
    g = len(ids)
    lam = n / (2.0 * g)
    order = sorted(range(g), key=lambda i: (w[i], ids[i]))
    sorted_w = w[order]
    best_dev = 0.0
    best_witness: frozenset[str] = frozenset()
    prefix = np.concatenate([[0.0], np.cumsum(sorted_w)])
    total = prefix[-1]
    for k in range(g + 1):
        low = abs((2.0 / n) * prefix[k] - k / g)
        if low > best_dev:
            best_dev = low
            best_witness = frozenset(ids[i] for i in order[:k])
        high = abs((2.0 / n) * (total - prefix[g - k]) - k / g)
        if high > best_dev:
            best_dev = high
            best_witness = frozenset(ids[i] for i in order[g - k:])
    return NoiseBound(group=group, deviation=float(best_dev),
                      witness=best_witness, lam=lam)


def pairwise_identity_check(weights: Sequence[float]) -> float:
    """Residual of: sum_i i*w_(i) = sum_{pairs} max(w_i, w_j) + sum_i w_i."""
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        return 0.0
    sorted_w = np.sort(w)
    positional = float(np.arange(1, len(w) + 1) @ sorted_w)
    pairwise = evaluate_objective(w, np.zeros(len(w), dtype=int))
    return abs(positional - pairwise - float(w.sum()))


def per_size_deviation_sum(weights: Mapping[str, float], group_ids: Sequence[str],
                           n: float) -> float:
    """Sum over subset sizes k of the k-largest-subset deviation, signed.

    Equals ``(2/n) (sum_i i*w_(i) - n(|G|+1)/4)`` and, through the pairwise
    identity, is an increasing affine function of the group's pairwise-max
    objective; summed over groups it is the quantity the LP objective
    provably minimizes.
    """
    ids, w = _group_arrays(weights, group_ids)
    g = len(ids)
    sorted_w = np.sort(w)
    positional = float(np.arange(1, g + 1) @ sorted_w)
    return (2.0 / n) * (positional - n * (g + 1) / 4.0)


# ---------------------------------------------------------------------------
# Grid probe


@dataclass(frozen=True)
class ProbeReport:
    passed: bool
    grid_points: int
    grid_min_objective: float
    candidate_objective: float | None
    candidate_noise_sum: float | None
    grid_min_noise_sum: float
    max_identity_residual: float
    notes: tuple[str, ...] = ()


def _group_grid(ids: Sequence[str], mass_units: int, step: float) -> np.ndarray:
    """All weight vectors on the step grid with the given total mass."""
    g = len(ids)
    points = []
    def rec(prefix, remaining):
        if len(prefix) == g - 1:
            points.append(prefix + [remaining])
            return
        for units in range(remaining + 1):
            rec(prefix + [units], remaining - units)
    rec([], mass_units)
    return np.asarray(points, dtype=float) * step


def theorem1_optimality_probe(dataset: Dataset, property_sets: Sequence[PropertySet],
                              step: float = 0.05,
                              candidate_weights: Mapping[str, float] | None = None,
                              max_examples: int = 6) -> ProbeReport:
    """Grid-search the constraint polytope of a tiny instance and confirm that
    the pairwise-max objective and the summed sorted-prefix noise bound rank
    every feasible point identically (they differ by an additive constant and
    a positive factor), so the objective minimizer also minimizes the bound.

    When candidate weights (e.g. an LP solution) are supplied they must attain
    the grid minimum of both quantities up to grid resolution.
    """
    positive = dataset.positive()
    if len(positive) > max_examples:
        raise DataFormatError(f"probe limited to {max_examples} examples")
    ids_a = [ex.id for ex in positive if ex.group is Group.MASCULINE]
    ids_b = [ex.id for ex in positive if ex.group is Group.FEMININE]
    if not ids_a or not ids_b:
        raise DataFormatError("both groups must be non-empty")
    n = len(positive)
    mass_units = round((n / 2.0) / step)
    if abs(mass_units * step - n / 2.0) > 1e-12:
        raise DataFormatError("group mass must be a multiple of the grid step")

    grids = {0: _group_grid(ids_a, mass_units, step),
             1: _group_grid(ids_b, mass_units, step)}
    ids = {0: ids_a, 1: ids_b}
    # Property sums per grid point, in integer grid units for exact matching.
    signatures = {}
    for g in (0, 1):
        unit_grid = np.rint(grids[g] / step).astype(np.int64)
        cols = []
        for ps in property_sets:
            mask = np.array([i in ps.members for i in ids[g]])
            cols.append(unit_grid[:, mask].sum(axis=1))
        signatures[g] = (np.stack(cols, axis=1) if cols
                         else np.zeros((len(unit_grid), 0), dtype=np.int64))

    def group_objective(points: np.ndarray) -> np.ndarray:
        g_size = points.shape[1]
        out = np.zeros(len(points))
        for i, j in itertools.combinations(range(g_size), 2):
            out += np.maximum(points[:, i], points[:, j])
        return out

    obj = {g: group_objective(grids[g]) for g in (0, 1)}

    def group_noise_sum(points: np.ndarray) -> np.ndarray:
        g_size = points.shape[1]
        sorted_pts = np.sort(points, axis=1)
        positional = sorted_pts @ np.arange(1, g_size + 1)
        return (2.0 / n) * (positional - n * (g_size + 1) / 4.0)

    noise = {g: group_noise_sum(grids[g]) for g in (0, 1)}

    # Affine identity per grid point: noise sum == (2/n) (objective + mass) - const.
    max_resid = 0.0
    for g in (0, 1):
        g_size = grids[g].shape[1]
        expected = (2.0 / n) * (obj[g] + n / 2.0 - n * (g_size + 1) / 4.0)
        if len(expected):
            max_resid = max(max_resid, float(np.max(np.abs(expected - noise[g]))))

    # Combine groups through matching property signatures; the objective is
    # separable, so the joint minimum is a min over signature buckets.
    def bucket_min(values: dict[int, np.ndarray]) -> float:
        best = np.inf
        buckets_b: dict[bytes, float] = {}
        for row, v in zip(signatures[1], values[1]):
            key = row.tobytes()
            if v < buckets_b.get(key, np.inf):
                buckets_b[key] = v
        for row, v in zip(signatures[0], values[0]):
            other = buckets_b.get(row.tobytes())
            if other is not None and v + other < best:
                best = v + other
        return float(best)

    grid_min_obj = bucket_min(obj)
    grid_min_noise = bucket_min(noise)
    notes = []
    if not np.isfinite(grid_min_obj):
        return ProbeReport(passed=False, grid_points=0,
                           grid_min_objective=grid_min_obj,
                           candidate_objective=None, candidate_noise_sum=None,
                           grid_min_noise_sum=grid_min_noise,
                           max_identity_residual=max_resid,
                           notes=("no feasible grid point",))

    passed = max_resid <= 1e-9 * max(1.0, n)
    cand_obj = cand_noise = None
    if candidate_weights is not None:
        groups = [0 if ex.group is Group.MASCULINE else 1 for ex in positive]
        cand_obj = evaluate_objective(
            [candidate_weights[ex.id] for ex in positive], groups)
        cand_noise = (per_size_deviation_sum(candidate_weights, ids_a, n)
                      + per_size_deviation_sum(candidate_weights, ids_b, n))
        slack = 1e-6
        if cand_obj > grid_min_obj + slack:
            passed = False
            notes.append("candidate objective above grid minimum")
        if cand_noise > grid_min_noise + slack:
            passed = False
            notes.append("candidate noise-bound sum above grid minimum")
    return ProbeReport(
        passed=passed,
        grid_points=int(len(grids[0]) + len(grids[1])),
        grid_min_objective=grid_min_obj,
        candidate_objective=cand_obj,
        candidate_noise_sum=cand_noise,
        grid_min_noise_sum=grid_min_noise,
        max_identity_residual=max_resid,
        notes=tuple(notes),
    )
