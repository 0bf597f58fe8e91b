"""Weight computation pipeline: collapse, build, solve, expand, verify.

Examples sharing a group and identical property memberships are
interchangeable in every constraint, and the pairwise-max objective is convex
and symmetric under permutations within such a class, so averaging their
weights never increases it: an optimum with uniform within-class weights
always exists. Collapsing classes to single LP variables with multiplicities
shrinks the LP by orders of magnitude at full-dataset scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .data import Dataset, Group, PropertySet
from .errors import BuildError, DataFormatError, InfeasibleError, SolverError, StaleWeightsError
from .lp import LpUnit, build_balancing_lp, canonical_unit_order, evaluate_objective
from .simplex import Solution, SolverConfig, Status, solve

SUM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class EquivalenceClass:
    group: Group
    signature: tuple[bool, ...]
    member_ids: tuple[str, ...]

    @property
    def multiplicity(self) -> int:
        return len(self.member_ids)


@dataclass(frozen=True)
class WeightAssignment:
    weights: Mapping[str, float]
    objective: float
    property_labels: tuple[str, ...]
    status: Status
    n: float  # total weight mass = number of positive examples
    lambda_a: float  # n / (2 |A|), the uniform weight of a masculine example
    lambda_b: float
    one_sided_properties: tuple[str, ...] = ()
    solver_stats: Mapping[str, float] = field(default_factory=dict)

    @property
    def zero_count(self) -> int:
        return sum(1 for w in self.weights.values() if w == 0.0)


@dataclass(frozen=True)
class BalancerConfig:
    naive: bool = False  # one LP variable per example, no class collapse
    naive_limit: int = 200
    solver: SolverConfig = field(default_factory=SolverConfig)


def collapse_classes(dataset: Dataset, property_sets: Sequence[PropertySet]
                     ) -> list[EquivalenceClass]:
    """Partition positive examples into (group, membership-signature) classes."""
    _validate_property_sets(dataset, property_sets)
    buckets: dict[tuple[Group, tuple[bool, ...]], list[str]] = {}
    for ex in dataset.positive():
        signature = tuple(ex.id in ps.members for ps in property_sets)
        buckets.setdefault((ex.group, signature), []).append(ex.id)
    classes = [
        EquivalenceClass(group=group, signature=signature, member_ids=tuple(ids))
        for (group, signature), ids in buckets.items()
    ]
    classes.sort(key=lambda c: (c.group.value, c.signature, c.member_ids))
    return classes


def _validate_property_sets(dataset: Dataset, property_sets: Sequence[PropertySet]) -> None:
    labels = [ps.label for ps in property_sets]
    if len(set(labels)) != len(labels):
        raise BuildError(f"duplicate property labels: {sorted(labels)}")
    known = {ex.id for ex in dataset}
    for ps in property_sets:
        stray = ps.members - known
        if stray:
            shown = ", ".join(sorted(stray)[:5])
            raise DataFormatError(
                f"property set {ps.label!r} references unknown ids: {shown}"
            )


def compute_weights(dataset: Dataset, property_sets: Sequence[PropertySet],
                    config: BalancerConfig | None = None) -> WeightAssignment:
    """Solve the balancing LP and expand to per-example weights.

    Weights cover positive examples only; the weight mass equals their count.
    """
    cfg = config or BalancerConfig()
    positive = dataset.positive()
    size_a = sum(1 for ex in positive if ex.group is Group.MASCULINE)
    size_b = len(positive) - size_a
    if size_a == 0 or size_b == 0:
        raise DataFormatError("both groups must contain positive examples")
    n = float(len(positive))

    if cfg.naive:
        if len(positive) > cfg.naive_limit:
            raise BuildError(
                f"naive build limited to {cfg.naive_limit} examples, got {len(positive)}"
            )
        _validate_property_sets(dataset, property_sets)
        classes = [
            EquivalenceClass(
                group=ex.group,
                signature=tuple(ex.id in ps.members for ps in property_sets),
                member_ids=(ex.id,),
            )
            for ex in positive
        ]
    else:
        classes = collapse_classes(dataset, property_sets)

    units = [
        LpUnit(
            group=0 if cls.group is Group.MASCULINE else 1,
            multiplicity=cls.multiplicity,
            memberships=cls.signature,
        )
        for cls in classes
    ]
    labels = [ps.label for ps in property_sets]
    lp = build_balancing_lp(units, labels, n)
    solution = solve(lp, cfg.solver)
    if solution.status is Status.INFEASIBLE:
        raise InfeasibleError(
            "balancing constraints admit no non-negative weights",
            infeasibility=solution.phase1_infeasibility,
        )
    if solution.status is not Status.OPTIMAL:
        raise SolverError(f"solver finished with status {solution.status.value}")

    order = canonical_unit_order(units)
    weights: dict[str, float] = {}
    for var, unit_idx in enumerate(order):
        value = float(solution.x[var])
        if value < -SUM_TOLERANCE:
            raise SolverError(f"negative weight {value} from solver")
        # Snap sub-tolerance values to an exact zero: anything below the
        # solver's feasibility resolution is indistinguishable from zero and
        # zero-weight counts need a crisp definition.
        value = 0.0 if value < 1e-10 else value
        for ex_id in classes[unit_idx].member_ids:
            weights[ex_id] = value

    _verify_assignment(weights, positive, property_sets, n)
    objective = evaluate_objective(
        [weights[ex.id] for ex in positive],
        [0 if ex.group is Group.MASCULINE else 1 for ex in positive],
    )
    if not math.isclose(objective, solution.objective,
                        rel_tol=1e-6, abs_tol=1e-6):
        raise SolverError(
            f"objective mismatch: expanded {objective} vs solver {solution.objective}"
        )
    one_sided = []
    for ps in property_sets:
        in_a = any(ex.id in ps.members for ex in positive if ex.group is Group.MASCULINE)
        in_b = any(ex.id in ps.members for ex in positive if ex.group is Group.FEMININE)
        if in_a != in_b:
            one_sided.append(ps.label)
    return WeightAssignment(
        weights=weights,
        objective=objective,
        property_labels=tuple(labels),
        status=solution.status,
        n=n,
        lambda_a=n / (2.0 * size_a),
        lambda_b=n / (2.0 * size_b),
        one_sided_properties=tuple(one_sided),
        solver_stats={
            "iterations": solution.stats.iterations,
            "cut_rounds": solution.stats.cut_rounds,
            "max_violation": float(solution.max_violation or 0.0),
        },
    )


def _verify_assignment(weights: Mapping[str, float], positive, property_sets, n: float):
    """Check every balance constraint by direct summation, independent of the solver."""
    sum_a = sum(weights[ex.id] for ex in positive if ex.group is Group.MASCULINE)
    sum_b = sum(weights[ex.id] for ex in positive if ex.group is Group.FEMININE)
    if abs(sum_a - n / 2.0) > SUM_TOLERANCE or abs(sum_b - n / 2.0) > SUM_TOLERANCE:
        raise SolverError(
            f"group sums {sum_a:.9f}/{sum_b:.9f} deviate from {n / 2.0} beyond tolerance"
        )
    for ps in property_sets:
        ps_a = sum(weights[ex.id] for ex in positive
                   if ex.group is Group.MASCULINE and ex.id in ps.members)
        ps_b = sum(weights[ex.id] for ex in positive
                   if ex.group is Group.FEMININE and ex.id in ps.members)
        if abs(ps_a - ps_b) > SUM_TOLERANCE:
            raise SolverError(
                f"property {ps.label!r} unbalanced: {ps_a:.9f} vs {ps_b:.9f}"
            )


def trim(dataset: Dataset, max_names: int = 15, max_rank: int = 4) -> Dataset:
    """Drop examples with too many names or a too-distant correct candidate.

    Examples without a usable rank (no positive candidate, or the candidate
    matches no annotated span) pass the rank filter. Idempotent.
    """
    from .data import candidate_rank_or_none

    kept = []
    for ex in dataset:
        if ex.name_count > max_names:
            continue
        rank = candidate_rank_or_none(ex)
        if rank is not None and rank > max_rank:
            continue
        kept.append(ex)
    return Dataset(examples=tuple(kept))


# ---------------------------------------------------------------------------
# Weight-file interchange: TSV body plus a JSON metadata sidecar


def weights_to_tsv(assignment: WeightAssignment) -> str:
    lines = ["ID\tweight"]
    for ex_id in sorted(assignment.weights):
        lines.append(f"{ex_id}\t{assignment.weights[ex_id]:.12g}")
    return "\n".join(lines) + "\n"


def weights_from_tsv(raw: bytes | str) -> dict[str, float]:
    text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    weights: dict[str, float] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataFormatError(f"expected 2 columns, got {len(parts)}", line=line_no)
        if line_no == 1 and parts[1].strip().lower() == "weight":
            continue
        ex_id, value = parts
        if ex_id in weights:
            raise DataFormatError(f"duplicate weight for id {ex_id!r}", line=line_no)
        try:
            w = float(value)
        except ValueError:
            raise DataFormatError(f"bad weight {value!r}", line=line_no) from None
        if w < 0 or not math.isfinite(w):
            raise DataFormatError(f"weight must be finite and non-negative, got {w}",
                                  line=line_no)
        weights[ex_id] = w
    if not weights:
        raise DataFormatError("empty weight file")
    return weights


def assignment_metadata(assignment: WeightAssignment) -> dict:
    return {
        "objective": assignment.objective,
        "status": assignment.status.value,
        "property_labels": list(assignment.property_labels),
        "n": assignment.n,
        "lambda_a": assignment.lambda_a,
        "lambda_b": assignment.lambda_b,
        "zero_weights": assignment.zero_count,
        "one_sided_properties": list(assignment.one_sided_properties),
        "solver": dict(assignment.solver_stats),
    }


def check_weight_cover(weights: Mapping[str, float], ids) -> None:
    missing = [i for i in ids if i not in weights]
    if missing:
        shown = ", ".join(missing[:5])
        more = "" if len(missing) <= 5 else f" (+{len(missing) - 5} more)"
        raise StaleWeightsError(f"weights missing for: {shown}{more}")
