"""Sparse linear programs and the balancing-LP builder.

The balancing LP carries one weight variable per unit (a unit is either a
single example or a collapsed equivalence class with a multiplicity), plus one
auxiliary variable per same-group unit pair representing the pairwise maximum
of the two weights. Minimizing the multiplicity-weighted sum of those maxima
minimizes the worst-case gap a weighting can open between weighted and plain
accuracy for an arbitrary unknown correct-answer set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BuildError

INF = math.inf


@dataclass(frozen=True, slots=True)
class VarLabel:
    """Role of an LP variable: a unit weight or a pairwise-max auxiliary."""

    kind: str  # "weight" | "aux_max"
    unit: int
    other: int = -1  # second unit index for aux_max, with unit > other


@dataclass(frozen=True, slots=True)
class Constraint:
    indices: tuple[int, ...]
    coeffs: tuple[float, ...]
    relation: str  # "=", "<=", ">="
    rhs: float


@dataclass(frozen=True)
class LinearProgram:
    num_vars: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    constraints: tuple[Constraint, ...]
    objective_indices: tuple[int, ...]
    objective_coeffs: tuple[float, ...]
    labels: tuple[VarLabel, ...] = ()

    def __post_init__(self):
        for con in self.constraints:
            if con.relation not in ("=", "<=", ">="):
                raise BuildError(f"bad relation {con.relation!r}")
            if any(i < 0 or i >= self.num_vars for i in con.indices):
                raise BuildError("constraint references unknown variable")
        if any(i < 0 or i >= self.num_vars for i in self.objective_indices):
            raise BuildError("objective references unknown variable")

    def objective_value(self, x: np.ndarray) -> float:
        idx = np.asarray(self.objective_indices, dtype=int)
        coeffs = np.asarray(self.objective_coeffs, dtype=float)
        return float(coeffs @ x[idx])

    def max_violation(self, x: np.ndarray) -> float:
        """Largest absolute constraint or bound violation, computed directly."""
        worst = 0.0
        for con in self.constraints:
            lhs = float(np.asarray(con.coeffs) @ x[np.asarray(con.indices, dtype=int)])
            if con.relation == "=":
                worst = max(worst, abs(lhs - con.rhs))
            elif con.relation == "<=":
                worst = max(worst, lhs - con.rhs)
            else:
                worst = max(worst, con.rhs - lhs)
        lower = np.asarray(self.lower)
        upper = np.asarray(self.upper)
        worst = max(worst, float(np.max(lower - x, initial=0.0)))
        worst = max(worst, float(np.max(x - upper, initial=0.0)))
        return worst


@dataclass(frozen=True, slots=True)
class LpUnit:
    """One LP weight variable: a group id, a multiplicity, and property memberships."""

    group: int  # 0 or 1
    multiplicity: int
    memberships: tuple[bool, ...] = field(default=())


def canonical_unit_order(units: Sequence[LpUnit]) -> list[int]:
    """Stable order (group, memberships) applied before variable numbering."""
    return sorted(range(len(units)), key=lambda i: (units[i].group, units[i].memberships))


def build_balancing_lp(units: Sequence[LpUnit], property_labels: Sequence[str],
                       n: float) -> LinearProgram:
    """Assemble the balancing LP for the given units.

    Constraint layout (canonical order): group balance, fixed total mass, one
    per property set ordered by label, then the two inequalities of each
    auxiliary pairwise-max variable. Weight variables come first, in canonical
    unit order, followed by the auxiliaries of group 0 and then group 1, pairs
    in lexicographic order.
    """
    if not units:
        raise BuildError("no units")
    if len(set(property_labels)) != len(property_labels):
        dupes = sorted({l for l in property_labels if list(property_labels).count(l) > 1})
        raise BuildError(f"duplicate property labels: {dupes}")
    for unit in units:
        if unit.group not in (0, 1):
            raise BuildError(f"unit group must be 0 or 1, got {unit.group}")
        if unit.multiplicity < 1:
            raise BuildError(f"multiplicity must be >= 1, got {unit.multiplicity}")
        if len(unit.memberships) != len(property_labels):
            raise BuildError("membership vector length does not match property labels")
    order = canonical_unit_order(units)
    ordered = [units[i] for i in order]
    groups = [u.group for u in ordered]
    if 0 not in groups or 1 not in groups:
        raise BuildError("both groups must be non-empty")

    num_units = len(ordered)
    labels: list[VarLabel] = [VarLabel("weight", i) for i in range(num_units)]
    aux_pairs: list[tuple[int, int]] = []  # (i, j) with i > j, same group
    for g in (0, 1):
        members = [i for i in range(num_units) if groups[i] == g]
        for a_pos, j in enumerate(members):
            for i in members[a_pos + 1:]:
                aux_pairs.append((i, j))
    aux_base = num_units
    for i, j in aux_pairs:
        labels.append(VarLabel("aux_max", i, j))
    num_vars = num_units + len(aux_pairs)

    constraints: list[Constraint] = []
    mults = [float(u.multiplicity) for u in ordered]
    balance_coeffs = tuple(m if g == 0 else -m for m, g in zip(mults, groups))
    constraints.append(Constraint(tuple(range(num_units)), balance_coeffs, "=", 0.0))
    constraints.append(Constraint(tuple(range(num_units)), tuple(mults), "=", float(n)))
    for label in sorted(property_labels):
        p = list(property_labels).index(label)
        idx = tuple(i for i in range(num_units) if ordered[i].memberships[p])
        if not idx:
            continue
        coeffs = tuple(mults[i] if groups[i] == 0 else -mults[i] for i in idx)
        constraints.append(Constraint(idx, coeffs, "=", 0.0))
    for a_off, (i, j) in enumerate(aux_pairs):
        aux = aux_base + a_off
        constraints.append(Constraint((aux, j), (1.0, -1.0), ">=", 0.0))
        constraints.append(Constraint((aux, i), (1.0, -1.0), ">=", 0.0))

    # Objective: between-unit pairs weighted by the product of multiplicities;
    # within-unit pairs reduce to a linear term since max(w, w) = w.
    obj_idx: list[int] = []
    obj_coef: list[float] = []
    for i, u in enumerate(ordered):
        c = u.multiplicity
        if c > 1:
            obj_idx.append(i)
            obj_coef.append(c * (c - 1) / 2.0)
    for a_off, (i, j) in enumerate(aux_pairs):
        obj_idx.append(aux_base + a_off)
        obj_coef.append(mults[i] * mults[j])

    return LinearProgram(
        num_vars=num_vars,
        lower=tuple(0.0 for _ in range(num_vars)),
        upper=tuple(INF for _ in range(num_vars)),
        constraints=tuple(constraints),
        objective_indices=tuple(obj_idx),
        objective_coeffs=tuple(obj_coef),
        labels=tuple(labels),
    )


def evaluate_objective(weights: Sequence[float], groups: Sequence[int],
                       multiplicities: Sequence[int] | None = None) -> float:
    """Sum of pairwise maxima within each group, expanding multiplicities.

    This is the definitional form (an explicit sum over pairs); the sorted-order
    identity used elsewhere is checked against it, never substituted for it.
    """
    w = np.asarray(weights, dtype=float)
    g = np.asarray(groups, dtype=int)
    if multiplicities is None:
        mult = np.ones(len(w), dtype=int)
    else:
        mult = np.asarray(multiplicities, dtype=int)
    if not np.all(np.isfinite(w)):
        raise BuildError("weights must be finite")
    total = 0.0
    for group in np.unique(g):
        expanded = np.repeat(w[g == group], mult[g == group])
        m = len(expanded)
        if m < 2:
            continue
        block = max(1, min(2048, (1 << 22) // m))
        for lo in range(0, m, block):
            hi = min(lo + block, m)
            maxes = np.maximum(expanded[lo:hi, None], expanded[None, :])
            cols = np.arange(m)[None, :]
            rows = np.arange(lo, hi)[:, None]
            total += float(maxes[cols > rows].sum())
    return total


# ---------------------------------------------------------------------------
# Free-form MPS export (for cross-checking against external solvers)


def _mps_num(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return f"{value:.12f}".rstrip("0").rstrip(".")


def to_mps(lp: LinearProgram, name: str = "BALANCE") -> str:
    """Serialize in free MPS format with fixed-point numbers."""
    rel_tag = {"=": "E", "<=": "L", ">=": "G"}
    lines = [f"NAME {name}", "ROWS", " N OBJ"]
    for r, con in enumerate(lp.constraints):
        lines.append(f" {rel_tag[con.relation]} R{r}")
    by_col: dict[int, list[tuple[str, float]]] = {j: [] for j in range(lp.num_vars)}
    for j, coef in zip(lp.objective_indices, lp.objective_coeffs):
        by_col[j].append(("OBJ", coef))
    for r, con in enumerate(lp.constraints):
        for j, coef in zip(con.indices, con.coeffs):
            by_col[j].append((f"R{r}", coef))
    lines.append("COLUMNS")
    for j in range(lp.num_vars):
        for row_name, coef in by_col[j]:
            lines.append(f" X{j} {row_name} {_mps_num(coef)}")
    lines.append("RHS")
    for r, con in enumerate(lp.constraints):
        if con.rhs != 0.0:
            lines.append(f" RHS R{r} {_mps_num(con.rhs)}")
    lines.append("BOUNDS")
    for j in range(lp.num_vars):
        lo, up = lp.lower[j], lp.upper[j]
        if lo == 0.0 and up == INF:
            continue
        if lo == up:
            lines.append(f" FX BND X{j} {_mps_num(lo)}")
            continue
        if lo == -INF:
            lines.append(f" MI BND X{j}")
        elif lo != 0.0:
            lines.append(f" LO BND X{j} {_mps_num(lo)}")
        if up != INF:
            lines.append(f" UP BND X{j} {_mps_num(up)}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"
