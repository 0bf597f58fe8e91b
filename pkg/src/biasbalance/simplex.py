"""Linear-program solver: revised simplex with bounded variables.

Two-phase revised simplex with an explicit basis inverse, periodic
refactorization, Dantzig pricing with a Bland's-rule fallback after runs of
degenerate pivots, and artificial variables for phase 1 (no big-M terms).

Balancing LPs built by :func:`biasbalance.lp.build_balancing_lp` carry a
pairwise-max auxiliary variable per same-group unit pair, which grows
quadratically in the unit count. For those LPs the solver can switch to an
exact cutting-plane scheme: the per-group objective equals the maximum over
unit orderings of a linear function of the weights, so a small master LP over
the weight variables alone is solved repeatedly, each round adding the
ordering cut supporting the objective at the current iterate, until the master
value matches the true objective. Every master is solved by the same simplex
core, and the returned solution is verified against the full constraint set of
the original LP.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import SolverError
from .lp import INF, Constraint, LinearProgram

AT_LOWER, AT_UPPER, BASIC, FREE = 0, 1, 2, 3

_PIVOT_TOL = 1e-10
_DEGENERATE_STEP = 1e-11
_DRIVE_OUT_TOL = 1e-8


class _SingularBasis(SolverError):
    """Internal: basis factorization failed; the solve is retried with more
    frequent refactorization before giving up."""


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    STALLED = "stalled"


@dataclass(frozen=True)
class SolverConfig:
    feasibility_tol: float = 1e-9
    optimality_tol: float = 1e-9
    max_iterations: int | None = None  # None: 50 * (vars + constraints)
    refactor_interval: int = 100
    bland_trigger: int = 25  # consecutive degenerate pivots before Bland's rule
    # "auto" keeps the built-in simplex for small problems and hands balancing
    # LPs with at least external_threshold auxiliary variables to scipy's
    # HiGHS; "self" never leaves this module; "scipy" forces the external path.
    backend: str = "auto"
    external_threshold: int = 64
    # Cutting-plane path for balancing LPs (self backend): None switches on
    # automatically above decomposition_threshold auxiliaries, True/False force.
    decomposition: bool | None = None
    decomposition_threshold: int = 512
    max_cut_rounds: int = 5000

    def __post_init__(self):
        if self.feasibility_tol <= 0 or self.optimality_tol <= 0:
            raise SolverError("tolerances must be positive")
        if self.backend not in ("auto", "self", "scipy"):
            raise SolverError(f"unknown backend {self.backend!r}")


@dataclass(frozen=True)
class SolverStats:
    iterations: int = 0
    degenerate_pivots: int = 0
    bland_engaged: bool = False
    refactorizations: int = 0
    cut_rounds: int = 0


@dataclass(frozen=True)
class Solution:
    status: Status
    x: np.ndarray | None
    objective: float | None
    max_violation: float | None
    phase1_infeasibility: float | None
    stats: SolverStats


def _default_budget(lp: LinearProgram) -> int:
    return 50 * (lp.num_vars + len(lp.constraints))


def solve(lp: LinearProgram, config: SolverConfig | None = None) -> Solution:
    """Solve to proven optimality, or report infeasible/unbounded/stalled."""
    cfg = config or SolverConfig()
    if cfg.backend == "scipy":
        return _solve_scipy(lp, cfg)
    struct = _detect_balancing_structure(lp)
    if struct is not None:
        aux_count = lp.num_vars - struct["num_units"]
        if cfg.backend == "auto" and aux_count >= cfg.external_threshold:
            return _solve_scipy(lp, cfg)
        if cfg.decomposition is True or (
                cfg.decomposition is None and aux_count >= cfg.decomposition_threshold):
            return _solve_decomposition(lp, struct, cfg)
    return _solve_direct(lp, cfg)


# ---------------------------------------------------------------------------
# Standard form


def _standard_form(lp: LinearProgram):
    """Equality form A x = b with one slack column per inequality row."""
    m = len(lp.constraints)
    n_slack = sum(1 for con in lp.constraints if con.relation != "=")
    n = lp.num_vars + n_slack
    A = np.zeros((m, n))
    b = np.zeros(m)
    lower = np.full(n, 0.0)
    upper = np.full(n, INF)
    lower[: lp.num_vars] = lp.lower
    upper[: lp.num_vars] = lp.upper
    c = np.zeros(n)
    for j, coef in zip(lp.objective_indices, lp.objective_coeffs):
        c[j] += coef
    slack = lp.num_vars
    for r, con in enumerate(lp.constraints):
        A[r, list(con.indices)] = con.coeffs
        b[r] = con.rhs
        if con.relation == "<=":
            A[r, slack] = 1.0
            slack += 1
        elif con.relation == ">=":
            A[r, slack] = -1.0
            slack += 1
    return A, b, c, lower, upper


# ---------------------------------------------------------------------------
# Simplex core


class _Simplex:
    """Bounded-variable revised simplex over ``A x = b`` with explicit inverse.

    Columns ``num_structural..n-1`` of A must be the slack singletons appended
    by ``_standard_form``; artificial columns are appended internally.
    """

    def __init__(self, A: np.ndarray, b: np.ndarray, c: np.ndarray,
                 lower: np.ndarray, upper: np.ndarray, num_structural: int,
                 cfg: SolverConfig, budget: int):
        self.cfg = cfg
        self.budget = budget
        self.m, n_real = A.shape
        self.n_real = n_real
        self.b = b.astype(float)
        self.cost = np.concatenate([c.astype(float), np.zeros(self.m)])
        self.lower = np.concatenate([lower.astype(float), np.zeros(self.m)])
        self.upper = np.concatenate([upper.astype(float), np.full(self.m, INF)])

        self.vstat = np.empty(n_real + self.m, dtype=np.int8)
        for j in range(n_real):
            if self.lower[j] > -INF:
                self.vstat[j] = AT_LOWER
            elif self.upper[j] < INF:
                self.vstat[j] = AT_UPPER
            else:
                self.vstat[j] = FREE
        self._x = np.zeros(n_real + self.m)
        self._x[:n_real] = np.where(
            self.vstat[:n_real] == AT_LOWER, self.lower[:n_real],
            np.where(self.vstat[:n_real] == AT_UPPER, self.upper[:n_real], 0.0),
        )
        residual = self.b - A @ self._x[:n_real]

        # Crash basis: prefer a row's own slack when its implied value is
        # non-negative; fall back to an artificial column for that row.
        basis = np.full(self.m, -1, dtype=np.int64)
        for j in range(num_structural, n_real):
            row = int(np.flatnonzero(A[:, j])[0])
            value = residual[row] / A[row, j]
            if value >= 0.0:
                basis[row] = j
                self.vstat[j] = BASIC
        self.art_start = n_real
        self.A = np.hstack([A, np.zeros((self.m, self.m))])
        self.artificial_rows = [r for r in range(self.m) if basis[r] < 0]
        art_set = set(self.artificial_rows)
        for r in range(self.m):
            j = self.art_start + r
            if r in art_set:
                self.A[r, j] = 1.0 if residual[r] >= 0 else -1.0
                basis[r] = j
                self.vstat[j] = BASIC
            else:
                # Unused artificial slot: lock at zero, never enters.
                self.upper[j] = 0.0
                self.vstat[j] = AT_LOWER
        self.basis = basis

        self.iterations = 0
        self.degenerate = 0
        self.consecutive_degenerate = 0
        self.bland = False
        self.bland_engaged_ever = False
        self.refactorizations = 0
        self.pivots_since_refactor = 0
        # Anti-degeneracy bound expansion: bounds are treated as relaxed by a
        # tolerance that grows by a fixed increment each pivot, and every pivot
        # takes a strictly positive step, so no basis can repeat within a
        # phase. The accumulated relaxation never exceeds the feasibility
        # tolerance at problem scale.
        scale_b = max(1.0, float(np.max(np.abs(self.b))) if self.m else 1.0)
        self.feas_work = cfg.feasibility_tol * scale_b
        self.delta = 0.25 * self.feas_work
        self.delta_cap = 0.99 * self.feas_work
        self.tau_inc = (self.delta_cap - self.delta) / 20000.0
        self._refactor()

    # -- linear algebra

    def _refactor(self):
        try:
            self.Binv = np.linalg.inv(self.A[:, self.basis])
        except np.linalg.LinAlgError as exc:
            raise _SingularBasis(f"singular basis during refactorization: {exc}") from exc
        mask = np.ones(self.A.shape[1], dtype=bool)
        mask[self.basis] = False
        vals = np.where(self.vstat == AT_LOWER, self.lower,
                        np.where(self.vstat == AT_UPPER, self.upper, 0.0))
        self._x[mask] = vals[mask]
        rhs = self.b - self.A[:, mask] @ self._x[mask]
        self.xB = self.Binv @ rhs

    def _prices(self, cost: np.ndarray) -> np.ndarray:
        y = cost[self.basis] @ self.Binv
        return cost - y @ self.A

    # -- main loop

    def iterate(self, cost: np.ndarray) -> Status:
        opt_tol = self.cfg.optimality_tol
        while True:
            if self.iterations >= self.budget:
                return Status.STALLED
            d = self._prices(cost)
            movable = self.upper > self.lower
            score = np.zeros(len(d))
            sel = (self.vstat == AT_LOWER) & movable
            score[sel] = -d[sel]
            sel = (self.vstat == AT_UPPER) & movable
            score[sel] = d[sel]
            sel = self.vstat == FREE
            score[sel] = np.abs(d[sel])
            eligible = score > opt_tol
            if not np.any(eligible):
                if self.pivots_since_refactor > 0:
                    # Confirm optimality on a fresh factorization.
                    self._refactor()
                    self.refactorizations += 1
                    self.pivots_since_refactor = 0
                    continue
                return Status.OPTIMAL
            if self.bland:
                q = int(np.flatnonzero(eligible)[0])
            else:
                q = int(np.argmax(np.where(eligible, score, 0.0)))
            sigma = 1.0
            if self.vstat[q] == AT_UPPER or (self.vstat[q] == FREE and d[q] > 0):
                sigma = -1.0

            alpha = self.Binv @ self.A[:, q]
            step = sigma * alpha
            piv_tol = _PIVOT_TOL * max(1.0, float(np.max(np.abs(step))) if self.m else 1.0)
            lo_b = self.lower[self.basis]
            up_b = self.upper[self.basis]
            dec = step > piv_tol
            inc = step < -piv_tol

            # Pass 1: blocking step against bounds relaxed by the current
            # expansion tolerance. Pass 2: exact ratios; any row whose exact
            # ratio does not exceed the relaxed blocking step may leave, and
            # the numerically largest pivot among them is preferred.
            relaxed = np.full(self.m, INF)
            relaxed[dec] = (self.xB[dec] - (lo_b[dec] - self.delta)) / step[dec]
            relaxed[inc] = ((up_b[inc] + self.delta) - self.xB[inc]) / (-step[inc])
            np.maximum(relaxed, 0.0, out=relaxed)
            t_max = float(relaxed.min()) if self.m else INF
            own_range = self.upper[q] - self.lower[q]
            if not (t_max < INF) and not (own_range < INF):
                return Status.UNBOUNDED

            self.iterations += 1
            self.delta = min(self.delta + self.tau_inc, self.delta_cap)
            if own_range <= t_max:
                t = float(own_range)
                self.xB -= t * step
                new_stat = AT_UPPER if self.vstat[q] == AT_LOWER else AT_LOWER
                self._x[q] = self.upper[q] if new_stat == AT_UPPER else self.lower[q]
                self.vstat[q] = new_stat
                self._note_step(t)
                continue

            ratios = np.full(self.m, INF)
            ratios[dec] = (self.xB[dec] - lo_b[dec]) / step[dec]
            ratios[inc] = (up_b[inc] - self.xB[inc]) / (-step[inc])
            np.maximum(ratios, 0.0, out=ratios)
            candidates = np.flatnonzero(ratios <= t_max)
            if len(candidates) == 0:
                candidates = np.array([int(np.argmin(relaxed))])
            mags = np.abs(step[candidates])
            mag_scale = float(mags.max())
            if self.bland:
                # Anti-cycling: lowest variable index, skipping numerically
                # hopeless pivots when a usable one exists.
                safe = candidates[mags >= 1e-8 * max(1.0, mag_scale)]
                pool = safe if len(safe) else candidates
                r = int(pool[np.argmin(self.basis[pool])])
            else:
                r = int(candidates[np.argmax(mags)])
            leaving = int(self.basis[r])
            if abs(step[r]) < 1e-7 * max(1.0, mag_scale):
                # Fragile pivot: force a refactorization right after it.
                self.pivots_since_refactor = self.cfg.refactor_interval
            # Strictly positive step (bounded by the relaxed blocking step) so
            # bases cannot repeat even under massive degeneracy.
            t = min(max(float(ratios[r]), self.tau_inc / abs(step[r])), t_max)

            entering_value = (0.0 if self.vstat[q] == FREE else self._x[q]) + sigma * t
            self.xB -= t * step
            if step[r] > 0:
                self._x[leaving] = self.lower[leaving]
                self.vstat[leaving] = AT_LOWER
            else:
                self._x[leaving] = self.upper[leaving]
                self.vstat[leaving] = AT_UPPER
            self._pivot(q, r, alpha)
            self.xB[r] = entering_value
            self._maybe_refactor()
            self._note_step(t)

    def _pivot(self, q: int, r: int, alpha: np.ndarray):
        br = self.Binv[r] / alpha[r]
        self.Binv -= np.outer(alpha, br)
        self.Binv[r] = br
        self.basis[r] = q
        self.vstat[q] = BASIC
        self.pivots_since_refactor += 1

    def _maybe_refactor(self):
        if self.pivots_since_refactor >= self.cfg.refactor_interval:
            self._refactor()
            self.refactorizations += 1
            self.pivots_since_refactor = 0

    def _note_step(self, t: float):
        if t <= _DEGENERATE_STEP:
            self.degenerate += 1
            self.consecutive_degenerate += 1
            if self.consecutive_degenerate >= self.cfg.bland_trigger and not self.bland:
                self.bland = True
                self.bland_engaged_ever = True
        else:
            self.consecutive_degenerate = 0
            self.bland = False

    # -- phase-1 helpers

    def phase1_cost(self) -> np.ndarray:
        cost = np.zeros(self.A.shape[1])
        for r in self.artificial_rows:
            cost[self.art_start + r] = 1.0
        return cost

    def phase1_objective(self) -> float:
        x = self._x.copy()
        x[self.basis] = self.xB
        return float(sum(x[self.art_start + r] for r in self.artificial_rows))

    def drive_out_artificials(self):
        art_set = {self.art_start + r for r in self.artificial_rows}
        for r in range(self.m):
            if int(self.basis[r]) not in art_set:
                continue
            row = self.Binv[r] @ self.A[:, : self.n_real]
            weight = np.abs(row)
            candidates = (self.vstat[: self.n_real] != BASIC) & (weight > _DRIVE_OUT_TOL)
            idx = np.flatnonzero(candidates)
            if len(idx) == 0:
                continue  # dependent row; artificial stays basic at zero
            q = int(idx[np.argmax(weight[idx])])
            alpha = self.Binv @ self.A[:, q]
            old = int(self.basis[r])
            entering_value = 0.0 if self.vstat[q] == FREE else float(self._x[q])
            self._x[old] = 0.0
            self.vstat[old] = AT_LOWER
            self._pivot(q, r, alpha)
            self.xB[r] = entering_value
            self._maybe_refactor()
            self.iterations += 1
            self._note_step(0.0)

    def lock_artificials(self):
        for r in self.artificial_rows:
            j = self.art_start + r
            self.upper[j] = 0.0
            if self.vstat[j] != BASIC:
                self.vstat[j] = AT_LOWER
                self._x[j] = 0.0

    def solution_vector(self) -> np.ndarray:
        x = self._x.copy()
        x[self.basis] = self.xB
        return x[: self.n_real]

    def stats(self) -> SolverStats:
        return SolverStats(
            iterations=self.iterations,
            degenerate_pivots=self.degenerate,
            bland_engaged=self.bland_engaged_ever,
            refactorizations=self.refactorizations,
        )


def _run_two_phase(A, b, c, lower, upper, num_structural: int,
                   cfg: SolverConfig, budget: int):
    """Returns (status, x over real columns or None, phase1 infeasibility, stats)."""
    sim = _Simplex(A, b, c, lower, upper, num_structural, cfg, budget)
    if sim.artificial_rows:
        status = sim.iterate(sim.phase1_cost())
        if status is Status.STALLED:
            return status, None, None, sim.stats()
        if status is Status.UNBOUNDED:
            raise SolverError("phase-1 subproblem unbounded; numerical failure")
        infeas = sim.phase1_objective()
        scale = max(1.0, float(np.max(np.abs(b))) if len(b) else 1.0)
        if infeas > cfg.feasibility_tol * scale:
            return Status.INFEASIBLE, None, float(infeas), sim.stats()
        sim.drive_out_artificials()
        sim.lock_artificials()
    status = sim.iterate(sim.cost)
    if status is not Status.OPTIMAL:
        return status, None, None, sim.stats()
    return Status.OPTIMAL, sim.solution_vector(), None, sim.stats()


def _solve_direct(lp: LinearProgram, cfg: SolverConfig) -> Solution:
    budget = cfg.max_iterations if cfg.max_iterations is not None else _default_budget(lp)
    if not lp.constraints:
        return _solve_unconstrained(lp, cfg)
    A, b, c, lower, upper = _standard_form(lp)
    # Heavily degenerate problems can push the updated inverse into an exactly
    # singular basis; retry from scratch with more frequent refactorization
    # (interval 1 recomputes the inverse every pivot and cannot drift).
    last_exc: _SingularBasis | None = None
    for interval in (cfg.refactor_interval, 10, 1):
        try:
            status, x_all, infeas, stats = _run_two_phase(
                A, b, c, lower, upper, lp.num_vars,
                replace(cfg, refactor_interval=interval), budget,
            )
            break
        except _SingularBasis as exc:
            last_exc = exc
    else:
        raise last_exc
    if status is not Status.OPTIMAL:
        return Solution(status=status, x=None, objective=None, max_violation=None,
                        phase1_infeasibility=infeas, stats=stats)
    x = x_all[: lp.num_vars].copy()
    x.setflags(write=False)
    violation = lp.max_violation(x)
    scale = max(1.0, float(np.max(np.abs(b))) if len(b) else 1.0)
    if violation > 1e3 * cfg.feasibility_tol * scale:
        raise SolverError(
            f"solution violates constraints by {violation:.3e}; refusing to report optimal"
        )
    return Solution(
        status=Status.OPTIMAL,
        x=x,
        objective=lp.objective_value(x),
        max_violation=violation,
        phase1_infeasibility=infeas,
        stats=stats,
    )


def _solve_unconstrained(lp: LinearProgram, cfg: SolverConfig) -> Solution:
    c = np.zeros(lp.num_vars)
    for j, coef in zip(lp.objective_indices, lp.objective_coeffs):
        c[j] += coef
    x = np.zeros(lp.num_vars)
    for j in range(lp.num_vars):
        lo, up = lp.lower[j], lp.upper[j]
        if c[j] > 0:
            if lo == -INF:
                return Solution(Status.UNBOUNDED, None, None, None, None, SolverStats())
            x[j] = lo
        elif c[j] < 0:
            if up == INF:
                return Solution(Status.UNBOUNDED, None, None, None, None, SolverStats())
            x[j] = up
        else:
            x[j] = lo if lo > -INF else (up if up < INF else 0.0)
    x.setflags(write=False)
    return Solution(Status.OPTIMAL, x, lp.objective_value(x), lp.max_violation(x),
                    None, SolverStats())


# ---------------------------------------------------------------------------
# Cutting-plane path for balancing LPs


def _detect_balancing_structure(lp: LinearProgram) -> dict | None:
    """Recognize LPs produced by build_balancing_lp; return unit metadata."""
    if not lp.labels or len(lp.labels) != lp.num_vars:
        return None
    kinds = [lab.kind for lab in lp.labels]
    num_units = sum(1 for k in kinds if k == "weight")
    if num_units == 0:
        return None
    if any(k != "weight" for k in kinds[:num_units]):
        return None
    if any(k != "aux_max" for k in kinds[num_units:]):
        return None
    if any(lp.lower[j] != 0.0 or lp.upper[j] != INF for j in range(lp.num_vars)):
        return None
    cons = lp.constraints
    if len(cons) < 2:
        return None
    bal, tot = cons[0], cons[1]
    if bal.relation != "=" or bal.rhs != 0.0 or tot.relation != "=" or tot.rhs <= 0:
        return None
    if sorted(tot.indices) != list(range(num_units)):
        return None
    if sorted(bal.indices) != list(range(num_units)):
        return None
    mult = np.zeros(num_units)
    for i, cf in zip(tot.indices, tot.coeffs):
        if cf < 1.0 or abs(cf - round(cf)) > 1e-9:
            return None
        mult[i] = round(cf)
    group = np.zeros(num_units, dtype=int)
    for i, cf in zip(bal.indices, bal.coeffs):
        if abs(abs(cf) - mult[i]) > 1e-9:
            return None
        group[i] = 0 if cf > 0 else 1

    aux_partner: dict[int, tuple[int, int]] = {}
    for j in range(num_units, lp.num_vars):
        lab = lp.labels[j]
        if lab.other < 0 or lab.unit <= lab.other or lab.unit >= num_units:
            return None
        if group[lab.unit] != group[lab.other]:
            return None
        aux_partner[j] = (lab.unit, lab.other)

    aux_row_count = {j: 0 for j in aux_partner}
    eq_rows: list[Constraint] = []
    for con in cons[2:]:
        if con.relation == "=":
            if any(j >= num_units for j in con.indices):
                return None
            eq_rows.append(con)
        elif con.relation == ">=":
            if con.rhs != 0.0 or len(con.indices) != 2:
                return None
            pairs = dict(zip(con.indices, con.coeffs))
            aux_js = [j for j in pairs if j >= num_units]
            w_js = [j for j in pairs if j < num_units]
            if len(aux_js) != 1 or len(w_js) != 1:
                return None
            aux, w_j = aux_js[0], w_js[0]
            if pairs[aux] != 1.0 or pairs[w_j] != -1.0 or aux not in aux_partner:
                return None
            if w_j not in aux_partner[aux]:
                return None
            aux_row_count[aux] += 1
        else:
            return None
    if any(count != 2 for count in aux_row_count.values()):
        return None

    expected_obj: dict[int, float] = {}
    for i in range(num_units):
        c_i = mult[i]
        if c_i > 1:
            expected_obj[i] = c_i * (c_i - 1) / 2.0
    for aux, (i, j) in aux_partner.items():
        expected_obj[aux] = mult[i] * mult[j]
    actual_obj = dict(zip(lp.objective_indices, lp.objective_coeffs))
    if set(actual_obj) != set(expected_obj):
        return None
    for j, coef in expected_obj.items():
        if abs(actual_obj[j] - coef) > 1e-9:
            return None

    return {
        "num_units": num_units,
        "mult": mult,
        "group": group,
        "eq_rows": (bal, tot, *eq_rows),
        "aux_partner": aux_partner,
    }


def _ordering_cut(mult_group: np.ndarray, order: np.ndarray) -> np.ndarray:
    """Cut coefficients for one unit ordering (positions expand multiplicities)."""
    coef = np.empty(len(order))
    pos = 0.0
    for k in order:
        c = mult_group[k]
        coef[k] = c * pos + c * (c - 1) / 2.0
        pos += c
    return coef


def _group_objective(w_group: np.ndarray, mult_group: np.ndarray
                     ) -> tuple[float, np.ndarray]:
    """Exact per-group pairwise-max objective and its supporting ordering cut."""
    order = np.array(sorted(range(len(w_group)), key=lambda k: (w_group[k], k)),
                     dtype=np.int64)
    coef = _ordering_cut(mult_group, order)
    return float(coef @ w_group), coef


def _support_cuts(w_group: np.ndarray, mult_group: np.ndarray) -> list[np.ndarray]:
    """Supporting cuts at a point: ascending orders with opposite tie-breaks.

    Ties among equal weights are common at master vertices; both extreme
    tie-breaks support the objective at the point and pin it faster.
    """
    up = np.array(sorted(range(len(w_group)), key=lambda k: (w_group[k], k)),
                  dtype=np.int64)
    down = np.array(sorted(range(len(w_group)), key=lambda k: (w_group[k], -k)),
                    dtype=np.int64)
    cuts = [_ordering_cut(mult_group, up)]
    if not np.array_equal(up, down):
        cuts.append(_ordering_cut(mult_group, down))
    return cuts


class _DecompositionState:
    """Bookkeeping for the cutting-plane solve: cut pool, bounds, statistics."""

    def __init__(self, lp: LinearProgram, struct: dict, cfg: SolverConfig):
        self.lp = lp
        self.cfg = cfg
        self.num_units = struct["num_units"]
        self.mult = struct["mult"]
        self.group = struct["group"]
        self.eq_rows = struct["eq_rows"]
        self.aux_partner = struct["aux_partner"]
        self.members = {g: np.flatnonzero(self.group == g) for g in (0, 1)}
        self.z_index = {0: self.num_units, 1: self.num_units + 1}
        self.cuts: list[Constraint] = []
        self.cut_keys: set[tuple] = set()
        self.iterations = 0
        self.degenerate = 0
        self.refactorizations = 0
        self.bland = False
        self.rounds = 0
        self.sub_cfg = replace(cfg, decomposition=False, max_iterations=None)

    def add_cut(self, g: int, coef: np.ndarray) -> None:
        key = (g, coef.tobytes())
        if key in self.cut_keys:
            return
        self.cut_keys.add(key)
        idx = self.members[g]
        self.cuts.append(Constraint(
            indices=tuple(int(i) for i in idx) + (self.z_index[g],),
            coeffs=tuple(float(v) for v in coef) + (-1.0,),
            relation="<=",
            rhs=0.0,
        ))

    def add_support_cuts(self, w: np.ndarray) -> None:
        for g in (0, 1):
            idx = self.members[g]
            for coef in _support_cuts(w[idx], self.mult[idx]):
                self.add_cut(g, coef)

    def objective_at(self, w: np.ndarray) -> float:
        total = 0.0
        for g in (0, 1):
            idx = self.members[g]
            f_g, _ = _group_objective(w[idx], self.mult[idx])
            total += f_g
        return total

    def absorb(self, sol: Solution) -> None:
        self.iterations += sol.stats.iterations
        self.degenerate += sol.stats.degenerate_pivots
        self.refactorizations += sol.stats.refactorizations
        self.bland = self.bland or sol.stats.bland_engaged

    def stats(self) -> SolverStats:
        return SolverStats(iterations=self.iterations, degenerate_pivots=self.degenerate,
                           bland_engaged=self.bland, refactorizations=self.refactorizations,
                           cut_rounds=self.rounds)

    def solve_master(self) -> Solution:
        master = LinearProgram(
            num_vars=self.num_units + 2,
            lower=tuple(self.lp.lower[:self.num_units]) + (0.0, 0.0),
            upper=tuple(self.lp.upper[:self.num_units]) + (INF, INF),
            constraints=tuple(self.eq_rows) + tuple(self.cuts),
            objective_indices=(self.z_index[0], self.z_index[1]),
            objective_coeffs=(1.0, 1.0),
        )
        sol = _solve_direct(master, self.sub_cfg)
        self.absorb(sol)
        return sol

    def solve_region(self, w: np.ndarray) -> Solution | None:
        """Best point whose per-group sort order matches that of ``w``.

        Within the region where a fixed ascending order holds, the pairwise-max
        objective is exactly linear, so one small LP finds the region optimum.
        """
        constraints = list(self.eq_rows)
        obj_idx: list[int] = []
        obj_coef: list[float] = []
        for g in (0, 1):
            idx = self.members[g]
            order = np.array(sorted(range(len(idx)), key=lambda k: (w[idx][k], k)),
                             dtype=np.int64)
            coef = _ordering_cut(self.mult[idx], order)
            obj_idx.extend(int(i) for i in idx)
            obj_coef.extend(float(v) for v in coef)
            for a, b in zip(order, order[1:]):
                constraints.append(Constraint(
                    (int(idx[a]), int(idx[b])), (1.0, -1.0), "<=", 0.0))
        region = LinearProgram(
            num_vars=self.num_units,
            lower=tuple(self.lp.lower[:self.num_units]),
            upper=tuple(self.lp.upper[:self.num_units]),
            constraints=tuple(constraints),
            objective_indices=tuple(obj_idx),
            objective_coeffs=tuple(obj_coef),
        )
        sol = _solve_direct(region, self.sub_cfg)
        self.absorb(sol)
        if sol.status is not Status.OPTIMAL:
            return None
        return sol


def _solve_decomposition(lp: LinearProgram, struct: dict, cfg: SolverConfig) -> Solution:
    state = _DecompositionState(lp, struct, cfg)

    # Seed the cut pool with diverse orderings so the first master is already
    # well constrained; single-cut iteration crawls on larger instances.
    for g in (0, 1):
        size = len(state.members[g])
        mult_g = state.mult[state.members[g]]
        state.add_cut(g, _ordering_cut(mult_g, np.arange(size, dtype=np.int64)))
        state.add_cut(g, _ordering_cut(mult_g, np.arange(size - 1, -1, -1, dtype=np.int64)))
        seed_rng = np.random.default_rng(1_000_003 + g)
        for _ in range(min(size, 64)):
            state.add_cut(g, _ordering_cut(mult_g, seed_rng.permutation(size)))

    best_w: np.ndarray | None = None
    best_value = INF
    while state.rounds < cfg.max_cut_rounds:
        state.rounds += 1
        sol = state.solve_master()
        if sol.status is Status.INFEASIBLE:
            return Solution(Status.INFEASIBLE, None, None, None,
                            sol.phase1_infeasibility, state.stats())
        if sol.status is not Status.OPTIMAL:
            return Solution(sol.status, None, None, None, None, state.stats())
        lower_bound = float(sol.objective)
        w = np.asarray(sol.x[:state.num_units])
        state.add_support_cuts(w)
        value = state.objective_at(w)
        if value < best_value:
            best_value, best_w = value, w

        # Polish the incumbent by descending through sort-order regions; each
        # region optimum is feasible and contributes its supporting cuts.
        current = w
        for _ in range(30):
            region_sol = state.solve_region(current)
            if region_sol is None:
                break
            cand = np.asarray(region_sol.x[:state.num_units])
            cand_value = state.objective_at(cand)
            state.add_support_cuts(cand)
            if cand_value < best_value - 1e-12 * max(1.0, abs(best_value)):
                best_value, best_w = cand_value, cand
            if cand_value >= value - cfg.optimality_tol * max(1.0, abs(value)):
                break
            value, current = cand_value, cand

        if best_value - lower_bound <= cfg.optimality_tol * max(1.0, abs(best_value)):
            x = np.zeros(lp.num_vars)
            x[:state.num_units] = best_w
            for aux, (i, j) in state.aux_partner.items():
                x[aux] = max(best_w[i], best_w[j])
            x.setflags(write=False)
            return Solution(
                status=Status.OPTIMAL,
                x=x,
                objective=lp.objective_value(x),
                max_violation=lp.max_violation(x),
                phase1_infeasibility=None,
                stats=state.stats(),
            )
    return Solution(Status.STALLED, None, None, None, None, state.stats())


# ---------------------------------------------------------------------------
# External backend (scipy HiGHS) for balancing LPs too large for a dense basis


def _solve_scipy(lp: LinearProgram, cfg: SolverConfig) -> Solution:
    from scipy.optimize import linprog
    from scipy.sparse import coo_matrix

    eq_r, eq_c, eq_v, b_eq = [], [], [], []
    ub_r, ub_c, ub_v, b_ub = [], [], [], []
    for con in lp.constraints:
        if con.relation == "=":
            row = len(b_eq)
            eq_r.extend([row] * len(con.indices))
            eq_c.extend(con.indices)
            eq_v.extend(con.coeffs)
            b_eq.append(con.rhs)
        else:
            sign = 1.0 if con.relation == "<=" else -1.0
            row = len(b_ub)
            ub_r.extend([row] * len(con.indices))
            ub_c.extend(con.indices)
            ub_v.extend(sign * c for c in con.coeffs)
            b_ub.append(sign * con.rhs)
    c = np.zeros(lp.num_vars)
    for j, coef in zip(lp.objective_indices, lp.objective_coeffs):
        c[j] += coef
    kwargs = {}
    if b_eq:
        kwargs["A_eq"] = coo_matrix(
            (eq_v, (eq_r, eq_c)), shape=(len(b_eq), lp.num_vars)).tocsr()
        kwargs["b_eq"] = np.asarray(b_eq)
    if b_ub:
        kwargs["A_ub"] = coo_matrix(
            (ub_v, (ub_r, ub_c)), shape=(len(b_ub), lp.num_vars)).tocsr()
        kwargs["b_ub"] = np.asarray(b_ub)
    bounds = [(lo if lo > -INF else None, up if up < INF else None)
              for lo, up in zip(lp.lower, lp.upper)]
    res = linprog(c, bounds=bounds, method="highs", **kwargs)
    stats = SolverStats(iterations=int(getattr(res, "nit", 0) or 0))
    if res.status == 2:
        return Solution(Status.INFEASIBLE, None, None, None, None, stats)
    if res.status == 3:
        return Solution(Status.UNBOUNDED, None, None, None, None, stats)
    if res.status != 0 or res.x is None:
        return Solution(Status.STALLED, None, None, None, None, stats)
    x = np.asarray(res.x, dtype=float).copy()
    x.setflags(write=False)
    return Solution(
        status=Status.OPTIMAL,
        x=x,
        objective=lp.objective_value(x),
        max_violation=lp.max_violation(x),
        phase1_infeasibility=None,
        stats=stats,
    )
