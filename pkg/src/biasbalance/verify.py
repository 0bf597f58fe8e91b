"""Self-contained verification suite wiring the brute-force oracles to the
weight pipeline on synthetic instances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .balancer import BalancerConfig, compute_weights
from .data import Group
from .errors import BalanceError
from .lp import evaluate_objective
from .oracle import (
    max_noise_bruteforce,
    pairwise_identity_check,
    sorted_prefix_noise,
    theorem1_optimality_probe,
)
from .simplex import SolverConfig
from . import synth


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def run_verification(seed: int = 0, rounds: int = 40) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    checks: list[CheckResult] = []

    worst = 0.0
    for _ in range(rounds * 5):
        size = int(rng.integers(1, 60))
        w = rng.uniform(0.0, 10.0, size=size)
        scale = max(1.0, float(np.sum(w)) * size)
        worst = max(worst, pairwise_identity_check(w) / scale)
    checks.append(CheckResult(
        "pairwise-identity",
        worst <= 1e-9,
        f"max relative residual {worst:.3e} over {rounds * 5} random vectors",
    ))

    agree = True
    detail = ""
    for i in range(rounds):
        size = int(rng.integers(1, 15))
        ids = [f"e{i}-{j}" for j in range(size)]
        weights = {k: float(v) for k, v in zip(ids, rng.uniform(0, 3, size=size))}
        n = 2.0 * sum(weights.values())  # group carries half the mass
        full = max_noise_bruteforce(weights, ids, n)
        fast = sorted_prefix_noise(weights, ids, n)
        if abs(full.deviation - fast.deviation) > 1e-12 * max(1.0, full.deviation):
            agree = False
            detail = f"instance {i}: {full.deviation} vs {fast.deviation}"
            break
    checks.append(CheckResult(
        "prefix-vs-enumeration",
        agree,
        detail or f"{rounds} instances agree exactly",
    ))

    probe_pass = True
    probe_notes = []
    for variant in range(3):
        ds = synth.make_mirrored_dataset(3, np.random.default_rng(seed + variant))
        if variant == 0:
            props = []
        elif variant == 1:
            props = synth.random_property_sets(
                np.random.default_rng(seed + 17 + variant), ds, 2)
        else:
            # property set with members on one side only: its weights are
            # forced to zero, the probe must still hold
            one = next(ex.id for ex in ds.positive() if ex.group is Group.MASCULINE)
            from .data import PropertySet
            props = [PropertySet(label="S_solo", members=frozenset({one}))]
        try:
            assignment = compute_weights(ds, props)
            rep = theorem1_optimality_probe(ds, props,
                                            candidate_weights=assignment.weights)
            if not rep.passed:
                probe_pass = False
                probe_notes.append(f"variant {variant}: {rep.notes}")
        except BalanceError as exc:
            probe_pass = False
            probe_notes.append(f"variant {variant}: {exc}")
    checks.append(CheckResult(
        "optimality-probe",
        probe_pass,
        "; ".join(probe_notes) or "grid probe holds on 3 tiny instances",
    ))

    ds = synth.make_dataset(np.random.default_rng(seed + 101), 12,
                            positive_fraction=1.0)
    props = synth.random_property_sets(np.random.default_rng(seed + 102), ds, 2)
    try:
        collapsed = compute_weights(ds, props)
        naive = compute_weights(ds, props, BalancerConfig(naive=True))
        diff = abs(collapsed.objective - naive.objective)
        checks.append(CheckResult(
            "collapse-equivalence",
            diff <= 1e-7 * max(1.0, abs(naive.objective)),
            f"objective difference {diff:.3e}",
        ))
    except BalanceError as exc:
        checks.append(CheckResult("collapse-equivalence", False, str(exc)))

    ds2 = synth.make_dataset(np.random.default_rng(seed + 201), 40)
    props2 = synth.random_property_sets(np.random.default_rng(seed + 202), ds2, 3)
    try:
        a1 = compute_weights(ds2, props2)
        a2 = compute_weights(ds2, props2)
        identical = a1.weights == a2.weights and a1.objective == a2.objective
        checks.append(CheckResult(
            "determinism",
            identical,
            "two runs produced bit-identical assignments" if identical
            else "assignments differ between runs",
        ))
        positive = ds2.positive()
        expanded = evaluate_objective(
            [a1.weights[ex.id] for ex in positive],
            [0 if ex.group is Group.MASCULINE else 1 for ex in positive],
        )
        agree2 = abs(expanded - a1.objective) <= 1e-6 * max(1.0, abs(expanded))
        checks.append(CheckResult(
            "objective-evaluation",
            agree2,
            f"definitional pairwise sum {expanded:.6f} vs solver {a1.objective:.6f}",
        ))
    except BalanceError as exc:
        checks.append(CheckResult("determinism", False, str(exc)))

    return checks
