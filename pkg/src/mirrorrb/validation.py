"""Quick self-check suite comparing the fast engines with the dense oracles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chisquare

from .circuits import MrbDesign, SamplerSpec, grid_graph, lattice_subset, sample_mirror_circuit
from .clifford import CLIFFORD_INVERSE, CLIFFORD_PRODUCT, NUM_CLIFFORDS
from .noise import build_model2
from .oracles import (
    DensePauliDistribution,
    build_M,
    compose_dense,
    dense_output_distribution,
    dense_statevector_run,
    eta,
    eta_prefactor,
    recover_p0,
    twirl_1q_clifford,
)
from .tableau import tableau_run
from .weaksim import simulate_shots

__all__ = ["CheckResult", "run_checks"]

VALIDATION_SCHEMA = "mrb-validation/1"


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _group_closure() -> CheckResult:
    table = np.asarray(CLIFFORD_PRODUCT)
    ok = table.min() >= 0 and table.max() < NUM_CLIFFORDS
    ok &= all(CLIFFORD_PRODUCT[g][CLIFFORD_INVERSE[g]] == 0 for g in range(NUM_CLIFFORDS))
    ok &= all(len(set(row)) == NUM_CLIFFORDS for row in CLIFFORD_PRODUCT)
    return CheckResult("clifford-group-closure", bool(ok), "24x24 product table")


def _tableau_vs_dense(rng, count: int) -> CheckResult:
    bad = 0
    device = grid_graph(2, 2)
    design = MrbDesign((0, 1, 2, 3), device, SamplerSpec("edge_grab", 0.5), (0, 2, 4, 8), 1, 1, 0)
    for i in range(count):
        c = sample_mirror_circuit(design, design.depths[i % 4], rng, seed=i)
        if tableau_run(c.layers) != dense_statevector_run(c.layers):
            bad += 1
    return CheckResult("tableau-vs-statevector", bad == 0, f"{count - bad}/{count} circuits agree")


def _m_round_trip(rng) -> CheckResult:
    worst = 0.0
    for n in range(1, 13):
        p = rng.dirichlet(np.ones(n + 1))
        worst = max(worst, abs(recover_p0(build_M(n) @ p) - p[0]))
    return CheckResult("flip-matrix-round-trip", bool(worst < 1e-12), f"max error {worst:.2e}")


def _twirl(rng) -> CheckResult:
    worst = 0.0
    for _ in range(20):
        d = DensePauliDistribution(1, rng.dirichlet(np.ones(4)))
        t = twirl_1q_clifford(d)
        worst = max(worst, np.ptp(t.probs[1:]), abs(t.infidelity - d.infidelity))
    return CheckResult("one-qubit-twirl", bool(worst < 1e-12), f"max deviation {worst:.2e}")


def _composition(rng) -> CheckResult:
    worst = 0.0
    for n in (1, 2, 3):
        for _ in range(5):
            a = DensePauliDistribution(n, rng.dirichlet(np.ones(4**n) * 0.3))
            b = DensePauliDistribution(n, rng.dirichlet(np.ones(4**n) * 0.3))
            gap = compose_dense(a, b).polarization - a.polarization * b.polarization
            worst = max(worst, abs(gap - eta_prefactor(n) * eta(a, b)))
    return CheckResult("polarization-composition", bool(worst < 1e-12), f"max error {worst:.2e}")


def _frame_vs_dense(rng, shots: int) -> CheckResult:
    device = grid_graph(4, 4)
    qubits = lattice_subset(4, 4, 3)
    design = MrbDesign(qubits, device, SamplerSpec("edge_grab", 0.5), (4,), 1, shots, 0)
    model = build_model2(device).restrict(qubits)
    circuit = sample_mirror_circuit(design, 4, rng, seed=0)
    exact = dense_output_distribution(circuit, model)
    counts = simulate_shots(circuit, model, shots, rng).counts
    keys = sorted(exact)
    observed = np.array([counts.get(k, 0) for k in keys], dtype=float)
    expected = np.array([exact[k] for k in keys]) * shots
    keep = expected > 5
    observed = np.append(observed[keep], observed[~keep].sum())
    expected = np.append(expected[keep], expected[~keep].sum())
    if expected[-1] == 0:
        observed, expected = observed[:-1], expected[:-1]
    pvalue = float(chisquare(observed, expected * observed.sum() / expected.sum()).pvalue)
    return CheckResult("frame-vs-dense-distribution", bool(pvalue > 1e-3), f"chi-square p = {pvalue:.3g}")


def run_checks(seed: int = 0, shots: int = 20000) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [
        _group_closure(),
        _tableau_vs_dense(rng, 50),
        _m_round_trip(rng),
        _twirl(rng),
        _composition(rng),
        _frame_vs_dense(rng, shots),
    ]


def checks_to_dict(checks: list[CheckResult]) -> dict:
    return {
        "schema": VALIDATION_SCHEMA,
        "passed": all(c.passed for c in checks),
        "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks],
    }

