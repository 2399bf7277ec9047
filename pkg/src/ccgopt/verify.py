"""Self-check suites pairing fast implementations with independent oracles.

Each suite returns CheckResult rows (property, measured error, threshold,
verdict) so the CLI can print a machine-readable report and exit nonzero
on any failure.  The oracles are deliberately naive: explicit softmax
over an enumerated family, central finite differences, an active-set
projection, and a structural DAG scan.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .congestion import CostModel, social_cost
from .equilibrium import (SolverConfig, exponential_weights_check,
                          solve_accelerated)
from .marginals import brute_force_marginal, softmin_marginal
from .stackelberg import evaluate_leader, project_theta, project_theta_reference
from .tape import Tape, values
from .zdd import Zdd


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        extra = f" {self.detail}" if self.detail else ""
        return (f"{verdict} {self.name} measured={self.measured:.3e} "
                f"threshold={self.threshold:.3e}{extra}")


def marginal_suite(zdd: Zdd, trials=100, tol=1e-10, seed=0,
                   cost_range=20.0, limit=10**4) -> list[CheckResult]:
    """Weight-pushing marginal against the explicit softmax oracle on
    random cost vectors, plus the convex-hull range check."""
    sets = zdd.enumerate_sets(limit)
    rng = np.random.default_rng(seed)
    worst = 0.0
    out_of_hull = 0.0
    for _ in range(trials):
        costs = rng.uniform(-cost_range, cost_range, zdd.n)
        tape = Tape()
        x = values(softmin_marginal(zdd, tape.inputs(costs)))
        expected = brute_force_marginal(sets, costs, zdd.n)
        worst = max(worst, float(np.max(np.abs(x - expected))))
        out_of_hull = max(out_of_hull,
                          float(max(np.max(x - 1.0), np.max(-x), 0.0)))
    return [
        CheckResult("marginal_oracle_equivalence", worst <= tol, worst, tol,
                    f"family={len(sets)} trials={trials}"),
        CheckResult("marginal_hull_membership", out_of_hull <= 1e-12,
                    out_of_hull, 1e-12),
    ]


def gradient_suite(zdd: Zdd, model: CostModel, theta=None,
                   inner: SolverConfig | None = None, tol=1e-4,
                   fd_step=1e-5) -> list[CheckResult]:
    """Back-propagated leader gradient against tangentially projected
    central finite differences of the same objective."""
    inner = inner or SolverConfig(iterations=50, eta=0.1)
    n = zdd.n
    theta = np.ones(n) if theta is None else np.asarray(theta, dtype=float)

    def objective(th):
        tape = Tape()
        tv = tape.inputs(th)
        y, _ = solve_accelerated(zdd, model, tv, inner, tape)
        return social_cost(model, tv, y).value

    grad, _, _ = evaluate_leader(theta, zdd, model, inner)
    tangential = grad - grad.mean()
    fd = np.zeros(n)
    for i in range(n):
        direction = -np.ones(n) / n
        direction[i] += 1.0
        fd[i] = (objective(theta + fd_step * direction)
                 - objective(theta - fd_step * direction)) / (2 * fd_step)
    err = float(np.max(np.abs(tangential - fd)) / (1.0 + np.max(np.abs(fd))))
    return [CheckResult(f"gradient_fd_{model.kind}", err <= tol, err, tol,
                        f"T={inner.iterations}")]


def lemma_suite(zdd: Zdd, model: CostModel, theta=None, iterations=300,
                every=10, tol=1e-8, limit=10**4) -> list[CheckResult]:
    """Exponential-weights identity: each recorded iterate must equal the
    brute-force softmax marginal of its accumulated costs."""
    theta = np.ones(zdd.n) if theta is None else np.asarray(theta, dtype=float)
    _, trace = solve_accelerated(zdd, model, theta,
                                 SolverConfig(iterations=iterations, eta=0.1))
    sets = zdd.enumerate_sets(limit)
    worst = 0.0
    for t in range(0, iterations + 1, every):
        expected = brute_force_marginal(sets, trace.cost_history[t], zdd.n)
        worst = max(worst, float(np.max(np.abs(trace.flow_history[t]
                                               - expected))))
    passed = worst <= tol and exponential_weights_check(zdd, trace, iterations,
                                                        tol, limit)
    return [CheckResult(f"exponential_weights_identity_{model.kind}", passed,
                        worst, tol, f"T={iterations} every={every}")]


def projection_suite(trials=1000, dims=(2, 5, 20), seed=0,
                     tol=1e-9) -> list[CheckResult]:
    """Sort-based simplex projection against the active-set oracle."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in dims:
        for _ in range(trials):
            v = rng.uniform(-2 * n, 2 * n, n)
            a = project_theta(v)
            b = project_theta_reference(v)
            worst = max(worst, float(np.max(np.abs(a - b))))
    return [CheckResult("projection_oracle", worst <= tol, worst, tol,
                        f"dims={list(dims)} trials={trials}")]


def structure_suite(zdd: Zdd) -> list[CheckResult]:
    issues = zdd.structural_violations()
    detail = "; ".join(issues[:3]) if issues else ""
    return [CheckResult("zdd_structural_invariants", not issues,
                        float(len(issues)), 0.0, detail)]


SUITES = ("structure", "marginal", "gradient", "lemma", "projection")


def run_suites(zdd: Zdd | None, graph=None, suites=SUITES, congestion=10.0,
               seed=0) -> list[CheckResult]:
    """Run the requested suites against one instance.  Gradient and
    lemma suites need a graph (for edge lengths); marginal and structure
    suites only need the diagram."""
    results = []
    for suite in suites:
        if suite == "structure":
            results.extend(structure_suite(zdd))
            if not results[-1].passed:
                # value suites assume a well-formed diagram
                return results
        elif suite == "marginal":
            results.extend(marginal_suite(zdd, seed=seed))
        elif suite == "projection":
            results.extend(projection_suite(seed=seed))
        elif suite in ("gradient", "lemma"):
            if graph is None:
                raise ValueError(f"suite {suite!r} needs a graph")
            for kind in ("fractional", "exponential"):
                model = CostModel.for_graph(graph, kind, congestion)
                if suite == "gradient":
                    results.extend(gradient_suite(zdd, model))
                else:
                    results.extend(lemma_suite(zdd, model))
        else:
            raise ValueError(f"unknown suite {suite!r}")
    return results
