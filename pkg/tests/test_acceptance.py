"""Acceptance suite: every release gate in one module.

Each test prints one PASS line when its criterion holds; tolerances are
fixed here, not tuned elsewhere.  The slowest gate is the full-resolution
parameter grid (a few minutes); everything else runs in seconds.
"""

import numpy as np
import pytest

import oracles
from conftest import GRAPH_BUILDERS
from ccgopt.congestion import CostModel
from ccgopt.equilibrium import (SolverConfig, fw_gap, solve_accelerated,
                                solve_naive_softmin, solve_standard_fw)
from ccgopt.graphs import StrategyClass
from ccgopt.marginals import brute_force_marginal, softmin_marginal
from ccgopt.stackelberg import (StackelbergConfig, evaluate_leader,
                                exhaustive_search, optimize_pgd,
                                project_theta, project_theta_reference)
from ccgopt.tape import Tape, values
from ccgopt.zdd import build_family

SPARSE_OPT = np.array([0.0, 2.5, 0.0, 0.0, 2.5])
DENSE_OPT = np.array([1.25, 1.25, 0.0, 1.25, 1.25])
ROUTE_SWAP_ORBIT = ((0, 1, 2, 3, 4), (1, 0, 2, 4, 3),
                    (3, 4, 2, 0, 1), (4, 3, 2, 1, 0))


def orbit_distance(theta, target):
    return min(np.max(np.abs(theta[list(perm)] - target))
               for perm in ROUTE_SWAP_ORBIT)


def report(line):
    print(f"\nACCEPTANCE {line}")


def test_criterion_1_fractional_reproduction(braess, braess_zdd):
    """Start cost 7.000, gradient descent and the full 0.05 grid both
    land on the optimal social cost 6.444."""
    model = CostModel.for_graph(braess, "fractional")
    trace = optimize_pgd(np.ones(5), braess_zdd, model,
                         StackelbergConfig(max_outer_iters=30))
    start = trace.records[0].objective
    assert start == pytest.approx(7.000, abs=5e-3)
    assert trace.result.objective == pytest.approx(6.444, abs=1e-2)
    assert trace.result.k <= 30
    theta_star, f_star = exhaustive_search(0.05, braess_zdd, model,
                                           StackelbergConfig())
    np.testing.assert_allclose(theta_star, SPARSE_OPT, atol=1e-12)
    assert f_star == pytest.approx(6.444, abs=1e-2)
    report(f"1 PASS fractional: start F={start:.4f}, "
           f"pgd F={trace.result.objective:.4f} at k={trace.result.k}, "
           f"grid theta*={theta_star.tolist()} F*={f_star:.4f}")


def test_criterion_2_exponential_reproduction(braess, braess_zdd):
    """Start cost 5.678; gradient descent passes the 4.865 saddle and
    reaches 3.517 at the sparse optimum (up to route symmetry)."""
    model = CostModel.for_graph(braess, "exponential")
    trace = optimize_pgd(np.ones(5), braess_zdd, model,
                         StackelbergConfig(max_outer_iters=100))
    start = trace.records[0].objective
    assert start == pytest.approx(5.678, abs=5e-3)
    assert trace.result.objective == pytest.approx(3.517, abs=1e-2)
    assert orbit_distance(trace.result.theta, SPARSE_OPT) <= 0.05
    _, saddle_value, _ = evaluate_leader(DENSE_OPT, braess_zdd, model,
                                         SolverConfig(iterations=300, eta=0.1))
    assert saddle_value == pytest.approx(4.865, abs=1e-2)
    report(f"2 PASS exponential: start F={start:.4f}, "
           f"pgd F={trace.result.objective:.4f} at "
           f"theta={np.round(trace.result.theta, 3).tolist()}, "
           f"saddle F={saddle_value:.4f}")


def test_criterion_3_marginal_oracle(braess_zdd, k4_zdd, grid3x3_zdd,
                                     steiner6_zdd, single_edge_zdd):
    """Weight pushing equals the explicit softmax on five families for
    100 random cost vectors each."""
    rng = np.random.default_rng(2024)
    families = {
        "braess_paths": braess_zdd,
        "k4_hamilton": k4_zdd,
        "grid3x3_paths": grid3x3_zdd,
        "steiner6_trees": steiner6_zdd,
        "single_set": single_edge_zdd,
    }
    worst = 0.0
    for name, zdd in families.items():
        sets = zdd.enumerate_sets(10**4)
        for _ in range(100):
            costs = rng.uniform(-20, 20, zdd.n)
            tape = Tape()
            got = values(softmin_marginal(zdd, tape.inputs(costs)))
            want = brute_force_marginal(sets, costs, zdd.n)
            err = float(np.max(np.abs(got - want)))
            worst = max(worst, err)
            assert err <= 1e-10, f"{name}: {err}"
    report(f"3 PASS marginal oracle: 5 families x 100 costs, "
           f"worst error {worst:.2e} <= 1e-10")


def test_criterion_4_gradient_fidelity(braess, braess_zdd):
    """Back-propagated leader gradients match tangentially projected
    central differences to 1e-4 relative, both cost kinds, T=50."""
    inner = SolverConfig(iterations=50, eta=0.1)
    worst = 0.0
    for kind in ("fractional", "exponential"):
        model = CostModel.for_graph(braess, kind)
        grad, _, _ = evaluate_leader(np.ones(5), braess_zdd, model, inner)
        tangential = grad - grad.mean()

        def objective(theta, model=model):
            _, value, _ = evaluate_leader(project_theta(theta), braess_zdd,
                                          model, inner)
            return value

        fd = oracles.tangential_difference(objective, np.ones(5), h=1e-5)
        rel = float(np.max(np.abs(tangential - fd)) / (1.0 + np.max(np.abs(fd))))
        worst = max(worst, rel)
        assert rel <= 1e-4, f"{kind}: {rel}"
    report(f"4 PASS gradient fidelity: worst relative error "
           f"{worst:.2e} <= 1e-4")


def test_criterion_5_exponential_weights_identity(braess, braess_zdd):
    """Every tenth iterate of a T=300 accelerated run equals the
    brute-force softmax marginal of its accumulated costs."""
    model = CostModel.for_graph(braess, "fractional")
    _, trace = solve_accelerated(braess_zdd, model, np.ones(5),
                                 SolverConfig(iterations=300, eta=0.1))
    sets = braess_zdd.enumerate_sets(10)
    worst = 0.0
    for t in range(0, 301, 10):
        expected = brute_force_marginal(sets, trace.cost_history[t], 5)
        err = float(np.max(np.abs(trace.flow_history[t] - expected)))
        worst = max(worst, err)
        assert err <= 1e-8, f"iteration {t}: {err}"
    report(f"5 PASS exponential-weights identity: worst error "
           f"{worst:.2e} <= 1e-8 over 31 checkpoints")


@pytest.fixture(scope="module")
def comparison_runs(braess, braess_zdd):
    model = CostModel.for_graph(braess, "fractional")
    theta = np.ones(5)
    y_acc, tr_acc = solve_accelerated(braess_zdd, model, theta,
                                      SolverConfig(iterations=400, eta=0.1))
    y_nav, tr_nav = solve_naive_softmin(braess_zdd, model, theta,
                                        SolverConfig(iterations=400, eta=1.0))
    y_fw, tr_fw = solve_standard_fw(braess_zdd, model, theta,
                                    SolverConfig(iterations=400))
    return (model, theta, values(y_acc), tr_acc, values(y_nav), tr_nav,
            y_fw, tr_fw)


def test_criterion_6_halving_rate(comparison_runs):
    """Doubling the iteration budget cuts the accelerated solver's
    potential error to at most 0.6x (it measures ~0.25x, the quadratic
    rate)."""
    _, _, _, tr_acc, _, _, _, _ = comparison_runs
    err = tr_acc.potentials() - 4.5
    ratios = []
    for t in (50, 100, 200):
        assert err[2 * t] <= 0.6 * err[t], \
            f"T={t}: {err[2 * t]:.3e} vs 0.6*{err[t]:.3e}"
        ratios.append(err[2 * t] / err[t])
    report("6 PASS halving rate: error ratios per doubling "
           + str([f"{r:.3f}" for r in ratios]) + " all <= 0.6")


def test_criterion_6_duality_gap_ordering(comparison_runs, braess_zdd):
    """At T=400 the returned solutions order as accelerated < standard
    FW < naive softmin when ranked by the duality gap, the usual
    convergence monitor for these solvers."""
    model, theta, y_acc, _, y_nav, _, y_fw, _ = comparison_runs
    gap_acc = fw_gap(braess_zdd, model, y_acc, theta)
    gap_fw = fw_gap(braess_zdd, model, y_fw, theta)
    gap_nav = fw_gap(braess_zdd, model, y_nav, theta)
    assert gap_acc < gap_fw < gap_nav, \
        f"gaps: accel {gap_acc:.3e}, fw {gap_fw:.3e}, naive {gap_nav:.3e}"
    report(f"6 PASS duality-gap ordering: accel {gap_acc:.2e} < "
           f"fw {gap_fw:.2e} < naive {gap_nav:.2e}")


def test_criterion_6_potential_error_ordering(comparison_runs):
    """Ordering by potential error at T=400.

    Known-red: on this desk-scale instance both the accelerated solver
    and standard FW converge at a quadratic empirical rate and FW's
    constant is smaller (its iterate alternates between the two optimal
    routes, which averages almost perfectly), so accelerated < FW fails
    by potential error while holding by duality gap.
    """
    _, _, _, tr_acc, _, tr_nav, _, tr_fw = comparison_runs
    err_acc = tr_acc.potentials()[400] - 4.5
    err_nav = tr_nav.potentials()[400] - 4.5
    err_fw = tr_fw.potentials()[400] - 4.5
    if err_acc < err_fw < err_nav:
        report(f"6 PASS potential-error ordering: accel {err_acc:.2e} < "
               f"fw {err_fw:.2e} < naive {err_nav:.2e}")
    else:
        report(f"6 FAIL potential-error ordering: accel {err_acc:.2e}, "
               f"fw {err_fw:.2e}, naive {err_nav:.2e}")
    assert err_acc < err_fw < err_nav, \
        (f"potential errors at T=400: accel {err_acc:.3e}, fw {err_fw:.3e}, "
         f"naive {err_nav:.3e}; accelerated < FW is unattainable on this "
         "instance by potential error (both are O(1/T^2) here and FW's "
         "constant is smaller); the duality-gap ordering above holds")


def test_criterion_7_zdd_correctness(braess_zdd, k4_zdd, grid3x3_zdd,
                                     steiner6_zdd, single_edge_zdd):
    """Decode equivalence against 2^n filtering on every fixture,
    the 3x3-grid path count, and the marginal's tape-growth bound."""
    for name, (builder, kind) in sorted(GRAPH_BUILDERS.items()):
        graph = builder()
        assert graph.edge_count <= 12
        zdd = build_family(graph, StrategyClass(kind))
        expected = oracles.brute_force_family(graph, kind)
        assert sorted(zdd.enumerate_sets(10**6)) == expected, name
    assert grid3x3_zdd.count() == 12
    growth = {}
    for zdd in (braess_zdd, k4_zdd, grid3x3_zdd, steiner6_zdd,
                single_edge_zdd):
        tape = Tape()
        costs = tape.inputs(np.linspace(-1, 1, zdd.n))
        before = len(tape)
        softmin_marginal(zdd, costs)
        growth[len(zdd)] = len(tape) - before
        assert growth[len(zdd)] <= 8 * len(zdd)
    report(f"7 PASS zdd correctness: {len(GRAPH_BUILDERS)} fixtures decode "
           f"exactly, grid count 12, tape growth per |Z| "
           + str({k: f"{v}<={8 * k}" for k, v in sorted(growth.items())}))


def test_criterion_8_projection_oracle():
    """Sort-based projection equals the active-set solver on 1000 random
    vectors for each dimension."""
    rng = np.random.default_rng(77)
    worst = 0.0
    for n in (2, 5, 20):
        for _ in range(1000):
            v = rng.uniform(-2 * n, 2 * n, n)
            err = float(np.max(np.abs(project_theta(v)
                                      - project_theta_reference(v))))
            worst = max(worst, err)
            assert err <= 1e-9
    report(f"8 PASS projection oracle: 3000 vectors, worst gap "
           f"{worst:.2e} <= 1e-9")
