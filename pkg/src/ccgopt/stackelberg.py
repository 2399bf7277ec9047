"""Leader-side optimization of the congestion parameters.

The leader picks capacities theta on the scaled simplex
{theta >= 0, sum(theta) = n} to minimize the social cost evaluated at
the followers' equilibrium.  Projected gradient descent drives theta
with gradients obtained by differentiating straight through the
accelerated equilibrium solver; an averaging heuristic with random
restarts and a brute-force grid search serve as baselines.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .congestion import CostModel, check_theta, social_cost
from .equilibrium import SolverConfig, solve_accelerated
from .errors import CcgoptError, ConfigurationError, GridTooLargeError
from .fastpath import accelerated_flow_batch, equilibrium_flow, family_matrix
from .tape import Tape, values
from .zdd import Zdd

# argmin comparisons ignore objective differences below this, so exact
# mathematical ties resolve to the lexicographically first grid point
TIE_TOLERANCE = 1e-9


@dataclass
class StackelbergConfig:
    outer_step: float = 5.0
    inner: SolverConfig = field(
        default_factory=lambda: SolverConfig(iterations=300, eta=0.1))
    max_outer_iters: int = 100
    wall_clock_limit_s: float | None = None
    heuristic_delta: float = 1.0
    rng_seed: int = 0
    stop_tol: float = 1e-8
    escape_attempts: int = 3
    escape_radius: float = 1e-5
    patience: int = 20
    improvement_tol: float = 1e-9
    grid_max_points: int = 20_000_000

    def __post_init__(self):
        if self.outer_step <= 0 or self.max_outer_iters <= 0:
            raise ConfigurationError("step and iteration budget must be positive")
        if self.heuristic_delta <= 0:
            raise ConfigurationError("heuristic delta must be positive")


@dataclass
class OuterRecord:
    k: int
    wall_clock_ms: float
    objective: float
    theta: np.ndarray


@dataclass
class OptimizationTrace:
    records: list[OuterRecord] = field(default_factory=list)
    result: OuterRecord | None = None       # best iterate seen
    result_flow: np.ndarray | None = None   # equilibrium flow at the result

    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    @property
    def final(self) -> OuterRecord:
        return self.records[-1]

    def write_csv(self, fh) -> None:
        n = len(self.records[0].theta)
        names = ",".join(f"theta_{i}" for i in range(1, n + 1))
        fh.write(f"k,wall_clock_ms,F,{names}\n")
        for r in self.records:
            row = ",".join(repr(float(t)) for t in r.theta)
            fh.write(f"{r.k},{r.wall_clock_ms!r},{r.objective!r},{row}\n")


# ---------------------------------------------------------------------------
# Projection onto the scaled simplex
# ---------------------------------------------------------------------------

def project_theta(v, total=None) -> np.ndarray:
    """Euclidean projection onto {theta >= 0, sum(theta) = total}
    (total defaults to the dimension).  Sort-based threshold search:
    theta_i = max(v_i - tau, 0) with tau chosen so the sum matches."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ConfigurationError("cannot project a non-finite vector")
    n = v.size
    if total is None:
        total = float(n)
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u)
    ranks = np.arange(1, n + 1)
    positive = u - (cumulative - total) / ranks > 0
    rho = int(np.nonzero(positive)[0][-1])
    tau = (cumulative[rho] - total) / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def project_theta_reference(v, total=None) -> np.ndarray:
    """Independent check: active-set iteration that repeatedly clamps
    coordinates driven negative and re-solves the equality-constrained
    problem on the free set."""
    v = np.asarray(v, dtype=float)
    n = v.size
    if total is None:
        total = float(n)
    free = np.ones(n, dtype=bool)
    tau = 0.0
    for _ in range(n + 1):
        tau = (v[free].sum() - total) / free.sum()
        keep = v - tau > 0
        keep &= free
        if keep.sum() == free.sum():
            break
        if not keep.any():
            keep = np.zeros(n, dtype=bool)
            keep[int(np.argmax(v))] = True
        free = keep
    return np.where(free, np.maximum(v - tau, 0.0), 0.0)


# ---------------------------------------------------------------------------
# Differentiating through the inner solver
# ---------------------------------------------------------------------------

def evaluate_leader(theta, zdd: Zdd, model: CostModel,
                    inner: SolverConfig | None = None):
    """Run the accelerated solver at theta on a fresh tape, evaluate the
    social cost, and back-propagate.  Returns (gradient, objective,
    equilibrium flow)."""
    inner = inner or SolverConfig(iterations=300, eta=0.1)
    theta = check_theta(theta, zdd.n)
    tape = Tape()
    theta_vars = tape.inputs(theta)
    y, _ = solve_accelerated(zdd, model, theta_vars, inner, tape)
    objective = social_cost(model, theta_vars, y)
    grad = tape.backward(objective)
    return grad, objective.value, values(y)


def outer_gradient(theta, zdd: Zdd, model: CostModel,
                   inner: SolverConfig | None = None) -> np.ndarray:
    """Gradient of the social cost at the solver's approximate
    equilibrium, with respect to theta."""
    grad, _, _ = evaluate_leader(theta, zdd, model, inner)
    return grad


def optimize_pgd(theta0, zdd: Zdd, model: CostModel,
                 config: StackelbergConfig | None = None) -> OptimizationTrace:
    """Projected gradient descent on the leader objective.

    Each outer iteration records the objective at the current theta,
    then steps against the back-propagated gradient and projects.  The
    returned trace carries the full trajectory; `trace.result` is the
    best iterate visited, which is what the optimizer answers with when
    a fixed step makes the final iterates oscillate around a minimum.

    Stopping: iteration budget, wall-clock budget, a `patience`-length
    run without objective improvement, or an iterate that stops moving
    (max-norm step below stop_tol).  Because the objective is computed
    through deterministic arithmetic, symmetric instances can park the
    iterate exactly on a saddle; a stalled iterate is therefore nudged
    by a tiny seeded perturbation (up to `escape_attempts` times, then
    treated as converged).  Perturbation probes never displace the
    reported result unless they genuinely improve the objective.
    """
    config = config or StackelbergConfig()
    theta = check_theta(theta0, zdd.n)
    rng = np.random.default_rng(config.rng_seed)
    trace = OptimizationTrace()
    started = time.perf_counter()
    escapes_left = config.escape_attempts
    since_improvement = 0
    for k in range(config.max_outer_iters + 1):
        grad, objective, flow = evaluate_leader(theta, zdd, model, config.inner)
        elapsed = time.perf_counter() - started
        trace.records.append(OuterRecord(k, elapsed * 1e3, objective,
                                         theta.copy()))
        if trace.result is None or \
                objective < trace.result.objective - config.improvement_tol:
            trace.result = trace.records[-1]
            trace.result_flow = flow
            since_improvement = 0
        else:
            since_improvement += 1
        if k == config.max_outer_iters:
            break
        if config.wall_clock_limit_s and elapsed > config.wall_clock_limit_s:
            break
        if since_improvement >= config.patience:
            break
        if not np.all(np.isfinite(grad)):
            raise CcgoptError(
                f"non-finite gradient at outer iteration {k}: theta={theta!r}")
        candidate = project_theta(theta - config.outer_step * grad)
        if np.max(np.abs(candidate - theta)) <= config.stop_tol:
            if escapes_left == 0:
                break
            escapes_left -= 1
            candidate = project_theta(
                theta + config.escape_radius * rng.standard_normal(zdd.n))
        theta = candidate
    return trace


def baseline_heuristic(theta0, zdd: Zdd, model: CostModel,
                       config: StackelbergConfig | None = None) -> OptimizationTrace:
    """Gradient-free baseline: push capacity toward edges whose
    equilibrium load exceeds the average, project, and re-solve; when
    the objective fails to improve, restart from a uniformly random
    point of the feasible set (seeded)."""
    config = config or StackelbergConfig()
    theta = check_theta(theta0, zdd.n)
    rng = np.random.default_rng(config.rng_seed)
    matrix = family_matrix(zdd)
    started = time.perf_counter()

    def solve(th):
        flow = equilibrium_flow(zdd, model, th, config.inner, matrix)
        return flow, model.social_cost_values(th, flow)

    flow, objective = solve(theta)
    trace = OptimizationTrace()
    trace.records.append(OuterRecord(
        0, (time.perf_counter() - started) * 1e3, objective, theta.copy()))
    trace.result = trace.records[0]
    trace.result_flow = flow
    restart = False
    for k in range(1, config.max_outer_iters + 1):
        if restart:
            candidate = project_theta(rng.dirichlet(np.ones(zdd.n)) * zdd.n)
        else:
            shift = config.heuristic_delta * (flow - flow.mean())
            candidate = project_theta(theta + shift)
        cand_flow, cand_objective = solve(candidate)
        elapsed = time.perf_counter() - started
        trace.records.append(OuterRecord(k, elapsed * 1e3, cand_objective,
                                         candidate.copy()))
        if cand_objective < objective:
            theta, flow, objective = candidate, cand_flow, cand_objective
            restart = False
        else:
            restart = True
        if cand_objective < trace.result.objective - config.improvement_tol:
            trace.result = trace.records[-1]
            trace.result_flow = cand_flow
        if config.wall_clock_limit_s and elapsed > config.wall_clock_limit_s:
            break
    return trace


# ---------------------------------------------------------------------------
# Exhaustive grid search
# ---------------------------------------------------------------------------

def grid_point_count(n: int, units: int) -> int:
    return math.comb(units + n - 1, n - 1)


def _compositions_chunked(units: int, parts: int, chunk: int):
    """Yield lexicographically increasing (k_1..k_parts) with sum=units,
    packed into arrays of at most `chunk` rows."""
    ks = [0] * parts
    ks[-1] = units
    buf = np.empty((chunk, parts))
    fill = 0
    while True:
        buf[fill] = ks
        fill += 1
        if fill == chunk:
            yield buf
            fill = 0
        tail = 0
        pivot = -1
        for j in range(parts - 2, -1, -1):
            tail += ks[j + 1]
            if tail > 0:
                pivot = j
                break
        if pivot < 0:
            break
        ks[pivot] += 1
        for i in range(pivot + 1, parts):
            ks[i] = 0
        ks[-1] = tail - 1
    if fill:
        yield buf[:fill]


def _grid_block_best(matrix, zdd, model, inner, thetas):
    """Best point of one grid block: (objective, theta)."""
    if matrix is not None:
        flows = accelerated_flow_batch(matrix, model, thetas, inner)
        objectives = model.social_cost_values(thetas, flows)
    else:
        objectives = np.empty(len(thetas))
        for i, th in enumerate(thetas):
            flow = equilibrium_flow(zdd, model, th, inner)
            objectives[i] = model.social_cost_values(th, flow)
    local_min = objectives.min()
    idx = int(np.argmax(objectives <= local_min + TIE_TOLERANCE))
    return float(objectives[idx]), thetas[idx].copy()


def _grid_worker(payload):
    matrix, zdd, model, inner, thetas = payload
    return _grid_block_best(matrix, zdd, model, inner, thetas)


def exhaustive_search(grid_step: float, zdd: Zdd, model: CostModel,
                      config: StackelbergConfig | None = None,
                      chunk_size: int = 16_384, jobs: int = 1):
    """Evaluate the leader objective on the whole grid
    {theta >= 0, sum = n, theta_i multiple of grid_step} and return the
    minimizing point and value.  Deterministic regardless of jobs: exact
    objective ties resolve to the lexicographically first point."""
    config = config or StackelbergConfig()
    n = zdd.n
    units_f = n / grid_step
    units = round(units_f)
    if abs(units_f - units) > 1e-9:
        raise ConfigurationError(
            f"grid step {grid_step} does not divide the budget {n}")
    total = grid_point_count(n, units)
    if total > config.grid_max_points:
        raise GridTooLargeError(
            f"grid has {total} points, budget is {config.grid_max_points}")
    matrix = family_matrix(zdd)
    blocks = (block * grid_step
              for block in _compositions_chunked(units, n, chunk_size))
    if jobs > 1:
        import concurrent.futures as cf
        with cf.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = pool.map(
                _grid_worker,
                ((matrix, zdd, model, config.inner, b) for b in blocks))
            results = list(results)
    else:
        results = (_grid_block_best(matrix, zdd, model, config.inner, b)
                   for b in blocks)
    best_theta = None
    best_objective = math.inf
    for objective, theta in results:  # block order = grid order
        if objective < best_objective - TIE_TOLERANCE:
            best_objective = objective
            best_theta = theta
    return best_theta, best_objective
