"""Equilibrium computation over a ZDD-encoded strategy polytope.

Three solvers minimize the potential over the convex hull of strategy
indicator vectors:

* solve_accelerated: cost-accumulating softmin iterations with t-linear
  weights; fully tape-recorded, so the approximate equilibrium (and any
  scalar of it) is differentiable in the leader's parameters.
* solve_naive_softmin: plain conditional-gradient iterations with the
  vertex oracle replaced by a softmin with a growing scale; also
  differentiable but with no acceleration.
* solve_standard_fw: the classical non-differentiable baseline using the
  exact linear minimizer.

The asymmetric variant runs one softmin per population on a shared cost
vector scaled by population mass.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .congestion import CostModel
from .errors import ConfigurationError
from .marginals import brute_force_marginal, softmin_marginal
from .tape import Tape, Var, values
from .zdd import Zdd

VARIANTS = ("accelerated", "naive_softmin", "standard_fw")


@dataclass
class SolverConfig:
    iterations: int = 300
    eta: float = 0.1
    variant: str = "accelerated"
    track_gap: bool = False

    def __post_init__(self):
        if self.iterations < 0:
            raise ConfigurationError("iteration count must be >= 0")
        if self.eta <= 0:
            raise ConfigurationError("eta must be positive")
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown variant {self.variant!r}")


@dataclass
class IterationRecord:
    t: int
    fw_gap: float | None
    potential: float
    wall_clock_ms: float


@dataclass
class EquilibriumTrace:
    records: list[IterationRecord] = field(default_factory=list)
    cost_history: list[np.ndarray] = field(default_factory=list)
    flow_history: list[np.ndarray] = field(default_factory=list)

    def potentials(self) -> np.ndarray:
        return np.array([r.potential for r in self.records])

    def write_csv(self, fh) -> None:
        fh.write("t,fw_gap,potential,wall_clock_ms\n")
        for r in self.records:
            gap = "" if r.fw_gap is None else repr(r.fw_gap)
            fh.write(f"{r.t},{gap},{r.potential!r},{r.wall_clock_ms!r}\n")


@dataclass(frozen=True)
class Population:
    zdd: Zdd
    mass: float = 1.0

    def __post_init__(self):
        if self.mass <= 0:
            raise ConfigurationError("population mass must be positive")


def _as_theta_vars(theta, tape):
    """Accept either tape vars (differentiable path) or plain floats."""
    seq = list(theta)
    if seq and isinstance(seq[0], Var):
        return seq, seq[0].tape
    if tape is None:
        tape = Tape()
    return [tape.constant(v) for v in seq], tape


def fw_gap(zdd: Zdd, model: CostModel, y, theta) -> float:
    """Duality gap <grad f(y), y> - min_S <grad f(y), 1_S>; zero exactly
    at the constrained potential minimizer."""
    y = np.asarray(y, dtype=float)
    grad = model.cost_values(y, theta)
    best, _ = zdd.linear_min(grad)
    return float(grad @ y - best)


def _record(trace, config, zdd, model, theta_vals, t, y_vals, started):
    gap = fw_gap(zdd, model, y_vals, theta_vals) if config.track_gap else None
    trace.records.append(IterationRecord(
        t, gap, model.potential_value(y_vals, theta_vals),
        (time.perf_counter() - started) * 1e3))


def solve_accelerated(zdd, model, theta, config=None, tape=None):
    """Accelerated differentiable solver.

    Starting from the uniform softmin marginal, iteration t shifts an
    auxiliary sum s_t = s_{t-1} - (t-1) x_{t-2} + (2t-1) x_{t-1},
    accumulates costs c_t = c_{t-1} + eta * t * grad_f(2 s_t / (t(t+1))),
    and sets x_t to the softmin marginal of c_t.  Returns the weighted
    average y_T = 2 / (T(T+1)) * sum_t t * x_t and the iteration trace.
    """
    config = config or SolverConfig()
    theta_v, tape = _as_theta_vars(theta, tape)
    theta_vals = values(theta_v)
    started = time.perf_counter()
    n = zdd.n
    bound = model.bind(theta_v)
    zero = tape.constant(0.0)
    x_prev = softmin_marginal(zdd, [zero] * n)      # x_0 = x_{-1}
    x_prev2 = x_prev
    s = [zero] * n
    c = [zero] * n
    trace = EquilibriumTrace()
    trace.cost_history.append(np.zeros(n))
    trace.flow_history.append(values(x_prev))
    _record(trace, config, zdd, model, theta_vals, 0, values(x_prev), started)
    T = config.iterations
    if T == 0:
        return x_prev, trace
    y_acc = [zero] * n
    for t in range(1, T + 1):
        a_prev = tape.constant(float(t - 1))
        a_both = tape.constant(float(2 * t - 1))
        s = [si - a_prev * x2 + a_both * x1
             for si, x2, x1 in zip(s, x_prev2, x_prev)]
        avg_scale = tape.constant(2.0 / (t * (t + 1)))
        grads = [bound.edge_cost(i, avg_scale * si)
                 for i, si in enumerate(s, start=1)]
        step = tape.constant(config.eta * t)
        c = [ci + step * gi for ci, gi in zip(c, grads)]
        x = softmin_marginal(zdd, c)
        a_t = tape.constant(float(t))
        y_acc = [yi + a_t * xi for yi, xi in zip(y_acc, x)]
        x_prev2, x_prev = x_prev, x
        trace.cost_history.append(values(c))
        trace.flow_history.append(values(x))
        y_run = (2.0 / (t * (t + 1))) * values(y_acc)
        _record(trace, config, zdd, model, theta_vals, t, y_run, started)
    final_scale = tape.constant(2.0 / (T * (T + 1)))
    y = [final_scale * yi for yi in y_acc]
    return y, trace


def solve_naive_softmin(zdd, model, theta, config=None, tape=None):
    """Differentiable conditional gradient without acceleration: the
    vertex step is a softmin marginal at scale eta * t, mixed in with
    weight 2 / (t + 2)."""
    config = config or SolverConfig()
    theta_v, tape = _as_theta_vars(theta, tape)
    theta_vals = values(theta_v)
    started = time.perf_counter()
    n = zdd.n
    bound = model.bind(theta_v)
    zero = tape.constant(0.0)
    x = softmin_marginal(zdd, [zero] * n)
    trace = EquilibriumTrace()
    trace.cost_history.append(np.zeros(n))
    trace.flow_history.append(values(x))
    _record(trace, config, zdd, model, theta_vals, 0, values(x), started)
    for t in range(config.iterations):
        grads = [bound.edge_cost(i, xi) for i, xi in enumerate(x, start=1)]
        scale = tape.constant(config.eta * t)
        c = [scale * gi for gi in grads]
        s = softmin_marginal(zdd, c)
        gamma = 2.0 / (t + 2.0)
        keep = tape.constant(1.0 - gamma)
        move = tape.constant(gamma)
        x = [keep * xi + move * si for xi, si in zip(x, s)]
        trace.cost_history.append(values(c))
        trace.flow_history.append(values(x))
        _record(trace, config, zdd, model, theta_vals, t + 1, values(x), started)
    return x, trace


def solve_standard_fw(zdd, model, theta, config=None):
    """Classical Frank-Wolfe with the exact ZDD linear minimizer; floats
    only, no tape (the vertex step is piecewise constant in theta)."""
    config = config or SolverConfig()
    theta = np.asarray(theta, dtype=float)
    started = time.perf_counter()
    n = zdd.n
    _, first = zdd.linear_min(np.zeros(n))
    x = _indicator(first, n)
    trace = EquilibriumTrace()
    trace.flow_history.append(x.copy())
    _record(trace, config, zdd, model, theta, 0, x, started)
    for t in range(config.iterations):
        grad = model.cost_values(x, theta)
        _, best = zdd.linear_min(grad)
        gamma = 2.0 / (t + 2.0)
        x = (1.0 - gamma) * x + gamma * _indicator(best, n)
        trace.flow_history.append(x.copy())
        _record(trace, config, zdd, model, theta, t + 1, x, started)
    return x, trace


def _indicator(edge_set, n) -> np.ndarray:
    out = np.zeros(n)
    for e in edge_set:
        out[e - 1] = 1.0
    return out


def solve_asymmetric(populations, model, theta, config=None, tape=None):
    """Accelerated solver for several populations sharing the edge set.

    Population p sees the common cost vector scaled by its mass and
    contributes mass * its own softmin marginal to the aggregate flow.
    With a single population of mass 1 the iterates coincide exactly
    with solve_accelerated.
    """
    if not populations:
        raise ConfigurationError("at least one population required")
    config = config or SolverConfig()
    theta_v, tape = _as_theta_vars(theta, tape)
    theta_vals = values(theta_v)
    started = time.perf_counter()
    n = populations[0].zdd.n
    for pop in populations:
        if pop.zdd.n != n:
            raise ConfigurationError("populations must share the ground set")
    bound = model.bind(theta_v)
    zero = tape.constant(0.0)
    masses = [tape.constant(pop.mass) for pop in populations]
    c = [zero] * n

    def aggregate(cost_vars):
        per_pop = []
        for pop, m in zip(populations, masses):
            scaled = [m * ci for ci in cost_vars]
            per_pop.append(softmin_marginal(pop.zdd, scaled))
        agg = [tape.vsum([m * xp[i] for xp, m in zip(per_pop, masses)])
               for i in range(n)]
        return agg, per_pop

    x_prev, per_pop = aggregate(c)
    x_prev2 = x_prev
    s = [zero] * n
    trace = EquilibriumTrace()
    trace.cost_history.append(np.zeros(n))
    trace.flow_history.append(values(x_prev))
    trace.records.append(IterationRecord(
        0, None, model.potential_value(values(x_prev), theta_vals),
        (time.perf_counter() - started) * 1e3))
    T = config.iterations
    if T == 0:
        return x_prev, per_pop, trace
    y_acc = [zero] * n
    for t in range(1, T + 1):
        a_prev = tape.constant(float(t - 1))
        a_both = tape.constant(float(2 * t - 1))
        s = [si - a_prev * x2 + a_both * x1
             for si, x2, x1 in zip(s, x_prev2, x_prev)]
        avg_scale = tape.constant(2.0 / (t * (t + 1)))
        grads = [bound.edge_cost(i, avg_scale * si)
                 for i, si in enumerate(s, start=1)]
        step = tape.constant(config.eta * t)
        c = [ci + step * gi for ci, gi in zip(c, grads)]
        x, per_pop = aggregate(c)
        a_t = tape.constant(float(t))
        y_acc = [yi + a_t * xi for yi, xi in zip(y_acc, x)]
        x_prev2, x_prev = x_prev, x
        trace.cost_history.append(values(c))
        trace.flow_history.append(values(x))
        y_run = (2.0 / (t * (t + 1))) * values(y_acc)
        trace.records.append(IterationRecord(
            t, None, model.potential_value(y_run, theta_vals),
            (time.perf_counter() - started) * 1e3))
    final_scale = tape.constant(2.0 / (T * (T + 1)))
    y = [final_scale * yi for yi in y_acc]
    return y, per_pop, trace


def exponential_weights_check(zdd, trace: EquilibriumTrace, t,
                              tol=1e-8, limit=10**5) -> bool:
    """Verify that the realized iterate x_t equals the brute-force
    softmax marginal of the realized accumulated costs c_t: the
    executable form of the exponential-weights identity behind the
    accelerated iteration."""
    sets = zdd.enumerate_sets(limit)
    expected = brute_force_marginal(sets, trace.cost_history[t], zdd.n)
    got = trace.flow_history[t]
    return bool(np.max(np.abs(got - expected)) <= tol)
