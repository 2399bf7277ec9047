"""Parameterized edge-cost models, the potential, and the social cost.

Two cost families are supported, both strictly increasing in the load
y_i whenever the congestion factor and edge lengths are positive:

* fractional:  cost_i = d_i * (1 + C * y_i / (theta_i + 1))
* exponential: cost_i = d_i * (1 + C * y_i * exp(-theta_i))

theta_i is the capacity the leader assigns to edge i; a larger theta_i
makes the edge more tolerant to congestion.  The leader's feasible set
keeps theta nonnegative with entries summing to n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArithmeticDomainError, ConfigurationError
from .tape import Var

KINDS = ("fractional", "exponential")


def check_theta(theta, n, tol_sum=1e-9, tol_neg=1e-12):
    """Validate membership in the leader's feasible set
    {theta >= 0, sum(theta) = n}."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (n,):
        raise ConfigurationError(f"theta must have {n} entries")
    if theta.min() < -tol_neg:
        raise ConfigurationError(f"theta has negative entry {theta.min()!r}")
    if abs(theta.sum() - n) > tol_sum:
        raise ConfigurationError(
            f"theta entries sum to {theta.sum()!r}, expected {n}")
    return theta


@dataclass(frozen=True)
class CostModel:
    kind: str
    lengths: np.ndarray
    congestion: float = 10.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown cost kind {self.kind!r}")
        if self.congestion <= 0:
            raise ConfigurationError("congestion factor must be positive")
        lengths = np.asarray(self.lengths, dtype=float)
        if np.any(lengths <= 0):
            raise ConfigurationError("edge lengths must be positive")
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def for_graph(cls, graph, kind, congestion=10.0):
        return cls(kind, graph.lengths, congestion)

    @property
    def n(self):
        return len(self.lengths)

    # -- scalar form (floats or tape vars) -----------------------------------

    def edge_cost(self, i, y, theta):
        """Cost of edge id i at load y and capacity theta; differentiable
        in both when they are tape vars."""
        d = float(self.lengths[i - 1])
        cd = self.congestion * d
        if self.kind == "fractional":
            if not isinstance(theta, Var) and theta <= -1.0:
                raise ArithmeticDomainError(
                    "fractional cost needs theta > -1")
            return d + cd * y / (theta + 1.0)
        if isinstance(theta, Var):
            damp = theta.tape.exp(-theta)
        else:
            damp = math.exp(-theta)
        return d + cd * y * damp

    def bind(self, theta_vars):
        """Cache the theta-only subexpressions so per-iteration gradient
        evaluations stay cheap on the tape."""
        return _BoundCosts(self, list(theta_vars))

    # -- vectorized float form ------------------------------------------------

    def cost_values(self, y, theta):
        """Edge costs for float loads/capacities; broadcasts, so y and
        theta may be (n,) vectors or (B, n) batches."""
        y = np.asarray(y, dtype=float)
        theta = np.asarray(theta, dtype=float)
        d = self.lengths
        if self.kind == "fractional":
            return d * (1.0 + self.congestion * y / (theta + 1.0))
        return d * (1.0 + self.congestion * y * np.exp(-theta))

    def potential_value(self, y, theta):
        """Potential: sum over edges of the integral of the cost from 0
        to y_i, in closed form."""
        y = np.asarray(y, dtype=float)
        theta = np.asarray(theta, dtype=float)
        d = self.lengths
        if self.kind == "fractional":
            per_edge = d * (y + self.congestion * y * y / (2.0 * (theta + 1.0)))
        else:
            per_edge = d * (y + self.congestion * y * y * np.exp(-theta) / 2.0)
        return float(per_edge.sum()) if per_edge.ndim == 1 \
            else per_edge.sum(axis=-1)

    def social_cost_values(self, theta, y):
        """Total cost paid by all players, sum of cost_i * y_i (floats)."""
        per_edge = self.cost_values(y, theta) * np.asarray(y, dtype=float)
        return float(per_edge.sum()) if per_edge.ndim == 1 \
            else per_edge.sum(axis=-1)


class _BoundCosts:
    """Cost model with theta-derived tape vars precomputed once."""

    def __init__(self, model: CostModel, theta_vars):
        self.model = model
        self.theta = theta_vars
        tape = theta_vars[0].tape
        if model.kind == "fractional":
            self._denom = [tape.add(th, 1.0) for th in theta_vars]
            for i, dn in enumerate(self._denom):
                if dn.value <= 0.0:
                    raise ArithmeticDomainError(
                        f"fractional cost needs theta_{i + 1} > -1")
        else:
            self._damp = [tape.exp(tape.neg(th)) for th in theta_vars]

    def edge_cost(self, i, y):
        model = self.model
        d = float(model.lengths[i - 1])
        cd = model.congestion * d
        if model.kind == "fractional":
            return d + cd * y / self._denom[i - 1]
        return d + cd * y * self._damp[i - 1]

    def gradient(self, y_vars):
        """Potential gradient: component i is the edge cost at load y_i."""
        return [self.edge_cost(i, y) for i, y in enumerate(y_vars, start=1)]


def potential_gradient(model: CostModel, y_vars, theta_vars):
    """Gradient of the potential at y: just the per-edge costs."""
    return model.bind(theta_vars).gradient(y_vars)


def social_cost(model: CostModel, theta_vars, y_vars) -> Var:
    """Social cost as a tape var: sum of edge_cost_i(y_i) * y_i."""
    tape = y_vars[0].tape
    bound = model.bind(theta_vars)
    return tape.dot(bound.gradient(y_vars), y_vars)
