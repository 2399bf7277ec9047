"""Tape-free equilibrium engines for bulk evaluation.

The leader-side grid search and the restart heuristic only need
equilibrium flows, not derivatives, so they run the same accelerated
iteration in plain float arithmetic.  When the family is small enough
to enumerate, whole batches of parameter vectors are pushed through the
iteration at once with the explicit membership matrix; otherwise a
float-only weight-pushing pass over the ZDD handles one parameter
vector at a time.
"""

from __future__ import annotations

import numpy as np

from .congestion import CostModel
from .equilibrium import SolverConfig
from .marginals import marginal_values
from .zdd import Zdd

DENSE_FAMILY_LIMIT = 4096


def family_matrix(zdd: Zdd, limit=DENSE_FAMILY_LIMIT):
    """Membership matrix with one row per member set, or None when the
    family is too large to enumerate within the limit."""
    if zdd.count() > limit:
        return None
    sets = zdd.enumerate_sets(limit)
    mat = np.zeros((len(sets), zdd.n))
    for r, s in enumerate(sets):
        for e in s:
            mat[r, e - 1] = 1.0
    return mat


def accelerated_flow_batch(matrix: np.ndarray, model: CostModel,
                           thetas: np.ndarray, config: SolverConfig):
    """Accelerated softmin iteration over an enumerated family for a
    batch of parameter vectors; returns flows of shape like thetas.

    Runs entirely on preallocated buffers: the per-iteration cost is a
    couple of small matmuls plus elementwise work, so millions of
    parameter vectors an hour go through at desk scale.
    """
    thetas = np.asarray(thetas, dtype=float)
    squeeze = thetas.ndim == 1
    th = np.atleast_2d(thetas)
    d = model.lengths
    cd = model.congestion * d
    fractional = model.kind == "fractional"
    scale = (th + 1.0) if fractional else np.exp(-th)  # denominator / damping
    mat_t = np.ascontiguousarray(matrix.T)
    uniform = matrix.mean(axis=0)
    x_prev2 = np.broadcast_to(uniform, th.shape).copy()
    x_prev = x_prev2.copy()
    T = config.iterations
    if T == 0:
        return x_prev[0] if squeeze else x_prev
    s = np.zeros_like(th)
    c = np.zeros_like(th)
    y_acc = np.zeros_like(th)
    x = np.empty_like(th)
    tmp = np.empty_like(th)
    energy = np.empty((th.shape[0], matrix.shape[0]))
    for t in range(1, T + 1):
        np.multiply(x_prev2, t - 1.0, out=tmp)
        s -= tmp
        np.multiply(x_prev, 2.0 * t - 1.0, out=tmp)
        s += tmp
        np.multiply(s, 2.0 / (t * (t + 1)), out=tmp)   # averaged iterate
        if fractional:
            tmp /= scale
        else:
            tmp *= scale
        tmp *= cd
        tmp += d                                       # potential gradient
        tmp *= config.eta * t
        c += tmp
        np.dot(c, mat_t, out=energy)
        np.negative(energy, out=energy)
        energy -= energy.max(axis=1, keepdims=True)
        np.exp(energy, out=energy)
        energy /= energy.sum(axis=1, keepdims=True)
        np.dot(energy, matrix, out=x)
        np.multiply(x, float(t), out=tmp)
        y_acc += tmp
        x_prev2, x_prev, x = x_prev, x, x_prev2
    y_acc *= 2.0 / (T * (T + 1))
    return y_acc[0] if squeeze else y_acc


def accelerated_flow_zdd(zdd: Zdd, model: CostModel, theta: np.ndarray,
                         config: SolverConfig):
    """Single-instance float solver using weight pushing over the ZDD."""
    theta = np.asarray(theta, dtype=float)
    n = zdd.n
    x = marginal_values(zdd, np.zeros(n))
    x_prev2 = x
    x_prev = x
    s = np.zeros(n)
    c = np.zeros(n)
    y_acc = np.zeros(n)
    T = config.iterations
    if T == 0:
        return x
    for t in range(1, T + 1):
        s = s - (t - 1.0) * x_prev2 + (2.0 * t - 1.0) * x_prev
        point = (2.0 / (t * (t + 1))) * s
        c = c + (config.eta * t) * model.cost_values(point, theta)
        x_prev2 = x_prev
        x_prev = marginal_values(zdd, c)
        y_acc += t * x_prev
    return (2.0 / (T * (T + 1))) * y_acc


def equilibrium_flow(zdd: Zdd, model: CostModel, theta, config: SolverConfig,
                     matrix=None):
    """Float equilibrium flow for one parameter vector, picking the
    dense engine when the family is enumerable."""
    if matrix is None:
        matrix = family_matrix(zdd)
    if matrix is not None:
        return accelerated_flow_batch(matrix, model, theta, config)
    return accelerated_flow_zdd(zdd, model, theta, config)
