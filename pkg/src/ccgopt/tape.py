"""Reverse-mode automatic differentiation on a scalar tape.

Every recorded value is a double-precision scalar; local partial
derivatives are cached at record time, so one reverse sweep over the
tape yields gradients with respect to all marked inputs.  Recording a
non-finite value raises immediately rather than letting NaN/inf
propagate into later iterations.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ArithmeticDomainError, CcgoptError

_LOG_ZERO = -1e300  # log-domain stand-in for log(0); see marginals module


class Var:
    """Handle to one tape node."""

    __slots__ = ("tape", "index")

    def __init__(self, tape, index):
        self.tape = tape
        self.index = index

    @property
    def value(self) -> float:
        return self.tape._values[self.index]

    def __repr__(self):
        return f"Var({self.value!r})"

    def __add__(self, other):
        return self.tape.add(self, other)

    def __radd__(self, other):
        return self.tape.add(other, self)

    def __sub__(self, other):
        return self.tape.sub(self, other)

    def __rsub__(self, other):
        return self.tape.sub(other, self)

    def __mul__(self, other):
        return self.tape.mul(self, other)

    def __rmul__(self, other):
        return self.tape.mul(other, self)

    def __truediv__(self, other):
        return self.tape.div(self, other)

    def __rtruediv__(self, other):
        return self.tape.div(other, self)

    def __neg__(self):
        return self.tape.neg(self)


class Tape:
    """Append-only record of scalar operations.

    Inputs created with `input()` are differentiation roots;
    `constant()` nodes are cached by value and carry no gradient.
    A tape is single-threaded; independent tapes are fully isolated.
    """

    def __init__(self):
        self._values = []
        self._args = []
        self._partials = []
        self._marks = []
        self._const_cache = {}

    def __len__(self):
        return len(self._values)

    @property
    def num_marks(self):
        return len(self._marks)

    def input(self, value) -> Var:
        var = self._emit("input", float(value), (), ())
        self._marks.append(var.index)
        return var

    def inputs(self, values) -> list[Var]:
        return [self.input(v) for v in values]

    def constant(self, value) -> Var:
        value = float(value)
        idx = self._const_cache.get(value)
        if idx is None:
            idx = self._emit("const", value, (), ()).index
            self._const_cache[value] = idx
        return Var(self, idx)

    def constants(self, values) -> list[Var]:
        return [self.constant(v) for v in values]

    def _emit(self, op, value, args, partials) -> Var:
        if not math.isfinite(value):
            raise ArithmeticDomainError(f"operation {op!r} produced {value!r}")
        self._values.append(value)
        self._args.append(args)
        self._partials.append(partials)
        return Var(self, len(self._values) - 1)

    def _lift(self, x) -> Var:
        if isinstance(x, Var):
            if x.tape is not self:
                raise CcgoptError("operands recorded on different tapes")
            return x
        return self.constant(x)

    # -- primitive operations ------------------------------------------------

    def add(self, a, b) -> Var:
        a, b = self._lift(a), self._lift(b)
        return self._emit("add", a.value + b.value,
                          (a.index, b.index), (1.0, 1.0))

    def sub(self, a, b) -> Var:
        a, b = self._lift(a), self._lift(b)
        return self._emit("sub", a.value - b.value,
                          (a.index, b.index), (1.0, -1.0))

    def mul(self, a, b) -> Var:
        a, b = self._lift(a), self._lift(b)
        return self._emit("mul", a.value * b.value,
                          (a.index, b.index), (b.value, a.value))

    def div(self, a, b) -> Var:
        a, b = self._lift(a), self._lift(b)
        if b.value == 0.0:
            raise ArithmeticDomainError("operation 'div' by zero")
        inv = 1.0 / b.value
        return self._emit("div", a.value * inv,
                          (a.index, b.index), (inv, -a.value * inv * inv))

    def neg(self, a) -> Var:
        a = self._lift(a)
        return self._emit("neg", -a.value, (a.index,), (-1.0,))

    def exp(self, a) -> Var:
        a = self._lift(a)
        try:
            val = math.exp(a.value)
        except OverflowError as exc:
            raise ArithmeticDomainError(
                f"operation 'exp' overflowed at {a.value!r}") from exc
        return self._emit("exp", val, (a.index,), (val,))

    def log(self, a) -> Var:
        a = self._lift(a)
        if a.value <= 0.0:
            raise ArithmeticDomainError(
                f"operation 'log' needs a positive input, got {a.value!r}")
        return self._emit("log", math.log(a.value), (a.index,), (1.0 / a.value,))

    def logaddexp(self, a, b) -> Var:
        """Fused log(exp(a) + exp(b)) with max shift; short-circuits when
        one side is the log-domain zero sentinel so no non-finite value
        ever touches the tape."""
        a, b = self._lift(a), self._lift(b)
        av, bv = a.value, b.value
        if av <= _LOG_ZERO:
            return b
        if bv <= _LOG_ZERO:
            return a
        m = av if av >= bv else bv
        ea = math.exp(av - m)
        eb = math.exp(bv - m)
        total = ea + eb
        val = m + math.log(total)
        return self._emit("logaddexp", val, (a.index, b.index),
                          (ea / total, eb / total))

    def vsum(self, items) -> Var:
        """Sum of an arbitrary number of vars as a single tape node."""
        items = [self._lift(x) for x in items]
        if not items:
            return self.constant(0.0)
        if len(items) == 1:
            return items[0]
        total = math.fsum(x.value for x in items)
        return self._emit("sum", total, tuple(x.index for x in items),
                          (1.0,) * len(items))

    def dot(self, xs, ys) -> Var:
        """Inner product recorded as len(xs) muls plus one sum node."""
        return self.vsum([self.mul(x, y) for x, y in zip(xs, ys)])

    # -- reverse sweep -------------------------------------------------------

    def backward(self, output: Var) -> np.ndarray:
        """Gradient of a scalar output with respect to the marked inputs,
        by one reverse pass.  The tape is left untouched, so repeated
        calls (or calls for several outputs) are safe."""
        if not isinstance(output, Var) or output.tape is not self:
            raise CcgoptError("output is not a var of this tape")
        if not self._marks:
            raise CcgoptError("tape has no marked inputs")
        adjoint = [0.0] * len(self._values)
        adjoint[output.index] = 1.0
        args = self._args
        partials = self._partials
        for i in range(output.index, -1, -1):
            a = adjoint[i]
            if a == 0.0:
                continue
            for j, p in zip(args[i], partials[i]):
                adjoint[j] += p * a
        return np.array([adjoint[i] for i in self._marks], dtype=float)

    def value_of(self, vars_or_var):
        if isinstance(vars_or_var, Var):
            return vars_or_var.value
        return np.array([v.value for v in vars_or_var], dtype=float)


def values(vars_) -> np.ndarray:
    return np.array([v.value for v in vars_], dtype=float)
