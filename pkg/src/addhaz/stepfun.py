"""Exact calculus for right-continuous piecewise-constant functions of time.

Values may be scalars, vectors or matrices: a :class:`StepFunction` stores one
array slice per interval, so a whole family of risk-set averages (for example
one covariate mean per grid point) lives in a single object.
"""

from __future__ import annotations

import operator
from typing import Callable, Sequence

import numpy as np

from .errors import DivisionByNonzeroOverZero, NegativeUpper


class StepFunction:
    """Right-continuous step function on ``[0, inf)``.

    Parameters
    ----------
    breakpoints : array_like, shape (J,)
        Strictly increasing finite times with ``breakpoints[0] == 0``.
    values : array_like, shape (J, ...)
        ``values[j]`` holds on ``[breakpoints[j], breakpoints[j+1])``; the last
        value extends to infinity.
    """

    def __init__(self, breakpoints, values):
        b = np.asarray(breakpoints, dtype=float)
        v = np.asarray(values, dtype=float)
        if b.ndim != 1 or b.size == 0:
            raise ValueError("breakpoints must be a non-empty 1-d array")
        if b[0] != 0.0:
            raise ValueError("breakpoints must start at 0")
        if not np.all(np.isfinite(b)) or np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be finite and strictly increasing")
        if v.shape[:1] != b.shape:
            raise ValueError("need exactly one value per breakpoint")
        b.setflags(write=False)
        v.setflags(write=False)
        self.breakpoints = b
        self.values = v

    @property
    def value_shape(self):
        return self.values.shape[1:]

    @classmethod
    def constant(cls, value):
        return cls([0.0], np.asarray(value, dtype=float)[None, ...])

    def _index(self, t, side):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("step functions are defined on t >= 0")
        idx = np.searchsorted(self.breakpoints, t, side=side) - 1
        return np.maximum(idx, 0)

    def __call__(self, t):
        return self.values[self._index(t, "right")]

    def left_limit(self, t):
        """Value just before ``t``; at ``t = 0`` the first value is returned."""
        return self.values[self._index(t, "left")]

    def integrate(self, upper):
        return integrate(self, upper)

    def __repr__(self):
        return (f"StepFunction(pieces={self.breakpoints.size}, "
                f"value_shape={self.value_shape})")


def _lengths_up_to(breakpoints, upper):
    ends = np.append(breakpoints[1:], np.inf)
    return np.clip(np.minimum(ends, upper) - breakpoints, 0.0, None)


def integrate(f: StepFunction, upper: float):
    """Return ``int_0^upper f(t) dt`` exactly.

    Raises
    ------
    NegativeUpper
        If ``upper < 0``.
    """
    if upper < 0:
        raise NegativeUpper(f"upper limit must be >= 0, got {upper}")
    if upper == 0:
        return np.zeros(f.value_shape)
    lengths = _lengths_up_to(f.breakpoints, float(upper))
    last = f.values[-1]
    if np.isinf(upper) and np.any(last != 0):
        raise ValueError("integral to infinity diverges")
    mask = lengths > 0
    return np.tensordot(lengths[mask], f.values[mask], axes=(0, 0))


def counting_integral(g: Callable, ds, i: int):
    """``int_0^tau g(t) dN_i(t)`` for subject ``i`` of ``ds``.

    A :class:`StepFunction` integrand is evaluated through its left limit,
    the value carried by the risk set that still contains subject ``i``.
    """
    t_i = float(ds.time[i])
    if ds.status[i] == 0 or t_i > ds.tau:
        return 0.0 * np.asarray(_evaluate(g, t_i))
    return np.asarray(_evaluate(g, t_i))


def _evaluate(g, t):
    if isinstance(g, StepFunction):
        return g.left_limit(t)
    return g(t)


def _ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    den_b = den.reshape(den.shape + (1,) * (num.ndim - den.ndim))
    empty = den_b == 0
    if np.any(empty & (num != 0)):
        raise DivisionByNonzeroOverZero(
            "nonzero numerator over an empty risk set")
    return np.divide(num, den_b, out=np.zeros(np.broadcast_shapes(num.shape, den_b.shape)),
                     where=~empty)


# 0/0 = 0 interval-wise; denominators broadcast over trailing value axes
ratio = _ratio


def pointwise_combine(fs: Sequence[StepFunction], op) -> StepFunction:
    """Apply ``op`` interval-wise to step functions on their merged breakpoints.

    ``op`` is either a callable taking one array per operand, or one of the
    names ``"sum"``, ``"difference"``, ``"product"``, ``"ratio"``. ``"ratio"``
    follows the ``0/0 = 0`` convention and broadcasts a scalar denominator
    over vector or matrix numerators.
    """
    if not fs:
        raise ValueError("need at least one step function")
    if isinstance(op, str):
        op = _NAMED_OPS[op]
    merged = np.unique(np.concatenate([f.breakpoints for f in fs]))
    operands = [f(merged) for f in fs]
    return StepFunction(merged, op(*operands))


_NAMED_OPS = {
    "sum": lambda *a: sum(a[1:], a[0]),
    "difference": operator.sub,
    "product": operator.mul,
    "ratio": _ratio,
}
