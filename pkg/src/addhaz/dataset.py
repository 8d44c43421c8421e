"""Right-censored survival data with effect modifiers and two covariate blocks."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyDataset,
    InputError,
    MissingColumn,
    NegativeTime,
    NonBinaryStatus,
    NonFiniteValue,
    TruncatedFollowUpWarning,
)
from .stepfun import StepFunction, ratio


@dataclass(frozen=True)
class SurvivalRecord:
    time: float
    status: int
    w: tuple
    x: tuple
    z: tuple = ()


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for :func:`load_csv`."""

    time: str
    status: str
    w: Sequence[str]
    x: Sequence[str]
    z: Sequence[str] = ()

    def __post_init__(self):
        object.__setattr__(self, "w", tuple(self.w))
        object.__setattr__(self, "x", tuple(self.x))
        object.__setattr__(self, "z", tuple(self.z))
        if not self.w:
            raise InputError("schema needs at least one W column")
        if not self.x:
            raise InputError("schema needs at least one X column")

    @property
    def columns(self):
        return (self.time, self.status, *self.w, *self.x, *self.z)


class Timeline:
    """Risk-set bookkeeping on the distinct (tau-truncated) observed times.

    The follow-up axis is split into intervals ``(u[j-1], u[j]]`` with
    ``u[-1] = 0``. Because ``Y_i(t) = I(T_i >= t)`` is left-continuous, the
    risk set on the ``j``-th interval is ``{i : T_i >= u[j]}``, which is also
    the risk set seen by an event at ``u[j]``. Every ``dt`` integral in the
    estimators is a weighted sum over these intervals, so it is exact.
    """

    def __init__(self, eff_time):
        eff_time = np.asarray(eff_time, dtype=float)
        self.times, self.index = np.unique(eff_time, return_inverse=True)
        self.lengths = np.diff(self.times, prepend=0.0)
        self.order = np.argsort(eff_time, kind="stable")
        self.start = np.searchsorted(eff_time[self.order], self.times, side="left")
        self.n = eff_time.size

    @property
    def size(self):
        return self.times.size

    def risk_sum(self, a):
        """``sum_i Y_i(t) a_i`` on each interval; ``a`` has shape (n, ...)."""
        a = np.asarray(a, dtype=float)
        rc = np.cumsum(a[self.order][::-1], axis=0)[::-1]
        return rc[self.start]

    def own(self, f):
        """Per-subject value of an interval array at the subject's own time."""
        return np.asarray(f)[self.index]

    def cumulative(self, f):
        """Per-subject ``int_0^{T_i} f(t) dt`` for an interval array ``f``."""
        f = np.asarray(f, dtype=float)
        L = self.lengths.reshape((-1,) + (1,) * (f.ndim - 1))
        return np.cumsum(f * L, axis=0)[self.index]

    def integral(self, f):
        """``int_0^tau f(t) dt`` for an interval array ``f`` of shape (J, ...)."""
        return np.tensordot(self.lengths, np.asarray(f, dtype=float), axes=(0, 0))

    def ratio(self, num, den):
        return ratio(num, den)

    def step(self, values):
        """Materialize an interval array as a right-continuous :class:`StepFunction`.

        The value on ``(u[j-1], u[j]]`` is placed on ``[u[j-1], u[j])``; the
        two differ only at breakpoints, which carry no ``dt`` mass, and
        :meth:`StepFunction.left_limit` at ``u[j]`` recovers the risk-set
        value seen by an event there. The function is zero past the last time.
        """
        values = np.asarray(values, dtype=float)
        keep = self.lengths > 0
        b = np.concatenate([[0.0], self.times[keep]])
        tail = np.zeros((1,) + values.shape[1:])
        return StepFunction(b, np.concatenate([values[keep], tail]))


@dataclass(frozen=True, eq=False)
class SurvivalDataset:
    """Validated sample of ``(T, Delta, W, X, Z)``.

    Arrays are read-only. Subjects followed beyond ``tau`` are censored at
    ``tau`` in every integral.
    """

    time: np.ndarray
    status: np.ndarray
    w: np.ndarray
    x: np.ndarray
    z: np.ndarray
    tau: float
    names: dict = field(default_factory=dict)

    @classmethod
    def from_arrays(cls, time, status, w, x, z=None, tau=None, names=None):
        time = np.asarray(time, dtype=float).reshape(-1)
        n = time.size
        if n == 0:
            raise EmptyDataset("dataset has no rows")
        if n < 2:
            raise EmptyDataset("dataset needs at least 2 rows")
        status_f = np.asarray(status, dtype=float).reshape(-1)
        w = _as_2d(w, n, "w")
        x = _as_2d(x, n, "x")
        z = np.zeros((n, 0)) if z is None else _as_2d(z, n, "z", allow_empty=True)
        if w.shape[1] == 0 or x.shape[1] == 0:
            raise DimensionMismatch("w and x need at least one column")
        for name, arr in (("time", time[:, None]), ("status", status_f[:, None]),
                          ("w", w), ("x", x), ("z", z)):
            bad = ~np.all(np.isfinite(arr), axis=1)
            if bad.any():
                raise NonFiniteValue(int(np.argmax(bad)) + 1, name)
        if np.any(time < 0):
            raise NegativeTime(f"negative time at row {int(np.argmax(time < 0)) + 1}")
        bad = (status_f != 0) & (status_f != 1)
        if bad.any():
            row = int(np.argmax(bad))
            raise NonBinaryStatus(row + 1, status_f[row])
        tmax = float(time.max())
        if tau is None:
            tau = tmax
        tau = float(tau)
        if not (tau > 0 and math.isfinite(tau)):
            raise InputError(f"tau must be positive and finite, got {tau}")
        if tau < tmax:
            warnings.warn(
                f"{int(np.sum(time > tau))} subject(s) followed beyond tau={tau:g} "
                "are censored at tau", TruncatedFollowUpWarning, stacklevel=2)
        arrays = [time, status_f.astype(np.int8), w, x, z]
        for a in arrays:
            a.setflags(write=False)
        return cls(*arrays, tau=tau, names=dict(names or {}))

    @property
    def n(self):
        return self.time.size

    @property
    def q(self):
        return self.w.shape[1]

    @property
    def p(self):
        return self.x.shape[1]

    @property
    def r(self):
        return self.z.shape[1]

    @property
    def n_events(self):
        return int(self.status.sum())

    @cached_property
    def eff_time(self):
        return np.minimum(self.time, self.tau)

    @cached_property
    def eff_status(self):
        return (self.status.astype(bool) & (self.time <= self.tau)).astype(float)

    @cached_property
    def timeline(self):
        return Timeline(self.eff_time)

    @property
    def records(self):
        return [SurvivalRecord(float(t), int(d), tuple(w), tuple(x), tuple(z))
                for t, d, w, x, z in zip(self.time, self.status, self.w, self.x, self.z)]

    def event_table(self):
        """Distinct observed times with event counts and risk-set sizes.

        Returns a dict of arrays ``time``, ``events``, ``at_risk`` (``Y(t)`` at
        that time) and ``leaving`` (drop in ``Y`` just after it).
        """
        times, inv = np.unique(self.time, return_inverse=True)
        leaving = np.bincount(inv, minlength=times.size)
        events = np.bincount(inv, weights=self.status, minlength=times.size)
        at_risk = self.n - np.concatenate([[0], np.cumsum(leaving)[:-1]])
        return {"time": times, "events": events.astype(int),
                "at_risk": at_risk, "leaving": leaving}

    def risk_set_step(self):
        """``Y(t)`` as a step function of the tau-truncated timeline."""
        tl = self.timeline
        return tl.step(tl.risk_sum(np.ones(self.n)))

    def subset(self, idx):
        idx = np.asarray(idx)
        return SurvivalDataset.from_arrays(self.time[idx], self.status[idx], self.w[idx],
                                           self.x[idx], self.z[idx], tau=self.tau,
                                           names=self.names)

    def to_csv(self, path, schema: CsvSchema | None = None):
        """Write the dataset so that :func:`load_csv` reproduces it bit-exactly."""
        schema = schema or default_schema(self.q, self.p, self.r, self.names)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(schema.columns)
            for i in range(self.n):
                row = [repr(float(self.time[i])), str(int(self.status[i]))]
                row += [repr(float(v)) for v in (*self.w[i], *self.x[i], *self.z[i])]
                writer.writerow(row)
        return schema


def default_schema(q, p, r, names=None):
    names = names or {}
    return CsvSchema(
        time=names.get("time", "time"),
        status=names.get("status", "status"),
        w=names.get("w") or [f"w{j + 1}" for j in range(q)],
        x=names.get("x") or [f"x{j + 1}" for j in range(p)],
        z=names.get("z") or [f"z{j + 1}" for j in range(r)],
    )


def _as_2d(a, n, name, allow_empty=False):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] != n:
        raise DimensionMismatch(f"{name} must have {n} rows, got shape {a.shape}")
    if a.shape[1] == 0 and not allow_empty:
        raise DimensionMismatch(f"{name} needs at least one column")
    return np.array(a, dtype=float)


def _parse_cell(text, row, column):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise NonFiniteValue(row, column) from None
    if not math.isfinite(value):
        raise NonFiniteValue(row, column)
    return value


def load_csv(path, schema: CsvSchema, tau=None) -> SurvivalDataset:
    """Read a header-row CSV into a validated :class:`SurvivalDataset`.

    Rows are numbered from 1, counting data rows only.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyDataset(f"{path} is empty") from None
        pos = {}
        for col in schema.columns:
            if col not in header:
                raise MissingColumn(col)
            pos[col] = header.index(col)
        rows = []
        for k, raw in enumerate(reader, start=1):
            if not raw or all(not c.strip() for c in raw):
                continue
            cells = {}
            for col in schema.columns:
                j = pos[col]
                cells[col] = _parse_cell(raw[j] if j < len(raw) else "", k, col)
            if cells[schema.status] not in (0.0, 1.0):
                raise NonBinaryStatus(k, cells[schema.status])
            rows.append(cells)
    if not rows:
        raise EmptyDataset(f"{path} has no data rows")

    def block(cols):
        return np.array([[r[c] for c in cols] for r in rows], dtype=float).reshape(len(rows), len(cols))

    names = {"time": schema.time, "status": schema.status, "w": list(schema.w),
             "x": list(schema.x), "z": list(schema.z)}
    return SurvivalDataset.from_arrays(
        [r[schema.time] for r in rows], [r[schema.status] for r in rows],
        block(schema.w), block(schema.x), block(schema.z), tau=tau, names=names)


def risk_set_size(ds: SurvivalDataset, t: float) -> int:
    """Number of subjects with ``T_i >= t``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return int(np.sum(ds.time >= t))
