"""Estimation grids over the effect-modifier support and interpolation off-grid."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateColumn, DimensionMismatch, IncompleteValues, InputError


@dataclass(frozen=True, eq=False)
class EstimationGrid:
    """Cartesian product of ``q`` strictly increasing coordinate axes.

    Points are enumerated in C order (last axis varies fastest).
    """

    axes: tuple
    kind: str = "explicit"

    def __post_init__(self):
        axes = []
        for j, a in enumerate(self.axes):
            a = np.array(a, dtype=float).reshape(-1)
            if a.size == 0 or not np.all(np.isfinite(a)):
                raise InputError(f"grid axis {j} must be non-empty and finite")
            if np.any(np.diff(a) <= 0):
                raise InputError(f"grid axis {j} must be strictly increasing "
                                 "(duplicate coordinates are not allowed)")
            a.setflags(write=False)
            axes.append(a)
        if not axes:
            raise InputError("grid needs at least one axis")
        object.__setattr__(self, "axes", tuple(axes))

    @property
    def q(self):
        return len(self.axes)

    @property
    def shape(self):
        return tuple(a.size for a in self.axes)

    @property
    def m(self):
        return int(np.prod(self.shape))

    @property
    def points(self):
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.reshape(-1) for g in mesh], axis=1)

    def spacing_ratio(self):
        """Largest max/min spacing ratio over axes with at least two points."""
        ratios = [np.diff(a).max() / np.diff(a).min() for a in self.axes if a.size > 1]
        return max(ratios, default=1.0)

    def interpolation_weights(self, w, mode="linear"):
        """Matrix ``P`` of shape ``(N, m)`` with ``P @ values`` the interpolant at ``w``.

        ``mode="linear"`` is multilinear interpolation on the cell containing
        each query, after clamping queries to the grid's bounding box. ``mode
        ="lower"`` returns the value at the nearest grid node below the query
        in every coordinate (piecewise-constant extension).
        """
        w = np.asarray(w, dtype=float)
        if w.ndim == 1:
            w = w[:, None] if self.q == 1 else w[None, :]
        if w.shape[1] != self.q:
            raise DimensionMismatch(f"query points have {w.shape[1]} coordinates, grid has {self.q}")
        N = w.shape[0]
        corner_idx, corner_wt = [], []
        for j, a in enumerate(self.axes):
            x = np.clip(w[:, j], a[0], a[-1])
            if a.size == 1:
                corner_idx.append([np.zeros(N, dtype=int)])
                corner_wt.append([np.ones(N)])
                continue
            if mode == "lower":
                k = np.searchsorted(a, x, side="right") - 1
                corner_idx.append([k])
                corner_wt.append([np.ones(N)])
            elif mode == "linear":
                k = np.clip(np.searchsorted(a, x, side="right") - 1, 0, a.size - 2)
                t = (x - a[k]) / (a[k + 1] - a[k])
                corner_idx.append([k, k + 1])
                corner_wt.append([1.0 - t, t])
            else:
                raise ValueError(f"unknown interpolation mode {mode!r}")
        P = np.zeros((N, self.m))
        rows = np.arange(N)
        for combo in itertools.product(*(range(len(c)) for c in corner_idx)):
            idx = tuple(corner_idx[j][c] for j, c in enumerate(combo))
            wt = np.ones(N)
            for j, c in enumerate(combo):
                wt = wt * corner_wt[j][c]
            np.add.at(P, (rows, np.ravel_multi_index(idx, self.shape)), wt)
        return P


def _axis_quantiles(x, size):
    xs = np.sort(x)
    n = xs.size
    # inverted-CDF order statistic at probabilities (k - 0.5) / size, in integer arithmetic
    ranks = [-(-n * (2 * k - 1) // (2 * size)) for k in range(1, size + 1)]
    return xs[np.clip(ranks, 1, n) - 1]


def build_grid(ds, kind="quantile", per_axis_size=5) -> EstimationGrid:
    """Quantile-based or evenly spaced Cartesian grid over the observed W.

    Parameters
    ----------
    ds : SurvivalDataset or array of shape (n, q)
    kind : {"quantile", "even"}
    per_axis_size : int or sequence of int
        Points per axis, each at least 2.
    """
    w = ds.w if hasattr(ds, "w") else np.asarray(ds, dtype=float)
    if w.ndim == 1:
        w = w[:, None]
    q = w.shape[1]
    sizes = np.broadcast_to(np.atleast_1d(per_axis_size), (q,)).astype(int)
    if np.any(sizes < 2):
        raise InputError("grid size must be at least 2 per axis")
    axes = []
    for j in range(q):
        lo, hi = w[:, j].min(), w[:, j].max()
        if lo == hi:
            raise DegenerateColumn(j)
        if kind == "even":
            axis = np.linspace(lo, hi, sizes[j])
        elif kind == "quantile":
            axis = _axis_quantiles(w[:, j], sizes[j])
            if np.any(np.diff(axis) <= 0):
                raise DegenerateColumn(j, f"quantile grid on W column {j} has repeated "
                                          "points; use a smaller size or an even grid")
        else:
            raise InputError(f"unknown grid kind {kind!r}")
        axes.append(axis)
    return EstimationGrid(tuple(axes), kind=kind)


def grid_from_points(points) -> EstimationGrid:
    """Recover a Cartesian grid from an explicit list of its points."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    axes = tuple(np.unique(points[:, j]) for j in range(points.shape[1]))
    grid = EstimationGrid(axes, kind="explicit")
    listed = {tuple(p) for p in points}
    if len(points) != grid.m or listed != {tuple(p) for p in grid.points}:
        raise InputError("explicit grid points do not form a Cartesian product")
    return grid


def interpolate(grid: EstimationGrid, values, w, mode="linear"):
    """Interpolate per-node vectors ``values`` (shape ``(m, p)``) at ``w``.

    A single query point returns shape ``(p,)``; a batch of shape ``(N, q)``
    returns ``(N, p)``.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] != grid.m or not np.all(np.isfinite(values)):
        raise IncompleteValues(f"need finite values at all {grid.m} grid points")
    w_arr = np.asarray(w, dtype=float)
    single = w_arr.ndim == 0 or (w_arr.ndim == 1 and (grid.q > 1 or w_arr.size == 1))
    out = grid.interpolation_weights(np.atleast_1d(w_arr), mode=mode) @ values
    return out[0] if single else out
