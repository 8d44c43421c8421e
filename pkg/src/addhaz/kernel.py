"""Gaussian product kernel with a diagonal bandwidth matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateColumn, DimensionMismatch, InputError

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Bandwidth:
    """Per-dimension bandwidths ``h_1, ..., h_q`` (``H = diag(h_j^2)``)."""

    h: tuple

    def __post_init__(self):
        h = tuple(float(v) for v in np.atleast_1d(np.asarray(self.h, dtype=float)))
        if not h or not all(v > 0 and math.isfinite(v) for v in h):
            raise InputError(f"bandwidths must be positive and finite, got {h}")
        object.__setattr__(self, "h", h)

    @property
    def q(self):
        return len(self.h)

    def as_array(self):
        return np.asarray(self.h, dtype=float)


def gaussian_kernel_weight(u, bw: Bandwidth) -> float:
    """``K_H(u) = prod_j phi(u_j / h_j) / h_j`` with ``phi`` the standard normal density."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (bw.q,):
        raise DimensionMismatch(f"u has shape {u.shape}, bandwidth has q={bw.q}")
    h = bw.as_array()
    return float(np.exp(-0.5 * np.sum((u / h) ** 2)) / np.prod(h * _SQRT_2PI))


def kernel_matrix(w, points, bw: Bandwidth) -> np.ndarray:
    """``K_H(w_i - points_k)`` for all pairs, shape ``(len(w), len(points))``."""
    w = np.asarray(w, dtype=float)
    points = np.asarray(points, dtype=float)
    if w.ndim == 1:
        w = w[:, None]
    if points.ndim == 1:
        points = points[:, None]
    if w.shape[1] != bw.q or points.shape[1] != bw.q:
        raise DimensionMismatch("kernel dimension does not match bandwidth")
    h = bw.as_array()
    sq = np.zeros((w.shape[0], points.shape[0]))
    for j in range(bw.q):
        sq += ((w[:, j, None] - points[None, :, j]) / h[j]) ** 2
    return np.exp(-0.5 * sq) / np.prod(h * _SQRT_2PI)


def silverman_bandwidth(ds) -> Bandwidth:
    """Rule-of-thumb ``h_j = sd_j [4 / (n (q + 2))]^(1 / (q + 4))``.

    ``sd_j`` is the sample standard deviation (``n - 1`` denominator) of the
    ``j``-th effect modifier.
    """
    w = ds.w if hasattr(ds, "w") else np.asarray(ds, dtype=float)
    if w.ndim == 1:
        w = w[:, None]
    n, q = w.shape
    if n < 2:
        raise InputError("need at least 2 observations")
    sd = np.std(w, axis=0, ddof=1)
    for j, s in enumerate(sd):
        if not s > 0:
            raise DegenerateColumn(j)
    factor = (4.0 / (n * (q + 2))) ** (1.0 / (q + 4))
    return Bandwidth(tuple(sd * factor))
