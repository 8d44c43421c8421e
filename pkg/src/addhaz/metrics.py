"""Prediction error and concordance."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from .errors import AllTimesTied, InputError


def linear_predictor(fit, w, x, z=None):
    """``beta_hat(W)^T X + alpha_hat^T Z`` row by row."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    lp = np.einsum("ip,ip->i", fit.beta_at(w), x)
    alpha = np.asarray(getattr(fit, "alpha", np.zeros(0)), dtype=float)
    if z is not None and alpha.size:
        lp = lp + np.atleast_2d(np.asarray(z, dtype=float)) @ alpha
    return lp


def mse(fit, w, x, z, beta_true, alpha_true=None) -> float:
    """Mean squared error of the linear predictor over an evaluation sample.

    ``beta_true`` maps an ``(N, q)`` array of modifiers to ``(N, p)`` true
    coefficients.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    err = np.einsum("ip,ip->i", fit.beta_at(w) - beta_true(np.asarray(w, dtype=float)), x)
    alpha = np.asarray(getattr(fit, "alpha", np.zeros(0)), dtype=float)
    if alpha.size:
        err = err + np.atleast_2d(np.asarray(z, dtype=float)) @ (alpha - np.asarray(alpha_true))
    return float(np.mean(err ** 2))


def c_index(scores, times) -> float:
    """Concordance between risk scores and fully observed event times.

    Over all pairs with distinct times, the fraction in which the subject
    with the larger score has the smaller time; tied scores count one half.
    Computed through Kendall's tau-b in ``O(n log n)``.
    """
    s = np.asarray(scores, dtype=float)
    t = np.asarray(times, dtype=float)
    if s.shape != t.shape or s.ndim != 1:
        raise InputError("scores and times must be 1-d arrays of equal length")
    n = s.size
    if n < 2:
        raise InputError("need at least two subjects")
    n0 = n * (n - 1) / 2.0
    n_t = _tied_pairs(t)
    if n_t == n0:
        raise AllTimesTied("all event times are tied")
    n_s = _tied_pairs(s)
    if n_s == n0:
        return 0.5
    tau = stats.kendalltau(t, s, variant="b").statistic
    # tau_b = (P - Q) / sqrt((n0 - n_t)(n0 - n_s)), and P - Q is an integer
    net = round(tau * math.sqrt((n0 - n_t) * (n0 - n_s)))
    comparable = n0 - n_t
    return float((comparable - net) / (2.0 * comparable))


def _tied_pairs(a):
    _, counts = np.unique(a, return_counts=True)
    return float(np.sum(counts * (counts - 1) / 2.0))


def harrell_c_index(scores, times, events, chunk=2048) -> float:
    """Harrell's concordance for right-censored data.

    A pair is usable when the shorter time is an observed event; the higher
    score should belong to that subject. Tied scores count one half.
    """
    s = np.asarray(scores, dtype=float)
    t = np.asarray(times, dtype=float)
    d = np.asarray(events).astype(bool)
    num = den = 0.0
    for lo in range(0, s.size, chunk):
        sl = slice(lo, lo + chunk)
        usable = d[sl, None] & (t[sl, None] < t[None, :])
        conc = (s[sl, None] > s[None, :]) + 0.5 * (s[sl, None] == s[None, :])
        num += float(np.sum(conc * usable))
        den += float(np.sum(usable))
    if den == 0:
        raise AllTimesTied("no usable pairs")
    return num / den
