"""Sandwich standard errors and multiplier-perturbation inference."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import (
    InputError,
    NoEventsWarning,
    SingularD,
    TooFewReplicates,
    UnsupportedDimension,
)
from .estimators import equilibrated_condition, _is_singular, lin_ying_system
from .kernel import kernel_matrix
from .stepfun import ratio

DRAW_CHUNK = 64


@dataclass(frozen=True)
class PerturbationDraw:
    """Standard normal multipliers ``psi_1..psi_n`` for one perturbation."""

    psi: np.ndarray
    seed: tuple = ()


def multiplier_draws(n, replicates, seed, start=0):
    """Rows ``start .. start+replicates-1`` of the multiplier matrix for ``seed``.

    Draw ``b`` comes from its own generator keyed by ``(seed, b)``, so any
    subset of draws can be produced independently and in any order.
    """
    out = np.empty((replicates, n))
    for k in range(replicates):
        ss = np.random.SeedSequence(int(seed), spawn_key=(start + k,))
        out[k] = np.random.default_rng(ss).standard_normal(n)
    return out


def draw(n, seed, index=0) -> PerturbationDraw:
    return PerturbationDraw(multiplier_draws(n, 1, seed, start=index)[0], (int(seed), int(index)))


@dataclass
class LinearForm:
    """Per-subject terms of the perturbed linear expansion at ``points``.

    ``terms[i, e]`` is subject ``i``'s contribution (already multiplied by its
    event indicator) to ``n * M_n(w_e)``; ``D`` is the kernel-weighted
    second-moment matrix ``D_n(w_e)``.
    """

    points: np.ndarray
    terms: np.ndarray       # (n, E, p)
    D: np.ndarray           # (E, p, p)
    Dinv: np.ndarray        # (E, p, p)

    @property
    def n(self):
        return self.terms.shape[0]

    def perturb(self, psi):
        """``D_n(w)^-1 M~_n(w)`` for each multiplier row; shape ``(B, E, p)``."""
        psi = np.atleast_2d(np.asarray(psi, dtype=float))
        n, E, p = self.terms.shape
        M = (psi @ self.terms.reshape(n, E * p)).reshape(-1, E, p) / n
        return np.einsum("epq,beq->bep", self.Dinv, M)

    def sandwich(self):
        """``n^-2 D^-1 [sum_i a_i a_i^T] D^-1`` at each point; shape ``(E, p, p)``."""
        meat = np.einsum("iep,ieq->epq", self.terms, self.terms)
        S = np.einsum("epq,eqr,ers->eps", self.Dinv, meat, self.Dinv) / self.n ** 2
        return 0.5 * (S + np.swapaxes(S, 1, 2))


def linear_form(ds, grid, bw, points, kernel_eval=None, kernel_grid=None) -> LinearForm:
    """Assemble the perturbation terms at ``points`` for a global fit on ``grid``.

    The risk-set averages use the grid-weighted denominators of the
    estimator, and the constant-effect projection term is included when the
    dataset has Z columns. ``kernel_eval`` (n, E) and ``kernel_grid`` (n, m)
    override the kernel weights.

    Raises
    ------
    SingularD
        If ``D_n(w)`` is singular at some point.
    """
    points = np.asarray(points, dtype=float).reshape(-1, ds.q)
    Ke = kernel_matrix(ds.w, points, bw) if kernel_eval is None else np.asarray(kernel_eval, float)
    Kg = kernel_matrix(ds.w, grid.points, bw) if kernel_grid is None else np.asarray(kernel_grid, float)
    tl = ds.timeline
    n = ds.n
    T, Dl, X, Z = ds.eff_time, ds.eff_status, ds.x, ds.z
    kappa = Kg.sum(axis=1)
    S0 = tl.risk_sum(kappa)
    SX = tl.risk_sum(Ke[:, :, None] * X[:, None, :])                     # (J, E, p)
    Xbar = ratio(SX, S0)
    terms = Ke[:, :, None] * X[:, None, :] - kappa[:, None, None] * tl.own(Xbar)
    if ds.r:
        Zbar = ratio(tl.risk_sum(kappa[:, None] * Z), S0)                # (J, r)
        G = (np.einsum("ie,i,ip,ir->epr", Ke, T, X, Z)
             - np.einsum("j,jep,jr->epr", tl.lengths, SX, Zbar)) / n
        Qm = (np.einsum("i,ir,is->rs", kappa * T, Z, Z)
              - np.einsum("j,jr,js->rs", tl.lengths * S0, Zbar, Zbar)) / n
        zc = kappa[:, None] * (Z - tl.own(Zbar))                         # (n, r)
        proj = np.linalg.solve(Qm, zc.T).T                               # (n, r)
        terms = terms - np.einsum("epr,ir->iep", G, proj)
    terms = terms * Dl[:, None, None]
    D = np.einsum("ie,i,ip,iq->epq", Ke, T, X, X) / n
    Dinv = np.empty_like(D)
    for e in range(D.shape[0]):
        _, s_min, s_max = equilibrated_condition(D[e])
        if _is_singular(s_min, s_max) or not np.all(np.diag(D[e]) > 0):
            raise SingularD(f"D_n(w) is singular at w={points[e]}")
        Dinv[e] = np.linalg.inv(D[e])
    return LinearForm(points, terms, D, Dinv)


def sandwich_variance(ds, grid, bw, w, fit=None, kernel_eval=None, kernel_grid=None):
    """Sandwich covariance of the coefficient estimate at a single point ``w``.

    ``fit`` is accepted for interface symmetry; the variance depends only on
    the data, grid and bandwidth.
    """
    if ds.eff_status.sum() == 0:
        warnings.warn("no events: the sandwich variance is zero", NoEventsWarning, stacklevel=2)
    lf = linear_form(ds, grid, bw, np.atleast_1d(np.asarray(w, dtype=float)),
                     kernel_eval=kernel_eval, kernel_grid=kernel_grid)
    return lf.sandwich()[0]


def perturb_beta(ds, grid, bw, w, psi) -> np.ndarray:
    """One perturbed realization ``D_n(w)^-1 M~_n(w)`` for multipliers ``psi``."""
    if isinstance(psi, PerturbationDraw):
        psi = psi.psi
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (ds.n,):
        raise InputError(f"need {ds.n} multipliers, got shape {psi.shape}")
    lf = linear_form(ds, grid, bw, np.atleast_1d(np.asarray(w, dtype=float)))
    return lf.perturb(psi[None, :])[0, 0]


def _order_stat(values, level, axis=0):
    B = values.shape[axis]
    k = math.ceil(round((1.0 - level) * B, 9))
    return np.take(np.sort(values, axis=axis), max(k, 1) - 1, axis=axis)


def critical_index(replicates, alpha_level):
    """1-based order-statistic index used for the critical value."""
    return max(math.ceil(round((1.0 - alpha_level) * replicates, 9)), 1)


def _map_chunks(fn, replicates, threads):
    starts = list(range(0, replicates, DRAW_CHUNK))
    sizes = [min(DRAW_CHUNK, replicates - s) for s in starts]
    if threads and threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(fn, starts, sizes))
    else:
        parts = [fn(s, k) for s, k in zip(starts, sizes)]
    return np.concatenate(parts, axis=0)


@dataclass
class BandResult:
    eval_points: np.ndarray
    beta_hat: np.ndarray          # (E, p)
    se: np.ndarray                # (E, p)
    critical: np.ndarray          # (p,)
    alpha_level: float
    replicates: int
    seed: int
    sup_stats: np.ndarray         # (B, p)
    pointwise_critical: np.ndarray  # (E, p) empirical quantile of |standardized draw|

    @property
    def half_width(self):
        return self.critical[None, :] * self.se

    @property
    def lower_band(self):
        return self.beta_hat - self.half_width

    @property
    def upper_band(self):
        return self.beta_hat + self.half_width

    @property
    def z_pointwise(self):
        return float(stats.norm.ppf(1.0 - self.alpha_level / 2.0))

    @property
    def lower_pointwise(self):
        return self.beta_hat - self.z_pointwise * self.se

    @property
    def upper_pointwise(self):
        return self.beta_hat + self.z_pointwise * self.se

    def covers(self, truth):
        """Per-component indicator that ``truth`` (E, p) lies inside the band."""
        truth = np.asarray(truth, dtype=float)
        return np.all(np.abs(truth - self.beta_hat) <= self.half_width, axis=0)

    def to_dict(self):
        return {
            "eval_points": self.eval_points.reshape(-1).tolist(),
            "beta_hat": self.beta_hat.tolist(),
            "se": self.se.tolist(),
            "lower_pointwise": self.lower_pointwise.tolist(),
            "upper_pointwise": self.upper_pointwise.tolist(),
            "lower_band": self.lower_band.tolist(),
            "upper_band": self.upper_band.tolist(),
            "critical": self.critical.tolist(),
            "alpha_level": self.alpha_level,
            "replicates": self.replicates,
            "seed": self.seed,
        }


def build_band(ds, fit, interval=None, alpha_level=0.05, replicates=1000, seed=0,
               n_eval=101, threads=1, grid=None, bw=None) -> BandResult:
    """Simultaneous confidence band for each coefficient function over ``interval``.

    For every multiplier draw the perturbed coefficient process is
    standardized by the sandwich standard error and its supremum over
    ``n_eval`` evenly spaced points is recorded; the critical value is the
    ``ceil((1 - alpha) B)``-th order statistic of those suprema.
    """
    if ds.q != 1:
        raise UnsupportedDimension("simultaneous bands need a scalar effect modifier (q = 1)")
    if replicates < 100:
        raise TooFewReplicates(f"need at least 100 replicates, got {replicates}")
    if not 0 < alpha_level < 1:
        raise InputError("alpha_level must be in (0, 1)")
    grid = grid or fit.grid
    bw = bw or fit.bandwidth
    if interval is None:
        interval = tuple(np.quantile(ds.w[:, 0], [0.05, 0.95]))
    a, b = map(float, interval)
    if not a < b:
        raise InputError(f"interval must satisfy a < b, got {interval}")
    pts = np.linspace(a, b, n_eval)[:, None]
    lf = linear_form(ds, grid, bw, pts)
    se = np.sqrt(np.clip(np.einsum("epp->ep", lf.sandwich()), 0.0, None))
    inv_se = np.divide(1.0, se, out=np.zeros_like(se), where=se > 0)

    def chunk(start, size):
        psi = multiplier_draws(ds.n, size, seed, start=start)
        return np.abs(lf.perturb(psi) * inv_se[None])            # (size, E, p)

    std = _map_chunks(chunk, replicates, threads)
    sup = std.max(axis=1)
    return BandResult(
        eval_points=pts, beta_hat=fit.beta_at(pts), se=se,
        critical=_order_stat(sup, alpha_level), alpha_level=alpha_level,
        replicates=replicates, seed=int(seed), sup_stats=sup,
        pointwise_critical=_order_stat(std, alpha_level))


class AlphaPerturbation:
    """Perturbed linear expansion of the refit constant effects.

    Both the martingale term and the plug-in coefficient term use the same
    multipliers; the coefficient perturbation on the grid is interpolated to
    each ``W_i`` exactly as the point estimate is.
    """

    def __init__(self, ds, grid, bw):
        if ds.r == 0:
            raise InputError("no constant-effect covariates")
        sys = lin_ying_system(ds, ds.z)
        self.A = sys["V"][0]
        self.u = sys["resid"][:, 0, :] * ds.eff_status[:, None]            # (n, r)
        self.expo = ds.eff_time[:, None] * ds.z - ds.timeline.cumulative(sys["Cbar"])[:, 0, :]
        self.lf = linear_form(ds, grid, bw, grid.points)
        # interpolation to W_i and the dot product with X_i, folded into one (m, p, n) map
        P = grid.interpolation_weights(ds.w)                                # (n, m)
        self.to_offset = np.einsum("ik,ip->kpi", P, ds.x)
        self.n = ds.n

    def __call__(self, psi):
        psi = np.atleast_2d(np.asarray(psi, dtype=float))
        dbeta = self.lf.perturb(psi)                                        # (B, m, p)
        offset = np.einsum("bkp,kpi->bi", dbeta, self.to_offset)            # (B, n)
        rhs = psi @ self.u - offset @ self.expo
        return np.linalg.solve(self.A, rhs.T).T


def perturb_alpha_draws(ds, grid, bw, psi):
    """Perturbed constant-effect expansions for multiplier rows ``psi`` (B, n)."""
    return AlphaPerturbation(ds, grid, bw)(psi)


def perturb_alpha_se(ds, grid, bw, replicates=1000, seed=0, threads=1):
    """Perturbation standard errors of the refit constant effects."""
    if replicates < 2:
        raise TooFewReplicates("need at least 2 replicates")
    op = AlphaPerturbation(ds, grid, bw)

    def chunk(start, size):
        return op(multiplier_draws(ds.n, size, seed, start=start))

    draws = _map_chunks(chunk, replicates, threads)
    return draws.std(axis=0, ddof=1)
