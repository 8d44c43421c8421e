"""Point estimators for additive hazards models with varying coefficients.

All time integrals run over the dataset's :class:`~addhaz.dataset.Timeline`,
on which every integrand is piecewise constant, so they are exact sums.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    EmptyRiskSet,
    GroupWithoutEvents,
    InputError,
    NoEvents,
    SingularDenominator,
    SingularSystem,
    SparseGridWarning,
)
from .grid import EstimationGrid, build_grid
from .kernel import Bandwidth, kernel_matrix, silverman_bandwidth
from .stepfun import ratio

SINGULAR_RTOL = 1e-12


def _require_events(ds):
    if ds.eff_status.sum() == 0:
        raise NoEvents("no events before tau; the estimating equations vanish")


def _covariates(ds, which):
    if isinstance(which, str):
        blocks = {"x": ds.x, "z": ds.z}
        return np.hstack([blocks[c] for c in which])
    return np.asarray(which, dtype=float)


def equilibrated_condition(matrix, scale=None):
    """Return ``(cond, s_min, s_max)`` of ``D M D`` with ``D = diag(scale)^(-1/2)``.

    ``scale`` is a reference diagonal (typically the uncentred second
    moments); it defaults to the diagonal of ``matrix`` itself.
    """
    matrix = np.asarray(matrix, dtype=float)
    if scale is None:
        scale = np.abs(np.diag(matrix))
    scale = np.where(np.asarray(scale) > 0, scale, 1.0)
    d = 1.0 / np.sqrt(scale)
    s = scipy.linalg.svdvals(matrix * d[:, None] * d[None, :])
    s_max, s_min = s[0], s[-1]
    cond = np.inf if s_min == 0 else s_max / s_min
    return cond, s_min, s_max


def _is_singular(s_min, s_max, rtol=SINGULAR_RTOL):
    return not np.isfinite(s_min) or s_min <= rtol * max(1.0, s_max)


def _solve_spd(V, b, scale, what="denominator matrix"):
    cond, s_min, s_max = equilibrated_condition(V, scale)
    if _is_singular(s_min, s_max):
        raise SingularDenominator(f"{what} is singular (condition {cond:.3g})")
    return scipy.linalg.solve(V, b, assume_a="sym")


def lin_ying_system(ds, C, weights=None, offset=None):
    """Weighted Lin-Ying estimating equations for covariates ``C``.

    Parameters
    ----------
    ds : SurvivalDataset
    C : ndarray, shape (n, d)
    weights : ndarray, shape (n,) or (n, Q), optional
        Per-subject weights; a 2-d array evaluates ``Q`` weightings at once.
    offset : ndarray, shape (n,), optional
        Known part of each subject's linear predictor, subtracted as
        ``Y_i(t) offset_i dt`` from ``dN_i(t)``.

    Returns
    -------
    dict
        ``V`` (Q, d, d), ``b`` (Q, d), ``scale`` (Q, d) uncentred diagonal,
        ``resid`` (n, Q, d) ``C_i - Cbar(T_i)``, ``Cbar`` (J, Q, d).
    """
    tl = ds.timeline
    C = np.asarray(C, dtype=float)
    n, d = C.shape
    Om = np.ones((n, 1)) if weights is None else np.asarray(weights, dtype=float)
    if Om.ndim == 1:
        Om = Om[:, None]
    T = ds.eff_time
    D = ds.eff_status
    S0 = tl.risk_sum(Om)                                   # (J, Q)
    S1 = tl.risk_sum(Om[:, :, None] * C[:, None, :])       # (J, Q, d)
    Cbar = ratio(S1, S0)
    first = np.einsum("iq,id,ie->qde", Om * T[:, None], C, C)
    second = np.einsum("jq,jqd,jqe->qde", S0 * tl.lengths[:, None], Cbar, Cbar)
    V = first - second
    V = 0.5 * (V + np.swapaxes(V, 1, 2))
    resid = C[:, None, :] - tl.own(Cbar)                   # (n, Q, d)
    b = np.einsum("iq,iqd->qd", Om * D[:, None], resid)
    if offset is not None:
        o = np.asarray(offset, dtype=float)
        centred_exposure = T[:, None, None] * C[:, None, :] - tl.cumulative(Cbar)
        b = b - np.einsum("iq,iqd->qd", Om * o[:, None], centred_exposure)
    scale = np.einsum("qdd->qd", first)
    return {"V": V, "b": b, "scale": scale, "resid": resid, "Cbar": Cbar}


def lin_ying(ds, covariates="x", offset=None):
    """Lin-Ying estimator for a constant-coefficient additive hazards model.

    ``covariates`` names blocks of ``ds`` (``"x"``, ``"z"``, ``"xz"``) or is
    an explicit ``(n, d)`` matrix.

    Raises
    ------
    NoEvents, SingularDenominator
    """
    _require_events(ds)
    C = _covariates(ds, covariates)
    if C.shape[1] == 0:
        raise InputError("no covariates selected")
    sys = lin_ying_system(ds, C, offset=offset)
    return _solve_spd(sys["V"][0], sys["b"][0], sys["scale"][0])


def lin_ying_covariance(ds, covariates="x", offset=None):
    """Robust sandwich covariance ``V^-1 [sum_i int (C_i - Cbar)^2 dN_i] V^-1``."""
    C = _covariates(ds, covariates)
    sys = lin_ying_system(ds, C, offset=offset)
    V = sys["V"][0]
    r = sys["resid"][:, 0, :] * np.sqrt(ds.eff_status)[:, None]
    Vinv = np.linalg.inv(V)
    return Vinv @ (r.T @ r) @ Vinv


def discrete_block_estimate(ds, values=None):
    """Varying coefficients for a discrete effect modifier.

    Each distinct W value forms a group, and the block-structured system
    ``V_B beta = b_B`` is solved for one coefficient vector per group.

    Parameters
    ----------
    values : array_like, shape (m, q), optional
        Group values in output order; defaults to the sorted distinct rows
        of ``W``. A listed value with no subjects makes the system singular.

    Returns
    -------
    ndarray, shape (m, p)
    """
    _require_events(ds)
    if values is None:
        values = np.unique(ds.w, axis=0)
    values = np.asarray(values, dtype=float).reshape(-1, ds.q)
    member = np.all(ds.w[:, None, :] == values[None, :, :], axis=2).astype(float)  # (n, m)
    if np.any(member.sum(axis=1) == 0):
        raise InputError("some subjects do not belong to any listed W value")
    m, p, n = values.shape[0], ds.p, ds.n
    for k in range(m):
        if member[:, k].sum() > 0 and (member[:, k] * ds.eff_status).sum() == 0:
            warnings.warn(f"group {k} (W={values[k]}) has no events",
                          GroupWithoutEvents, stacklevel=2)
    tl = ds.timeline
    T, D, X = ds.eff_time, ds.eff_status, ds.x
    Y = tl.risk_sum(np.ones(n))
    Xk = member[:, :, None] * X[:, None, :]               # group-masked X, (n, m, p)
    Xbar = ratio(tl.risk_sum(Xk), Y)                      # (J, m, p)
    b = (np.einsum("i,ikp->kp", D, Xk) - np.einsum("i,ikp->kp", D, tl.own(Xbar))) / n
    Vd = np.einsum("ik,i,ip,iq->kpq", member, T, X, X) / n
    Vc = np.einsum("j,jkp,jlq->kplq", tl.lengths * Y, Xbar, Xbar) / n
    V = -Vc.reshape(m * p, m * p)
    for k in range(m):
        V[k * p:(k + 1) * p, k * p:(k + 1) * p] += Vd[k]
    V = 0.5 * (V + V.T)
    scale = np.concatenate([np.diag(Vd[k]) for k in range(m)])
    return _solve_spd(V, b.reshape(-1), scale, "group block matrix").reshape(m, p)


@dataclass
class LocalEstimates:
    """Local kernel fits at ``points`` (one row per point)."""

    points: np.ndarray
    beta: np.ndarray
    alpha: np.ndarray
    cov: np.ndarray
    singular: np.ndarray


def local_kernel_fit_many(ds, points, bw: Bandwidth | None = None, kernel=None,
                          include_z=True, chunk=256):
    """Local (pointwise kernel-weighted Lin-Ying) fits at many points.

    ``kernel`` overrides the weights with an ``(n, Q)`` matrix. When Z is
    present and ``include_z`` is true, ``(beta(w), alpha(w))`` are fit
    jointly with Z treated as additional locally weighted covariates.
    Singular points are flagged in ``singular`` and carry NaN estimates.
    """
    _require_events(ds)
    points = np.asarray(points, dtype=float).reshape(-1, ds.q)
    if kernel is None:
        bw = bw or silverman_bandwidth(ds)
        kernel = kernel_matrix(ds.w, points, bw)
    kernel = np.asarray(kernel, dtype=float).reshape(ds.n, -1)
    C = np.hstack([ds.x, ds.z]) if include_z else ds.x
    p, d = ds.p, C.shape[1]
    Q = kernel.shape[1]
    est = np.full((Q, d), np.nan)
    cov = np.full((Q, d, d), np.nan)
    singular = np.zeros(Q, dtype=bool)
    sqrt_dn = np.sqrt(ds.eff_status)
    for lo in range(0, Q, chunk):
        K = kernel[:, lo:lo + chunk]
        sys = lin_ying_system(ds, C, weights=K)
        for j in range(K.shape[1]):
            V, b = sys["V"][j], sys["b"][j]
            _, s_min, s_max = equilibrated_condition(V, sys["scale"][j])
            if _is_singular(s_min, s_max):
                singular[lo + j] = True
                continue
            Vinv = np.linalg.inv(V)
            est[lo + j] = scipy.linalg.solve(V, b, assume_a="sym")
            r = sys["resid"][:, j, :] * (K[:, j] * sqrt_dn)[:, None]
            cov[lo + j] = Vinv @ (r.T @ r) @ Vinv
    return LocalEstimates(points, est[:, :p], est[:, p:], cov, singular)


def local_kernel_fit(ds, w, bw: Bandwidth | None = None, weights=None, include_z=True):
    """Local estimator at a single point ``w``.

    Returns ``beta`` (p,) when the dataset has no Z (or ``include_z`` is
    false), otherwise ``(beta, alpha)``.

    Raises
    ------
    SingularDenominator
        If the kernel-weighted denominator is singular at ``w``.
    """
    kernel = None if weights is None else np.asarray(weights, dtype=float).reshape(-1, 1)
    res = local_kernel_fit_many(ds, np.atleast_1d(np.asarray(w, dtype=float)), bw,
                                kernel=kernel, include_z=include_z)
    if res.singular[0]:
        raise SingularDenominator(f"local denominator is singular at w={w}")
    if include_z and ds.r > 0:
        return res.beta[0], res.alpha[0]
    return res.beta[0]


def local_alpha_aggregate(per_point_alphas, weights=None, variances=None):
    """Weighted average of pointwise constant-effect estimates.

    Without explicit ``weights``, uses inverse traces of ``variances``
    (shape (n, r, r)); falls back to uniform weights if those are missing or
    not all positive and finite.
    """
    a = np.asarray(per_point_alphas, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if weights is None:
        weights = np.ones(a.shape[0])
        if variances is not None:
            tr = np.trace(np.asarray(variances, dtype=float), axis1=1, axis2=2)
            if np.all(np.isfinite(tr)) and np.all(tr > 0):
                weights = 1.0 / tr
    weights = np.asarray(weights, dtype=float)
    if not weights.sum() > 0:
        raise InputError("aggregation weights must have a positive sum")
    return weights @ a / weights.sum()


@dataclass
class AssembledSystem:
    """Joint linear system for grid coefficients and constant effects.

    ``matrix`` has order ``m p + r``; the leading ``m p`` rows hold the
    grid blocks in grid-point order. ``diag_blocks`` are the ``I(w_k = w_l)``
    terms that appear only on the block diagonal.
    """

    matrix: np.ndarray
    rhs: np.ndarray
    m: int
    p: int
    r: int
    scale: np.ndarray
    diag_blocks: np.ndarray
    grid: EstimationGrid | None = None
    kernel: np.ndarray | None = field(default=None, repr=False)


def assemble_global_system(ds, grid: EstimationGrid, bw: Bandwidth | None = None,
                           kernel=None) -> AssembledSystem:
    """Build the global kernel system over ``grid``.

    Every subject sum carries the grid-averaged weight
    ``m^-1 sum_j K_H(W_i - w_j)``; the grid-point blocks use
    ``K_H(W_i - w_k)`` directly. ``kernel`` overrides the ``(n, m)`` weight
    matrix (for instance indicator weights for a discrete W).
    """
    _require_events(ds)
    if kernel is None:
        kernel = kernel_matrix(ds.w, grid.points, bw)
    Kg = np.asarray(kernel, dtype=float)
    n, m = Kg.shape
    p, r = ds.p, ds.r
    tl = ds.timeline
    T, D, X, Z = ds.eff_time, ds.eff_status, ds.x, ds.z
    kappa = Kg.sum(axis=1)
    nm = n * m

    S0 = tl.risk_sum(kappa)                                           # (J,)
    Xbar = ratio(tl.risk_sum(Kg[:, :, None] * X[:, None, :]), S0)      # (J, m, p)
    b = (np.einsum("i,ik,ip->kp", D, Kg, X)
         - np.einsum("i,ikp->kp", D * kappa, tl.own(Xbar))) / nm
    diag_blocks = np.einsum("ik,i,ip,iq->kpq", Kg, T, X, X) / nm
    cross = np.einsum("j,jkp,jlq->kplq", tl.lengths * S0, Xbar, Xbar) / nm
    N = m * p + r
    M = np.zeros((N, N))
    M[:m * p, :m * p] = -cross.reshape(m * p, m * p)
    for k in range(m):
        M[k * p:(k + 1) * p, k * p:(k + 1) * p] += diag_blocks[k]
    rhs = np.zeros(N)
    rhs[:m * p] = b.reshape(-1)
    scale = np.concatenate([np.einsum("kpp->kp", diag_blocks).reshape(-1), np.ones(r)])
    if r:
        Zbar = ratio(tl.risk_sum(kappa[:, None] * Z), S0)                # (J, r)
        b_a = np.einsum("i,ir->r", D * kappa, Z - tl.own(Zbar)) / nm
        zz = np.einsum("i,ir,is->rs", kappa * T, Z, Z)
        V_aa = (zz - np.einsum("j,jr,js->rs", tl.lengths * S0, Zbar, Zbar)) / nm
        SX = tl.risk_sum(Kg[:, :, None] * X[:, None, :])
        V_ba = (np.einsum("ik,i,ip,ir->kpr", Kg, T, X, Z)
                - np.einsum("j,jkp,jr->kpr", tl.lengths, SX, Zbar)) / nm
        M[:m * p, m * p:] = V_ba.reshape(m * p, r)
        M[m * p:, :m * p] = V_ba.reshape(m * p, r).T
        M[m * p:, m * p:] = V_aa
        rhs[m * p:] = b_a
        scale[m * p:] = np.diag(zz) / nm
    M = 0.5 * (M + M.T)
    return AssembledSystem(M, rhs, m, p, r, scale, diag_blocks, grid, Kg)


@dataclass
class GlobalSolution:
    beta_grid: np.ndarray
    alpha_joint: np.ndarray
    condition: float


def solve_global(sys: AssembledSystem, ridge: float = 0.0) -> GlobalSolution:
    """Solve the assembled system by symmetric-indefinite (LDL^T) factorization.

    No regularization is applied unless ``ridge > 0``, which adds
    ``ridge * I`` to the equilibrated matrix.

    Raises
    ------
    SingularSystem
        With the equilibrated condition estimate and the grid points that
        carry most of the near-null direction.
    """
    M = sys.matrix
    scale = np.where(sys.scale > 0, sys.scale, 1.0)
    if ridge:
        M = M + ridge * np.diag(scale)
    d = 1.0 / np.sqrt(scale)
    Me = M * d[:, None] * d[None, :]
    U, s, Vt = scipy.linalg.svd(Me)
    s_max, s_min = s[0], s[-1]
    cond = np.inf if s_min == 0 else float(s_max / s_min)
    if _is_singular(s_min, s_max):
        null = Vt[-1, :sys.m * sys.p].reshape(sys.m, sys.p)
        share = np.linalg.norm(null, axis=1)
        worst = np.argsort(share)[::-1][:3]
        pts = None if sys.grid is None else sys.grid.points[worst]
        raise SingularSystem(
            f"global system is singular (condition {cond:.3g}); the grid is likely too "
            f"dense or too wide for the bandwidth near grid points {worst.tolist()}",
            condition=cond, grid_points=pts)
    sol = scipy.linalg.solve(M, sys.rhs, assume_a="sym")
    beta = sol[:sys.m * sys.p].reshape(sys.m, sys.p)
    return GlobalSolution(beta, sol[sys.m * sys.p:], cond)


def refit_alpha(ds, beta_at_subjects):
    """Lin-Ying estimate of the constant effects with ``beta(W_i)`` held fixed.

    Returns an empty array when the dataset has no Z columns.
    """
    if ds.r == 0:
        return np.zeros(0)
    _require_events(ds)
    offset = np.einsum("ip,ip->i", np.asarray(beta_at_subjects, dtype=float), ds.x)
    sys = lin_ying_system(ds, ds.z, offset=offset)
    return _solve_spd(sys["V"][0], sys["b"][0], sys["scale"][0])


class CumulativeHazard:
    """Baseline cumulative hazard with jumps at event times and linear drift.

    On ``(u[j-1], u[j]]`` the function decreases at rate ``slopes[j]``; it
    jumps by ``jumps[j]`` at ``u[j]``.
    """

    def __init__(self, times, jumps, slopes):
        self.times = np.asarray(times, dtype=float)
        self.jumps = np.asarray(jumps, dtype=float)
        self.slopes = np.asarray(slopes, dtype=float)
        lengths = np.diff(self.times, prepend=0.0)
        self._at = np.cumsum(self.jumps - self.slopes * lengths)   # value at u[j]
        self._before = np.concatenate([[0.0], self._at[:-1]])     # value at u[j-1]

    @property
    def horizon(self):
        return float(self.times[-1])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("t must be >= 0")
        if np.any(t > self.horizon):
            raise EmptyRiskSet(float(np.max(t)))
        j = np.searchsorted(self.times, t, side="left")
        j = np.minimum(j, self.times.size - 1)
        start = np.where(j > 0, self.times[j - 1], 0.0)
        val = self._before[j] - self.slopes[j] * (t - start)
        val = np.where(t == self.times[j], self._at[j], val)
        return np.where(t == 0, 0.0, val)

    def values_at_times(self):
        return self._at.copy()

    def integrate(self, upper):
        """``int_0^upper Lambda(s) ds`` computed piecewise in closed form."""
        if upper < 0:
            raise ValueError("upper must be >= 0")
        if upper > self.horizon:
            raise EmptyRiskSet(upper)
        total = 0.0
        prev = 0.0
        for j, u in enumerate(self.times):
            if prev >= upper:
                break
            hi = min(u, upper)
            dt = hi - prev
            total += self._before[j] * dt - 0.5 * self.slopes[j] * dt * dt
            prev = u
        return total

    def to_dict(self):
        return {"times": self.times.tolist(), "values": self._at.tolist()}


def estimate_cumhaz(ds, beta_at_subjects=None, alpha=None) -> CumulativeHazard:
    """Cumulative baseline hazard given fitted covariate effects.

    With zero coefficients this is the Nelson-Aalen estimator.
    """
    tl = ds.timeline
    lp = np.zeros(ds.n)
    if beta_at_subjects is not None:
        lp = lp + np.einsum("ip,ip->i", np.asarray(beta_at_subjects, dtype=float), ds.x)
    if alpha is not None and ds.r:
        lp = lp + ds.z @ np.asarray(alpha, dtype=float)
    Y = tl.risk_sum(np.ones(ds.n))
    dN = np.bincount(tl.index, weights=ds.eff_status, minlength=tl.size)
    jumps = ratio(dN, Y)
    slopes = ratio(tl.risk_sum(lp), Y)
    return CumulativeHazard(tl.times, jumps, slopes)


def sparse_grid_proxy(grid: EstimationGrid, bw: Bandwidth):
    """Smallest relative kernel height halfway between adjacent grid nodes."""
    h = bw.as_array()
    vals = [np.exp(-0.5 * (np.diff(a).max() / 2 / h[j]) ** 2)
            for j, a in enumerate(grid.axes) if a.size > 1]
    return min(vals, default=1.0)


@dataclass
class VaryingCoefficientFit:
    """Global kernel fit: coefficients on the grid plus constant effects.

    ``alpha`` is the refit estimate; the jointly solved one is kept as
    ``alpha_joint`` for diagnostics.
    """

    beta_grid: np.ndarray
    alpha_joint: np.ndarray
    alpha_refit: np.ndarray
    cumhaz: CumulativeHazard
    grid: EstimationGrid
    bandwidth: Bandwidth
    system_condition: float

    @property
    def alpha(self):
        return self.alpha_refit

    def beta_at(self, w, mode="linear"):
        return self.grid.interpolation_weights(w, mode=mode) @ self.beta_grid


def fit_global(ds, grid: EstimationGrid | None = None, bandwidth: Bandwidth | None = None,
               grid_kind="quantile", grid_size=5, ridge=0.0) -> VaryingCoefficientFit:
    """Fit the partially linear varying-coefficient model with the global estimator."""
    _require_events(ds)
    bw = bandwidth or silverman_bandwidth(ds)
    grid = grid or build_grid(ds, grid_kind, grid_size)
    if grid.q != ds.q or bw.q != ds.q:
        raise InputError("grid/bandwidth dimension does not match W")
    proxy = sparse_grid_proxy(grid, bw)
    if proxy < 1e-3:
        warnings.warn(f"kernel mass between adjacent grid points is {proxy:.2g} (<1e-3); "
                      "the grid is coarse relative to the bandwidth",
                      SparseGridWarning, stacklevel=2)
    sol = solve_global(assemble_global_system(ds, grid, bw), ridge=ridge)
    beta_i = grid.interpolation_weights(ds.w) @ sol.beta_grid
    alpha = refit_alpha(ds, beta_i)
    cumhaz = estimate_cumhaz(ds, beta_i, alpha)
    return VaryingCoefficientFit(sol.beta_grid, sol.alpha_joint, alpha, cumhaz, grid, bw,
                                 sol.condition)


@dataclass
class LocalKernelFit:
    """Local kernel fit: pointwise coefficients on a dense grid, averaged alpha."""

    grid: EstimationGrid
    beta_grid: np.ndarray
    alpha: np.ndarray
    bandwidth: Bandwidth
    alpha_points: np.ndarray | None = None

    def beta_at(self, w, mode="linear"):
        return self.grid.interpolation_weights(w, mode=mode) @ self.beta_grid


def fit_local(ds, bandwidth: Bandwidth | None = None, eval_grid: EstimationGrid | None = None,
              eval_size=101, alpha_weighting="inverse-variance") -> LocalKernelFit:
    """Local kernel fit with constant effects averaged across subjects.

    Constant effects are first allowed to vary: a joint local fit is made at
    each ``W_i`` and the pointwise ``alpha(W_i)`` are averaged. Coefficient
    functions are tabulated on ``eval_grid`` (default: ``eval_size`` even
    points per axis) and linearly interpolated in between.
    """
    bw = bandwidth or silverman_bandwidth(ds)
    eval_grid = eval_grid or build_grid(ds, "even", eval_size)
    on_grid = local_kernel_fit_many(ds, eval_grid.points, bw)
    if on_grid.singular.any():
        bad = eval_grid.points[on_grid.singular][0]
        raise SingularDenominator(f"local denominator is singular at w={bad}")
    alpha = np.zeros(0)
    alpha_pts = None
    if ds.r:
        at_subjects = local_kernel_fit_many(ds, ds.w, bw)
        ok = ~at_subjects.singular
        if not ok.any():
            raise SingularDenominator("local fits are singular at every subject")
        p = ds.p
        var = at_subjects.cov[ok][:, p:, p:] if alpha_weighting == "inverse-variance" else None
        alpha_pts = at_subjects.alpha[ok]
        alpha = local_alpha_aggregate(alpha_pts, variances=var)
    return LocalKernelFit(eval_grid, on_grid.beta, alpha, bw, alpha_pts)


@dataclass
class ConstantFit:
    """Constant-coefficient additive hazards fit on ``(X, Z)``."""

    beta: np.ndarray
    alpha: np.ndarray
    cov: np.ndarray

    def beta_at(self, w, mode="linear"):
        n = np.atleast_2d(np.asarray(w, dtype=float)).shape[0] if np.ndim(w) > 1 else np.size(w)
        return np.tile(self.beta, (n, 1))


def fit_constant(ds) -> ConstantFit:
    est = lin_ying(ds, "xz")
    cov = lin_ying_covariance(ds, "xz")
    return ConstantFit(est[:ds.p], est[ds.p:], cov)
