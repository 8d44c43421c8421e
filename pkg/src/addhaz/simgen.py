"""Monte Carlo design with a quadratic baseline hazard and a study harness.

The hazard is ``t + beta(W)^T X + alpha^T Z`` with ``W``, ``X`` and ``Z``
independent uniform on ``[0, 1]`` and exponential censoring.
"""

from __future__ import annotations

import functools
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats
from threadpoolctl import threadpool_limits

from .dataset import SurvivalDataset
from .errors import AddHazError, InputError, NegativeHazardOffset, NoConvergence
from .estimators import fit_constant, fit_global, fit_local
from .grid import EstimationGrid
from .inference import build_band, perturb_alpha_se
from .metrics import c_index, linear_predictor, mse

P_VARYING = 3
R_CONSTANT = 2


def beta_true(w):
    """True coefficient functions at modifiers ``w`` of shape ``(N, q)``; returns ``(N, 3)``."""
    w = np.asarray(w, dtype=float)
    if w.ndim == 1:
        w = w[:, None]
    wb = w.mean(axis=1)
    return np.column_stack([1.0 / (1.0 + np.exp(-20.0 * (wb - 0.5))),
                            1.0 - np.sin(np.pi * wb),
                            np.full_like(wb, 0.2)])


@dataclass(frozen=True)
class ConstantBeta:
    """Coefficient functions that do not vary with ``w`` (a null design)."""

    values: tuple = (0.5, 0.5, 0.2)

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        n = w.shape[0] if w.ndim else 1
        return np.tile(np.asarray(self.values, dtype=float), (n, 1))


@dataclass(frozen=True)
class SimDesign:
    q: int = 1
    censoring_mean: float | None = None    # None: calibrate to ``target_censoring``
    alpha0: tuple = (0.2, 0.2)
    target_censoring: float = 0.30
    beta_fn: object = None                  # defaults to :func:`beta_true`

    def __post_init__(self):
        if self.q not in (1, 2):
            raise InputError("the design supports q = 1 or q = 2")
        if self.censoring_mean is not None and not self.censoring_mean > 0:
            raise InputError("censoring_mean must be positive")
        if not 0 < self.target_censoring < 1:
            raise InputError("target censoring rate must be in (0, 1)")

    def beta(self, w):
        return (self.beta_fn or beta_true)(w)

    def resolved(self) -> "SimDesign":
        """Copy with the censoring mean filled in by calibration if needed."""
        if self.censoring_mean is not None:
            return self
        return replace(self, censoring_mean=calibrate_censoring(self, self.target_censoring))


def event_time_from_exp(c, e):
    """Invert ``Lambda(t) = t^2 / 2 + c t`` at ``e``.

    Uses ``2e / (c + sqrt(c^2 + 2e))``, algebraically equal to
    ``-c + sqrt(c^2 + 2e)`` but free of cancellation for large ``c``.
    """
    c = np.asarray(c, dtype=float)
    e = np.asarray(e, dtype=float)
    if np.any(c < 0):
        raise NegativeHazardOffset("hazard offset must be nonnegative")
    root = np.sqrt(c * c + 2.0 * e)
    den = c + root
    out = np.divide(2.0 * e, den, out=np.zeros(np.broadcast(c, e).shape), where=den > 0)
    return out if out.ndim else float(out)


def draw_event_time(c, rng):
    """Event time for hazard ``t + c`` (scalar or array ``c``)."""
    e = rng.standard_exponential(np.shape(c))
    return event_time_from_exp(c, e)


def draw_covariates(q, n, rng):
    w = rng.uniform(size=(n, q))
    x = rng.uniform(size=(n, P_VARYING))
    z = rng.uniform(size=(n, R_CONSTANT))
    return w, x, z


def _offsets(design, w, x, z):
    return np.einsum("ip,ip->i", design.beta(w), x) + z @ np.asarray(design.alpha0)


def _pilot(q, alpha0, beta_fn, pilot_n, seed):
    rng = np.random.default_rng(seed)
    w, x, z = draw_covariates(q, pilot_n, rng)
    design = SimDesign(q=q, alpha0=alpha0, censoring_mean=1.0, beta_fn=beta_fn)
    t = draw_event_time(_offsets(design, w, x, z), rng)
    u = rng.standard_exponential(pilot_n)
    return t, u


def censoring_rate(t, u, mean):
    """Fraction censored when censoring times are ``mean * u``."""
    return float(np.mean(mean * u < t))


@functools.lru_cache(maxsize=None)
def _calibrate(q, alpha0, beta_fn, target, pilot_n, seed, tol, maxiter):
    t, u = _pilot(q, alpha0, beta_fn, pilot_n, seed)
    # common random numbers make the rate monotone in the mean along the bisection
    lo, hi = math.log(1e-3), math.log(1e3)
    if not censoring_rate(t, u, math.exp(lo)) > target > censoring_rate(t, u, math.exp(hi)):
        raise NoConvergence("target censoring rate not bracketed")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        rate = censoring_rate(t, u, math.exp(mid))
        if abs(rate - target) < tol:
            return math.exp(mid)
        if rate > target:
            lo = mid
        else:
            hi = mid
    raise NoConvergence(f"censoring calibration did not converge in {maxiter} steps")


def calibrate_censoring(design: SimDesign, target_rate=0.30, pilot_n=100_000, seed=2024,
                        tol=1e-3, maxiter=200) -> float:
    """Exponential censoring mean giving ``target_rate`` censoring on a pilot sample.

    Bisection on the log mean; the pilot sample is drawn once, so the result
    is deterministic for fixed ``seed``.
    """
    if not 0 < target_rate < 1:
        raise InputError("target rate must be in (0, 1)")
    return _calibrate(design.q, tuple(design.alpha0), design.beta_fn, float(target_rate),
                      int(pilot_n), int(seed), float(tol), int(maxiter))


@dataclass
class SimTruth:
    beta: object = beta_true
    alpha: np.ndarray = None
    event_time: np.ndarray = None


def simulate_replicate(design: SimDesign, n, rng=None, seed=None):
    """Draw one dataset of size ``n``; returns ``(dataset, truth)``."""
    if n < 2:
        raise InputError("n must be at least 2")
    design = design.resolved()
    rng = rng if rng is not None else np.random.default_rng(seed)
    w, x, z = draw_covariates(design.q, n, rng)
    t = draw_event_time(_offsets(design, w, x, z), rng)
    cens = design.censoring_mean * rng.standard_exponential(n)
    time = np.minimum(t, cens)
    status = (t <= cens).astype(int)
    ds = SurvivalDataset.from_arrays(time, status, w, x, z)
    return ds, SimTruth(beta=design.beta, alpha=np.asarray(design.alpha0, dtype=float),
                        event_time=t)


def draw_test_sample(design: SimDesign, size, rng):
    """Uncensored evaluation sample ``(W, X, Z, T)``."""
    w, x, z = draw_covariates(design.q, size, rng)
    return w, x, z, draw_event_time(_offsets(design, w, x, z), rng)


def table_points(q):
    if q == 1:
        return np.array([[0.2], [0.4], [0.6], [0.8]])
    a = np.array([0.25, 0.75])
    return np.array([[u, v] for u in a for v in a])


@dataclass(frozen=True)
class StudyConfig:
    methods: tuple = ("constant", "local", "global")
    grid_sizes: tuple = (5,)
    test_size: int = 10_000
    band_replicates: int = 500
    alpha_se_replicates: int = 500
    band_interval: tuple = (0.05, 0.95)
    alpha_level: float = 0.05
    local_eval_size: int = 101


def _replicate_seed(seed, n, rep):
    return np.random.SeedSequence(seed, spawn_key=(int(n), int(rep)))


def _method_labels(cfg):
    labels = []
    for m in cfg.methods:
        if m == "global":
            labels += [f"global_m{k}" for k in cfg.grid_sizes]
        else:
            labels.append(m)
    return labels


def _run_one(design, cfg, n, rep, seed):
    """All methods on one replicate; returns ``{label: record or None}``."""
    ss = _replicate_seed(seed, n, rep)
    data_ss, test_ss, band_ss = ss.spawn(3)
    ds, truth = simulate_replicate(design, n, rng=np.random.default_rng(data_ss))
    tw, tx, tz, tt = draw_test_sample(design, cfg.test_size, np.random.default_rng(test_ss))
    pts = table_points(design.q)
    inner_seed = int(band_ss.generate_state(1)[0])
    z_crit = stats.norm.ppf(1.0 - cfg.alpha_level / 2.0)
    out = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for method in cfg.methods:
            sizes = cfg.grid_sizes if method == "global" else (None,)
            for m in sizes:
                label = f"global_m{m}" if method == "global" else method
                try:
                    rec = {}
                    if method == "constant":
                        fit = fit_constant(ds)
                        rec["alpha_se"] = np.sqrt(np.diag(fit.cov)[ds.p:])
                    elif method == "local":
                        fit = fit_local(ds, eval_size=cfg.local_eval_size)
                    else:
                        grid = EstimationGrid(tuple(np.linspace(0.0, 1.0, m)
                                                    for _ in range(design.q)), kind="even")
                        fit = fit_global(ds, grid=grid)
                        rec["alpha_se"] = perturb_alpha_se(ds, fit.grid, fit.bandwidth,
                                                           cfg.alpha_se_replicates, inner_seed)
                        if design.q == 1 and cfg.band_replicates:
                            band = build_band(ds, fit, interval=cfg.band_interval,
                                              alpha_level=cfg.alpha_level,
                                              replicates=cfg.band_replicates, seed=inner_seed)
                            rec["band_cover"] = band.covers(design.beta(band.eval_points))
                    rec["mse"] = mse(fit, tw, tx, tz, design.beta, truth.alpha)
                    rec["cindex"] = c_index(linear_predictor(fit, tw, tx, tz), tt)
                    rec["alpha"] = np.asarray(fit.alpha, dtype=float)
                    rec["beta_pts"] = fit.beta_at(pts)
                    if "alpha_se" in rec:
                        rec["alpha_cover"] = np.abs(rec["alpha"] - truth.alpha) <= z_crit * rec["alpha_se"]
                    out[label] = rec
                except AddHazError:
                    out[label] = None
    return out


def _task(args):
    design, cfg, n, rep, seed = args
    with threadpool_limits(limits=1):
        return n, rep, _run_one(design, cfg, n, rep, seed)


@dataclass
class StudyReport:
    design: SimDesign
    config: StudyConfig
    rows: list           # flat records: n, method, statistic, parameter, w, value
    seed: int
    replicates: int

    def value(self, n, method, statistic, parameter="", w=""):
        for r in self.rows:
            if (r["n"], r["method"], r["statistic"], r["parameter"], r["w"]) == \
                    (n, method, statistic, parameter, w):
                return r["value"]
        raise KeyError((n, method, statistic, parameter, w))

    def to_dict(self):
        return {"design": {"q": self.design.q, "censoring_mean": self.design.censoring_mean,
                           "alpha0": list(self.design.alpha0)},
                "seed": self.seed, "replicates": self.replicates,
                "methods": list(self.config.methods), "grid_sizes": list(self.config.grid_sizes),
                "rows": self.rows}


def _fmt_w(w):
    return "(" + ",".join(f"{v:g}" for v in w) + ")" if len(w) > 1 else f"{w[0]:g}"


def _summarize(design, cfg, n, label, recs, rows):
    ok = [r for r in recs if r is not None]

    def add(stat, value, parameter="", w=""):
        rows.append({"n": n, "method": label, "statistic": stat, "parameter": parameter,
                     "w": w, "value": float(value)})

    add("failed", len(recs) - len(ok))
    add("replicates_ok", len(ok))
    if not ok:
        return
    # math.fsum keeps totals independent of accumulation order
    mean = lambda vals: math.fsum(vals) / len(vals)
    add("mse", mean([r["mse"] for r in ok]))
    add("cindex", mean([r["cindex"] for r in ok]))
    alpha = np.array([r["alpha"] for r in ok])
    for k, a0 in enumerate(design.alpha0):
        if alpha.shape[1] <= k:
            break
        name = f"alpha{k + 1}"
        est = alpha[:, k]
        add("bias", mean(list(est)) - a0, name)
        add("sd", np.std(est, ddof=1) if len(ok) > 1 else 0.0, name)
        if "alpha_se" in ok[0]:
            add("se", mean([r["alpha_se"][k] for r in ok]), name)
            add("coverage", mean([float(r["alpha_cover"][k]) for r in ok]), name)
    pts = table_points(design.q)
    truth = design.beta(pts)
    bp = np.array([r["beta_pts"] for r in ok])          # (R, E, p)
    for e, w in enumerate(pts):
        for j in range(bp.shape[2]):
            est = bp[:, e, j]
            add("bias", mean(list(est)) - truth[e, j], f"beta{j + 1}", _fmt_w(w))
            add("sd", np.std(est, ddof=1) if len(ok) > 1 else 0.0, f"beta{j + 1}", _fmt_w(w))
    if "band_cover" in ok[0]:
        cov = np.array([r["band_cover"] for r in ok], dtype=float)
        for j in range(cov.shape[1]):
            add("band_coverage", mean(list(cov[:, j])), f"beta{j + 1}")


def run_study(design: SimDesign, n_list=(500,), replicates=100, seed=0,
              config: StudyConfig | None = None, threads=1, **overrides) -> StudyReport:
    """Run the Monte Carlo comparison of constant, local and global fits.

    Each ``(n, replicate)`` pair draws from its own seed stream, so results do
    not depend on ``threads``. Failed fits are counted per method.
    """
    if replicates < 1:
        raise InputError("replicates must be at least 1")
    cfg = replace(config or StudyConfig(), **overrides)
    unknown = set(cfg.methods) - {"constant", "local", "global"}
    if unknown:
        raise InputError(f"unknown methods {sorted(unknown)}")
    design = design.resolved()
    tasks = [(design, cfg, int(n), rep, int(seed)) for n in n_list for rep in range(replicates)]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
    else:
        results = [_task(t) for t in tasks]
    results.sort(key=lambda r: (r[0], r[1]))
    rows = []
    for n in n_list:
        per_n = [res for nn, _, res in results if nn == int(n)]
        for label in _method_labels(cfg):
            _summarize(design, cfg, int(n), label, [res[label] for res in per_n], rows)
    return StudyReport(design, cfg, rows, int(seed), int(replicates))
