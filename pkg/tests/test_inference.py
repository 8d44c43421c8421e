import numpy as np
import pytest

from addhaz.dataset import SurvivalDataset
from addhaz.errors import NoEventsWarning, TooFewReplicates, UnsupportedDimension
from addhaz.estimators import fit_global
from addhaz.grid import EstimationGrid
from addhaz.inference import (
    AlphaPerturbation,
    build_band,
    critical_index,
    draw,
    linear_form,
    multiplier_draws,
    perturb_alpha_se,
    perturb_beta,
    sandwich_variance,
)
from addhaz.kernel import Bandwidth, kernel_matrix
from addhaz.simgen import ConstantBeta, SimDesign, simulate_replicate
from conftest import random_dataset
from oracles import naive_perturbation

GRID = EstimationGrid((np.linspace(0.0, 1.0, 5),))
BW = Bandwidth((0.25,))


@pytest.mark.parametrize("r", [0, 1])
def test_perturbation_matches_oracle(r, rng):
    ds = random_dataset(rng, n=60, p=2, r=r)
    psi = rng.standard_normal(ds.n)
    for w in (0.3, 0.71):
        got = perturb_beta(ds, GRID, BW, w, psi)
        want, D = naive_perturbation(ds.time, ds.status, ds.w, ds.x, ds.z if r else None,
                                     GRID.points, [w], BW.h, psi)
        assert np.allclose(got, want, atol=1e-10)
        assert np.allclose(linear_form(ds, GRID, BW, [[w]]).D[0], D, atol=1e-12)


def test_zero_and_scaled_multipliers(rng):
    ds = random_dataset(rng, n=60, p=2, r=1)
    psi = draw(ds.n, seed=3).psi
    assert np.all(perturb_beta(ds, GRID, BW, 0.5, np.zeros(ds.n)) == 0)
    a = perturb_beta(ds, GRID, BW, 0.5, psi)
    assert np.allclose(perturb_beta(ds, GRID, BW, 0.5, 2 * psi), 2 * a, rtol=1e-12, atol=0)
    op = AlphaPerturbation(ds, GRID, BW)
    assert np.all(op(np.zeros((3, ds.n))) == 0)


def test_draws_are_reproducible_by_index():
    full = multiplier_draws(10, 50, seed=9)
    part = multiplier_draws(10, 20, seed=9, start=30)
    assert np.array_equal(full[30:], part)
    assert np.array_equal(draw(10, 9, 7).psi, full[7])


@pytest.mark.parametrize("seed", range(10))
def test_sandwich_symmetric_psd(seed):
    ds = random_dataset(np.random.default_rng(seed), n=80, p=2, r=1)
    S = sandwich_variance(ds, GRID, BW, 0.4)
    assert np.max(np.abs(S - S.T)) <= 1e-12 * np.max(np.abs(S))
    assert np.linalg.eigvalsh(S).min() >= -1e-10
    assert np.all(np.diag(S) >= 0)


def test_sandwich_invariant_to_kernel_scale(rng):
    ds = random_dataset(rng, n=80, p=2, r=1)
    Ke = kernel_matrix(ds.w, [[0.4]], BW)
    Kg = kernel_matrix(ds.w, GRID.points, BW)
    S1 = sandwich_variance(ds, GRID, BW, 0.4, kernel_eval=Ke, kernel_grid=Kg)
    S2 = sandwich_variance(ds, GRID, BW, 0.4, kernel_eval=2 * Ke, kernel_grid=2 * Kg)
    assert np.max(np.abs(S1 - S2)) < 1e-10 * np.max(np.abs(S1))


def test_sandwich_no_events_warns():
    rng = np.random.default_rng(5)
    ds = SurvivalDataset.from_arrays(rng.uniform(1, 2, 30), np.zeros(30), rng.uniform(size=30),
                                     rng.uniform(size=(30, 2)))
    with pytest.warns(NoEventsWarning):
        S = sandwich_variance(ds, GRID, BW, 0.5)
    assert np.all(S == 0)


def test_perturbation_mean_zero(rng):
    ds = random_dataset(rng, n=60, p=2, r=1)
    lf = linear_form(ds, GRID, BW, [[0.5]])
    draws = lf.perturb(multiplier_draws(ds.n, 10_000, seed=1))[:, 0, :]
    se = draws.std(axis=0, ddof=1) / np.sqrt(len(draws))
    assert np.all(np.abs(draws.mean(axis=0)) < 3 * se)
    # the sandwich is the exact covariance of the perturbation given the data
    assert np.allclose(np.cov(draws.T), lf.sandwich()[0], rtol=0.05)


def test_critical_index():
    assert critical_index(1000, 0.05) == 950
    assert critical_index(100, 0.05) == 95


@pytest.fixture(scope="module")
def sim_fit():
    ds, _ = simulate_replicate(SimDesign(), 300, seed=11)
    return ds, fit_global(ds, grid=GRID)


def test_band_dominates_pointwise(sim_fit):
    ds, fit = sim_fit
    band = build_band(ds, fit, replicates=400, seed=2)
    assert np.all(band.critical[None, :] >= band.pointwise_critical)
    assert np.all(band.half_width >= 0)
    assert np.all(band.lower_band <= band.beta_hat) and np.all(band.beta_hat <= band.upper_band)
    assert np.all(band.se > 0)
    lo, hi = np.quantile(ds.w[:, 0], [0.05, 0.95])
    assert band.eval_points[0, 0] == pytest.approx(lo) and band.eval_points[-1, 0] == pytest.approx(hi)


def test_band_thread_independent(sim_fit):
    ds, fit = sim_fit
    a = build_band(ds, fit, replicates=200, seed=5, threads=1)
    b = build_band(ds, fit, replicates=200, seed=5, threads=4)
    assert np.array_equal(a.sup_stats, b.sup_stats) and np.array_equal(a.critical, b.critical)


def test_band_argument_checks(sim_fit):
    ds, fit = sim_fit
    with pytest.raises(TooFewReplicates):
        build_band(ds, fit, replicates=50)
    ds2, _ = simulate_replicate(SimDesign(q=2), 100, seed=1)
    with pytest.raises(UnsupportedDimension):
        build_band(ds2, None, replicates=100)


def test_alpha_se_stable_across_seeds(sim_fit):
    ds, fit = sim_fit
    a = perturb_alpha_se(ds, fit.grid, fit.bandwidth, 2000, seed=1)
    b = perturb_alpha_se(ds, fit.grid, fit.bandwidth, 2000, seed=2)
    assert np.all(np.abs(a - b) / a < 0.10)
    assert np.all(a > 0)


def test_null_band_coverage():
    # constant coefficients, default bandwidth: each component's band covers the truth
    design = SimDesign(beta_fn=ConstantBeta((0.5, 0.5, 0.2)))
    grid = EstimationGrid((np.linspace(0.0, 1.0, 5),))
    covered = np.zeros(3)
    for s in range(100):
        ds, truth = simulate_replicate(design, 500, seed=1000 + s)
        fit = fit_global(ds, grid=grid)
        band = build_band(ds, fit, interval=(0.05, 0.95), replicates=200, seed=s)
        covered += band.covers(truth.beta(band.eval_points))
    assert np.all(covered >= 93), covered
