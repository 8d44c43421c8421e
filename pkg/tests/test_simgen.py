import numpy as np
import pytest
from scipy import stats

from addhaz.errors import InputError, NegativeHazardOffset
from addhaz.simgen import (
    ConstantBeta,
    SimDesign,
    StudyConfig,
    beta_true,
    calibrate_censoring,
    censoring_rate,
    draw_event_time,
    event_time_from_exp,
    run_study,
    simulate_replicate,
)


def test_inversion_examples():
    assert event_time_from_exp(0.0, 2.0) == pytest.approx(2.0)
    assert event_time_from_exp(1.0, 1.5) == pytest.approx(1.0)
    assert event_time_from_exp(0.0, 0.0) == 0.0
    with pytest.raises(NegativeHazardOffset):
        event_time_from_exp(-0.1, 1.0)


def test_inverse_identity():
    rng = np.random.default_rng(0)
    c = rng.uniform(0, 50, 100_000)
    e = rng.standard_exponential(100_000)
    t = event_time_from_exp(c, e)
    assert np.max(np.abs(t * t / 2 + c * t - e) / np.maximum(e, 1.0)) < 1e-12


def test_zero_offset_distribution():
    t = draw_event_time(np.zeros(10_000), np.random.default_rng(1))
    res = stats.kstest(t, lambda s: 1 - np.exp(-s * s / 2))
    assert res.pvalue > 0.01


def test_beta_functions():
    b = beta_true(np.array([[0.5], [0.0], [1.0]]))
    assert b[0] == pytest.approx([0.5, 0.0, 0.2])
    assert b[1, 1] == pytest.approx(1.0) and b[2, 1] == pytest.approx(1.0, abs=1e-12)
    # q = 2 uses the mean of the components
    assert np.allclose(beta_true(np.array([[0.2, 0.8]])), beta_true(np.array([[0.5]])))


def test_censoring_rate_limits():
    t = np.random.default_rng(2).exponential(size=1000)
    u = np.random.default_rng(3).exponential(size=1000)
    assert censoring_rate(t, u, 1e9) == 0.0
    assert censoring_rate(t, u, 1e-9) == 1.0


@pytest.mark.parametrize("q", [1, 2])
def test_calibrated_rate_on_fresh_sample(q):
    design = SimDesign(q=q)
    mean = calibrate_censoring(design)
    assert mean > 0 and calibrate_censoring(design) == mean
    ds, _ = simulate_replicate(SimDesign(q=q, censoring_mean=mean), 100_000, seed=99)
    rate = 1 - ds.status.mean()
    assert 0.295 <= rate <= 0.305


def test_replicate_properties():
    design = SimDesign()
    a, truth = simulate_replicate(design, 300, seed=5)
    b, _ = simulate_replicate(design, 300, seed=5)
    for f in ("time", "status", "w", "x", "z"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    for arr in (a.w, a.x, a.z):
        assert arr.min() >= 0 and arr.max() <= 1
    assert np.array_equal(truth.alpha, [0.2, 0.2])
    assert np.all(a.time <= truth.event_time)


def test_design_validation():
    with pytest.raises(InputError):
        SimDesign(q=3)
    with pytest.raises(InputError):
        SimDesign(censoring_mean=-1.0)
    with pytest.raises(InputError):
        run_study(SimDesign(), replicates=0)


SMALL = dict(test_size=500, band_replicates=100, alpha_se_replicates=50, local_eval_size=21)


def test_study_deterministic_across_workers():
    a = run_study(SimDesign(), (120,), replicates=3, seed=4, threads=1, **SMALL)
    b = run_study(SimDesign(), (120,), replicates=3, seed=4, threads=2, **SMALL)
    assert a.rows == b.rows
    assert a.value(120, "global_m5", "failed") == 0


def test_study_q2_layout():
    rep = run_study(SimDesign(q=2), (150,), replicates=2, seed=1, methods=("global",),
                    grid_sizes=(3,), **SMALL)
    ws = {r["w"] for r in rep.rows if r["parameter"] == "beta1"}
    assert ws == {"(0.25,0.25)", "(0.25,0.75)", "(0.75,0.25)", "(0.75,0.75)"}
    assert not any(r["statistic"] == "band_coverage" for r in rep.rows)


def test_constant_truth_constant_fit_unbiased():
    design = SimDesign(beta_fn=ConstantBeta((0.5, 0.5, 0.2)))
    reps = 40
    rep = run_study(design, (300,), replicates=reps, seed=8, methods=("constant",),
                    config=StudyConfig(**SMALL))
    for par in ("alpha1", "alpha2"):
        bias = rep.value(300, "constant", "bias", par)
        sd = rep.value(300, "constant", "sd", par)
        assert abs(bias) < 2 * sd / np.sqrt(reps)
    for j in (1, 2, 3):
        bias = rep.value(300, "constant", "bias", f"beta{j}", "0.4")
        sd = rep.value(300, "constant", "sd", f"beta{j}", "0.4")
        assert abs(bias) < 2 * sd / np.sqrt(reps)


def test_failures_are_counted(monkeypatch):
    import addhaz.simgen as sg
    from addhaz.errors import SingularSystem

    def boom(*a, **k):
        raise SingularSystem("forced")

    monkeypatch.setattr(sg, "fit_global", boom)
    rep = run_study(SimDesign(), (100,), replicates=2, seed=0, methods=("global", "constant"),
                    **SMALL)
    assert rep.value(100, "global_m5", "failed") == 2
    assert rep.value(100, "constant", "failed") == 0
