import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from addhaz.dataset import SurvivalDataset  # noqa: E402


def random_dataset(rng, n=100, p=2, r=1, q=1, lattice=None, w_values=None, censor=0.3):
    """Additive-hazards data with positive hazards and random censoring.

    ``lattice`` rounds observed times up to multiples of that step;
    ``w_values`` draws W from a finite set instead of U(0, 1).
    """
    if w_values is None:
        w = rng.uniform(size=(n, q))
    else:
        vals = np.asarray(w_values, float).reshape(-1, q)
        w = vals[rng.integers(len(vals), size=n)]
    x = rng.uniform(size=(n, p))
    z = rng.uniform(size=(n, r))
    rate = 0.5 + x.sum(axis=1) * 0.3 + z.sum(axis=1) * 0.2
    t = rng.exponential(1.0 / rate)
    c = rng.exponential(np.mean(t) / censor * (1 - censor), size=n)
    time = np.minimum(t, c)
    status = (t <= c).astype(int)
    if lattice:
        time = np.ceil(time / lattice) * lattice
    return SurvivalDataset.from_arrays(time, status, w, x, z if r else None)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_subjects():
    return SurvivalDataset.from_arrays([1.0, 2.0], [1, 1], [0.5, 0.5], [0.0, 1.0])


ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


DESK_SEED = 20240501


@pytest.fixture(scope="session")
def desk_study():
    """q = 1, n = 500, m = 5, 100 replicates, B = 500 for bands and constant-effect SEs."""
    from addhaz.simgen import SimDesign, run_study
    return run_study(SimDesign(q=1), n_list=(500,), replicates=100, seed=DESK_SEED,
                     methods=("constant", "local", "global"), grid_sizes=(5,),
                     band_replicates=500, alpha_se_replicates=500)
