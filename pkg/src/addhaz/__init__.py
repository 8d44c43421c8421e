"""Varying-coefficient additive hazards models fit by global kernel smoothing."""

from .dataset import CsvSchema, SurvivalDataset, load_csv
from .estimators import estimate_cumhaz, fit_constant, fit_global, fit_local, lin_ying
from .grid import EstimationGrid, build_grid
from .inference import build_band, perturb_alpha_se
from .kernel import Bandwidth, silverman_bandwidth
from .metrics import c_index, harrell_c_index, mse
from .simgen import SimDesign, run_study, simulate_replicate

__version__ = "0.1.0"

__all__ = [
    "Bandwidth", "CsvSchema", "EstimationGrid", "SimDesign", "SurvivalDataset",
    "build_band", "build_grid", "c_index", "estimate_cumhaz", "fit_constant", "fit_global",
    "fit_local", "harrell_c_index", "lin_ying", "load_csv", "mse", "perturb_alpha_se",
    "run_study", "silverman_bandwidth", "simulate_replicate",
]
