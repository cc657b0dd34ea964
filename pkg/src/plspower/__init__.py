"""Sample-size and power analysis for two-class PLS classification studies."""

__version__ = "0.1.0"

from .dataio import PilotSpec, gen_pilot, load_csv, save_csv
from .errors import InvalidInput, PlsPowerError
from .permtest import adjust_bonferroni, compute_statistic, permutation_pvalue, permutation_test
from .pls import fit_pls2, predict
from .plsc import fit_plsc, mcc, predict_class
from .posttransform import post_transform
from .power import (
    PowerConfig,
    estimate_power,
    estimate_power_all,
    estimate_sample_size,
    power_curve,
)
from .preprocess import Dataset, autoscale, center, preprocess
from .simulate import augment_with_residual_pca, procrustes_index, rv_coefficient, simulate_dataset

__all__ = [
    "Dataset", "InvalidInput", "PilotSpec", "PlsPowerError", "PowerConfig",
    "adjust_bonferroni", "augment_with_residual_pca", "autoscale", "center",
    "compute_statistic", "estimate_power", "estimate_power_all", "estimate_sample_size",
    "fit_pls2", "fit_plsc", "gen_pilot", "load_csv", "mcc", "permutation_pvalue",
    "permutation_test", "post_transform", "power_curve", "predict", "predict_class",
    "preprocess", "procrustes_index", "rv_coefficient", "save_csv", "simulate_dataset",
]
