"""Layerwise training of two-layer ReLU networks on low-index polynomial targets.

One weight-decayed gradient step on the hidden layer followed by ridge
regression on the head, together with random-feature and NTK baselines,
feature diagnostics, head-retraining transfer and CSQ lower-bound tools.
"""

__version__ = "0.1.0"

from .baselines import RiskReport, evaluate, ntk_linearized_fit, random_features_fit
from .data import Dataset, PreprocessStats, preprocess, sample_dataset
from .hermite import HermiteSeries, he_eval, relu_hermite_coeff
from .network import NetworkParams, Predictor, forward, init_symmetric, load_predictor, save_predictor
from .targets import TargetFunction, expected_hessian, experiment_target, hermite_target, make_target
from .trainer import TrainConfig, first_layer_step, retrain_head_transfer, run_algorithm1

__all__ = [
    "Dataset", "HermiteSeries", "NetworkParams", "Predictor", "PreprocessStats", "RiskReport", "TargetFunction",
    "TrainConfig", "evaluate", "expected_hessian", "experiment_target", "first_layer_step", "forward", "he_eval",
    "hermite_target", "init_symmetric", "load_predictor", "make_target", "ntk_linearized_fit", "preprocess",
    "random_features_fit", "relu_hermite_coeff", "retrain_head_transfer", "run_algorithm1", "sample_dataset",
    "save_predictor",
]
