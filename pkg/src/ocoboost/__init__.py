"""Multiclass boosting by reduction to online convex optimization."""

from .boost import (
    BatchBooster,
    FinalHypothesis,
    OnlineBooster,
    OnlineTrace,
    batch_fit_agnostic,
    batch_fit_realizable,
    booster_regret_audit,
    improper_game_play,
)
from .core import LabelVector, multiclass_correlation, one_hot, sigma_gain, zero_one_gain
from .errors import BoostError
from .harness import (
    Dataset,
    ExperimentConfig,
    RunReport,
    balance_scale,
    emit_report,
    gamma_sweep,
    load_csv,
    run_experiment,
    synth_stream,
)
from .oco import IntervalDomain, OGDPool, OnlineGradientDescent, SimplexDomain, measure_regret
from .simplex import project_simplex, sample_label
from .weak import (
    RewaLearner,
    StumpLearner,
    audit_condition,
    enumerate_stumps,
    enumerate_weight_matrices,
)

__version__ = "0.1.0"

__all__ = [
    "BatchBooster", "BoostError", "Dataset", "ExperimentConfig", "FinalHypothesis",
    "IntervalDomain", "LabelVector", "OGDPool", "OnlineBooster", "OnlineGradientDescent",
    "OnlineTrace", "RewaLearner", "RunReport", "SimplexDomain", "StumpLearner",
    "audit_condition", "balance_scale", "batch_fit_agnostic", "batch_fit_realizable",
    "booster_regret_audit", "emit_report", "enumerate_stumps", "enumerate_weight_matrices",
    "gamma_sweep", "improper_game_play", "load_csv", "measure_regret",
    "multiclass_correlation", "one_hot", "project_simplex", "run_experiment",
    "sample_label", "sigma_gain", "synth_stream", "zero_one_gain",
]
