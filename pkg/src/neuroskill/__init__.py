"""Surgical skill classification from simulator kinematics and forces."""

__version__ = "0.1.0"

from neuroskill._kernels import BACKEND
from neuroskill.classifiers import KNN, SVM, FuzzyKNN, Parzen, make_classifier
from neuroskill.evaluation import ExperimentConfig, compute_eer, confusion_ranges, run_grid, stratified_split
from neuroskill.features import (
    CATALOG,
    FeatureMatrix,
    FeatureVector,
    extract_features,
    force_consistency_metrics,
    iav,
    normalize,
    normalized_jerk,
)
from neuroskill.selection import forward_select, premier_subsets, select, ttest_filter
from neuroskill.signals import Channel, Dataset, Trial, differentiate, speed, validate_trial

__all__ = [
    "BACKEND",
    "CATALOG",
    "Channel",
    "Dataset",
    "ExperimentConfig",
    "FeatureMatrix",
    "FeatureVector",
    "FuzzyKNN",
    "KNN",
    "Parzen",
    "SVM",
    "Trial",
    "compute_eer",
    "confusion_ranges",
    "differentiate",
    "extract_features",
    "force_consistency_metrics",
    "forward_select",
    "iav",
    "make_classifier",
    "normalize",
    "normalized_jerk",
    "premier_subsets",
    "run_grid",
    "select",
    "speed",
    "stratified_split",
    "ttest_filter",
    "validate_trial",
]
