"""MuyGPs heartbeat classification with prediction-interval uncertainty."""

from .data import EcgDataset, SmoteConfig, load_csv, smote_oversample, stratified_split, truncate
from .kernel import KernelParams, matern
from .muygps import MuyGpsClassifier, MuyGpsModel, TrainConfig, optimize
from .nn_index import NnIndex
from .uq import DEFAULT_GRID, TauGrid

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_GRID", "EcgDataset", "KernelParams", "MuyGpsClassifier", "MuyGpsModel",
    "NnIndex", "SmoteConfig", "TauGrid", "TrainConfig", "load_csv", "matern", "optimize",
    "smote_oversample", "stratified_split", "truncate",
]
