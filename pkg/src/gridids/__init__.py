"""Two-layer random-forest intrusion detection for power-grid PMU data."""

from .config import ExperimentConfig, load_config
from .dataset import Dataset, LabelTaxonomy, RawDataset, load_csv
from .forest import Forest, ForestParams, train_forest
from .hierarchy import HierarchicalModel, train_hierarchical
from .pipeline import run_experiment, sweep

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "ExperimentConfig",
    "Forest",
    "ForestParams",
    "HierarchicalModel",
    "LabelTaxonomy",
    "RawDataset",
    "load_config",
    "load_csv",
    "run_experiment",
    "sweep",
    "train_forest",
    "train_hierarchical",
]
