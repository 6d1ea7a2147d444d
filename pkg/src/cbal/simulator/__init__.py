"""Active learning simulation on synthetic or ingested data."""

from .data import Dataset, DatasetSpec, init_labeled_split, make_longtail_dataset
from .learner import Learner, LearnerConfig, loss_and_grad, train_learner
from .loop import METHODS, CycleRecord, ExperimentRecord, LoopConfig, run_al_loop
from .sweep import SweepRow, lambda_sweep, select_lambda

__all__ = [
    "METHODS",
    "CycleRecord",
    "Dataset",
    "DatasetSpec",
    "ExperimentRecord",
    "Learner",
    "LearnerConfig",
    "LoopConfig",
    "SweepRow",
    "init_labeled_split",
    "lambda_sweep",
    "loss_and_grad",
    "make_longtail_dataset",
    "run_al_loop",
    "select_lambda",
    "train_learner",
]
