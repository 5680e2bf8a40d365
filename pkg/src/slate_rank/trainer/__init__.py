from .config import HistoryRow, TrainConfig, TrainHistory
from .loop import PfdResult, joint_loss, train, train_pfd
from .sweep import SweepRow, lambda_sweep, sweep_to_csv

__all__ = [
    "HistoryRow", "PfdResult", "SweepRow", "TrainConfig", "TrainHistory",
    "joint_loss", "lambda_sweep", "sweep_to_csv", "train", "train_pfd",
]
