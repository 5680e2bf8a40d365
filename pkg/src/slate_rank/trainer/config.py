"""Training configuration and per-epoch history records."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ConfigError


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings for one training run.

    task_weights holds the per-task loss weights; sim_weight is the
    coefficient pulling l_u toward l_s.  distill_alpha and
    distill_temperature only matter for teacher/student training.
    """

    task_weights: dict = field(default_factory=lambda: {"click": 1.0})
    sim_weight: float = 0.0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 20
    batch_size: int = 256
    seed: int = 0
    huber_delta: float = 1.0
    patience: int = 3
    distill_alpha: float = 0.5
    distill_temperature: float = 1.0
    eval_batch_size: int = 4096

    def __post_init__(self):
        if not self.task_weights:
            raise ConfigError("task_weights is empty")
        if any(w < 0 for w in self.task_weights.values()):
            raise ConfigError(f"negative task weight in {self.task_weights}")
        if sum(self.task_weights.values()) <= 0:
            raise ConfigError("task weights sum to zero")
        if self.sim_weight < 0:
            raise ConfigError(f"sim_weight must be >= 0, got {self.sim_weight}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.huber_delta <= 0:
            raise ConfigError(f"huber_delta must be positive, got {self.huber_delta}")
        if self.patience < 0:
            raise ConfigError(f"patience must be >= 0, got {self.patience}")


@dataclass
class HistoryRow:
    epoch: int
    task_loss: dict          # task -> mean train loss over the epoch
    sim_loss: float          # unweighted alignment loss, 0 when absent
    total_loss: float
    val_auc: dict            # binary task -> AUC
    val_mae: dict            # regression task -> MAE
    align_l2: float = None   # mean validation |l_u - l_s|, slate models only


@dataclass
class TrainHistory:
    rows: list = field(default_factory=list)
    best_epoch: int = -1

    def columns(self) -> list[str]:
        cols = ["epoch"]
        if self.rows:
            first = self.rows[0]
            cols += [f"loss_{t}" for t in sorted(first.task_loss)]
            cols += ["loss_sim", "loss_total"]
            cols += [f"val_auc_{t}" for t in sorted(first.val_auc)]
            cols += [f"val_mae_{t}" for t in sorted(first.val_mae)]
            cols += ["align_l2"]
        return cols

    def to_csv(self) -> str:
        lines = [",".join(self.columns())]
        for r in self.rows:
            vals = [str(r.epoch)]
            vals += [repr(r.task_loss[t]) for t in sorted(r.task_loss)]
            vals += [repr(r.sim_loss), repr(r.total_loss)]
            vals += [repr(r.val_auc[t]) for t in sorted(r.val_auc)]
            vals += [repr(r.val_mae[t]) for t in sorted(r.val_mae)]
            vals += ["" if r.align_l2 is None else repr(r.align_l2)]
            lines.append(",".join(vals))
        return "\n".join(lines) + "\n"
