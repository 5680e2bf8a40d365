"""Sensitivity sweep over the alignment-loss weight."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from ..errors import ConfigError
from .config import TrainConfig
from .loop import train


@dataclass
class SweepRow:
    ratio: float        # sim weight relative to the primary task weight
    sim_weight: float
    val_auc: float
    val_mae: float      # None when the model has no regression task
    align_l2: float     # None for slate-free models
    best_epoch: int


def _primary_binary(spec):
    for name, kind in spec.tasks:
        if kind == "binary":
            return name
    raise ConfigError("sweep needs at least one binary task")


def _sweep_one(args) -> SweepRow:
    spec, cfg, data, ratio = args
    primary = _primary_binary(spec)
    sim_weight = ratio * cfg.task_weights[primary]
    params, history = train(spec, replace(cfg, sim_weight=sim_weight), data)
    best = history.rows[history.best_epoch]
    first_mae = sorted(best.val_mae) or [None]
    return SweepRow(
        ratio=float(ratio),
        sim_weight=float(sim_weight),
        val_auc=best.val_auc[primary],
        val_mae=best.val_mae[first_mae[0]] if first_mae[0] is not None else None,
        align_l2=best.align_l2,
        best_epoch=history.best_epoch,
    )


def lambda_sweep(spec, cfg: TrainConfig, data, grid, jobs: int = 1) -> list[SweepRow]:
    """Train one model per ratio in grid; the alignment weight is
    ratio times the primary task's weight.  Rows come back sorted by
    ratio regardless of execution order; jobs > 1 runs entries in
    separate processes."""
    ratios = sorted(set(float(r) for r in grid))
    if not ratios:
        raise ConfigError("sweep grid is empty")
    if any(r < 0 for r in ratios):
        raise ConfigError(f"sweep ratios must be >= 0, got {ratios}")
    work = [(spec, cfg, data, r) for r in ratios]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_one, work))
    else:
        rows = [_sweep_one(w) for w in work]
    return sorted(rows, key=lambda r: r.ratio)


def sweep_to_csv(rows) -> str:
    lines = ["ratio,sim_weight,val_auc,val_mae,align_l2,best_epoch"]
    for r in rows:
        vals = [repr(r.ratio), repr(r.sim_weight), repr(r.val_auc),
                "" if r.val_mae is None else repr(r.val_mae),
                "" if r.align_l2 is None else repr(r.align_l2),
                str(r.best_epoch)]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"
