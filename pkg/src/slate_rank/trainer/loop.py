"""Training loops: joint slate-aware training and two-phase teacher/student.

One shared loop drives all modes.  Every run is a pure function of
(model spec, config, data): parameter init, batch order and updates all
derive from the config seed, so reruns reproduce histories bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..data.batching import batch_iter
from ..data.encode import EncodedDataset, EncodedSplits
from ..diffcore import AdamState, Tape, Tensor, adam_step, backward
from ..errors import ConfigError, DataError, TrainingError, UsageError
from ..metrics import auc, collect_heads, mae
from ..models import (ModelSpec, distill_loss, forward_infer, forward_train,
                      init_params, pfd_teacher_forward)
from .config import HistoryRow, TrainConfig, TrainHistory


def joint_loss(tape: Tape, out, batch, cfg: TrainConfig, spec: ModelSpec):
    """Weighted task losses plus the alignment pull, as one scalar.

    Returns (loss, parts) with parts holding each unweighted component;
    regression losses only count samples whose label exists (clicked).
    """
    terms = []
    parts: dict[str, float] = {}
    for name, kind in spec.tasks:
        w = cfg.task_weights.get(name)
        if w is None:
            raise ConfigError(f"task {name!r} has no weight in task_weights")
        if kind == "binary":
            l = tape.loss_bce(out.predictions[name], batch.click)
        else:
            l = tape.loss_huber(out.predictions[name], batch.watch,
                                delta=cfg.huber_delta, mask=batch.watch_mask)
        parts[name] = float(l.data)
        if w != 0.0:
            terms.append(tape.scale(l, w))
    if cfg.sim_weight > 0.0:
        if out.l_s is None or out.l_u is None:
            raise UsageError("similarity loss needs training-mode outputs "
                             "with both l_u and l_s")
        sim = tape.loss_sim(out.l_u, out.l_s)
        parts["sim"] = float(sim.data)
        terms.append(tape.scale(sim, cfg.sim_weight))
    else:
        parts["sim"] = (float(np.mean((out.l_u.data - out.l_s.data) ** 2))
                        if out.l_s is not None and out.l_u is not None else 0.0)
    total = terms[0]
    for t in terms[1:]:
        total = tape.add(total, t)
    return total, parts


def _clone(params: dict) -> dict:
    return {n: Tensor(p.data.copy(), requires_grad=True) for n, p in params.items()}


def _predict_chunked(forward_fn, params, spec, ds: EncodedDataset, batch_size):
    chunks = {t: [] for t in spec.task_names}
    for idx in batch_iter(ds.n, batch_size):
        out = forward_fn(Tape(record=False), ds.take(idx), params, spec)
        for t in spec.task_names:
            chunks[t].append(out.predictions[t].data)
    return {t: np.concatenate(chunks[t]) for t in spec.task_names}


def _validate(forward_fn, params, spec, ds, batch_size):
    preds = _predict_chunked(forward_fn, params, spec, ds, batch_size)
    val_auc, val_mae = {}, {}
    for name, kind in spec.tasks:
        if kind == "binary":
            val_auc[name] = auc(preds[name], ds.click)
        else:
            m = ds.watch_mask > 0
            if m.any():
                val_mae[name] = mae(preds[name][m], ds.watch[m])
    return val_auc, val_mae


def _selection_score(val_auc: dict, val_mae: dict, spec: ModelSpec) -> float:
    for name, kind in spec.tasks:
        if kind == "binary":
            return val_auc[name]
    name = spec.tasks[0][0]
    return -val_mae.get(name, np.inf)


def _fit(spec: ModelSpec, cfg: TrainConfig, data: EncodedSplits,
         mode: str = "sar", teacher=None):
    """Shared loop.  mode selects the graph:

    - "sar": forward_train + joint loss (covers the plain baseline too)
    - "teacher": slate-only graph, task losses only
    - "student": inference-shaped graph distilled against a frozen teacher
    """
    if data.train.n == 0:
        raise DataError("training split is empty")
    if mode == "teacher":
        cfg = replace(cfg, sim_weight=0.0)
        train_fwd = eval_fwd = pfd_teacher_forward
    elif mode == "student":
        train_fwd = eval_fwd = forward_infer
        teacher_params, teacher_spec = teacher
        teacher_logits = _predict_chunked(pfd_teacher_forward, teacher_params,
                                          teacher_spec, data.train,
                                          cfg.eval_batch_size)
    else:
        train_fwd = forward_train
        eval_fwd = forward_infer
    params = init_params(spec, cfg.seed)
    state = AdamState()
    history = TrainHistory()
    best_params = _clone(params)
    best_score = -np.inf
    stale = 0
    for epoch in range(cfg.epochs):
        sums = {t: 0.0 for t in spec.task_names}
        sums["sim"] = 0.0
        total_sum = 0.0
        n_batches = 0
        for bi, idx in enumerate(batch_iter(data.train.n, cfg.batch_size,
                                            shuffle=True, seed=cfg.seed,
                                            epoch=epoch)):
            batch = data.train.take(idx)
            tape = Tape()
            out = train_fwd(tape, batch, params, spec)
            if mode == "student":
                loss, parts = _student_loss(tape, out, batch, idx, teacher_logits,
                                            cfg, spec)
            else:
                loss, parts = joint_loss(tape, out, batch, cfg, spec)
            if not np.isfinite(loss.data):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {bi}")
            for p in params.values():
                p.grad = None
            backward(tape, loss)
            try:
                adam_step(params, state, lr=cfg.lr, beta1=cfg.beta1,
                          beta2=cfg.beta2, eps=cfg.eps)
            except TrainingError as exc:
                raise TrainingError(f"epoch {epoch}, batch {bi}: {exc}") from exc
            for t in parts:
                sums[t] = sums.get(t, 0.0) + parts[t]
            total_sum += float(loss.data)
            n_batches += 1
        val_auc, val_mae = _validate(eval_fwd, params, spec, data.val,
                                     cfg.eval_batch_size)
        align = None
        if mode == "sar" and spec.sar != "none":
            lu, ls = collect_heads(params, spec, data.val, cfg.eval_batch_size)
            align = float(np.sqrt(((lu - ls) ** 2).sum(axis=-1)).mean())
        history.rows.append(HistoryRow(
            epoch=epoch,
            task_loss={t: sums[t] / n_batches for t in spec.task_names},
            sim_loss=sums["sim"] / n_batches,
            total_loss=total_sum / n_batches,
            val_auc=val_auc, val_mae=val_mae, align_l2=align))
        score = _selection_score(val_auc, val_mae, spec)
        if score > best_score:
            best_score = score
            best_params = _clone(params)
            history.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale > cfg.patience:
                break
    return best_params, history


def _student_loss(tape, out, batch, idx, teacher_logits, cfg, spec):
    terms = []
    parts = {}
    for name, kind in spec.tasks:
        w = cfg.task_weights.get(name)
        if w is None:
            raise ConfigError(f"task {name!r} has no weight in task_weights")
        if kind == "binary":
            l = distill_loss(tape, out.predictions[name],
                             teacher_logits[name][idx], batch.click,
                             alpha=cfg.distill_alpha,
                             temperature=cfg.distill_temperature)
        else:
            l = tape.loss_huber(out.predictions[name], batch.watch,
                                delta=cfg.huber_delta, mask=batch.watch_mask)
        parts[name] = float(l.data)
        if w != 0.0:
            terms.append(tape.scale(l, w))
    parts["sim"] = 0.0
    total = terms[0]
    for t in terms[1:]:
        total = tape.add(total, t)
    return total, parts


def train(spec: ModelSpec, cfg: TrainConfig, data: EncodedSplits):
    """Train one model; returns (best-validation parameters, history)."""
    return _fit(spec, cfg, data, mode="sar")


@dataclass
class PfdResult:
    student_params: dict
    teacher_params: dict
    student_history: TrainHistory
    teacher_history: TrainHistory


def train_pfd(teacher_spec: ModelSpec, student_spec: ModelSpec,
              cfg: TrainConfig, data: EncodedSplits) -> PfdResult:
    """Two-phase privileged distillation.

    Phase 1 trains the slate-fed teacher on task losses alone; phase 2
    freezes it and trains the slate-free student against a blend of the
    teacher's soft labels and the hard labels.
    """
    if teacher_spec.sar == "none":
        raise ConfigError("teacher spec needs a slate encoder variant")
    if student_spec.sar != "none":
        raise ConfigError("student spec must be slate-free")
    teacher_params, teacher_history = _fit(teacher_spec, cfg, data, mode="teacher")
    student_params, student_history = _fit(
        student_spec, cfg, data, mode="student",
        teacher=(teacher_params, teacher_spec))
    return PfdResult(student_params, teacher_params,
                     student_history, teacher_history)
