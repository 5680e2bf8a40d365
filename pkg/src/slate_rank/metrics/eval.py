"""Model-level evaluation: batch prediction, top-K ranking, diversity
comparison, and encoder-alignment diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data.batching import batch_iter
from ..data.encode import EncodedDataset
from ..diffcore import Tape
from ..errors import MetricError, UsageError
from ..models import forward_infer, forward_train
from .core import auc, gini, mae, merge_scores


def predict(params, spec, ds: EncodedDataset, batch_size: int = 4096) -> dict:
    """Inference-path predictions for every sample, per task."""
    chunks = {t: [] for t in spec.task_names}
    for idx in batch_iter(ds.n, batch_size):
        out = forward_infer(Tape(record=False), ds.take(idx), params, spec)
        for t in spec.task_names:
            chunks[t].append(out.predictions[t].data)
    return {t: np.concatenate(chunks[t]) for t in spec.task_names}


def collect_heads(params, spec, ds: EncodedDataset,
                  batch_size: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    """l_u and l_s for every sample, computed on the training path."""
    if spec.sar == "none":
        raise UsageError("alignment heads need a slate encoder variant")
    lu, ls = [], []
    for idx in batch_iter(ds.n, batch_size):
        out = forward_train(Tape(record=False), ds.take(idx), params, spec)
        lu.append(out.l_u.data)
        ls.append(out.l_s.data)
    return np.concatenate(lu), np.concatenate(ls)


def _pool_batch(user: dict, pool: dict, spec) -> EncodedDataset:
    p = len(pool["item_idx"])
    ctx_idx = np.broadcast_to(np.asarray(user["user_ctx_idx"]), (p, len(user["user_ctx_idx"])))
    ctx_mask = np.broadcast_to(np.asarray(user["user_ctx_mask"]), ctx_idx.shape)
    return EncodedDataset(
        user_idx=np.full(p, user["user_idx"], dtype=np.int64),
        user_ctx_idx=np.ascontiguousarray(ctx_idx),
        user_ctx_mask=np.ascontiguousarray(ctx_mask, dtype=np.float64),
        item_idx=np.asarray(pool["item_idx"], dtype=np.int64),
        item_cat_idx=np.asarray(pool["item_cat_idx"], dtype=np.int64),
        item_cat_mask=np.asarray(pool["item_cat_mask"], dtype=np.float64),
        slate_idx=np.zeros((p, spec.k), dtype=np.int64),
        slate_cat_idx=np.zeros((p, spec.k), dtype=np.int64),
        click=np.zeros(p),
        watch=np.zeros(p),
        watch_mask=np.zeros(p),
        slate_ids=np.zeros(p, dtype=np.int64),
    )


def rank_topk(params, spec, user: dict, pool: dict, k: int,
              weights: dict) -> np.ndarray:
    """Top-k pool item ids by merged inference score, ties by id ascending.

    The pool never contributes slate features: candidates are scored on
    the slate-free path exactly as they would be served.
    """
    item_ids = np.asarray(pool["item_idx"], dtype=np.int64)
    if item_ids.size < k:
        raise UsageError(f"candidate pool has {item_ids.size} items, need {k}")
    ds = _pool_batch(user, pool, spec)
    preds = predict(params, spec, ds)
    scores = merge_scores(preds, weights, spec.tasks)
    order = np.lexsort((item_ids, -scores))
    return item_ids[order[:k]]


def diversity_eval(model_a, model_b, eval_users, pools, k: int,
                   weights: dict) -> dict:
    """Exposure-concentration comparison between two models.

    Each model ranks the same per-user pools; exposures are counted over
    item ids and primary categories (zero-filled over the whole pool
    universe), and the Gini index of each is reported per model together
    with the relative difference (b vs a; negative = b more diverse).
    """
    if len(eval_users) != len(pools):
        raise UsageError(f"{len(eval_users)} users vs {len(pools)} pools")
    result = {}
    for tag, (params, spec) in (("a", model_a), ("b", model_b)):
        item_counts: dict[int, float] = {}
        cat_counts: dict[int, float] = {}
        for pool in pools:
            for i in np.asarray(pool["item_idx"]):
                item_counts.setdefault(int(i), 0.0)
            for c in np.asarray(pool["item_cat_idx"])[:, 0]:
                cat_counts.setdefault(int(c), 0.0)
        for user, pool in zip(eval_users, pools):
            top = rank_topk(params, spec, user, pool, k, weights)
            ids = np.asarray(pool["item_idx"])
            cats = np.asarray(pool["item_cat_idx"])[:, 0]
            cat_of = {int(i): int(c) for i, c in zip(ids, cats)}
            for i in top:
                item_counts[int(i)] += 1.0
                cat_counts[cat_of[int(i)]] += 1.0
        result[tag] = {"gini_item_id": gini(item_counts),
                       "gini_category": gini(cat_counts)}
    for key in ("gini_item_id", "gini_category"):
        a, b = result["a"][key], result["b"][key]
        result.setdefault("rel_diff", {})[key] = (b - a) / a if a != 0 else 0.0
    return result


def alignment_stats(params, spec, ds: EncodedDataset, export_path: str = None,
                    batch_size: int = 4096) -> tuple[float, float]:
    """Mean Euclidean distance and mean cosine similarity of (l_u, l_s).

    Optionally writes the paired vectors to a CSV for external
    projection: one user_enc row and one slate_enc row per sample.
    """
    lu, ls = collect_heads(params, spec, ds, batch_size)
    diff = lu - ls
    mean_l2 = float(np.sqrt((diff * diff).sum(axis=-1)).mean())
    norms = np.linalg.norm(lu, axis=-1) * np.linalg.norm(ls, axis=-1)
    cos = (lu * ls).sum(axis=-1) / np.maximum(norms, 1e-12)
    mean_cos = float(cos.mean())
    if export_path is not None:
        dim = lu.shape[1]
        header = "sample_id,source," + ",".join(f"dim_{j}" for j in range(dim))
        with open(export_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(header + "\n")
            for i in range(lu.shape[0]):
                fh.write(f"{i},user_enc," + ",".join(repr(float(v)) for v in lu[i]) + "\n")
                fh.write(f"{i},slate_enc," + ",".join(repr(float(v)) for v in ls[i]) + "\n")
    return mean_l2, mean_cos


@dataclass
class MetricsReport:
    """Evaluation summary for one model on one dataset slice."""

    task_auc: dict = field(default_factory=dict)
    task_mae: dict = field(default_factory=dict)
    gini_item_id: float = None
    gini_category: float = None
    align_l2: float = None
    align_cos: float = None
    n_samples: int = 0

    def validate(self) -> None:
        for t, v in self.task_auc.items():
            if not 0.0 <= v <= 1.0:
                raise MetricError(f"auc[{t}]={v} outside [0, 1]")
        for t, v in self.task_mae.items():
            if v < 0:
                raise MetricError(f"mae[{t}]={v} negative")
        for name in ("gini_item_id", "gini_category"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v < 1.0:
                raise MetricError(f"{name}={v} outside [0, 1)")

    def rows(self) -> list[tuple[str, str]]:
        out = [("n_samples", str(self.n_samples))]
        for t in sorted(self.task_auc):
            out.append((f"auc_{t}", repr(self.task_auc[t])))
        for t in sorted(self.task_mae):
            out.append((f"mae_{t}", repr(self.task_mae[t])))
        for name in ("gini_item_id", "gini_category", "align_l2", "align_cos"):
            v = getattr(self, name)
            if v is not None:
                out.append((name, repr(v)))
        return out

    def to_csv(self) -> str:
        return "metric,value\n" + "".join(f"{k},{v}\n" for k, v in self.rows())

    def summary(self) -> str:
        width = max(len(k) for k, _ in self.rows())
        return "\n".join(f"{k.ljust(width)}  {v}" for k, v in self.rows())


def evaluate(params, spec, ds: EncodedDataset, batch_size: int = 4096,
             with_alignment: bool = False) -> MetricsReport:
    """AUC per binary task, MAE per regression task (labeled samples only)."""
    preds = predict(params, spec, ds, batch_size)
    report = MetricsReport(n_samples=ds.n)
    for name, kind in spec.tasks:
        if kind == "binary":
            report.task_auc[name] = auc(preds[name], ds.click)
        else:
            m = ds.watch_mask > 0
            if m.any():
                report.task_mae[name] = mae(preds[name][m], ds.watch[m])
    if with_alignment and spec.sar != "none":
        report.align_l2, report.align_cos = alignment_stats(params, spec, ds)
    report.validate()
    return report
