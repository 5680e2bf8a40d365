"""The four commands behind the console entry point.

Each command reads a schema-checked INI config, does its work, and
writes artifacts under --out.  Outputs are deterministic for a given
config and seed; the only timestamp lives in the dataset provenance
record.
"""

import hashlib
import os
from dataclasses import replace

import numpy as np

from ..data import (DatasetSplits, build_slates, build_vocab, encode_splits,
                    load_dataset, parse_movielens, save_dataset,
                    split_dataset, synth_generate)
from ..errors import ConfigError, DataError, ShapeError
from ..metrics import alignment_stats, collect_heads, diversity_eval, evaluate
from ..models import load_params, save_params
from ..seeds import rng_for
from ..trainer import lambda_sweep, train, train_pfd
from . import config as cfgmod
from . import plots


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def cmd_prepare(args) -> None:
    parser = cfgmod.read_config(args.config, "prepare")
    ds_cfg = cfgmod.dataset_section(parser, args.seed)
    if ds_cfg["source"] == "movielens":
        root = ds_cfg["movielens_dir"]
        ratings = os.path.join(root, "ratings.dat")
        movies = os.path.join(root, "movies.dat")
        for path in (ratings, movies):
            if not os.path.isfile(path):
                raise DataError(f"missing source file {path}")
        log = parse_movielens(ratings, movies)
        samples = build_slates(log, k=ds_cfg["k"])
        source_hash = _sha256_file(ratings)
    else:
        synth_cfg = ds_cfg["synth"]
        samples, _ = synth_generate(synth_cfg)
        source_hash = hashlib.sha256(repr(synth_cfg).encode()).hexdigest()
    parts = split_dataset(samples, ds_cfg["split"], seed=ds_cfg["seed"])
    vocab = build_vocab(parts[0])
    meta = {"k": ds_cfg["k"], "seed": ds_cfg["seed"],
            "source": ds_cfg["source"], "source_hash": source_hash}
    splits = DatasetSplits(parts[0], parts[1], parts[2], vocab, meta)
    save_dataset(args.out, splits)
    print(f"wrote dataset to {args.out}")
    for name in ("train", "val", "test"):
        print(f"  {name}: {len(splits.split(name))} samples")


def _load_encoded(data_dir: str):
    splits = load_dataset(data_dir)
    return splits, encode_splits(splits)


def _check_compat(spec, splits, checkpoint_path: str) -> None:
    diffs = []
    if spec.k != splits.meta["k"]:
        diffs.append(f"k {spec.k} != {splits.meta['k']}")
    for f in ("user", "user_ctx", "item", "category"):
        have = splits.vocab.size(f)
        want = spec.vocab_sizes.get(f)
        if want != have:
            diffs.append(f"vocab[{f}] {want} != {have}")
    if diffs:
        raise ShapeError(f"checkpoint {checkpoint_path} does not match "
                         f"the dataset: " + "; ".join(diffs))


def cmd_train(args) -> None:
    parser = cfgmod.read_config(args.config, "train")
    run = cfgmod.run_section(parser)
    splits, enc = _load_encoded(run["data"])
    spec = cfgmod.model_section(parser, k=splits.meta["k"], vocab=splits.vocab)
    cfg = cfgmod.train_section(parser, args.seed)
    os.makedirs(args.out, exist_ok=True)
    if run["mode"] == "pfd":
        if spec.sar == "none":
            raise ConfigError("pfd mode needs a slate encoder on the teacher "
                              "([model] sar must not be none)")
        student_spec = replace(spec, sar="none")
        result = train_pfd(spec, student_spec, cfg, enc)
        save_params(os.path.join(args.out, "teacher_checkpoint.bin"),
                    result.teacher_params, spec)
        _write_text(os.path.join(args.out, "teacher_history.csv"),
                    result.teacher_history.to_csv())
        params, history, final_spec = (result.student_params,
                                       result.student_history, student_spec)
    else:
        params, history = train(spec, cfg, enc)
        final_spec = spec
    save_params(os.path.join(args.out, "checkpoint.bin"), params, final_spec)
    _write_text(os.path.join(args.out, "history.csv"), history.to_csv())
    plots.plot_history(history, os.path.join(args.out, "history.png"))
    report = evaluate(params, final_spec, enc.val, cfg.eval_batch_size,
                      with_alignment=final_spec.sar != "none")
    print(f"wrote checkpoint and history to {args.out}")
    print("validation metrics:")
    print(report.summary())


def _unique_rows(ds):
    users = []
    _, first = np.unique(ds.user_idx, return_index=True)
    for i in sorted(first):
        users.append({"user_idx": int(ds.user_idx[i]),
                      "user_ctx_idx": ds.user_ctx_idx[i],
                      "user_ctx_mask": ds.user_ctx_mask[i]})
    _, first = np.unique(ds.item_idx, return_index=True)
    keep = np.sort(first)
    items = {"item_idx": ds.item_idx[keep],
             "item_cat_idx": ds.item_cat_idx[keep],
             "item_cat_mask": ds.item_cat_mask[keep]}
    return users, items


def _candidate_pools(ds, seed: int, pool_size: int):
    """One deterministic candidate pool per distinct user in the split."""
    users, items = _unique_rows(ds)
    universe = len(items["item_idx"])
    size = min(pool_size, universe)
    pools = []
    for user in users:
        rng = rng_for(seed, f"eval-pool-{user['user_idx']}")
        take = np.sort(rng.choice(universe, size=size, replace=False))
        pools.append({k: v[take] for k, v in items.items()})
    return users, pools


def cmd_eval(args) -> None:
    parser = cfgmod.read_config(args.config, "eval")
    run = cfgmod.run_section(parser)
    ev = cfgmod.eval_section(parser)
    splits, enc = _load_encoded(run["data"])
    params, spec = load_params(ev["checkpoint"])
    _check_compat(spec, splits, ev["checkpoint"])
    if ev["split"] not in ("train", "val", "test"):
        raise ConfigError(f"[eval] split must be train/val/test, got {ev['split']!r}")
    ds = getattr(enc, ev["split"])
    os.makedirs(args.out, exist_ok=True)
    report = evaluate(params, spec, ds, ev["batch_size"])
    if args.export_embeddings:
        export = os.path.join(args.out, "embeddings.csv")
        report.align_l2, report.align_cos = alignment_stats(
            params, spec, ds, export_path=export, batch_size=ev["batch_size"])
        l_u, l_s = collect_heads(params, spec, ds, ev["batch_size"])
        plots.plot_alignment(l_u, l_s, os.path.join(args.out, "alignment.png"))
    _write_text(os.path.join(args.out, "report.csv"), report.to_csv())
    print(f"evaluated {ev['checkpoint']} on {ev['split']}:")
    print(report.summary())
    if args.diversity:
        other = ev["compare_checkpoint"]
        if not other:
            raise ConfigError("--diversity needs [eval] compare_checkpoint")
        params_b, spec_b = load_params(other)
        _check_compat(spec_b, splits, other)
        users, pools = _candidate_pools(ds, splits.meta["seed"], ev["pool_size"])
        result = diversity_eval((params, spec), (params_b, spec_b),
                                users, pools, ev["top_k"], ev["merge_weights"])
        lines = ["metric,model_a,model_b,rel_diff"]
        for key in ("gini_item_id", "gini_category"):
            lines.append(",".join((key, _fmt(result["a"][key]),
                                   _fmt(result["b"][key]),
                                   _fmt(result["rel_diff"][key]))))
        _write_text(os.path.join(args.out, "diversity.csv"),
                    "\n".join(lines) + "\n")
        print(f"diversity vs {other}:")
        for key in ("gini_item_id", "gini_category"):
            print(f"  {key}: a={result['a'][key]:.4f} b={result['b'][key]:.4f} "
                  f"rel_diff={result['rel_diff'][key]:+.4f}")


def cmd_sweep(args) -> None:
    parser = cfgmod.read_config(args.config, "sweep")
    run = cfgmod.run_section(parser)
    sw = cfgmod.sweep_section(parser, args.seed)
    splits, enc = _load_encoded(run["data"])
    spec = cfgmod.model_section(parser, k=splits.meta["k"], vocab=splits.vocab)
    cfg = cfgmod.train_section(parser)
    rows = []
    for seed in sw["seeds"]:
        for r in lambda_sweep(spec, replace(cfg, seed=seed), enc,
                              sw["grid"], jobs=args.jobs):
            rows.append({"ratio": r.ratio, "seed": seed,
                         "sim_weight": r.sim_weight, "val_auc": r.val_auc,
                         "val_mae": r.val_mae, "align_l2": r.align_l2,
                         "best_epoch": r.best_epoch})
    rows.sort(key=lambda r: (r["ratio"], r["seed"]))
    mean_by_ratio = {}
    lines = ["ratio,seed,sim_weight,val_auc,val_mae,align_l2,best_epoch"]
    for r in rows:
        lines.append(",".join((
            repr(r["ratio"]), str(r["seed"]), repr(r["sim_weight"]),
            repr(r["val_auc"]), _fmt(r["val_mae"]), _fmt(r["align_l2"]),
            str(r["best_epoch"]))))
    for ratio in sorted(set(r["ratio"] for r in rows)):
        group = [r for r in rows if r["ratio"] == ratio]
        mean = lambda key: (None if any(g[key] is None for g in group)
                            else float(np.mean([g[key] for g in group])))
        mean_by_ratio[ratio] = mean("val_auc")
        lines.append(",".join((
            repr(ratio), "mean", repr(group[0]["sim_weight"]),
            _fmt(mean("val_auc")), _fmt(mean("val_mae")),
            _fmt(mean("align_l2")), "")))
    os.makedirs(args.out, exist_ok=True)
    _write_text(os.path.join(args.out, "sweep.csv"), "\n".join(lines) + "\n")
    plots.plot_sweep(rows, mean_by_ratio, os.path.join(args.out, "sweep.png"))
    best = max(mean_by_ratio, key=lambda r: mean_by_ratio[r])
    print(f"wrote sweep table to {args.out}")
    print(f"best mean validation auc {mean_by_ratio[best]:.4f} at ratio {best}")
