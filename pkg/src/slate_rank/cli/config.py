"""Run configuration files: INI sections, schema-checked.

Every command reads one config file.  Unknown sections or keys are
rejected so stale experiment configs fail loudly instead of being
silently ignored.  Paths under [run]/[dataset] resolve against the
SLATE_RANK_DATA environment variable when they are relative.
"""

import configparser
import os

from ..data import SynthConfig
from ..errors import ConfigError
from ..models import ModelSpec
from ..trainer import TrainConfig

DATA_ROOT_VAR = "SLATE_RANK_DATA"

_DATASET_KEYS = {"source", "k", "seed", "split", "movielens_dir"}
_SYNTH_KEYS = {"n_users", "n_items", "n_categories", "latent_dim",
               "slates_per_user", "click_scale", "gamma", "watch_noise"}
_RUN_KEYS = {"data", "mode"}
_MODEL_KEYS = {"backbone", "sar", "dim", "hidden", "tasks"}
_TRAIN_KEYS = {"weights", "sim_weight", "lr", "epochs", "batch_size",
               "patience", "seed", "huber_delta", "distill_alpha",
               "distill_temperature", "eval_batch_size"}
_EVAL_KEYS = {"checkpoint", "compare_checkpoint", "split", "batch_size",
              "merge_weights", "top_k", "pool_size"}
_SWEEP_KEYS = {"grid", "seeds"}

SCHEMAS = {
    "prepare": {"dataset": _DATASET_KEYS, "synth": _SYNTH_KEYS},
    "train": {"run": _RUN_KEYS, "model": _MODEL_KEYS, "train": _TRAIN_KEYS},
    "eval": {"run": _RUN_KEYS, "eval": _EVAL_KEYS},
    "sweep": {"run": _RUN_KEYS, "model": _MODEL_KEYS, "train": _TRAIN_KEYS,
              "sweep": _SWEEP_KEYS},
}


def read_config(path: str, command: str) -> configparser.ConfigParser:
    """Parse an INI file and reject anything outside the command schema."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    schema = SCHEMAS[command]
    for section in parser.sections():
        if section not in schema:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key in parser[section]:
            if key not in schema[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
    return parser


def resolve_data_path(path: str) -> str:
    """Resolve a dataset path against the data root for relative values."""
    if os.path.isabs(path):
        return path
    return os.path.join(os.environ.get(DATA_ROOT_VAR, "."), path)


def _get(parser, section, key, default=None):
    if parser.has_option(section, key):
        return parser.get(section, key)
    return default


def _typed(parser, section, key, cast, default):
    raw = _get(parser, section, key)
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}={raw!r}: {exc}") from exc


def _int_tuple(text: str) -> tuple:
    return tuple(int(t.strip()) for t in text.split(","))


def _float_list(text: str) -> list:
    return [float(t.strip()) for t in text.split(",")]


def _pairs(text: str, cast) -> dict:
    out = {}
    for part in text.split(","):
        name, _, value = part.strip().partition(":")
        if not name or not value:
            raise ValueError(f"expected name:value pairs, got {part.strip()!r}")
        out[name] = cast(value)
    return out


def dataset_section(parser, seed_override=None) -> dict:
    source = _get(parser, "dataset", "source")
    if source not in ("synth", "movielens"):
        raise ConfigError(f"[dataset] source must be synth or movielens, got {source!r}")
    seed = _typed(parser, "dataset", "seed", int, 0)
    if seed_override is not None:
        seed = seed_override
    out = {
        "source": source,
        "k": _typed(parser, "dataset", "k", int, 20),
        "seed": seed,
        "split": _typed(parser, "dataset", "split", _int_tuple, (8, 1, 1)),
    }
    if source == "movielens":
        raw = _get(parser, "dataset", "movielens_dir", "ml-1m")
        out["movielens_dir"] = resolve_data_path(raw)
    else:
        out["synth"] = synth_section(parser, k=out["k"], seed=seed)
    return out


def synth_section(parser, k: int, seed: int) -> SynthConfig:
    return SynthConfig(
        n_users=_typed(parser, "synth", "n_users", int, 2000),
        n_items=_typed(parser, "synth", "n_items", int, 500),
        n_categories=_typed(parser, "synth", "n_categories", int, 20),
        latent_dim=_typed(parser, "synth", "latent_dim", int, 8),
        k=k,
        slates_per_user=_typed(parser, "synth", "slates_per_user", int, 5),
        click_scale=_typed(parser, "synth", "click_scale", float, 1.0),
        gamma=_typed(parser, "synth", "gamma", float, 1.0),
        watch_noise=_typed(parser, "synth", "watch_noise", float, 1.0),
        seed=seed,
    )


def run_section(parser) -> dict:
    data = _get(parser, "run", "data")
    if not data:
        raise ConfigError("[run] data is required")
    mode = _get(parser, "run", "mode", "plain")
    if mode not in ("plain", "pfd"):
        raise ConfigError(f"[run] mode must be plain or pfd, got {mode!r}")
    return {"data": resolve_data_path(data), "mode": mode}


def model_section(parser, k: int, vocab) -> ModelSpec:
    backbone = _get(parser, "model", "backbone")
    if backbone is None:
        raise ConfigError("[model] backbone is required")
    tasks = _typed(parser, "model", "tasks", lambda t: _pairs(t, str),
                   {"click": "binary"})
    sizes = {f: vocab.size(f) for f in ("user", "user_ctx", "item", "category")}
    return ModelSpec(
        backbone=backbone,
        sar=_get(parser, "model", "sar", "none"),
        dim=_typed(parser, "model", "dim", int, 16),
        hidden=_typed(parser, "model", "hidden", _int_tuple, (64, 32)),
        tasks=tuple(tasks.items()),
        k=k,
        vocab_sizes=sizes,
    )


def train_section(parser, seed_override=None) -> TrainConfig:
    seed = _typed(parser, "train", "seed", int, 0)
    if seed_override is not None:
        seed = seed_override
    return TrainConfig(
        task_weights=_typed(parser, "train", "weights",
                            lambda t: _pairs(t, float), {"click": 1.0}),
        sim_weight=_typed(parser, "train", "sim_weight", float, 0.0),
        lr=_typed(parser, "train", "lr", float, 1e-3),
        epochs=_typed(parser, "train", "epochs", int, 20),
        batch_size=_typed(parser, "train", "batch_size", int, 256),
        patience=_typed(parser, "train", "patience", int, 3),
        seed=seed,
        huber_delta=_typed(parser, "train", "huber_delta", float, 1.0),
        distill_alpha=_typed(parser, "train", "distill_alpha", float, 0.5),
        distill_temperature=_typed(parser, "train", "distill_temperature",
                                   float, 1.0),
        eval_batch_size=_typed(parser, "train", "eval_batch_size", int, 4096),
    )


def eval_section(parser) -> dict:
    checkpoint = _get(parser, "eval", "checkpoint")
    if not checkpoint:
        raise ConfigError("[eval] checkpoint is required")
    return {
        "checkpoint": checkpoint,
        "compare_checkpoint": _get(parser, "eval", "compare_checkpoint"),
        "split": _get(parser, "eval", "split", "test"),
        "batch_size": _typed(parser, "eval", "batch_size", int, 4096),
        "merge_weights": _typed(parser, "eval", "merge_weights",
                                lambda t: _pairs(t, float), {"click": 1.0}),
        "top_k": _typed(parser, "eval", "top_k", int, 10),
        "pool_size": _typed(parser, "eval", "pool_size", int, 100),
    }


def sweep_section(parser, seed_override=None) -> dict:
    grid = _typed(parser, "sweep", "grid", _float_list, None)
    if not grid:
        raise ConfigError("[sweep] grid is required")
    if seed_override is not None:
        seeds = [seed_override]
    else:
        seeds = _typed(parser, "sweep", "seeds",
                       lambda t: _int_tuple(t), (0,))
    return {"grid": grid, "seeds": list(seeds)}
