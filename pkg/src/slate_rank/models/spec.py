"""Model configuration: backbone choice, slate encoder variant, widths."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import ConfigError

BACKBONES = ("fm", "widedeep", "ncf", "ple")
SAR_VARIANTS = ("none", "sum", "lstm", "attn")
TASK_KINDS = ("binary", "regression")
FIELDS = ("user", "user_ctx", "item", "category", "slate_item", "slate_category")

# slate-side tables reuse the vocabulary of their backbone-side twins
VOCAB_OF_FIELD = {"user": "user", "user_ctx": "user_ctx", "item": "item",
                  "category": "category", "slate_item": "item",
                  "slate_category": "category"}

EXPERTS_PER_GROUP = 2


@dataclass(frozen=True)
class ModelSpec:
    """Static description of one model; parameter shapes derive from it.

    dim is the shared width of l_u, l_s and d as well as the hidden
    width of the encoder, decoder and attention scorer.  field_dims
    overrides per-field embedding widths (default: dim everywhere).
    """

    backbone: str
    sar: str = "none"
    dim: int = 16
    hidden: tuple = (64, 32)
    tasks: tuple = (("click", "binary"),)
    k: int = 20
    vocab_sizes: dict = field(default_factory=dict)
    field_dims: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.backbone not in BACKBONES:
            raise ConfigError(f"unknown backbone {self.backbone!r}")
        if self.sar not in SAR_VARIANTS:
            raise ConfigError(f"unknown slate encoder variant {self.sar!r}")
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not self.tasks:
            raise ConfigError("task list is empty")
        names = [t[0] for t in self.tasks]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate task names in {names}")
        for name, kind in self.tasks:
            if kind not in TASK_KINDS:
                raise ConfigError(f"task {name!r} has unknown kind {kind!r}")
        if any(h < 1 for h in self.hidden):
            raise ConfigError(f"bad hidden layout {self.hidden}")
        for f in ("user", "user_ctx", "item", "category"):
            if self.vocab_sizes.get(f, 0) < 1:
                raise ConfigError(f"vocab_sizes missing field {f!r}")
        for f in self.field_dims:
            if f not in FIELDS:
                raise ConfigError(f"field_dims has unknown field {f!r}")
            if self.field_dims[f] < 1:
                raise ConfigError(f"field dim for {f!r} must be >= 1")
        if self.backbone == "ple" and len(self.tasks) < 2:
            raise ConfigError("ple backbone needs at least 2 tasks")
        if self.backbone == "ncf" and self.fdim("user") != self.fdim("item"):
            raise ConfigError("ncf needs equal user and item id dims")
        if self.backbone == "fm":
            dims = {self.fdim(f) for f in ("user", "user_ctx", "item", "category")}
            if self.sar != "none":
                dims.add(self.dim)
            if len(dims) != 1:
                raise ConfigError(
                    f"fm needs one shared field width, got {sorted(dims)}")

    def fdim(self, field_name: str) -> int:
        return self.field_dims.get(field_name, self.dim)

    def vocab(self, field_name: str) -> int:
        return self.vocab_sizes[VOCAB_OF_FIELD[field_name]]

    @property
    def task_names(self) -> tuple:
        return tuple(t[0] for t in self.tasks)

    def task_kind(self, name: str) -> str:
        for t, kind in self.tasks:
            if t == name:
                return kind
        raise ConfigError(f"unknown task {name!r}")

    @property
    def user_width(self) -> int:
        return self.fdim("user") + self.fdim("user_ctx")

    @property
    def item_width(self) -> int:
        return self.fdim("item") + self.fdim("category")

    @property
    def slate_row_width(self) -> int:
        return self.fdim("slate_item") + self.fdim("slate_category")

    @property
    def backbone_input_width(self) -> int:
        extra = self.dim if self.sar != "none" else 0
        return self.user_width + self.item_width + extra

    def to_json(self) -> str:
        payload = {
            "backbone": self.backbone, "sar": self.sar, "dim": self.dim,
            "hidden": list(self.hidden), "tasks": [list(t) for t in self.tasks],
            "k": self.k, "vocab_sizes": self.vocab_sizes,
            "field_dims": self.field_dims,
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        try:
            p = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad model spec json: {exc}") from exc
        return cls(backbone=p["backbone"], sar=p["sar"], dim=p["dim"],
                   hidden=tuple(p["hidden"]),
                   tasks=tuple((t[0], t[1]) for t in p["tasks"]),
                   k=p["k"], vocab_sizes=p["vocab_sizes"],
                   field_dims=p.get("field_dims", {}))
