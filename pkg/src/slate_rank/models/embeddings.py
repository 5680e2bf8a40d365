"""Field embeddings: user side, item side, and whole-slate rows."""

from __future__ import annotations

from dataclasses import dataclass

from ..diffcore import Tape, Tensor
from ..errors import ShapeError
from .spec import ModelSpec


def _pooled(tape: Tape, table: Tensor, idx, mask, field: str) -> Tensor:
    """Sum the embedding rows of a multi-valued field, honoring the pad mask."""
    rows = tape.embedding_lookup(table, idx, field=field)
    masked = tape.mul(rows, tape.constant(mask[..., None]))
    return tape.reduce_sum(masked, axis=-2)


@dataclass
class FieldEmbeds:
    """Per-field embedding vectors plus their user/item concatenations.

    The separate field vectors feed backbones that need them (the
    factorization interaction term); e_u and e_i feed everything else.
    """

    user_id: Tensor    # [B, d_user]
    user_ctx: Tensor   # [B, d_ctx]
    item_id: Tensor    # [B, d_item]
    item_cat: Tensor   # [B, d_cat]
    e_u: Tensor        # [B, user_width]
    e_i: Tensor        # [B, item_width]


def embed_fields(tape: Tape, batch, params, spec: ModelSpec) -> FieldEmbeds:
    user_id = tape.embedding_lookup(params["emb/user"], batch.user_idx, field="user")
    user_ctx = _pooled(tape, params["emb/user_ctx"], batch.user_ctx_idx,
                       batch.user_ctx_mask, "user_ctx")
    item_id = tape.embedding_lookup(params["emb/item"], batch.item_idx, field="item")
    item_cat = _pooled(tape, params["emb/category"], batch.item_cat_idx,
                       batch.item_cat_mask, "category")
    e_u = tape.concat([user_id, user_ctx], axis=-1)
    e_i = tape.concat([item_id, item_cat], axis=-1)
    return FieldEmbeds(user_id, user_ctx, item_id, item_cat, e_u, e_i)


def embed_user(tape: Tape, batch, params, spec: ModelSpec) -> Tensor:
    """Concatenated user-field embeddings (multi-valued fields sum-pooled)."""
    return embed_fields(tape, batch, params, spec).e_u


def embed_item(tape: Tape, batch, params, spec: ModelSpec) -> Tensor:
    """Concatenated item-field embeddings (categories sum-pooled)."""
    return embed_fields(tape, batch, params, spec).e_i


def embed_slate(tape: Tape, batch, params, spec: ModelSpec) -> Tensor:
    """Per-position slate rows [B, K, id-dim + category-dim], order preserved."""
    if batch.slate_idx.ndim != 2 or batch.slate_idx.shape[1] != spec.k:
        raise ShapeError(
            f"slate features have shape {batch.slate_idx.shape}, expected K={spec.k}")
    items = tape.embedding_lookup(params["emb/slate_item"], batch.slate_idx,
                                  field="slate_item")
    cats = tape.embedding_lookup(params["emb/slate_category"], batch.slate_cat_idx,
                                 field="slate_category")
    return tape.concat([items, cats], axis=-1)


def embed_slate_target(tape: Tape, batch, params, spec: ModelSpec) -> Tensor:
    """The target item's own slate-side row [B, row width]; attention query."""
    item = tape.embedding_lookup(params["emb/slate_item"], batch.item_idx,
                                 field="slate_item")
    cat = tape.embedding_lookup(params["emb/slate_category"],
                                batch.item_cat_idx[:, 0], field="slate_category")
    return tape.concat([item, cat], axis=-1)
