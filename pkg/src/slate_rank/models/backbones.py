"""Prediction backbones: factorization machine, wide+deep, dual-path
neural collaborative filtering, and a one-layer multi-gate mixture of
experts with task towers.

Every backbone maps the embedded fields (plus the decoded slate vector
d when the slate path is enabled) to one output per task: a logit for
binary tasks, a raw value for regression tasks.
"""

from __future__ import annotations

from ..diffcore import Tape, Tensor
from ..errors import ConfigError
from .embeddings import FieldEmbeds
from .spec import EXPERTS_PER_GROUP, ModelSpec


def _first_order(tape: Tape, batch, params, prefix: str, task: str) -> Tensor:
    """bias + per-id scalar weights, multi-valued fields masked-summed."""
    out = tape.embedding_lookup(params[f"{prefix}/{task}/w_user"],
                                batch.user_idx, field="user")
    ctx = tape.embedding_lookup(params[f"{prefix}/{task}/w_user_ctx"],
                                batch.user_ctx_idx, field="user_ctx")
    ctx = tape.reduce_sum(tape.mul(ctx, tape.constant(batch.user_ctx_mask)), axis=-1)
    item = tape.embedding_lookup(params[f"{prefix}/{task}/w_item"],
                                 batch.item_idx, field="item")
    cat = tape.embedding_lookup(params[f"{prefix}/{task}/w_category"],
                                batch.item_cat_idx, field="category")
    cat = tape.reduce_sum(tape.mul(cat, tape.constant(batch.item_cat_mask)), axis=-1)
    total = tape.add(tape.add(out, ctx), tape.add(item, cat))
    return tape.add(total, params[f"{prefix}/{task}/bias"])


def _pairwise_interaction(tape: Tape, vecs) -> Tensor:
    """0.5 * (|sum v|^2 - sum |v|^2) over field vectors, the usual
    identity for the sum of all pairwise dot products."""
    total = vecs[0]
    for v in vecs[1:]:
        total = tape.add(total, v)
    sq_of_sum = tape.reduce_sum(tape.mul(total, total), axis=-1)
    sum_of_sq = tape.reduce_sum(tape.mul(vecs[0], vecs[0]), axis=-1)
    for v in vecs[1:]:
        sum_of_sq = tape.add(sum_of_sq, tape.reduce_sum(tape.mul(v, v), axis=-1))
    return tape.scale(tape.sub(sq_of_sum, sum_of_sq), 0.5)


def _trunk(tape: Tape, x: Tensor, params, prefix: str, n_layers: int) -> Tensor:
    h = x
    for i in range(n_layers):
        h = tape.relu(tape.linear(h, params[f"{prefix}/w{i}"], params[f"{prefix}/b{i}"]))
    return h


def _head(tape: Tape, h: Tensor, params, name_w: str, name_b: str) -> Tensor:
    out = tape.linear(h, params[name_w], params[name_b])
    return tape.reshape(out, (h.shape[0],))


def backbone_forward(tape: Tape, batch, fields: FieldEmbeds, d,
                     params, spec: ModelSpec) -> dict[str, Tensor]:
    """Per-task predictions [B] from embedded fields and optional d."""
    if spec.sar != "none" and d is None:
        raise ConfigError(f"{spec.backbone} backbone expected the decoded "
                          "slate vector but none was given")
    if spec.sar == "none" and d is not None:
        raise ConfigError(f"{spec.backbone} backbone got a decoded slate "
                          "vector but the slate path is disabled")
    field_vecs = [fields.user_id, fields.user_ctx, fields.item_id, fields.item_cat]
    if d is not None:
        field_vecs.append(d)
    preds: dict[str, Tensor] = {}

    if spec.backbone == "fm":
        inter = _pairwise_interaction(tape, field_vecs)
        for t in spec.task_names:
            preds[t] = tape.add(_first_order(tape, batch, params, "fm", t), inter)
        return preds

    x = tape.concat([fields.e_u, fields.e_i] + ([d] if d is not None else []), axis=-1)

    if spec.backbone == "widedeep":
        top = _trunk(tape, x, params, "deep", len(spec.hidden))
        for t in spec.task_names:
            deep = _head(tape, top, params, f"deep/{t}/w_out", f"deep/{t}/b_out")
            preds[t] = tape.add(_first_order(tape, batch, params, "wide", t), deep)
        return preds

    if spec.backbone == "ncf":
        gmf = tape.mul(fields.user_id, fields.item_id)
        top = _trunk(tape, x, params, "ncf", len(spec.hidden))
        merged = tape.concat([gmf, top], axis=-1)
        for t in spec.task_names:
            preds[t] = _head(tape, merged, params, f"ncf/{t}/w_out", f"ncf/{t}/b_out")
        return preds

    # ple: shared experts + per-task experts, sigmoid gates, task towers
    experts = {g: [tape.relu(tape.linear(x, params[f"ple/{g}/expert{j}/w"],
                                         params[f"ple/{g}/expert{j}/b"]))
                   for j in range(EXPERTS_PER_GROUP)]
               for g in ("shared",) + spec.task_names}
    for t in spec.task_names:
        gate = tape.sigmoid(tape.linear(x, params[f"ple/{t}/gate_w"],
                                        params[f"ple/{t}/gate_b"]))
        pool = experts["shared"] + experts[t]
        mixed = None
        for j, expert in enumerate(pool):
            share = tape.mul(expert, tape.slice_last(gate, j, j + 1))
            mixed = share if mixed is None else tape.add(mixed, share)
        tower = tape.relu(tape.linear(mixed, params[f"ple/{t}/tower_w0"],
                                      params[f"ple/{t}/tower_b0"]))
        preds[t] = _head(tape, tower, params, f"ple/{t}/tower_w1", f"ple/{t}/tower_b1")
    return preds
