"""Training and inference forward passes, and the distillation loss.

The training pass runs both representation heads: l_s from the whole
slate and l_u from the user alone, with the decoder fed l_s.  The
inference pass never reads a slate feature; the decoder is fed l_u, so
predictions are invariant to whatever the slate columns contain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..diffcore import Tape, Tensor
from ..diffcore.tensor import _sigmoid
from ..errors import ConfigError, DataError
from .backbones import backbone_forward
from .embeddings import embed_fields, embed_slate, embed_slate_target
from .encoders import decode, encode_slate, encode_user
from .spec import ModelSpec


@dataclass
class ForwardOutput:
    predictions: dict[str, Tensor]  # task name -> [B] logits / raw values
    l_u: Tensor = None
    l_s: Tensor = None
    d: Tensor = None


def forward_train(tape: Tape, batch, params, spec: ModelSpec) -> ForwardOutput:
    """Slate-aware pass: l_s drives the decoder, l_u rides along for the
    alignment loss.  With the slate path disabled this is exactly the
    backbone-only model."""
    fields = embed_fields(tape, batch, params, spec)
    if spec.sar == "none":
        return ForwardOutput(backbone_forward(tape, batch, fields, None, params, spec))
    if batch.slate_idx is None or batch.slate_cat_idx is None:
        raise DataError("training with a slate encoder needs slate features")
    e_s = embed_slate(tape, batch, params, spec)
    query = embed_slate_target(tape, batch, params, spec) if spec.sar == "attn" else None
    l_s = encode_slate(tape, e_s, fields.e_u, spec.sar, params, spec, query=query)
    l_u = encode_user(tape, fields.e_u, params)
    d = decode(tape, l_s, fields.e_u, params)
    preds = backbone_forward(tape, batch, fields, d, params, spec)
    return ForwardOutput(preds, l_u=l_u, l_s=l_s, d=d)


def forward_infer(tape: Tape, batch, params, spec: ModelSpec) -> ForwardOutput:
    """Slate-free pass: the decoder is fed l_u; slate columns are never read."""
    fields = embed_fields(tape, batch, params, spec)
    if spec.sar == "none":
        return ForwardOutput(backbone_forward(tape, batch, fields, None, params, spec))
    l_u = encode_user(tape, fields.e_u, params)
    d = decode(tape, l_u, fields.e_u, params)
    preds = backbone_forward(tape, batch, fields, d, params, spec)
    return ForwardOutput(preds, l_u=l_u, d=d)


def pfd_teacher_forward(tape: Tape, batch, params, spec: ModelSpec) -> ForwardOutput:
    """Teacher pass: the slate-aware structure with the alignment head
    left out entirely; l_u is never computed."""
    if spec.sar == "none":
        raise ConfigError("a teacher needs a slate encoder variant")
    fields = embed_fields(tape, batch, params, spec)
    if batch.slate_idx is None or batch.slate_cat_idx is None:
        raise DataError("teacher forward needs slate features")
    e_s = embed_slate(tape, batch, params, spec)
    query = embed_slate_target(tape, batch, params, spec) if spec.sar == "attn" else None
    l_s = encode_slate(tape, e_s, fields.e_u, spec.sar, params, spec, query=query)
    d = decode(tape, l_s, fields.e_u, params)
    preds = backbone_forward(tape, batch, fields, d, params, spec)
    return ForwardOutput(preds, l_s=l_s, d=d)


def distill_loss(tape: Tape, student_logit: Tensor, teacher_logit, label,
                 alpha: float, temperature: float) -> Tensor:
    """alpha * BCE(student, sigmoid(teacher / T)) + (1 - alpha) * BCE(student, label).

    The teacher logit is used as a constant: no gradient ever flows back
    through it, whether it arrives as a live tensor or a plain array.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"distillation alpha must be in [0, 1], got {alpha}")
    if temperature <= 0:
        raise ConfigError(f"distillation temperature must be positive, got {temperature}")
    t = teacher_logit.data if isinstance(teacher_logit, Tensor) else np.asarray(teacher_logit)
    if alpha == 0.0:
        return tape.loss_bce(student_logit, label)
    soft = tape.loss_bce_soft(student_logit, _sigmoid(t / temperature))
    if alpha == 1.0:
        return soft
    hard = tape.loss_bce(student_logit, label)
    return tape.add(tape.scale(soft, alpha), tape.scale(hard, 1.0 - alpha))
