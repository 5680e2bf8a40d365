from .backbones import backbone_forward
from .embeddings import (FieldEmbeds, embed_fields, embed_item, embed_slate,
                         embed_slate_target, embed_user)
from .encoders import attention_weights, decode, encode_slate, encode_user
from .forward import (ForwardOutput, distill_loss, forward_infer,
                      forward_train, pfd_teacher_forward)
from .params import init_params, load_params, param_shapes, save_params
from .spec import BACKBONES, SAR_VARIANTS, ModelSpec

__all__ = [
    "BACKBONES", "FieldEmbeds", "ForwardOutput", "ModelSpec", "SAR_VARIANTS",
    "attention_weights", "backbone_forward", "decode", "distill_loss",
    "embed_fields", "embed_item", "embed_slate", "embed_slate_target",
    "embed_user", "encode_slate", "encode_user", "forward_infer",
    "forward_train", "init_params", "load_params", "param_shapes",
    "pfd_teacher_forward", "save_params",
]
