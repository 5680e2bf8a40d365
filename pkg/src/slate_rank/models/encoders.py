"""Slate and user encoders plus the shared decoder.

encode_slate sees the whole slate and the user and produces l_s;
encode_user produces l_u from the user alone.  Both land in the same
dim-wide space so they can be pulled together by the similarity loss,
and decode maps either one (with the user) to the vector handed to the
backbone.
"""

from __future__ import annotations

import numpy as np

from ..diffcore import Tape, Tensor
from ..errors import ConfigError, UsageError
from .spec import ModelSpec


def _mlp2(tape: Tape, x: Tensor, params, prefix: str) -> Tensor:
    hidden = tape.relu(tape.linear(x, params[f"{prefix}/w0"], params[f"{prefix}/b0"]))
    return tape.linear(hidden, params[f"{prefix}/w1"], params[f"{prefix}/b1"])


def attention_weights(tape: Tape, e_s: Tensor, query: Tensor,
                      params, spec: ModelSpec) -> Tensor:
    """Softmax scores of each slate row against the target-item query.

    The scorer is a small MLP over [query, key, query*key] per row;
    output is [B, K], non-negative, summing to 1 per sample.
    """
    b, k, row = e_s.shape
    q3 = tape.reshape(query, (b, 1, row))
    tiled = tape.add(tape.constant(np.zeros((b, k, row))), q3)
    prod = tape.mul(q3, e_s)
    feats = tape.concat([tiled, e_s, prod], axis=-1)
    flat = tape.reshape(feats, (b * k, 3 * row))
    h = tape.relu(tape.linear(flat, params["attn/w0"], params["attn/b0"]))
    scores = tape.linear(h, params["attn/w1"], params["attn/b1"])
    return tape.softmax(tape.reshape(scores, (b, k)))


def _pool_sum(tape: Tape, e_s: Tensor) -> Tensor:
    return tape.sum_pool(e_s)


def _pool_attn(tape: Tape, e_s: Tensor, query, params, spec) -> Tensor:
    if query is None:
        raise UsageError("attention pooling needs the target-item query")
    w = attention_weights(tape, e_s, query, params, spec)
    b, k, row = e_s.shape
    weighted = tape.mul(e_s, tape.reshape(w, (b, k, 1)))
    return tape.reduce_sum(weighted, axis=-2)


def _pool_lstm(tape: Tape, e_s: Tensor, params, spec) -> Tensor:
    b, k, row = e_s.shape
    cell = {"w_x": params["lstm/w_x"], "w_h": params["lstm/w_h"],
            "b": params["lstm/b"]}
    h = tape.constant(np.zeros((b, spec.dim)))
    c = tape.constant(np.zeros((b, spec.dim)))
    flat = tape.reshape(e_s, (b, k * row))
    for t in range(k):
        x_t = tape.slice_last(flat, t * row, (t + 1) * row)
        h, c = tape.lstm_step(x_t, h, c, cell)
    return h


def encode_slate(tape: Tape, e_s: Tensor, e_u: Tensor, variant: str,
                 params, spec: ModelSpec, query: Tensor = None) -> Tensor:
    """Pool the slate rows per variant, join with e_u, map to l_s."""
    if variant == "sum":
        pooled = _pool_sum(tape, e_s)
    elif variant == "attn":
        pooled = _pool_attn(tape, e_s, query, params, spec)
    elif variant == "lstm":
        pooled = _pool_lstm(tape, e_s, params, spec)
    else:
        raise ConfigError(f"cannot encode a slate with variant {variant!r}")
    joined = tape.concat([pooled, e_u], axis=-1)
    return _mlp2(tape, joined, params, "enc_s")


def encode_user(tape: Tape, e_u: Tensor, params) -> Tensor:
    """Slate-free user representation l_u, same width as l_s."""
    return _mlp2(tape, e_u, params, "enc_u")


def decode(tape: Tape, l: Tensor, e_u: Tensor, params) -> Tensor:
    """Map a representation (l_s when training, l_u at inference) to d."""
    joined = tape.concat([l, e_u], axis=-1)
    return _mlp2(tape, joined, params, "dec")
