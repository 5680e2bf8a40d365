"""Parameter initialization and single-file checkpoints.

Checkpoint layout: a text manifest (format tag, model spec json, one
line per tensor with name, shape, byte offset and length), a NUL byte,
then the raw little-endian float32 arrays in manifest order.  Values
are stored at 32-bit precision; initialization draws are rounded
through float32 so a fresh model round-trips bit for bit.
"""

from __future__ import annotations

import numpy as np

from ..diffcore import Tensor
from ..errors import DataError
from ..seeds import rng_for
from .spec import EXPERTS_PER_GROUP, ModelSpec

_FORMAT_TAG = "slate-rank-params v1"


def param_shapes(spec: ModelSpec) -> dict[str, tuple]:
    """Every parameter name and shape implied by a model spec."""
    shapes: dict[str, tuple] = {}
    for f in ("user", "user_ctx", "item", "category"):
        shapes[f"emb/{f}"] = (spec.vocab(f), spec.fdim(f))
    d = spec.dim
    if spec.sar != "none":
        for f in ("slate_item", "slate_category"):
            shapes[f"emb/{f}"] = (spec.vocab(f), spec.fdim(f))
        row = spec.slate_row_width
        pooled = d if spec.sar == "lstm" else row
        shapes["enc_s/w0"] = (pooled + spec.user_width, d)
        shapes["enc_s/b0"] = (d,)
        shapes["enc_s/w1"] = (d, d)
        shapes["enc_s/b1"] = (d,)
        shapes["enc_u/w0"] = (spec.user_width, d)
        shapes["enc_u/b0"] = (d,)
        shapes["enc_u/w1"] = (d, d)
        shapes["enc_u/b1"] = (d,)
        shapes["dec/w0"] = (d + spec.user_width, d)
        shapes["dec/b0"] = (d,)
        shapes["dec/w1"] = (d, d)
        shapes["dec/b1"] = (d,)
        if spec.sar == "attn":
            shapes["attn/w0"] = (3 * row, d)
            shapes["attn/b0"] = (d,)
            shapes["attn/w1"] = (d, 1)
            shapes["attn/b1"] = (1,)
        if spec.sar == "lstm":
            shapes["lstm/w_x"] = (row, 4 * d)
            shapes["lstm/w_h"] = (d, 4 * d)
            shapes["lstm/b"] = (4 * d,)
    x = spec.backbone_input_width
    if spec.backbone in ("fm", "widedeep"):
        prefix = "fm" if spec.backbone == "fm" else "wide"
        for t in spec.task_names:
            shapes[f"{prefix}/{t}/bias"] = (1,)
            for f in ("user", "user_ctx", "item", "category"):
                shapes[f"{prefix}/{t}/w_{f}"] = (spec.vocab(f),)
    if spec.backbone == "widedeep":
        widths = (x,) + tuple(spec.hidden)
        for i in range(len(spec.hidden)):
            shapes[f"deep/w{i}"] = (widths[i], widths[i + 1])
            shapes[f"deep/b{i}"] = (widths[i + 1],)
        for t in spec.task_names:
            shapes[f"deep/{t}/w_out"] = (widths[-1], 1)
            shapes[f"deep/{t}/b_out"] = (1,)
    if spec.backbone == "ncf":
        widths = (x,) + tuple(spec.hidden)
        for i in range(len(spec.hidden)):
            shapes[f"ncf/w{i}"] = (widths[i], widths[i + 1])
            shapes[f"ncf/b{i}"] = (widths[i + 1],)
        for t in spec.task_names:
            shapes[f"ncf/{t}/w_out"] = (spec.fdim("user") + widths[-1], 1)
            shapes[f"ncf/{t}/b_out"] = (1,)
    if spec.backbone == "ple":
        groups = ("shared",) + spec.task_names
        for g in groups:
            for j in range(EXPERTS_PER_GROUP):
                shapes[f"ple/{g}/expert{j}/w"] = (x, d)
                shapes[f"ple/{g}/expert{j}/b"] = (d,)
        for t in spec.task_names:
            shapes[f"ple/{t}/gate_w"] = (x, 2 * EXPERTS_PER_GROUP)
            shapes[f"ple/{t}/gate_b"] = (2 * EXPERTS_PER_GROUP,)
            shapes[f"ple/{t}/tower_w0"] = (d, d)
            shapes[f"ple/{t}/tower_b0"] = (d,)
            shapes[f"ple/{t}/tower_w1"] = (d, 1)
            shapes[f"ple/{t}/tower_b1"] = (1,)
    return shapes


def _draw(name: str, shape: tuple, rng) -> np.ndarray:
    if name.startswith("emb/"):
        arr = rng.uniform(-0.01, 0.01, size=shape)
    elif len(shape) >= 2:
        limit = np.sqrt(6.0 / (shape[0] + shape[1]))
        arr = rng.uniform(-limit, limit, size=shape)
    else:
        arr = np.zeros(shape)
    return arr.astype(np.float32).astype(np.float64)


def init_params(spec: ModelSpec, seed: int = 0) -> dict[str, Tensor]:
    """Fresh parameters; each tensor drawn from its own named stream,
    so the result does not depend on construction order."""
    params = {}
    for name, shape in param_shapes(spec).items():
        rng = rng_for(seed, f"init/{name}")
        params[name] = Tensor(_draw(name, shape, rng), requires_grad=True)
    return params


def save_params(path: str, params: dict[str, Tensor], spec: ModelSpec) -> None:
    names = sorted(params)
    blobs = []
    lines = [_FORMAT_TAG, "spec=" + spec.to_json()]
    offset = 0
    for name in names:
        arr = np.ascontiguousarray(params[name].data, dtype="<f4")
        raw = arr.tobytes()
        shape = ",".join(str(s) for s in params[name].data.shape)
        lines.append(f"tensor={name}|{shape}|{offset}|{len(raw)}")
        blobs.append(raw)
        offset += len(raw)
    header = ("\n".join(lines) + "\n").encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(b"\x00")
        for raw in blobs:
            fh.write(raw)


def load_params(path: str) -> tuple[dict[str, Tensor], ModelSpec]:
    try:
        with open(path, "rb") as fh:
            payload = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc.strerror}") from exc
    nul = payload.find(b"\x00")
    if nul < 0:
        raise DataError(f"{path}: not a parameter checkpoint (no manifest end)")
    try:
        lines = payload[:nul].decode("utf-8").splitlines()
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: bad manifest encoding") from exc
    if not lines or lines[0] != _FORMAT_TAG:
        raise DataError(f"{path}: unsupported checkpoint format")
    if len(lines) < 2 or not lines[1].startswith("spec="):
        raise DataError(f"{path}: manifest missing model spec")
    spec = ModelSpec.from_json(lines[1][len("spec="):])
    blob = payload[nul + 1:]
    params: dict[str, Tensor] = {}
    for line in lines[2:]:
        if not line.startswith("tensor="):
            raise DataError(f"{path}: bad manifest line {line!r}")
        name, shape_s, off_s, len_s = line[len("tensor="):].split("|")
        shape = tuple(int(s) for s in shape_s.split(",") if s)
        off, nbytes = int(off_s), int(len_s)
        if off + nbytes > len(blob):
            raise DataError(f"{path}: tensor {name} extends past end of file")
        arr = np.frombuffer(blob[off:off + nbytes], dtype="<f4")
        expected = int(np.prod(shape)) if shape else 1
        if arr.size != expected:
            raise DataError(
                f"{path}: tensor {name} has {arr.size} values, expected {expected}")
        data = arr.reshape(shape).astype(np.float64)
        params[name] = Tensor(data, requires_grad=True)
    return params, spec
