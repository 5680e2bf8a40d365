"""Reverse-mode differentiable tensors over numpy arrays.

A ``Tape`` records every operation it executes; ``backward`` replays the
record in reverse and accumulates gradients into every ``requires_grad``
tensor reachable from the loss. Batches ride along as leading axes: an op
documented for ``[K, d]`` also accepts ``[B, K, d]`` where that is noted.

All math is plain single-threaded numpy, so results are deterministic for
a given input. float64 is used for verification tests; float32 is fine
for training throughput (the dtype of the inputs is preserved).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import ConfigError, DataError, ShapeError, UsageError


class Tensor:
    """A dense array plus a gradient slot.

    ``data`` is the row-major numpy array, ``grad`` is either None or an
    array of identical shape. Set ``requires_grad=True`` on parameters
    (and any input whose gradient you want retained by ``backward``).
    """

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float64)
        self.data = arr
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


@dataclass
class TapeNode:
    """One recorded op: inputs precede the node, output is produced by it."""

    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    # maps upstream grad (shape of output) to per-input grads (None = no flow)
    backward: Callable[[np.ndarray], Sequence[np.ndarray | None]]


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a broadcast gradient back to ``shape``."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # piecewise form avoids overflow in exp for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Tape:
    """Ordered operation record for one forward/backward pass.

    Ops are methods so the recording context is explicit at every call
    site. Construct with ``record=False`` for inference-only forwards;
    values are computed but nothing is recorded.
    """

    def __init__(self, record: bool = True):
        self.record = record
        self.nodes: list[TapeNode] = []

    # ------------------------------------------------------------------
    # plumbing

    def _emit(self, op, inputs, out_data, backward_fn) -> Tensor:
        out = Tensor(out_data, requires_grad=any(t.requires_grad for t in inputs))
        if self.record:
            self.nodes.append(TapeNode(op, tuple(inputs), out, backward_fn))
        return out

    def constant(self, data) -> Tensor:
        return Tensor(data, requires_grad=False)

    # ------------------------------------------------------------------
    # arithmetic

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeError(f"matmul: incompatible shapes {a.shape} x {b.shape}")
        out = a.data @ b.data

        def bwd(g):
            return g @ b.data.T, a.data.T @ g

        return self._emit("matmul", (a, b), out, bwd)

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        out = a.data + b.data

        def bwd(g):
            return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

        return self._emit("add", (a, b), out, bwd)

    def sub(self, a: Tensor, b: Tensor) -> Tensor:
        out = a.data - b.data

        def bwd(g):
            return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

        return self._emit("sub", (a, b), out, bwd)

    def mul(self, a: Tensor, b: Tensor) -> Tensor:
        out = a.data * b.data

        def bwd(g):
            return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

        return self._emit("mul", (a, b), out, bwd)

    def scale(self, x: Tensor, c: float) -> Tensor:
        out = x.data * c

        def bwd(g):
            return (g * c,)

        return self._emit("scale", (x,), out, bwd)

    def linear(self, x: Tensor, w: Tensor, b: Tensor) -> Tensor:
        """x @ w + b with the bias broadcast over rows."""
        return self.add(self.matmul(x, w), b)

    # ------------------------------------------------------------------
    # shape ops

    def reshape(self, x: Tensor, shape) -> Tensor:
        old = x.shape
        out = x.data.reshape(shape)

        def bwd(g):
            return (g.reshape(old),)

        return self._emit("reshape", (x,), out, bwd)

    def concat(self, xs: Sequence[Tensor], axis: int = -1) -> Tensor:
        first = xs[0].shape
        ax = axis % len(first)
        for x in xs[1:]:
            other = x.shape
            if len(other) != len(first) or any(
                other[i] != first[i] for i in range(len(first)) if i != ax
            ):
                raise ShapeError(f"concat: mismatched shapes {first} vs {other} on axis {axis}")
        out = np.concatenate([x.data for x in xs], axis=ax)
        sizes = [x.shape[ax] for x in xs]
        bounds = np.cumsum([0] + sizes)

        def bwd(g):
            slicer = [slice(None)] * g.ndim
            grads = []
            for i in range(len(sizes)):
                slicer[ax] = slice(bounds[i], bounds[i + 1])
                grads.append(g[tuple(slicer)])
            return grads

        return self._emit("concat", tuple(xs), out, bwd)

    def slice_last(self, x: Tensor, start: int, stop: int) -> Tensor:
        """Columns [start:stop) along the final axis."""
        out = x.data[..., start:stop]

        def bwd(g):
            full = np.zeros_like(x.data)
            full[..., start:stop] = g
            return (full,)

        return self._emit("slice_last", (x,), out, bwd)

    # ------------------------------------------------------------------
    # reductions

    def reduce_sum(self, x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
        out = x.data.sum(axis=axis, keepdims=keepdims)

        def bwd(g):
            if axis is None:
                return (np.broadcast_to(g, x.shape).copy(),)
            gg = g if keepdims else np.expand_dims(g, axis)
            return (np.broadcast_to(gg, x.shape).copy(),)

        return self._emit("reduce_sum", (x,), out, bwd)

    def sum_pool(self, seq: Tensor) -> Tensor:
        """Columnwise sum over rows: [K, d] -> [d], batched [B, K, d] -> [B, d]."""
        if seq.data.ndim < 2 or seq.shape[-2] < 1:
            raise UsageError(f"sum_pool needs at least one row, got shape {seq.shape}")
        return self.reduce_sum(seq, axis=-2)

    def mean(self, x: Tensor) -> Tensor:
        n = x.data.size
        out = x.data.mean()

        def bwd(g):
            return (np.full_like(x.data, g / n),)

        return self._emit("mean", (x,), out, bwd)

    # ------------------------------------------------------------------
    # nonlinearities

    def activation(self, x: Tensor, kind: str) -> Tensor:
        if kind == "relu":
            out = np.maximum(x.data, 0.0)

            def bwd(g):
                return (g * (x.data > 0),)

        elif kind == "sigmoid":
            s = _sigmoid(x.data)
            out = s

            def bwd(g):
                return (g * s * (1.0 - s),)

        elif kind == "tanh":
            t = np.tanh(x.data)
            out = t

            def bwd(g):
                return (g * (1.0 - t * t),)

        else:
            raise ConfigError(f"unknown activation kind {kind!r}")
        return self._emit(f"activation[{kind}]", (x,), out, bwd)

    def relu(self, x: Tensor) -> Tensor:
        return self.activation(x, "relu")

    def sigmoid(self, x: Tensor) -> Tensor:
        return self.activation(x, "sigmoid")

    def tanh(self, x: Tensor) -> Tensor:
        return self.activation(x, "tanh")

    def softmax(self, x: Tensor) -> Tensor:
        """Softmax along the last axis, max-subtracted for stability."""
        shifted = x.data - x.data.max(axis=-1, keepdims=True)
        ex = np.exp(shifted)
        s = ex / ex.sum(axis=-1, keepdims=True)

        def bwd(g):
            dot = (g * s).sum(axis=-1, keepdims=True)
            return (s * (g - dot),)

        return self._emit("softmax", (x,), s, bwd)

    # ------------------------------------------------------------------
    # lookups

    def embedding_lookup(self, table: Tensor, indices, field: str = "") -> Tensor:
        """Gather rows of ``table`` by integer ``indices`` (any shape).

        Backward scatter-adds into only the touched rows; duplicate
        indices accumulate.
        """
        idx = np.asarray(indices)
        vocab = table.shape[0]
        if idx.size and (idx.min() < 0 or idx.max() >= vocab):
            bad = idx[(idx < 0) | (idx >= vocab)].flat[0]
            raise IndexError(
                f"embedding id {bad} out of range [0, {vocab}) for field {field or '<unnamed>'}"
            )
        out = table.data[idx]

        def bwd(g):
            full = np.zeros_like(table.data)
            np.add.at(full, idx, g)
            return (full,)

        return self._emit("embedding_lookup", (table,), out, bwd)

    # ------------------------------------------------------------------
    # recurrent cell

    def lstm_step(self, x_t: Tensor, h: Tensor, c: Tensor, params: dict) -> tuple[Tensor, Tensor]:
        """One gated-recurrence step; returns (h', c').

        ``params`` holds ``w_x`` [d_in, 4H], ``w_h`` [H, 4H], ``b`` [4H]
        with gate blocks ordered input, forget, candidate, output. Built
        from primitive ops so the backward pass needs no special casing.
        """
        w_x, w_h, b = params["w_x"], params["w_h"], params["b"]
        hidden = h.shape[-1]
        if w_x.shape[1] != 4 * hidden or w_h.shape != (hidden, 4 * hidden) or x_t.shape[-1] != w_x.shape[0]:
            raise ShapeError(
                f"lstm_step: x {x_t.shape}, h {h.shape}, w_x {w_x.shape}, w_h {w_h.shape}"
            )
        z = self.add(self.add(self.matmul(x_t, w_x), self.matmul(h, w_h)), b)
        i = self.sigmoid(self.slice_last(z, 0, hidden))
        f = self.sigmoid(self.slice_last(z, hidden, 2 * hidden))
        g = self.tanh(self.slice_last(z, 2 * hidden, 3 * hidden))
        o = self.sigmoid(self.slice_last(z, 3 * hidden, 4 * hidden))
        c_new = self.add(self.mul(f, c), self.mul(i, g))
        h_new = self.mul(o, self.tanh(c_new))
        return h_new, c_new

    # ------------------------------------------------------------------
    # losses (all reduce to scalars)

    def loss_bce(self, logits: Tensor, labels) -> Tensor:
        """Mean binary cross entropy from logits, numerically stable."""
        y = np.asarray(labels, dtype=logits.dtype)
        if not np.all((y == 0) | (y == 1)):
            raise DataError("loss_bce labels must be 0 or 1")
        return self._bce(logits, y)

    def loss_bce_soft(self, logits: Tensor, targets) -> Tensor:
        """BCE against soft targets in [0, 1] (distillation path)."""
        y = np.asarray(targets, dtype=logits.dtype)
        if y.min() < 0 or y.max() > 1:
            raise DataError("soft targets must lie in [0, 1]")
        return self._bce(logits, y)

    def _bce(self, logits: Tensor, y: np.ndarray) -> Tensor:
        z = logits.data
        if y.shape != z.shape:
            raise ShapeError(f"bce: logits {z.shape} vs labels {y.shape}")
        per = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
        n = max(per.size, 1)
        out = per.sum() / n

        def bwd(g):
            return (g * (_sigmoid(z) - y) / n,)

        return self._emit("loss_bce", (logits,), out, bwd)

    def loss_huber(self, pred: Tensor, target, delta: float, mask=None) -> Tensor:
        """Mean huber loss; ``mask`` (0/1 weights) restricts which elements count.

        Quadratic e^2/2 inside |e| <= delta, linear delta*(|e| - delta/2)
        outside; the derivative is continuous at the knee.
        """
        if delta <= 0:
            raise ConfigError(f"huber delta must be positive, got {delta}")
        t = np.asarray(target, dtype=pred.dtype)
        if t.shape != pred.shape:
            raise ShapeError(f"huber: pred {pred.shape} vs target {t.shape}")
        e = pred.data - t
        ae = np.abs(e)
        per = np.where(ae <= delta, 0.5 * e * e, delta * (ae - 0.5 * delta))
        if mask is not None:
            m = np.asarray(mask, dtype=pred.dtype)
            denom = m.sum()
            weight = m / denom if denom > 0 else m
        else:
            weight = np.full_like(per, 1.0 / max(per.size, 1))
        out = (per * weight).sum()

        def bwd(g):
            return (g * np.clip(e, -delta, delta) * weight,)

        return self._emit("loss_huber", (pred,), out, bwd)

    def loss_sim(self, u: Tensor, v: Tensor) -> Tensor:
        """Mean squared difference; gradients flow to both sides."""
        if u.shape != v.shape:
            raise ShapeError(f"loss_sim: {u.shape} vs {v.shape}")
        d = u.data - v.data
        n = max(d.size, 1)
        out = (d * d).sum() / n

        def bwd(g):
            gu = g * 2.0 * d / n
            return gu, -gu

        return self._emit("loss_sim", (u, v), out, bwd)


def backward(tape: Tape, loss: Tensor) -> None:
    """Populate ``grad`` on every requires_grad tensor reachable from ``loss``.

    Walks the tape once, in reverse execution order; a tensor's flow is
    complete exactly when the node that produced it is visited. Repeated
    calls without ``zero_grad`` accumulate into existing grads.
    """
    if loss.data.size != 1:
        raise UsageError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not tape.record:
        raise UsageError("backward on a non-recording tape")

    flowing: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    holders: dict[int, Tensor] = {id(loss): loss}

    def settle(t: Tensor, g: np.ndarray) -> None:
        if t.requires_grad:
            t.grad = np.array(g) if t.grad is None else t.grad + g

    for node in reversed(tape.nodes):
        g_out = flowing.pop(id(node.output), None)
        if g_out is None:
            continue
        holders.pop(id(node.output), None)
        settle(node.output, g_out)
        for inp, g_in in zip(node.inputs, node.backward(g_out)):
            if g_in is None:
                continue
            key = id(inp)
            if key in flowing:
                flowing[key] = flowing[key] + g_in
            else:
                flowing[key] = g_in
                holders[key] = inp
    for key, g in flowing.items():
        settle(holders[key], g)
