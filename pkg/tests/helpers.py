"""Shared test oracles.

The gradient oracle is central finite differences in float64, independent
of the tape machinery it checks: it re-runs the caller's forward closure
from scratch for every perturbed coordinate.
"""

import numpy as np

from slate_rank.diffcore import Tape, Tensor, backward


def numeric_grad(forward, arr, h=1e-5):
    """Central finite-difference gradient of ``forward()`` wrt ``arr``.

    ``forward`` must return a float and read ``arr`` in place; each
    coordinate is perturbed by +-h.
    """
    grad = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    while not it.finished:
        ix = it.multi_index
        orig = arr[ix]
        arr[ix] = orig + h
        f_plus = forward()
        arr[ix] = orig - h
        f_minus = forward()
        arr[ix] = orig
        grad[ix] = (f_plus - f_minus) / (2.0 * h)
        it.iternext()
    return grad


def max_rel_err(analytic, numeric, floor=1.0):
    """Worst-case relative error with a unit floor on the denominator."""
    denom = np.maximum(floor, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / denom))


def check_gradients(build_loss, arrays, tol, h=1e-5):
    """Compare tape gradients against the finite-difference oracle.

    ``build_loss(tensors)`` gets a dict name -> Tensor (requires_grad)
    wrapping float64 copies of ``arrays`` and must return a scalar loss
    Tensor computed on the tape it is also given:
    ``build_loss(tape, tensors) -> Tensor``.
    Returns the worst relative error across all arrays.
    """
    arrays = {k: np.array(v, dtype=np.float64) for k, v in arrays.items()}

    def run():
        tape = Tape()
        tensors = {k: Tensor(v, requires_grad=True) for k, v in arrays.items()}
        loss = build_loss(tape, tensors)
        return tape, tensors, loss

    tape, tensors, loss = run()
    backward(tape, loss)
    worst = 0.0
    for name, arr in arrays.items():
        numeric = numeric_grad(lambda: float(run()[2].data), arr, h=h)
        analytic = tensors[name].grad
        if analytic is None:
            analytic = np.zeros_like(arr)
        worst = max(worst, max_rel_err(analytic, numeric))
    assert worst < tol, f"gradient mismatch: max rel err {worst:.3e} >= {tol}"
    return worst
