"""Minimal reverse-mode autodiff: tensors, an op tape, and Adam."""

from .optim import Adam, AdamState, adam_step
from .tensor import Tape, TapeNode, Tensor, backward

__all__ = ["Adam", "AdamState", "adam_step", "Tape", "TapeNode", "Tensor", "backward"]
