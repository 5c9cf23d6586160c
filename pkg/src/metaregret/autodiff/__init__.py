"""Reverse-mode automatic differentiation over float64 arrays."""

from .layers import linear, lstm_cell
from .optim import AdamMoments, adam_step, clip_by_global_norm
from .params import ParameterSet, load_checkpoint, save_checkpoint
from .tensor import (
    Tape,
    Tensor,
    add,
    backward,
    concat,
    div,
    entropy,
    exp,
    getitem,
    is_tensor,
    layer_norm,
    log,
    matmul,
    matvec,
    max_over_axis,
    mul,
    neg,
    normalize_or_uniform,
    positive_part,
    relu,
    reshape,
    sigmoid,
    slice_,
    softmax,
    sub,
    sum_,
    tanh,
    value,
)
