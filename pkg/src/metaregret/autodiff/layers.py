"""Composite layers built from the tensor primitives."""

from __future__ import annotations

from . import tensor as ad


def linear(x, weight, bias=None):
    out = ad.matmul(x, weight)
    return out if bias is None else ad.add(out, bias)


def lstm_cell(x, h, c, weight, bias):
    """One LSTM step.

    ``weight`` has shape ``(in + hidden, 4 * hidden)`` with gate blocks ordered
    input, forget, candidate, output.  Leading batch dimensions of ``x``, ``h``
    and ``c`` are carried through.
    """
    hidden = ad.value(h).shape[-1]
    if ad.value(weight).shape != (ad.value(x).shape[-1] + hidden, 4 * hidden):
        raise ValueError(
            f"lstm weight shape {ad.value(weight).shape} does not match "
            f"input {ad.value(x).shape[-1]} + hidden {hidden}"
        )
    z = linear(ad.concat([x, h], axis=-1), weight, bias)
    i = ad.sigmoid(z[..., 0:hidden])
    f = ad.sigmoid(z[..., hidden : 2 * hidden])
    g = ad.tanh(z[..., 2 * hidden : 3 * hidden])
    o = ad.sigmoid(z[..., 3 * hidden : 4 * hidden])
    c_new = f * c + i * g
    h_new = o * ad.tanh(c_new)
    return h_new, c_new
