"""Central finite-difference checks for the tape gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import tensor as ad
from .layers import lstm_cell

EPS = 1e-6


def relative_error(a, b, floor=1e-12) -> float:
    """``||a - b|| / max(||a||, ||b||)``, Euclidean over all entries."""
    a = np.ravel(a)
    b = np.ravel(b)
    denom = max(np.linalg.norm(a), np.linalg.norm(b), floor)
    return float(np.linalg.norm(a - b) / denom)


def numeric_gradient(f: Callable[[list], float], arrays: list, eps=EPS) -> list:
    """Central differences of the scalar ``f`` w.r.t. every entry of ``arrays``."""
    grads = []
    for k, arr in enumerate(arrays):
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            plus = [a.copy() for a in arrays]
            minus = [a.copy() for a in arrays]
            plus[k][idx] += eps
            minus[k][idx] -= eps
            g[idx] = (f(plus) - f(minus)) / (2 * eps)
        grads.append(g)
    return grads


def tape_gradient(fn: Callable, arrays: list):
    leaves = [ad.Tensor(a, requires_grad=True) for a in arrays]
    with ad.Tape() as tape:
        out = fn(*leaves)
    return float(out.value), ad.backward(tape, out, leaves)


def check_full(fn: Callable, arrays: list, eps=EPS) -> float:
    """Max-over-inputs relative error between tape and numeric gradients."""
    _, analytic = tape_gradient(fn, arrays)

    def f(arrs):
        return float(ad.value(fn(*arrs)))

    numeric = numeric_gradient(f, arrays, eps)
    return max(relative_error(a, n) for a, n in zip(analytic, numeric))


def check_directional(fn: Callable, arrays: list, rng, n_dirs=3, eps=EPS) -> float:
    """Compare ``grad . d`` against a central difference along random ``d``.

    Used for large graphs where the full Jacobian sweep is too slow.
    """
    _, analytic = tape_gradient(fn, arrays)
    worst = 0.0
    for _ in range(n_dirs):
        dirs = [rng.standard_normal(a.shape) for a in arrays]
        norm = np.sqrt(sum(float(np.sum(d * d)) for d in dirs))
        dirs = [d / norm for d in dirs]
        plus = [a + eps * d for a, d in zip(arrays, dirs)]
        minus = [a - eps * d for a, d in zip(arrays, dirs)]
        fd = (float(ad.value(fn(*plus))) - float(ad.value(fn(*minus)))) / (2 * eps)
        an = sum(float(np.sum(g * d)) for g, d in zip(analytic, dirs))
        worst = max(worst, relative_error(an, fd))
    return worst


@dataclass
class CheckResult:
    name: str
    draws: int
    max_rel_err: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err <= self.tolerance


def _weighted(fn, w):
    """Scalarise a tensor-valued primitive with fixed random weights."""
    return lambda *xs: ad.sum_(ad.mul(fn(*xs), w))


def _primitive_cases(rng):
    """(name, fn, inputs) triples for one random draw of every primitive."""
    a = rng.standard_normal((3, 4))
    b = rng.standard_normal((3, 4))
    m = rng.standard_normal((4, 5))
    v = rng.standard_normal(4)
    pos = rng.uniform(0.5, 2.0, (3, 4))
    simplex = ad.softmax(rng.standard_normal((3, 4)))
    mask = np.array([[1.0, 1.0, 1.0, 0.0]])
    w34 = rng.standard_normal((3, 4))
    w3 = rng.standard_normal(3)
    w35 = rng.standard_normal((3, 5))
    return [
        ("add", _weighted(ad.add, w34), [a, b]),
        ("sub", _weighted(ad.sub, w34), [a, b]),
        ("mul", _weighted(ad.mul, w34), [a, b]),
        ("div", _weighted(ad.div, w34), [a, pos]),
        ("matvec", _weighted(ad.matmul, w3), [a, v]),
        ("matmul", _weighted(ad.matmul, w35), [a, m]),
        ("batched_matmul", _weighted(ad.matmul, rng.standard_normal((2, 3, 5))),
         [rng.standard_normal((2, 3, 4)), m]),
        ("concat", _weighted(lambda x, y: ad.concat([x, y], axis=-1), rng.standard_normal((3, 8))), [a, b]),
        ("slice", _weighted(lambda x: x[:, 1:3], rng.standard_normal((3, 2))), [a]),
        ("sum", _weighted(lambda x: ad.sum_(x, axis=0, keepdims=True), rng.standard_normal((1, 4))), [a]),
        ("max_over_axis", _weighted(lambda x: ad.max_over_axis(x, axis=-1), w3), [a]),
        ("positive_part", _weighted(ad.relu, w34), [a]),
        ("softmax", _weighted(ad.softmax, w34), [a]),
        ("masked_softmax", _weighted(lambda x: ad.softmax(x, mask=mask), w34), [a]),
        ("sigmoid", _weighted(ad.sigmoid, w34), [a]),
        ("tanh", _weighted(ad.tanh, w34), [a]),
        ("layer_norm", _weighted(ad.layer_norm, w34), [a]),
        ("entropy", _weighted(ad.entropy, w3), [simplex]),
        ("normalize_or_uniform", _weighted(ad.normalize_or_uniform, w34), [pos]),
        ("reshape", _weighted(lambda x: ad.reshape(x, (4, 3)), rng.standard_normal((4, 3))), [a]),
    ]


def primitive_checks(draws=100, seed=0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst: dict[str, float] = {}
    for _ in range(draws):
        for name, fn, inputs in _primitive_cases(rng):
            worst[name] = max(worst.get(name, 0.0), check_full(fn, inputs))
    return [CheckResult(k, draws, e, 1e-5) for k, e in worst.items()]


def lstm_checks(draws=100, seed=1, n_in=3, hidden=4) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    single = 0.0
    chained = 0.0
    for _ in range(draws):
        x = rng.standard_normal((2, n_in))
        x2 = rng.standard_normal((2, n_in))
        h = rng.standard_normal((2, hidden)) * 0.5
        c = rng.standard_normal((2, hidden)) * 0.5
        wgt = rng.standard_normal((n_in + hidden, 4 * hidden)) * 0.5
        bias = rng.standard_normal(4 * hidden) * 0.5
        wh = rng.standard_normal((2, hidden))
        wc = rng.standard_normal((2, hidden))

        def one(x_, h_, c_, w_, b_):
            hn, cn = lstm_cell(x_, h_, c_, w_, b_)
            return ad.sum_(hn * wh) + ad.sum_(cn * wc)

        def two(x_, h_, c_, w_, b_):
            h1, c1 = lstm_cell(x_, h_, c_, w_, b_)
            h2, c2 = lstm_cell(x2, h1, c1, w_, b_)
            return ad.sum_(h2 * wh) + ad.sum_(c2 * wc)

        single = max(single, check_full(one, [x, h, c, wgt, bias]))
        chained = max(chained, check_full(two, [x, h, c, wgt, bias]))
    return [
        CheckResult("lstm_cell", draws, single, 1e-5),
        CheckResult("lstm_cell_chained", draws, chained, 1e-5),
    ]
