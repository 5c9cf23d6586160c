"""Named parameter tensors and their JSON checkpoint format."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .tensor import Tensor

CHECKPOINT_VERSION = 1


class ParameterSet:
    """Ordered mapping of unique names to fixed-shape float64 arrays."""

    def __init__(self, arrays=None):
        self._arrays: dict[str, np.ndarray] = {}
        for name, arr in (arrays or {}).items():
            self.add(name, arr)

    def add(self, name: str, array) -> None:
        if name in self._arrays:
            raise KeyError(f"duplicate parameter name {name!r}")
        self._arrays[name] = np.array(array, dtype=np.float64)

    def __getitem__(self, name):
        return self._arrays[name]

    def __setitem__(self, name, array):
        array = np.asarray(array, dtype=np.float64)
        if name not in self._arrays:
            raise KeyError(name)
        if array.shape != self._arrays[name].shape:
            raise ValueError(f"shape of {name!r} is fixed at {self._arrays[name].shape}")
        self._arrays[name] = array.copy()

    def __contains__(self, name):
        return name in self._arrays

    def __iter__(self):
        return iter(self._arrays)

    def __len__(self):
        return len(self._arrays)

    def names(self):
        return list(self._arrays)

    def items(self):
        return self._arrays.items()

    def copy(self) -> "ParameterSet":
        return ParameterSet({k: v.copy() for k, v in self._arrays.items()})

    def size(self) -> int:
        return int(sum(v.size for v in self._arrays.values()))

    def leaves(self) -> dict[str, Tensor]:
        """Fresh gradient-tracking leaf tensors, one per parameter."""
        return {k: Tensor(v, requires_grad=True, name=k) for k, v in self._arrays.items()}

    def flat(self) -> np.ndarray:
        return np.concatenate([v.ravel() for v in self._arrays.values()])

    def set_flat(self, vec) -> None:
        vec = np.asarray(vec, dtype=np.float64)
        pos = 0
        for k, v in self._arrays.items():
            self._arrays[k] = vec[pos : pos + v.size].reshape(v.shape).copy()
            pos += v.size
        if pos != vec.size:
            raise ValueError("flat vector length does not match parameter count")

    def equal(self, other: "ParameterSet") -> bool:
        return self.names() == other.names() and all(
            np.array_equal(self[k], other[k]) for k in self.names()
        )


def checkpoint_dict(params: ParameterSet, architecture: dict, training_meta: dict) -> dict:
    return {
        "version": CHECKPOINT_VERSION,
        "architecture": architecture,
        "tensors": [
            {"name": k, "shape": list(v.shape), "data": v.ravel().tolist()}
            for k, v in params.items()
        ],
        "training_meta": training_meta,
    }


def save_checkpoint(path, params: ParameterSet, architecture: dict, training_meta: dict) -> None:
    # json writes floats with repr(), which round-trips float64 exactly
    text = json.dumps(checkpoint_dict(params, architecture, training_meta), indent=1, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_checkpoint(path):
    """Returns ``(params, architecture, training_meta)``."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
    params = ParameterSet()
    for entry in doc["tensors"]:
        params.add(entry["name"], np.array(entry["data"], dtype=np.float64).reshape(entry["shape"]))
    return params, doc["architecture"], doc["training_meta"]
