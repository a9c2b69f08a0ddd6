"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback. ``SIMHASH_ATTENTION_BACKEND`` (``auto``, ``cython``, ``python``)
overrides the choice at import time.
"""
import importlib
import os

import numpy as np

ENV_VAR = "SIMHASH_ATTENTION_BACKEND"
_MODULES = {"cython": "simhash_attention._ckernels", "python": "simhash_attention._pykernels"}


class Kernels:
    """Thin adapter that coerces dtypes/contiguity before calling a backend module."""

    def __init__(self, module):
        self._mod = module
        self.name = module.NAME

    def hash_assignments(self, X, projections, coeffs, table_size):
        return self._mod.hash_assignments(
            np.ascontiguousarray(X, dtype=np.float64),
            np.ascontiguousarray(projections, dtype=np.float64),
            np.ascontiguousarray(coeffs, dtype=np.int64),
            int(table_size),
        )

    def collision_from_assignments(self, assignments):
        return self._mod.collision_from_assignments(np.ascontiguousarray(assignments, dtype=np.int64))

    def head_scores(self, Q, K, mask):
        mask = np.ascontiguousarray(mask, dtype=bool)
        if self.name == "cython":
            mask = mask.view(np.uint8)
        return self._mod.head_scores(
            np.ascontiguousarray(Q, dtype=np.float64),
            np.ascontiguousarray(K, dtype=np.float64),
            mask,
        )

    def __repr__(self):
        return f"Kernels({self.name!r})"


def available():
    """Names of the backends that import in this environment."""
    names = []
    for name, path in _MODULES.items():
        try:
            importlib.import_module(path)
        except ImportError:
            continue
        names.append(name)
    return names


def load(name="auto"):
    if name == "auto":
        try:
            return Kernels(importlib.import_module(_MODULES["cython"]))
        except ImportError:
            return Kernels(importlib.import_module(_MODULES["python"]))
    if name not in _MODULES:
        raise ValueError(f"unknown backend {name!r}; expected one of auto, {', '.join(_MODULES)}")
    return Kernels(importlib.import_module(_MODULES[name]))


kernels = load(os.environ.get(ENV_VAR, "auto"))
