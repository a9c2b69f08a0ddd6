"""Dense and LSH-approximated attention scores.

``lsh_scores`` computes ``<q_i, k_j>`` only for query-key pairs that collide
under a :class:`~simhash_attention.simhash.HashFamily`, writing each value to
both ``A[i, j]`` and ``A[j, i]``. Collided pairs are visited in row-major
order and the last write wins, so the result is symmetric and deterministic.
Everything else stays 0 and is *not* masked out of the softmax.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _backend
from .errors import ConfigError, NumericError, ShapeError
from .simhash import HashFamily, qk_collision_mask

FULL = "full"
LSH = "lsh"


@dataclass(frozen=True)
class AttentionInputs:
    """Q, K, V tensors of shape ``(batch, heads, seq_len, head_dim)``."""

    Q: np.ndarray
    K: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        arrays = {}
        for name in ("Q", "K", "V"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            if a.ndim != 4:
                raise ShapeError(f"{name} must be 4-d (batch, heads, seq, head_dim), got shape {a.shape}")
            if not np.all(np.isfinite(a)):
                raise NumericError(f"{name} contains non-finite values")
            arrays[name] = a
        if not (arrays["Q"].shape == arrays["K"].shape == arrays["V"].shape):
            raise ShapeError(
                f"Q, K, V shapes differ: {arrays['Q'].shape}, {arrays['K'].shape}, {arrays['V'].shape}"
            )
        for name, a in arrays.items():
            object.__setattr__(self, name, a)

    @property
    def shape(self):
        return self.Q.shape

    @classmethod
    def random(cls, batch, heads, seq_len, head_dim, rng) -> AttentionInputs:
        """Standard-normal Q, K, V drawn from ``rng``."""
        size = (batch, heads, seq_len, head_dim)
        return cls(rng.standard_normal(size), rng.standard_normal(size), rng.standard_normal(size))


@dataclass
class ScoreMatrix:
    scores: np.ndarray
    mode: str
    masks: Optional[np.ndarray] = None


def full_scores(inputs: AttentionInputs) -> ScoreMatrix:
    return ScoreMatrix(scores=inputs.Q @ np.swapaxes(inputs.K, -1, -2), mode=FULL)


def lsh_scores(inputs: AttentionInputs, family: Optional[HashFamily] = None, *, masks=None, backend=None) -> ScoreMatrix:
    """LSH-approximated scores, one collision mask per (batch, head).

    Pass ``masks`` (bool, ``(batch, heads, L, L)``) instead of ``family`` to
    run the write rule on a fixed mask.
    """
    B, H, L, d = inputs.shape
    kernels = backend or _backend.kernels
    if masks is None:
        if family is None:
            raise ConfigError("lsh_scores needs a hash family or explicit masks")
        if family.dim != d:
            raise ConfigError(f"family dimension {family.dim} does not match head_dim {d}")
        masks = np.empty((B, H, L, L), dtype=bool)
        for b in range(B):
            for h in range(H):
                masks[b, h] = qk_collision_mask(inputs.Q[b, h], inputs.K[b, h], family, backend=kernels)
    else:
        masks = np.asarray(masks, dtype=bool)
        if masks.shape != (B, H, L, L):
            raise ShapeError(f"masks must have shape {(B, H, L, L)}, got {masks.shape}")

    scores = np.empty((B, H, L, L))
    for b in range(B):
        for h in range(H):
            scores[b, h] = kernels.head_scores(inputs.Q[b, h], inputs.K[b, h], masks[b, h])
    return ScoreMatrix(scores=scores, mode=LSH, masks=masks)


def softmax(x, axis=-1):
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def attention_output(scores, V, head_dim: int) -> np.ndarray:
    """``softmax(scores / sqrt(head_dim)) @ V`` per (batch, head).

    Zero entries of an LSH score matrix take part in the softmax as ``exp(0)``.
    """
    S = scores.scores if isinstance(scores, ScoreMatrix) else np.asarray(scores, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    if S.ndim != 4 or S.shape[-1] != S.shape[-2]:
        raise ShapeError(f"scores must be (batch, heads, L, L), got {S.shape}")
    if V.shape[:3] != S.shape[:3]:
        raise ShapeError(f"V shape {V.shape} incompatible with scores {S.shape}")
    if not np.all(np.isfinite(S)):
        raise NumericError("scores contain non-finite values")
    weights = softmax(S / math.sqrt(head_dim))
    return weights @ V


def write_sources(mask) -> tuple[np.ndarray, np.ndarray]:
    """Which ``(query, key)`` pair finally supplies each symmetric entry.

    Returns index arrays ``(P, R)``: for every unordered position that ends up
    written, ``<q_P, k_R>`` is its value, stored at ``(P, R)`` and ``(R, P)``.
    """
    mask = np.asarray(mask, dtype=bool)
    lower = np.tril(mask)
    upper_only = np.triu(mask, 1) & ~mask.T
    I1, J1 = np.nonzero(lower)
    I2, J2 = np.nonzero(upper_only)
    return np.concatenate([I1, I2]), np.concatenate([J1, J2])


def lsh_scores_grad(inputs: AttentionInputs, masks, upstream) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of ``sum(upstream * lsh_scores(inputs, masks=masks))`` w.r.t. Q and K.

    The masks are constants, so the map is linear in each of Q and K and the
    gradient is exact.
    """
    B, H, L, d = inputs.shape
    masks = np.asarray(masks, dtype=bool)
    upstream = np.asarray(upstream, dtype=np.float64)
    if masks.shape != (B, H, L, L):
        raise ShapeError(f"masks must have shape {(B, H, L, L)}, got {masks.shape}")
    if upstream.shape != (B, H, L, L):
        raise ShapeError(f"upstream must have shape {(B, H, L, L)}, got {upstream.shape}")

    dQ = np.zeros_like(inputs.Q)
    dK = np.zeros_like(inputs.K)
    for b in range(B):
        for h in range(H):
            P, R = write_sources(masks[b, h])
            U = upstream[b, h]
            # diagonal entries are stored once, off-diagonal ones twice
            w = np.where(P == R, U[P, R], U[P, R] + U[R, P])
            np.add.at(dQ[b, h], P, w[:, None] * inputs.K[b, h][R])
            np.add.at(dK[b, h], R, w[:, None] * inputs.Q[b, h][P])
    return dQ, dK
