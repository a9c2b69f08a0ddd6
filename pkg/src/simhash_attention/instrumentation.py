"""Dot-product counts, an analytic FLOP model, and wall-clock timing.

A ``d``-dimensional dot product is costed at ``2d`` FLOPs (one multiply and
one add per coordinate). Integer work in the scalar hash (coefficient sums
mod ``m``) is not floating point and is left out, which is why the LSH model
does not depend on the table size.
"""
from __future__ import annotations

import statistics
import time
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from .attention import FULL, LSH, AttentionInputs, full_scores, lsh_scores
from .simhash import HashFamily, LshConfig, analytic_collision_probability

WARMUP_RUNS = 10


@dataclass
class OpCounters:
    dot_products: int = 0
    flops: int = 0
    wall_time_seconds: Optional[float] = None

    def __post_init__(self):
        if self.dot_products < 0 or self.flops < 0:
            raise ValueError("counters cannot be negative")

    def __add__(self, other: OpCounters) -> OpCounters:
        if self.wall_time_seconds is None and other.wall_time_seconds is None:
            wall = None
        else:
            wall = (self.wall_time_seconds or 0.0) + (other.wall_time_seconds or 0.0)
        return OpCounters(self.dot_products + other.dot_products, self.flops + other.flops, wall)

    @property
    def kflops(self) -> float:
        return self.flops / 1000


@dataclass
class SweepRecord:
    """One row of a benchmark sweep; field order is the CSV column order."""

    bands: int
    table_size: int
    num_hash_fns: int
    batch: int
    heads: int
    seq_len: int
    head_dim: int
    seed: int
    mode: str
    kflops: float
    dot_products: float
    runs: int
    mean_time_s: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class Timing:
    mean_s: float
    std_s: float
    runs: int


def baseline_dot_count(batch: int, heads: int, seq_len: int) -> int:
    return batch * heads * seq_len**2


def baseline_flops(batch: int, heads: int, seq_len: int, head_dim: int) -> int:
    return baseline_dot_count(batch, heads, seq_len) * 2 * head_dim


def hashing_flops(config: LshConfig, batch: int, heads: int, seq_len: int) -> int:
    """Sign projections of the stacked ``[Q; K]`` (``2L`` rows) onto ``n * r`` hyperplanes."""
    return batch * heads * (2 * seq_len) * config.num_hash_fns * config.bands * (2 * config.dim)


def lsh_flops_model(config: LshConfig, batch: int, heads: int, seq_len: int, collided_pairs: int) -> int:
    """Hashing cost plus ``2d`` FLOPs per collided query-key pair."""
    if collided_pairs < 0 or collided_pairs > baseline_dot_count(batch, heads, seq_len):
        raise ValueError(f"collided_pairs={collided_pairs} outside [0, batch*heads*seq_len^2]")
    return hashing_flops(config, batch, heads, seq_len) + collided_pairs * 2 * config.dim


def count_lsh_dot_products(masks) -> int:
    """One dot product per true mask entry, summed over all (batch, head) masks."""
    return int(np.count_nonzero(masks))


def attention_counters(scores, head_dim: int, config: Optional[LshConfig] = None) -> OpCounters:
    """Counters for one score computation (a :class:`ScoreMatrix`)."""
    B, H, L, _ = scores.scores.shape
    if scores.mode == FULL:
        return OpCounters(baseline_dot_count(B, H, L), baseline_flops(B, H, L, head_dim))
    if config is None:
        raise ValueError("LSH counters need the LshConfig")
    dots = count_lsh_dot_products(scores.masks)
    return OpCounters(dots, lsh_flops_model(config, B, H, L, dots))


def time_attention(mode: str, inputs: AttentionInputs, family: Optional[HashFamily] = None,
                   runs: int = 1000, warmup: int = WARMUP_RUNS, backend=None) -> Timing:
    """Mean and standard deviation of the wall time of one score computation."""
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    if mode == FULL:
        def call():
            full_scores(inputs)
    elif mode == LSH:
        if family is None:
            raise ValueError("LSH timing needs a hash family")

        def call():
            lsh_scores(inputs, family, backend=backend)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    for _ in range(warmup):
        call()
    samples = []
    for _ in range(runs):
        t0 = time.perf_counter()
        call()
        samples.append(time.perf_counter() - t0)
    std = statistics.stdev(samples) if runs > 1 else 0.0
    return Timing(mean_s=statistics.fmean(samples), std_s=std, runs=runs)


def pairwise_angles(Q, K):
    """Angles between every query row and every key row, shape ``(..., L, L)``."""
    qn = Q / np.linalg.norm(Q, axis=-1, keepdims=True)
    kn = K / np.linalg.norm(K, axis=-1, keepdims=True)
    return np.arccos(np.clip(qn @ np.swapaxes(kn, -1, -2), -1.0, 1.0))


def expected_lsh_dot_products(inputs: AttentionInputs, config: LshConfig) -> tuple[float, float]:
    """Sum and binomial variance of the analytic collision probabilities over all query-key pairs."""
    theta = pairwise_angles(inputs.Q, inputs.K)
    p = np.array([analytic_collision_probability(t, config) for t in theta.ravel()])
    return float(p.sum()), float((p * (1.0 - p)).sum())
