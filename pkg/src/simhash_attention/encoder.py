"""Minimal post-layer-norm transformer encoder with switchable attention scores.

Default sizes follow the BERT-Tiny shape: hidden 128, 2 layers, 2 heads,
intermediate 512 (so head_dim is 64). Each layer is
attention -> add & norm -> GELU feed-forward -> add & norm. Weights are random
(normal, std 0.02; biases zero); there are no task heads and no dropout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import erf

from ._random import make_rng
from .attention import FULL, LSH, AttentionInputs, attention_output, full_scores, lsh_scores
from .errors import ConfigError, InputError
from .instrumentation import OpCounters, attention_counters
from .simhash import HashFamily, LshConfig, build_hash_family

INIT_STD = 0.02
LAYER_NORM_EPS = 1e-12


@dataclass(frozen=True)
class EncoderConfig:
    hidden_size: int = 128
    num_layers: int = 2
    num_heads: int = 2
    intermediate_size: int = 512
    vocab_size: int = 1024
    max_seq_len: int = 128
    attention_mode: str = FULL
    lsh: Optional[LshConfig] = None
    seed: int = 0

    def __post_init__(self):
        for name in ("hidden_size", "num_layers", "num_heads", "intermediate_size", "vocab_size", "max_seq_len"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.hidden_size % self.num_heads:
            raise ConfigError(f"hidden_size {self.hidden_size} is not divisible by num_heads {self.num_heads}")
        if self.attention_mode not in (FULL, LSH):
            raise ConfigError(f"attention_mode must be '{FULL}' or '{LSH}', got {self.attention_mode!r}")
        if self.attention_mode == LSH and self.lsh is None:
            raise ConfigError("attention_mode 'lsh' requires an LshConfig")
        if self.lsh is not None and self.lsh.dim != self.head_dim:
            raise ConfigError(f"lsh.dim {self.lsh.dim} must equal head_dim {self.head_dim}")

    @property
    def head_dim(self) -> int:
        return self.hidden_size // self.num_heads


@dataclass
class LayerWeights:
    wq: np.ndarray
    bq: np.ndarray
    wk: np.ndarray
    bk: np.ndarray
    wv: np.ndarray
    bv: np.ndarray
    wo: np.ndarray
    bo: np.ndarray
    attn_ln_gamma: np.ndarray
    attn_ln_beta: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    ffn_ln_gamma: np.ndarray
    ffn_ln_beta: np.ndarray


@dataclass
class EncoderState:
    config: EncoderConfig
    token_embeddings: np.ndarray
    position_embeddings: np.ndarray
    layers: list[LayerWeights]
    family: Optional[HashFamily] = None

    def parameters(self):
        """All parameter arrays in a fixed order."""
        yield self.token_embeddings
        yield self.position_embeddings
        for layer in self.layers:
            yield from vars(layer).values()


@dataclass
class EncoderOutput:
    hidden: np.ndarray
    counters: OpCounters
    # per layer: attention sub-layer output after the output projection,
    # before the residual add
    attention_outputs: list[np.ndarray] = field(default_factory=list)


def init_encoder(config: EncoderConfig) -> EncoderState:
    rng = make_rng(config.seed, 0)
    h, f = config.hidden_size, config.intermediate_size

    def normal(*shape):
        return rng.normal(0.0, INIT_STD, size=shape)

    layers = []
    for _ in range(config.num_layers):
        layers.append(
            LayerWeights(
                wq=normal(h, h), bq=np.zeros(h),
                wk=normal(h, h), bk=np.zeros(h),
                wv=normal(h, h), bv=np.zeros(h),
                wo=normal(h, h), bo=np.zeros(h),
                attn_ln_gamma=np.ones(h), attn_ln_beta=np.zeros(h),
                w1=normal(h, f), b1=np.zeros(f),
                w2=normal(f, h), b2=np.zeros(h),
                ffn_ln_gamma=np.ones(h), ffn_ln_beta=np.zeros(h),
            )
        )
    return EncoderState(
        config=config,
        token_embeddings=normal(config.vocab_size, h),
        position_embeddings=normal(config.max_seq_len, h),
        layers=layers,
        family=build_hash_family(config.lsh) if config.lsh is not None else None,
    )


def layer_norm(x, gamma=None, beta=None, eps=LAYER_NORM_EPS):
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    y = (x - mean) / np.sqrt(var + eps)
    if gamma is not None:
        y = y * gamma
    if beta is not None:
        y = y + beta
    return y


def gelu(x):
    return 0.5 * x * (1.0 + erf(x / math.sqrt(2.0)))


def _split_heads(x, num_heads):
    L, h = x.shape
    return x.reshape(L, num_heads, h // num_heads).transpose(1, 0, 2)[None]


def _merge_heads(x):
    _, H, L, dh = x.shape
    return x[0].transpose(1, 0, 2).reshape(L, H * dh)


def self_attention(state: EncoderState, layer: LayerWeights, x, mode, lsh_masks=None):
    """Attention sub-layer output (before residual) and its op counters."""
    cfg = state.config
    inputs = AttentionInputs(
        _split_heads(x @ layer.wq + layer.bq, cfg.num_heads),
        _split_heads(x @ layer.wk + layer.bk, cfg.num_heads),
        _split_heads(x @ layer.wv + layer.bv, cfg.num_heads),
    )
    if mode == FULL:
        scores = full_scores(inputs)
    else:
        masks = None
        if lsh_masks is not None:
            masks = np.broadcast_to(np.asarray(lsh_masks, dtype=bool), inputs.shape[:2] + (x.shape[0],) * 2)
        scores = lsh_scores(inputs, state.family, masks=masks)
    counters = attention_counters(scores, cfg.head_dim, cfg.lsh)
    context = attention_output(scores, inputs.V, cfg.head_dim)
    return _merge_heads(context) @ layer.wo + layer.bo, counters


def encoder_forward(state: EncoderState, tokens, mode: Optional[str] = None, *, lsh_masks=None) -> EncoderOutput:
    """Run the encoder on one token sequence; returns ``(seq_len, hidden)`` states.

    ``mode`` overrides ``config.attention_mode``. ``lsh_masks`` (broadcastable
    to ``(1, heads, L, L)``) replaces hashing with a fixed collision mask in
    every layer.
    """
    cfg = state.config
    mode = mode or cfg.attention_mode
    if mode not in (FULL, LSH):
        raise ConfigError(f"unknown attention mode {mode!r}")
    if mode == LSH and state.family is None and lsh_masks is None:
        raise ConfigError("lsh mode needs an LshConfig in the encoder config")
    tokens = np.asarray(tokens)
    if tokens.ndim != 1 or tokens.size == 0:
        raise InputError(f"tokens must be a non-empty 1-d sequence, got shape {tokens.shape}")
    if not np.issubdtype(tokens.dtype, np.integer):
        raise InputError("token ids must be integers")
    if tokens.min() < 0 or tokens.max() >= cfg.vocab_size:
        raise InputError(f"token ids must lie in [0, {cfg.vocab_size})")
    if tokens.size > cfg.max_seq_len:
        raise InputError(f"sequence length {tokens.size} exceeds max_seq_len {cfg.max_seq_len}")

    x = state.token_embeddings[tokens] + state.position_embeddings[: tokens.size]
    counters = OpCounters()
    attention_outputs = []
    for layer in state.layers:
        attn, c = self_attention(state, layer, x, mode, lsh_masks)
        counters = counters + c
        attention_outputs.append(attn)
        x = layer_norm(x + attn, layer.attn_ln_gamma, layer.attn_ln_beta)
        ff = gelu(x @ layer.w1 + layer.b1) @ layer.w2 + layer.b2
        x = layer_norm(x + ff, layer.ffn_ln_gamma, layer.ffn_ln_beta)
    return EncoderOutput(hidden=x, counters=counters, attention_outputs=attention_outputs)
