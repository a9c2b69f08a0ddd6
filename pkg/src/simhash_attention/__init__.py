"""SimHash LSH approximation of transformer self-attention scores."""
from ._backend import kernels as _kernels
from .attention import (
    AttentionInputs,
    ScoreMatrix,
    attention_output,
    full_scores,
    lsh_scores,
    lsh_scores_grad,
)
from .encoder import EncoderConfig, encoder_forward, init_encoder
from .errors import ConfigError, DomainError, InputError, NumericError, ShapeError
from .instrumentation import (
    OpCounters,
    SweepRecord,
    baseline_dot_count,
    baseline_flops,
    count_lsh_dot_products,
    lsh_flops_model,
    time_attention,
)
from .simhash import (
    BucketTable,
    HashFamily,
    LshConfig,
    analytic_collision_probability,
    build_hash_family,
    collision_matrix,
    hash_all,
    monte_carlo_collision_rate,
    qk_collision_mask,
    sign_signature,
    single_band_agreement,
    uniform_hash,
)

BACKEND = _kernels.name

__version__ = "0.1.0"
