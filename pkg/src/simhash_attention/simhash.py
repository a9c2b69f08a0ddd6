"""SimHash locality-sensitive hashing with banded sign signatures.

A hash function is ``r`` random Gaussian hyperplanes ("bands") followed by a
scalar hash ``f(s) = (sum of C_b over bands with s_b = +1) mod m``. A family
holds ``n`` such functions; two vectors collide if any function puts them in
the same bucket. Bucket ids are 0-based, in ``[0, m)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from ._random import check_seed, make_rng
from .errors import ConfigError, DomainError, ShapeError

# sub-stream ids under one seed
_STREAM_PROJECTIONS = 0
_STREAM_COEFFS = 1
_STREAM_MONTE_CARLO = 2


@dataclass(frozen=True)
class LshConfig:
    """Bands ``r``, table size ``m``, hash-function count ``n``, dimension ``d``."""

    bands: int
    table_size: int
    num_hash_fns: int
    dim: int
    seed: int = 0

    def __post_init__(self):
        for name, lo in (("bands", 1), ("table_size", 2), ("num_hash_fns", 1), ("dim", 1)):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigError(f"{name} must be an integer, got {value!r}")
            if value < lo:
                raise ConfigError(f"{name} must be >= {lo}, got {value}")
        try:
            check_seed(self.seed)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True, eq=False)
class HashFamily:
    """Projection bank ``(n, r, d)`` and scalar-hash coefficients ``(n, r)``.

    Both arrays are read-only; a family can be shared freely between threads.
    """

    config: LshConfig
    projections: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)

    @property
    def bands(self):
        return self.config.bands

    @property
    def table_size(self):
        return self.config.table_size

    @property
    def num_hash_fns(self):
        return self.config.num_hash_fns

    @property
    def dim(self):
        return self.config.dim

    def identical_to(self, other: HashFamily) -> bool:
        return (
            self.config == other.config
            and np.array_equal(self.projections, other.projections)
            and np.array_equal(self.coeffs, other.coeffs)
        )


@dataclass
class BucketTable:
    """Per-function bucket assignment of ``N`` vectors.

    ``assignments[k, v]`` is the bucket of vector ``v`` under function ``k``;
    ``buckets[k]`` maps each occupied bucket id to its sorted vector indices.
    """

    assignments: np.ndarray
    buckets: list[dict[int, list[int]]]

    @classmethod
    def from_assignments(cls, assignments: np.ndarray) -> BucketTable:
        buckets = []
        for row in assignments:
            table: dict[int, list[int]] = {}
            for v, bucket in enumerate(row.tolist()):
                table.setdefault(bucket, []).append(v)
            buckets.append(table)
        return cls(assignments=assignments, buckets=buckets)

    @property
    def n_vectors(self):
        return self.assignments.shape[1]


def build_hash_family(config: LshConfig) -> HashFamily:
    """Draw the projection bank and coefficients for ``config`` from its seed.

    Projections are i.i.d. standard normal; coefficients are uniform on
    ``{1, ..., m}``, independently per band and per hash function.
    """
    if not isinstance(config, LshConfig):
        raise ConfigError(f"expected LshConfig, got {type(config).__name__}")
    n, r, d, m = config.num_hash_fns, config.bands, config.dim, config.table_size
    projections = make_rng(config.seed, _STREAM_PROJECTIONS).standard_normal((n, r, d))
    coeffs = make_rng(config.seed, _STREAM_COEFFS).integers(1, m, size=(n, r), endpoint=True, dtype=np.int64)
    projections.flags.writeable = False
    coeffs.flags.writeable = False
    return HashFamily(config=config, projections=projections, coeffs=coeffs)


def _check_fn_index(family, fn_index):
    if not 0 <= fn_index < family.num_hash_fns:
        raise ShapeError(f"fn_index {fn_index} out of range for {family.num_hash_fns} hash functions")


def _as_matrix(V, dim, name="V"):
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2 or V.shape[1] != dim:
        raise ShapeError(f"{name} must have shape (N, {dim}), got {V.shape}")
    return V


def sign_signature(x, family: HashFamily, fn_index: int) -> np.ndarray:
    """Signs of ``<g_{fn_index, b}, x>`` over the bands, as int8 in {-1, +1}.

    A zero inner product maps to +1.
    """
    _check_fn_index(family, fn_index)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (family.dim,):
        raise ShapeError(f"x must have shape ({family.dim},), got {x.shape}")
    # sequential accumulation, same as the kernels
    values = np.cumsum(family.projections[fn_index] * x, axis=-1)[:, -1]
    return np.where(values >= 0.0, 1, -1).astype(np.int8)


def uniform_hash(s, family: HashFamily, fn_index: int) -> int:
    """Scalar bucket id ``(sum of C_b over positive bands) mod m``."""
    _check_fn_index(family, fn_index)
    s = np.asarray(s)
    if s.shape != (family.bands,):
        raise ShapeError(f"signature must have length {family.bands}, got shape {s.shape}")
    coeffs = family.coeffs[fn_index]
    total = int(np.sum(np.where(s > 0, coeffs, 0), dtype=np.int64))
    return total % family.table_size


def hash_all(V, family: HashFamily, *, backend=None) -> BucketTable:
    """Hash every row of ``V`` (N x d) under every function of ``family``."""
    V = _as_matrix(V, family.dim)
    kernels = backend or _backend.kernels
    assignments = kernels.hash_assignments(V, family.projections, family.coeffs, family.table_size)
    return BucketTable.from_assignments(assignments)


def collision_matrix(V, family: HashFamily, *, backend=None) -> np.ndarray:
    """Boolean N x N matrix, true where two rows share a bucket under some function.

    Symmetric with an all-true diagonal.
    """
    V = _as_matrix(V, family.dim)
    kernels = backend or _backend.kernels
    assignments = kernels.hash_assignments(V, family.projections, family.coeffs, family.table_size)
    return kernels.collision_from_assignments(assignments)


def qk_collision_mask(Q, K, family: HashFamily, *, backend=None) -> np.ndarray:
    """Query-key block of the collision matrix over the stacked ``[Q; K]``.

    The full ``2L x 2L`` matrix is built and the top-right ``L x L`` block
    returned; ``mask[i, j]`` is true when query ``i`` and key ``j`` collide.
    """
    Q = _as_matrix(Q, family.dim, "Q")
    K = _as_matrix(K, family.dim, "K")
    if Q.shape[0] != K.shape[0]:
        raise ShapeError(f"Q and K need the same number of rows, got {Q.shape[0]} and {K.shape[0]}")
    L = Q.shape[0]
    stacked = collision_matrix(np.vstack([Q, K]), family, backend=backend)
    return np.ascontiguousarray(stacked[:L, L:])


def _check_angle(theta):
    theta = float(theta)
    if not 0.0 <= theta <= math.pi:
        raise DomainError(f"angle must lie in [0, pi], got {theta}")
    return theta


def single_band_agreement(theta: float) -> float:
    """Probability that one random hyperplane does not separate two vectors at angle ``theta``."""
    return 1.0 - _check_angle(theta) / math.pi


def analytic_collision_probability(theta: float, config: LshConfig) -> float:
    """Probability of at least one shared bucket over ``n`` functions.

    ``1 - (1 - min(1, (1 - theta/pi)^r + 1/m))^n``. The clamp keeps the
    per-function term a probability; unclamped it exceeds 1 near ``theta = 0``.
    """
    per_band = single_band_agreement(theta)
    per_fn = min(1.0, per_band**config.bands + 1.0 / config.table_size)
    return 1.0 - (1.0 - per_fn) ** config.num_hash_fns


def pairs_at_angle(rng, theta, dim, count):
    """``count`` pairs of unit vectors ``(a, b)`` with angle exactly ``theta``.

    ``a`` is uniform on the sphere and ``b = cos(theta) a + sin(theta) w`` with
    ``w`` a random unit vector orthogonal to ``a``.
    """
    theta = _check_angle(theta)
    if dim == 1:
        if theta not in (0.0, math.pi):
            raise DomainError("in one dimension only angles 0 and pi exist")
        a = np.where(rng.standard_normal((count, 1)) >= 0, 1.0, -1.0)
        return a, a * (1.0 if theta == 0.0 else -1.0)
    a = rng.standard_normal((count, dim))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    w = rng.standard_normal((count, dim))
    w -= np.sum(w * a, axis=1, keepdims=True) * a
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    b = math.cos(theta) * a + math.sin(theta) * w
    return a, b


def monte_carlo_collision_rate(theta, config: LshConfig, trials: int, seed: int, *, chunk_size=4096) -> float:
    """Fraction of random angle-``theta`` pairs that share a bucket.

    Each trial draws its own hash family (same ``r, m, n, d`` as ``config``).
    Trials are processed in chunks whose generators derive from
    ``(seed, chunk index)``, so the result depends only on the arguments.
    """
    theta = _check_angle(theta)
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    n, r, d, m = config.num_hash_fns, config.bands, config.dim, config.table_size
    hits = 0
    for chunk, start in enumerate(range(0, trials, chunk_size)):
        count = min(chunk_size, trials - start)
        rng = make_rng(seed, _STREAM_MONTE_CARLO, chunk)
        a, b = pairs_at_angle(rng, theta, d, count)
        G = rng.standard_normal((count, n, r, d))
        C = rng.integers(1, m, size=(count, n, r), endpoint=True, dtype=np.int64)
        bucket_a = (np.where(np.einsum("tnrd,td->tnr", G, a) >= 0.0, C, 0).sum(axis=-1)) % m
        bucket_b = (np.where(np.einsum("tnrd,td->tnr", G, b) >= 0.0, C, 0).sum(axis=-1)) % m
        hits += int(np.count_nonzero(np.any(bucket_a == bucket_b, axis=1)))
    return hits / trials
