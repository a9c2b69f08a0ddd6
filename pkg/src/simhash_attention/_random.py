import numpy as np

_MAX_SEED = 2**64


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed < _MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def make_rng(seed, *stream):
    """Return a PCG64 generator for the named sub-stream ``stream`` of ``seed``.

    Sub-streams are independent of each other and of the order in which they
    are requested, so callers can derive per-trial or per-chunk generators
    without any shared state.
    """
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed, *stream):
    """A 64-bit seed for sub-stream ``stream`` of ``seed`` (e.g. one per execution)."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(s) for s in stream))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
