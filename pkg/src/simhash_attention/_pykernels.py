"""Pure numpy implementations of the hot kernels.

Same signatures and bit-identical results as the compiled ``_ckernels``
module. Every dot product is accumulated strictly left to right
(``np.cumsum`` along the feature axis) rather than through BLAS, because
the compiled loops accumulate that way too.
"""
import numpy as np

NAME = "python"


def _seqdot(a, b):
    # left-to-right sum over the last axis; np.add.reduce would pair-sum
    prod = a * b
    if prod.shape[-1] == 0:
        return np.zeros(prod.shape[:-1])
    return np.cumsum(prod, axis=-1)[..., -1]


def hash_assignments(X, projections, coeffs, table_size):
    """Bucket id of every row of ``X`` under every hash function, shape (n, N)."""
    # (n, 1, r, d) * (1, N, 1, d) -> (n, N, r)
    values = _seqdot(projections[:, None, :, :], X[None, :, None, :])
    positive = values >= 0.0
    sums = (positive * coeffs[:, None, :]).sum(axis=-1, dtype=np.int64)
    return sums % table_size


def collision_from_assignments(assignments):
    """Boolean N x N matrix: rows i, j share a bucket under some hash function."""
    n, N = assignments.shape
    out = np.zeros((N, N), dtype=bool)
    for k in range(n):
        row = assignments[k]
        out |= row[:, None] == row[None, :]
    return out


def head_scores(Q, K, mask):
    """Score matrix of one head under the row-major last-write rule.

    Visiting ``(i, j)`` writes ``<q_i, k_j>`` to both ``A[i, j]`` and
    ``A[j, i]``. For an unordered pair the later visit in row-major order
    is the one below the diagonal, so it wins whenever it is present.
    """
    L = mask.shape[0]
    A = np.zeros((L, L))
    lower = np.tril(mask)
    upper_only = np.triu(mask, 1) & ~mask.T
    for sel in (lower, upper_only):
        I, J = np.nonzero(sel)
        vals = _seqdot(Q[I], K[J])
        A[I, J] = vals
        A[J, I] = vals
    return A
