import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from simhash_attention import _backend
from simhash_attention.attention import (
    AttentionInputs,
    attention_output,
    full_scores,
    lsh_scores,
    lsh_scores_grad,
    softmax,
    write_sources,
)
from simhash_attention.errors import ConfigError, NumericError, ShapeError
from simhash_attention.simhash import LshConfig, build_hash_family

BACKENDS = [_backend.load(name) for name in _backend.available()]


@pytest.fixture(params=BACKENDS, ids=lambda k: k.name)
def kernels(request):
    return request.param


def random_inputs(B, H, L, d, seed=0):
    return AttentionInputs.random(B, H, L, d, np.random.default_rng(seed))


def family(d, r=2, m=64, n=1, seed=0):
    return build_hash_family(LshConfig(r, m, n, d, seed=seed))


def finite_diff_loss_grad(inputs, masks, upstream, step=1e-5):
    def loss(Q, K):
        S = lsh_scores(AttentionInputs(Q, K, inputs.V), masks=masks).scores
        return float(np.sum(upstream * S))

    grads = []
    for which in ("Q", "K"):
        base = getattr(inputs, which)
        g = np.zeros_like(base)
        for idx in np.ndindex(base.shape):
            plus, minus = base.copy(), base.copy()
            plus[idx] += step
            minus[idx] -= step
            if which == "Q":
                g[idx] = (loss(plus, inputs.K) - loss(minus, inputs.K)) / (2 * step)
            else:
                g[idx] = (loss(inputs.Q, plus) - loss(inputs.Q, minus)) / (2 * step)
        grads.append(g)
    return grads


def relative_error(analytic, numeric, floor=1e-3):
    return float(np.max(np.abs(analytic - numeric) / np.maximum(np.abs(numeric), floor)))


class TestAttentionInputs:
    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            AttentionInputs(np.zeros((1, 1, 2, 3)), np.zeros((1, 1, 2, 3)), np.zeros((1, 1, 3, 3)))

    def test_not_4d(self):
        with pytest.raises(ShapeError):
            AttentionInputs(np.zeros((2, 3)), np.zeros((2, 3)), np.zeros((2, 3)))

    def test_non_finite(self):
        Q = np.zeros((1, 1, 2, 2))
        Q[0, 0, 1, 1] = np.nan
        with pytest.raises(NumericError):
            AttentionInputs(Q, np.zeros_like(Q), np.zeros_like(Q))


class TestFullScores:
    def test_basis_keys_select_coordinates(self):
        Q = np.random.default_rng(0).standard_normal((1, 1, 4, 4))
        K = np.eye(4)[None, None]
        S = full_scores(AttentionInputs(Q, K, K)).scores
        np.testing.assert_array_equal(S, Q)

    def test_orthonormal_rows(self):
        basis, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((5, 5)))
        X = basis.T[None, None]
        S = full_scores(AttentionInputs(X, X, X)).scores
        np.testing.assert_allclose(S[0, 0], np.eye(5), atol=1e-12)

    def test_matches_triple_loop(self):
        inputs = random_inputs(1, 2, 10, 64, seed=3)
        S = full_scores(inputs)
        assert S.mode == "full"
        for h in range(2):
            expected = np.array(oracles.matmul_t(inputs.Q[0, h], inputs.K[0, h]))
            np.testing.assert_allclose(S.scores[0, h], expected, rtol=1e-6, atol=1e-12)


class TestLshScores:
    def test_all_false_mask(self, kernels):
        inputs = random_inputs(2, 2, 5, 3)
        S = lsh_scores(inputs, masks=np.zeros((2, 2, 5, 5), dtype=bool), backend=kernels)
        assert not S.scores.any()

    def test_all_true_mask_is_mirrored_lower_triangle(self, kernels):
        # row-major last write: (j, i) with j > i is visited after (i, j),
        # so every entry holds the lower-triangle dot product of Q K^T
        inputs = random_inputs(1, 2, 6, 4, seed=1)
        S = lsh_scores(inputs, masks=np.ones((1, 2, 6, 6), dtype=bool), backend=kernels).scores
        F = full_scores(inputs).scores
        for h in range(2):
            lower = np.tril(F[0, h])
            np.testing.assert_allclose(S[0, h], lower + np.tril(lower, -1).T, rtol=0, atol=1e-12)

    def test_reference_sized_instance(self, kernels):
        fam = family(64, seed=3)
        rng = np.random.default_rng(3)
        Q, K = rng.standard_normal((10, 64)), rng.standard_normal((10, 64))
        inputs = AttentionInputs(Q[None, None], K[None, None], Q[None, None])
        S = lsh_scores(inputs, fam, backend=kernels)
        mask = S.masks[0, 0]
        assert int(mask.sum()) == 23
        sym = mask | mask.T
        # brute force: 38 symmetrized positions, all nonzero
        assert int(sym.sum()) == 38
        assert np.count_nonzero(S.scores) == 38
        assert S.scores[0, 0].tolist() == oracles.lsh_head(Q, K, fam)

    def test_uses_family_per_head(self, kernels):
        inputs = random_inputs(2, 3, 7, 5, seed=4)
        fam = family(5, r=2, m=8, n=2, seed=4)
        S = lsh_scores(inputs, fam, backend=kernels)
        for b in range(2):
            for h in range(3):
                assert S.scores[b, h].tolist() == oracles.lsh_head(inputs.Q[b, h], inputs.K[b, h], fam)

    def test_dim_mismatch(self):
        with pytest.raises(ConfigError):
            lsh_scores(random_inputs(1, 1, 3, 4), family(5))

    def test_needs_family_or_masks(self):
        with pytest.raises(ConfigError):
            lsh_scores(random_inputs(1, 1, 3, 4))

    def test_mask_shape(self):
        with pytest.raises(ShapeError):
            lsh_scores(random_inputs(1, 1, 3, 4), masks=np.ones((1, 1, 3, 2), dtype=bool))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 9), st.integers(1, 6), st.integers(0, 2**32), st.floats(0.0, 1.0))
    def test_properties_on_random_masks(self, L, d, seed, density):
        rng = np.random.default_rng(seed)
        inputs = random_inputs(1, 1, L, d, seed=seed)
        masks = rng.random((1, 1, L, L)) < density
        Q, K = inputs.Q[0, 0], inputs.K[0, 0]
        for k in BACKENDS:
            S = lsh_scores(inputs, masks=masks, backend=k).scores[0, 0]
            assert np.array_equal(S, S.T)
            sym = masks[0, 0] | masks[0, 0].T
            assert not S[~sym].any()
            assert S.tolist() == oracles.row_major_scores(Q, K, masks[0, 0])
            for i, j in zip(*np.nonzero(sym)):
                assert S[i, j] in (oracles.dot(Q[i], K[j]), oracles.dot(Q[j], K[i]))


class TestWriteSources:
    def test_each_symmetric_position_once(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            mask = rng.random((6, 6)) < 0.4
            P, R = write_sources(mask)
            pos = {tuple(sorted(p)) for p in zip(P.tolist(), R.tolist())}
            assert len(pos) == len(P)
            sym = mask | mask.T
            assert pos == {(i, j) for i, j in zip(*np.nonzero(np.triu(sym)))}


class TestAttentionOutput:
    def test_zero_scores_uniform_average(self):
        V = np.random.default_rng(0).standard_normal((1, 2, 5, 3))
        out = attention_output(np.zeros((1, 2, 5, 5)), V, 3)
        np.testing.assert_allclose(out, np.broadcast_to(V.mean(axis=2, keepdims=True), V.shape), atol=1e-15)

    def test_single_token(self):
        V = np.random.default_rng(1).standard_normal((2, 2, 1, 4))
        np.testing.assert_array_equal(attention_output(np.full((2, 2, 1, 1), 3.7), V, 4), V)

    def test_matches_naive(self):
        rng = np.random.default_rng(2)
        S = rng.standard_normal((1, 1, 3, 3))
        V = rng.standard_normal((1, 1, 3, 3))
        out = attention_output(S, V, 3)
        np.testing.assert_allclose(out[0, 0], oracles.softmax_attention(S[0, 0], V[0, 0], 3), atol=1e-12)
        np.testing.assert_allclose(softmax(S / np.sqrt(3)).sum(axis=-1), 1.0, atol=1e-6)

    def test_convex_combination(self):
        inputs = random_inputs(2, 2, 8, 4, seed=5)
        S = lsh_scores(inputs, family(4, r=1, m=4, seed=5))
        out = attention_output(S, inputs.V, 4)
        lo = inputs.V.min(axis=2, keepdims=True)
        hi = inputs.V.max(axis=2, keepdims=True)
        assert np.all(out >= lo - 1e-12) and np.all(out <= hi + 1e-12)

    def test_non_finite(self):
        S = np.zeros((1, 1, 2, 2))
        S[0, 0, 0, 1] = np.inf
        with pytest.raises(NumericError):
            attention_output(S, np.zeros((1, 1, 2, 2)), 2)

    def test_degenerate_equivalence(self):
        inputs = random_inputs(1, 2, 1, 4, seed=6)
        masks = np.ones((1, 2, 1, 1), dtype=bool)
        lsh = attention_output(lsh_scores(inputs, masks=masks), inputs.V, 4)
        full = attention_output(full_scores(inputs), inputs.V, 4)
        np.testing.assert_array_equal(lsh, full)


class TestGrad:
    def test_zero_upstream(self):
        inputs = random_inputs(1, 1, 4, 3)
        masks = np.ones((1, 1, 4, 4), dtype=bool)
        dQ, dK = lsh_scores_grad(inputs, masks, np.zeros((1, 1, 4, 4)))
        assert not dQ.any() and not dK.any()

    def test_all_true_ones(self):
        inputs = random_inputs(1, 1, 4, 3, seed=1)
        masks = np.ones((1, 1, 4, 4), dtype=bool)
        U = np.ones((1, 1, 4, 4))
        dQ, dK = lsh_scores_grad(inputs, masks, U)
        fdQ, fdK = finite_diff_loss_grad(inputs, masks, U)
        assert relative_error(dQ, fdQ) <= 1e-5
        assert relative_error(dK, fdK) <= 1e-5

    def test_random_small(self):
        inputs = random_inputs(1, 2, 4, 3, seed=2)
        masks = np.random.default_rng(2).random((1, 2, 4, 4)) < 0.5
        U = np.random.default_rng(3).standard_normal((1, 2, 4, 4))
        dQ, dK = lsh_scores_grad(inputs, masks, U)
        fdQ, fdK = finite_diff_loss_grad(inputs, masks, U)
        assert relative_error(dQ, fdQ) <= 1e-5
        assert relative_error(dK, fdK) <= 1e-5

    def test_shape_errors(self):
        inputs = random_inputs(1, 1, 3, 2)
        with pytest.raises(ShapeError):
            lsh_scores_grad(inputs, np.ones((1, 1, 3, 3), dtype=bool), np.ones((1, 1, 3, 2)))
        with pytest.raises(ShapeError):
            lsh_scores_grad(inputs, np.ones((1, 1, 2, 3), dtype=bool), np.ones((1, 1, 3, 3)))
