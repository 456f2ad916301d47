import numpy as np
import pytest

from ctmkit.embeddings import EmbeddingMatrix
from ctmkit.fusion import (
    AutoencoderParams,
    encode,
    fuse,
    init_params,
    load_params,
    reconstruction_gradients,
    reconstruction_loss,
    save_params,
    train_autoencoder,
)


def emb_of(vectors, ids=None):
    vectors = np.asarray(vectors, dtype=np.float64)
    ids = ids or [f"d{i}" for i in range(vectors.shape[0])]
    return EmbeddingMatrix(ids=ids, vectors=vectors)


class TestFuse:
    def test_width(self):
        theta = np.full((4, 2), 0.5)
        fused = fuse(theta, emb_of(np.ones((4, 3))), gamma=1.0)
        assert fused.matrix.shape == (4, 5)
        assert fused.n_topics == 2 and fused.emb_dim == 3

    def test_gamma_zero_annihilates_topic_block(self):
        theta = np.full((3, 2), 0.5)
        fused = fuse(theta, emb_of(np.ones((3, 4))), gamma=0.0)
        assert np.array_equal(fused.matrix[:, :2], np.zeros((3, 2)))

    def test_gamma_one_identity(self):
        theta = np.array([[0.25, 0.75]])
        fused = fuse(theta, emb_of(np.array([[9.0, 8.0, 7.0]])), gamma=1.0)
        assert fused.matrix[0, :2].tolist() == [0.25, 0.75]

    def test_column_layout_invariants(self):
        rng = np.random.default_rng(3)
        theta = rng.dirichlet(np.ones(4), size=6)
        vectors = rng.standard_normal((6, 5))
        fused = fuse(theta, emb_of(vectors), gamma=15.0)
        assert np.allclose(fused.matrix[:, :4], 15.0 * theta)
        assert np.array_equal(fused.matrix[:, 4:], vectors)

    def test_row_count_mismatch(self):
        with pytest.raises(ValueError, match="row count"):
            fuse(np.ones((3, 2)), emb_of(np.ones((4, 2))), gamma=1.0)

    def test_id_misalignment(self):
        with pytest.raises(ValueError, match="id order"):
            fuse(np.ones((2, 2)), emb_of(np.ones((2, 2)), ids=["b", "a"]),
                 gamma=1.0, ids=["a", "b"])

    def test_negative_gamma_rejected(self):
        with pytest.raises(ValueError, match="gamma"):
            fuse(np.ones((2, 2)), emb_of(np.ones((2, 2))), gamma=-1.0)


class TestTraining:
    def test_loss_decreases_on_random_inputs(self, rng):
        for trial in range(2):
            X = rng.standard_normal((50, 20))
            params, _ = train_autoencoder(X, latent=4, hidden=16, epochs=200,
                                          learning_rate=1e-3, seed=trial)
            assert params.loss_history[-1] < params.loss_history[0]
            assert np.isfinite(params.loss_history).all()

    def test_deterministic(self, rng):
        X = rng.standard_normal((12, 6))
        p1, l1 = train_autoencoder(X, latent=2, hidden=5, epochs=30, seed=7)
        p2, l2 = train_autoencoder(X, latent=2, hidden=5, epochs=30, seed=7)
        assert np.array_equal(l1, l2)
        for a, b in zip(p1.weights(), p2.weights()):
            assert np.array_equal(a, b)

    def test_divergence_reports_epoch(self, rng):
        X = rng.standard_normal((10, 6)) * 100
        with pytest.raises(ValueError, match="epoch"):
            train_autoencoder(X, latent=2, hidden=8, epochs=500, learning_rate=50.0, seed=0)

    def test_latent_must_be_narrower(self, rng):
        X = rng.standard_normal((5, 4))
        with pytest.raises(ValueError, match="latent"):
            train_autoencoder(X, latent=4, hidden=8, epochs=5, seed=0)

    def test_needs_two_rows(self):
        with pytest.raises(ValueError, match="rows"):
            train_autoencoder(np.ones((1, 5)), latent=2, hidden=4, epochs=5, seed=0)

    def test_constant_columns_standardize_to_zero(self, rng):
        X = rng.standard_normal((20, 5))
        X[:, 2] = 3.14
        params, latent = train_autoencoder(X, latent=2, hidden=4, epochs=10, seed=1)
        assert params.col_scale[2] == 1.0
        assert np.isfinite(latent).all()


class TestGradients:
    def test_analytic_matches_central_differences(self, rng):
        X = rng.standard_normal((4, 6))
        p = init_params(6, 5, 3, seed=0,
                        col_mean=X.mean(axis=0),
                        col_scale=np.where(X.std(axis=0) > 0, X.std(axis=0), 1.0))
        _, grads = reconstruction_gradients(p, X)
        step = 1e-5
        checked = 0
        bad = 0
        for arr, grad in zip(p.weights(), grads):
            flat = arr.ravel()
            gflat = grad.ravel()
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + step
                up = reconstruction_loss(p, X)
                flat[j] = orig - step
                down = reconstruction_loss(p, X)
                flat[j] = orig
                numeric = (up - down) / (2 * step)
                denom = max(abs(numeric), abs(gflat[j]), 1e-8)
                if abs(numeric - gflat[j]) / denom >= 1e-4:
                    bad += 1
                checked += 1
        assert checked > 100
        assert bad / checked <= 0.01

    def test_gradient_zero_at_perfect_reconstruction(self):
        # identity-ish network on zero input reconstructs exactly
        p = init_params(3, 4, 2, seed=1, col_mean=np.zeros(3), col_scale=np.ones(3))
        X = np.zeros((5, 3))
        loss, grads = reconstruction_gradients(p, X)
        assert loss == pytest.approx(0.0, abs=1e-18)
        for g in grads:
            assert np.allclose(g, 0.0, atol=1e-12)


class TestEncode:
    def test_training_latent_consistent_with_encode(self, rng):
        X = rng.standard_normal((15, 8))
        params, latent = train_autoencoder(X, latent=3, hidden=6, epochs=20, seed=2)
        assert np.array_equal(encode(params, X), latent)

    def test_identical_rows_identical_latents(self, rng):
        X = rng.standard_normal((6, 5))
        X[3] = X[0]
        params, latent = train_autoencoder(X, latent=2, hidden=4, epochs=10, seed=3)
        assert np.array_equal(latent[0], latent[3])

    def test_zero_params_zero_latents(self):
        p = AutoencoderParams(
            w1=np.zeros((4, 3)), b1=np.zeros(3),
            w2=np.zeros((3, 2)), b2=np.zeros(2),
            w3=np.zeros((2, 3)), b3=np.zeros(3),
            w4=np.zeros((3, 4)), b4=np.zeros(4),
            col_mean=np.zeros(4), col_scale=np.ones(4), seed=0,
        )
        out = encode(p, np.ones((5, 4)))
        assert np.array_equal(out, np.zeros((5, 2)))

    def test_width_mismatch(self, rng):
        X = rng.standard_normal((6, 5))
        params, _ = train_autoencoder(X, latent=2, hidden=4, epochs=5, seed=0)
        with pytest.raises(ValueError, match="width"):
            encode(params, np.ones((2, 7)))

    def test_row_permutation_equivariance(self, rng):
        X = rng.standard_normal((10, 6))
        params, latent = train_autoencoder(X, latent=3, hidden=5, epochs=10, seed=4)
        perm = rng.permutation(10)
        assert np.array_equal(encode(params, X[perm]), latent[perm])


class TestParamsIO:
    def test_json_roundtrip(self, rng, tmp_path):
        X = rng.standard_normal((8, 5))
        params, latent = train_autoencoder(X, latent=2, hidden=4, epochs=15, seed=9)
        path = tmp_path / "ae.json"
        save_params(params, path)
        back = load_params(path)
        assert np.array_equal(encode(back, X), latent)
        assert back.seed == 9
        assert np.array_equal(back.loss_history, params.loss_history)
