import numpy as np
import pytest

from conftest import cluster_cosine_means, make_cluster_corpus
from groceryrec.embed import (
    EmbeddingModel,
    TrainingConfig,
    build_embedding_vocab,
    doc_vector,
    dumps_model,
    load_model,
    ns_loss_and_grads,
    save_model,
    train,
)
from groceryrec.errors import AllTokensFiltered, EmptyCorpus, UnknownTag
from groceryrec.textprep import Descriptor, DescriptorMode


def corpus(*token_lists):
    return [Descriptor(f"d{i}", tuple(tokens), DescriptorMode.NN_TAGGED, tag=i)
            for i, tokens in enumerate(token_lists)]


FAST = TrainingConfig(dim=16, epochs=10, min_count=1, seed=3)


class TestVocab:
    def test_rare_token_excluded(self):
        docs = corpus(["quinoa", "rice"], ["rice", "oat"], ["oat"])
        vocab = build_embedding_vocab(docs, min_count=2)
        assert "quinoa" not in vocab
        assert "rice" in vocab and "oat" in vocab

    def test_min_count_one_keeps_union(self):
        docs = corpus(["a", "b"], ["c"])
        vocab = build_embedding_vocab(docs, min_count=1)
        assert set(vocab.tokens) == {"a", "b", "c"}

    def test_hand_counted_fixture(self):
        docs = corpus(["a", "b", "c"], ["a", "b"], ["a"])
        vocab = build_embedding_vocab(docs, min_count=2)
        assert dict(zip(vocab.tokens, vocab.frequencies)) == {"a": 3, "b": 2}

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            build_embedding_vocab(corpus([]))

    def test_all_tokens_filtered(self):
        with pytest.raises(AllTokensFiltered):
            build_embedding_vocab(corpus(["a"], ["b"]), min_count=5)

    def test_contents_invariant_under_document_shuffle(self):
        docs, _ = make_cluster_corpus(n_docs=40, seed=9)
        shuffled = list(reversed(docs))
        v1 = build_embedding_vocab(docs, min_count=2)
        v2 = build_embedding_vocab(shuffled, min_count=2)
        assert set(v1.tokens) == set(v2.tokens)
        assert dict(zip(v1.tokens, v1.frequencies)) == \
            dict(zip(v2.tokens, v2.frequencies))


class TestGradients:
    def _relative_error(self, a, b):
        denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
        return np.linalg.norm(a - b) / denom

    def test_doc_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        dim, n_ctx, n_out = 7, 2, 4
        doc = rng.normal(size=dim)
        ctx = rng.normal(size=(n_ctx, dim))
        U = rng.normal(size=(n_out, dim))
        bias = rng.normal(size=n_out)
        _, g_doc, _, _, _ = ns_loss_and_grads(doc, ctx, U, bias)
        h = 1e-6
        numeric = np.zeros(dim)
        for i in range(dim):
            up, down = doc.copy(), doc.copy()
            up[i] += h
            down[i] -= h
            lu = ns_loss_and_grads(up, ctx, U, bias)[0]
            ld = ns_loss_and_grads(down, ctx, U, bias)[0]
            numeric[i] = (lu - ld) / (2 * h)
        assert self._relative_error(g_doc, numeric) < 1e-4

    def test_output_gradients_match_finite_differences(self):
        rng = np.random.default_rng(1)
        dim, n_out = 5, 3
        doc = rng.normal(size=dim)
        ctx = rng.normal(size=(1, dim))
        U = rng.normal(size=(n_out, dim))
        bias = rng.normal(size=n_out)
        _, _, _, g_out, g_bias = ns_loss_and_grads(doc, ctx, U, bias)
        h = 1e-6
        numeric_out = np.zeros_like(U)
        for r in range(n_out):
            for i in range(dim):
                up, down = U.copy(), U.copy()
                up[r, i] += h
                down[r, i] -= h
                numeric_out[r, i] = (ns_loss_and_grads(doc, ctx, up, bias)[0]
                                     - ns_loss_and_grads(doc, ctx, down, bias)[0]) / (2 * h)
        assert self._relative_error(g_out, numeric_out) < 1e-4
        numeric_bias = np.zeros_like(bias)
        for r in range(n_out):
            up, down = bias.copy(), bias.copy()
            up[r] += h
            down[r] -= h
            numeric_bias[r] = (ns_loss_and_grads(doc, ctx, U, up)[0]
                               - ns_loss_and_grads(doc, ctx, U, down)[0]) / (2 * h)
        assert self._relative_error(g_bias, numeric_bias) < 1e-4

    def test_empty_context_uses_doc_vector_alone(self):
        rng = np.random.default_rng(2)
        doc = rng.normal(size=4)
        U = rng.normal(size=(2, 4))
        bias = rng.normal(size=2)
        loss, g_doc, _, _, _ = ns_loss_and_grads(doc, np.empty((0, 4)), U, bias)
        assert np.isfinite(loss)
        assert g_doc.shape == (4,)


class TestTraining:
    def test_default_vector_width(self):
        docs, _ = make_cluster_corpus(n_docs=30, seed=4)
        model = train(docs, TrainingConfig(epochs=2, seed=1))
        assert model.doc_vectors.shape == (30, 50)
        assert doc_vector(model, 0).shape == (50,)

    def test_same_seed_identical_bytes(self):
        docs, _ = make_cluster_corpus(n_docs=25, seed=5)
        a = train(docs, FAST)
        b = train(docs, FAST)
        assert dumps_model(a) == dumps_model(b)

    def test_all_parameters_finite(self):
        docs, _ = make_cluster_corpus(n_docs=40, seed=6)
        model = train(docs, FAST)
        for arr in (model.doc_vectors, model.token_vectors,
                    model.output_weights, model.output_bias):
            assert np.all(np.isfinite(arr))

    def test_loss_decreases(self):
        docs, _ = make_cluster_corpus(n_docs=60, seed=7)
        model = train(docs, FAST)
        assert model.epoch_losses[-1] < model.epoch_losses[0]

    def test_clusters_separate(self):
        docs, labels = make_cluster_corpus(n_docs=90, seed=8)
        model = train(docs, TrainingConfig(dim=16, epochs=15, seed=2))
        intra, inter = cluster_cosine_means(model.doc_vectors, labels)
        assert intra > inter

    def test_document_without_vocab_tokens_skipped(self):
        docs = corpus(["a", "b"], ["a", "b"], ["zzz"])
        model = train(docs, TrainingConfig(dim=4, epochs=2, min_count=2, seed=0))
        assert model.skipped_tags == (2,)
        with pytest.raises(UnknownTag):
            doc_vector(model, 2)

    def test_bad_tags_rejected(self):
        docs = [Descriptor("d0", ("a",), DescriptorMode.NN_TAGGED, tag=5)]
        with pytest.raises(ValueError):
            train(docs, FAST)


@pytest.fixture(scope="module")
def model():
    docs, _ = make_cluster_corpus(n_docs=20, seed=10)
    return train(docs, FAST)


class TestDocVector:
    def test_unknown_tag(self, model):
        with pytest.raises(UnknownTag):
            doc_vector(model, 999)

    def test_repeated_reads_identical(self, model):
        first = doc_vector(model, 3)
        second = doc_vector(model, 3)
        assert np.array_equal(first, second)
        first[:] = 0  # mutating the returned copy must not affect the model
        assert np.array_equal(doc_vector(model, 3), second)


class TestModelFile:
    def test_round_trip_bit_exact(self, tmp_path):
        docs, _ = make_cluster_corpus(n_docs=15, seed=11)
        model = train(docs, FAST)
        path = tmp_path / "model.pvdm"
        save_model(model, path)
        loaded = load_model(path)
        assert dumps_model(loaded) == path.read_bytes()
        assert loaded.config == model.config
        assert np.array_equal(loaded.doc_vectors, model.doc_vectors)
        assert loaded.vocab.tokens == model.vocab.tokens

    def test_reject_foreign_file(self, tmp_path):
        path = tmp_path / "bogus.pvdm"
        path.write_bytes(b"NOPE" + b"\x00" * 40)
        with pytest.raises(ValueError):
            load_model(path)
