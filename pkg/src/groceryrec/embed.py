"""Paragraph-vector document embeddings, distributed-memory variant.

Each document (product descriptor) and each vocabulary token gets a
dense vector.  For every target token the mean of the document vector
and the window token vectors predicts the target through a logistic
output layer; the full softmax over the vocabulary is approximated by
negative sampling with a unigram^0.75 noise distribution.

For one target t with context mean f, sampled negatives n_1..n_K,
output rows u and biases b, the per-update loss is

    L = -log sigma(u_t . f + b_t) - sum_i log sigma(-(u_ni . f + b_ni))

and the gradient w.r.t. f distributes equally over the document vector
and each context token vector (f is their mean).  Training is
single-threaded and bit-reproducible for a fixed seed.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from io import BytesIO
from pathlib import Path
from typing import BinaryIO, Sequence

import numpy as np

from .errors import AllTokensFiltered, EmptyCorpus, UnknownTag
from .textprep import Descriptor

logger = logging.getLogger(__name__)

_MAGIC = b"PVDM"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainingConfig:
    dim: int = 50
    epochs: int = 40
    min_count: int = 2
    window: int = 2
    negative_samples: int = 5
    learning_rate: float = 0.025
    min_learning_rate: float = 0.0001
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1 or self.epochs < 1 or self.min_count < 1 or self.window < 1:
            raise ValueError("dim, epochs, min_count and window must be >= 1")
        if self.negative_samples < 1:
            raise ValueError("negative_samples must be >= 1")


@dataclass(frozen=True)
class EmbedVocab:
    """Tokens surviving the frequency threshold, with their counts."""

    tokens: tuple[str, ...]
    frequencies: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "index",
                           {t: i for i, t in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index


@dataclass
class EmbeddingModel:
    """Frozen training result; safe for concurrent reads."""

    config: TrainingConfig
    vocab: EmbedVocab
    doc_vectors: np.ndarray      # (n_docs, dim) float32
    token_vectors: np.ndarray    # (n_vocab, dim) float32
    output_weights: np.ndarray   # (n_vocab, dim) float32
    output_bias: np.ndarray      # (n_vocab,) float32
    skipped_tags: tuple[int, ...] = ()
    epoch_losses: tuple[float, ...] = field(default=(), compare=False)

    @property
    def n_docs(self) -> int:
        return self.doc_vectors.shape[0]


def build_embedding_vocab(descriptors: Sequence[Descriptor],
                          min_count: int = 2) -> EmbedVocab:
    """Count tokens over the corpus and drop the rare ones."""
    counts: dict[str, int] = {}
    for d in descriptors:
        for t in d.tokens:
            counts[t] = counts.get(t, 0) + 1
    if not counts:
        raise EmptyCorpus("no tokens in any descriptor")
    kept = [(t, c) for t, c in counts.items() if c >= min_count]
    if not kept:
        raise AllTokensFiltered(
            f"min_count={min_count} removed all {len(counts)} tokens"
        )
    return EmbedVocab(tuple(t for t, _ in kept), tuple(c for _, c in kept))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def ns_loss_and_grads(doc_vec: np.ndarray, context_vecs: np.ndarray,
                      out_rows: np.ndarray, out_bias: np.ndarray):
    """Negative-sampling loss and gradients for one (target, context) pair.

    ``out_rows``/``out_bias``: row 0 is the positive target, the rest are
    negatives.  Returns (loss, grad_doc, grad_context, grad_out, grad_bias);
    the context gradient is shared, one array for every context vector.
    """
    n_ctx = len(context_vecs)
    f = (doc_vec + context_vecs.sum(axis=0)) / (n_ctx + 1) if n_ctx \
        else doc_vec.copy()
    scores = out_rows @ f + out_bias
    probs = _sigmoid(scores)
    # stable -log sigma(s0) - sum log sigma(-si)
    loss = float(np.logaddexp(0.0, -scores[0]) + np.sum(np.logaddexp(0.0, scores[1:])))
    g = probs.copy()
    g[0] -= 1.0
    grad_f = g @ out_rows
    grad_out = g[:, None] * f[None, :]
    share = grad_f / (n_ctx + 1)
    return loss, share, share, grad_out, g


def train(descriptors: Sequence[Descriptor], config: TrainingConfig) -> EmbeddingModel:
    """Train document and token vectors; deterministic for a fixed seed.

    Documents with no in-vocabulary tokens are skipped and reported.
    The learning rate decays linearly per epoch from ``learning_rate``
    down to ``min_learning_rate``.
    """
    vocab = build_embedding_vocab(descriptors, config.min_count)
    tags = [d.tag for d in descriptors]
    if any(t is None for t in tags) or sorted(tags) != list(range(len(tags))):
        raise ValueError("descriptors must carry unique zero-based tags")
    by_tag = sorted(descriptors, key=lambda d: d.tag)
    doc_ids: list[np.ndarray] = []
    skipped: list[int] = []
    for d in by_tag:
        ids = np.array([vocab.index[t] for t in d.tokens if t in vocab.index],
                       dtype=np.int64)
        if len(ids) == 0:
            skipped.append(d.tag)
        doc_ids.append(ids)
    if skipped:
        logger.warning("skipping %d document(s) without in-vocab tokens: %s",
                       len(skipped), skipped[:10])

    rng = np.random.default_rng(config.seed)
    n_docs, n_vocab, dim = len(doc_ids), len(vocab), config.dim
    D = (rng.random((n_docs, dim)) - 0.5) / dim
    T = (rng.random((n_vocab, dim)) - 0.5) / dim
    U = np.zeros((n_vocab, dim))
    b = np.zeros(n_vocab)

    noise = np.array(vocab.frequencies, dtype=np.float64) ** 0.75
    noise_cum = np.cumsum(noise)
    noise_cum /= noise_cum[-1]

    window, k_neg = config.window, config.negative_samples
    alphas = np.linspace(config.learning_rate, config.min_learning_rate,
                         config.epochs)
    epoch_losses: list[float] = []
    for epoch in range(config.epochs):
        alpha = float(alphas[epoch])
        total, updates = 0.0, 0
        for doc_i, ids in enumerate(doc_ids):
            n_tok = len(ids)
            if n_tok == 0:
                continue
            for pos in range(n_tok):
                target = int(ids[pos])
                lo = max(0, pos - window)
                context = np.concatenate((ids[lo:pos], ids[pos + 1:pos + 1 + window]))
                negs = np.searchsorted(noise_cum, rng.random(k_neg), side="right")
                negs = negs[negs != target]
                rows = np.concatenate(([target], negs))
                loss, g_doc, g_ctx, g_out, g_bias = ns_loss_and_grads(
                    D[doc_i], T[context], U[rows], b[rows])
                D[doc_i] -= alpha * g_doc
                if len(context):
                    np.add.at(T, context, -alpha * g_ctx)
                np.add.at(U, rows, -alpha * g_out)
                np.add.at(b, rows, -alpha * g_bias)
                total += loss
                updates += 1
        epoch_losses.append(total / max(updates, 1))

    return EmbeddingModel(
        config=config,
        vocab=vocab,
        doc_vectors=D.astype("<f4"),
        token_vectors=T.astype("<f4"),
        output_weights=U.astype("<f4"),
        output_bias=b.astype("<f4"),
        skipped_tags=tuple(skipped),
        epoch_losses=tuple(epoch_losses),
    )


def doc_vector(model: EmbeddingModel, tag: int) -> np.ndarray:
    """Stored vector for a trained tag; never recomputed."""
    if not 0 <= tag < model.n_docs or tag in model.skipped_tags:
        raise UnknownTag(f"tag {tag} was not trained")
    return model.doc_vectors[tag].copy()


# ---------------------------------------------------------------------------
# Model file format (versioned, bit-exact round trip)
# ---------------------------------------------------------------------------


def _write_model(model: EmbeddingModel, out: BinaryIO) -> None:
    cfg = model.config
    out.write(_MAGIC)
    out.write(struct.pack("<IIQQ", _FORMAT_VERSION, cfg.dim,
                          len(model.vocab), model.n_docs))
    out.write(struct.pack("<IIIIddq", cfg.epochs, cfg.min_count, cfg.window,
                          cfg.negative_samples, cfg.learning_rate,
                          cfg.min_learning_rate, cfg.seed))
    out.write(struct.pack("<Q", len(model.skipped_tags)))
    for tag in model.skipped_tags:
        out.write(struct.pack("<Q", tag))
    for token, freq in zip(model.vocab.tokens, model.vocab.frequencies):
        raw = token.encode("utf-8")
        out.write(struct.pack("<I", len(raw)))
        out.write(raw)
        out.write(struct.pack("<Q", freq))
    for arr in (model.doc_vectors, model.token_vectors,
                model.output_weights, model.output_bias):
        out.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def save_model(model: EmbeddingModel, target: str | Path) -> None:
    with Path(target).open("wb") as handle:
        _write_model(model, handle)


def dumps_model(model: EmbeddingModel) -> bytes:
    buffer = BytesIO()
    _write_model(model, buffer)
    return buffer.getvalue()


def _read_exact(handle: BinaryIO, n: int) -> bytes:
    data = handle.read(n)
    if len(data) != n:
        raise ValueError("truncated model file")
    return data


def _read_model(handle: BinaryIO) -> EmbeddingModel:
    if _read_exact(handle, 4) != _MAGIC:
        raise ValueError("not a PVDM model file")
    version, dim, n_vocab, n_docs = struct.unpack("<IIQQ", _read_exact(handle, 24))
    if version != _FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version}")
    epochs, min_count, window, negative, lr, min_lr, seed = struct.unpack(
        "<IIIIddq", _read_exact(handle, 40))
    (n_skipped,) = struct.unpack("<Q", _read_exact(handle, 8))
    skipped = tuple(
        struct.unpack("<Q", _read_exact(handle, 8))[0] for _ in range(n_skipped)
    )
    tokens: list[str] = []
    freqs: list[int] = []
    for _ in range(n_vocab):
        (length,) = struct.unpack("<I", _read_exact(handle, 4))
        tokens.append(_read_exact(handle, length).decode("utf-8"))
        freqs.append(struct.unpack("<Q", _read_exact(handle, 8))[0])
    def matrix(rows: int, cols: int) -> np.ndarray:
        flat = np.frombuffer(_read_exact(handle, rows * cols * 4), dtype="<f4")
        return flat.reshape(rows, cols).copy()
    D = matrix(n_docs, dim)
    T = matrix(n_vocab, dim)
    U = matrix(n_vocab, dim)
    bias = np.frombuffer(_read_exact(handle, n_vocab * 4), dtype="<f4").copy()
    config = TrainingConfig(dim=dim, epochs=epochs, min_count=min_count,
                            window=window, negative_samples=negative,
                            learning_rate=lr, min_learning_rate=min_lr, seed=seed)
    return EmbeddingModel(config, EmbedVocab(tuple(tokens), tuple(freqs)),
                          D, T, U, bias, skipped)


def load_model(source: str | Path) -> EmbeddingModel:
    with Path(source).open("rb") as handle:
        return _read_model(handle)
