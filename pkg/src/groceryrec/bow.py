"""Binary token-presence matrix over a fixed vocabulary.

Rows are stored as token-id sets rather than dense 0/1 vectors; with a
five-figure vocabulary the rows are tiny and the L1 distance between two
binary rows reduces to the size of their symmetric difference, which is
bit-identical to the dense definition.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import EmptyCorpus
from .textprep import Descriptor


@dataclass(frozen=True)
class Vocabulary:
    """Ordered token set with a bijective token/column mapping."""

    tokens: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "index",
                           {t: i for i, t in enumerate(self.tokens)})
        if len(self.index) != len(self.tokens):
            raise ValueError("vocabulary contains duplicate tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index


@dataclass(frozen=True)
class ProductMatrix:
    """Binary presence matrix: one row per product, one column per token."""

    vocab: Vocabulary
    row_sets: tuple[frozenset[int], ...]
    row_index: dict[str, int]

    @property
    def rows(self) -> int:
        return len(self.row_sets)

    @property
    def cols(self) -> int:
        return len(self.vocab)

    def row_of(self, ean: str) -> int:
        return self.row_index[ean]

    def dense_row(self, i: int) -> list[int]:
        present = self.row_sets[i]
        return [1 if k in present else 0 for k in range(self.cols)]


def build_vocabulary(descriptors: Sequence[Descriptor]) -> Vocabulary:
    """Union of descriptor tokens in first-occurrence order."""
    tokens: list[str] = []
    seen: set[str] = set()
    for d in descriptors:
        for t in d.tokens:
            if t not in seen:
                seen.add(t)
                tokens.append(t)
    if not tokens:
        raise EmptyCorpus("no tokens in any descriptor")
    return Vocabulary(tuple(tokens))


def vectorize(descriptors: Sequence[Descriptor], vocab: Vocabulary) -> ProductMatrix:
    """Convert descriptors to binary rows; out-of-vocabulary tokens are
    ignored so a new product can still be scored against an existing
    matrix."""
    row_sets = []
    row_index: dict[str, int] = {}
    for i, d in enumerate(descriptors):
        row_sets.append(frozenset(
            vocab.index[t] for t in d.tokens if t in vocab.index
        ))
        row_index.setdefault(d.product_ref, i)
    return ProductMatrix(vocab, tuple(row_sets), row_index)


def l1_distance(matrix: ProductMatrix, row_i: int, row_j: int) -> int:
    """Sum of absolute cell differences between two binary rows."""
    n = matrix.rows
    if not (0 <= row_i < n and 0 <= row_j < n):
        raise IndexError(f"row index out of range (rows={n})")
    return len(matrix.row_sets[row_i] ^ matrix.row_sets[row_j])


def dump_matrix(matrix: ProductMatrix, target: str | Path) -> None:
    """Sparse text dump: one "ean: tokenId,tokenId,..." line per product."""
    by_row = sorted(matrix.row_index.items(), key=lambda kv: kv[1])
    with Path(target).open("w", encoding="utf-8") as handle:
        for ean, i in by_row:
            ids = ",".join(str(k) for k in sorted(matrix.row_sets[i]))
            handle.write(f"{ean}: {ids}\n")
