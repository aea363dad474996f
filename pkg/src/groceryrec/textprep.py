"""Text preprocessing: token cleaning, product descriptors and health claims.

Two pipelines are provided.  The bag-of-words one lowercases, strips
numbers, stopwords and punctuation, and deduplicates tokens.  The
embedding one additionally stems tokens with a deterministic suffix
stripper and assigns a zero-based document tag per product.  A third
extractor pulls "without ..." health/allergen claims out of the package
message columns.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Collection, Optional

from .catalog import ALLERGEN_TEXT, Catalog, Product

# Any character that is neither word-forming nor whitespace becomes a
# space, as does the underscore (part of \w but not of any real token).
_NON_WORD = re.compile(r"[^\w\s]|_", re.UNICODE)
_CONTROL = re.compile(r"[\x00-\x1f\x7f]")
_VOWELS = frozenset("aeiou")

#: Health claims retained even though they do not start with "without ".
HEALTH_WHITELIST = frozenset(
    ("low fat", "low in energy", "high protein", "starch free", "celery free")
)

#: Claim strings that count as allergen-relevant, including the spelling
#: variants that occur in the source data (sulfites/sulphites,
#: allergen/allergens).
ALLERGEN_CLAIMS = frozenset((
    "without allergens", "without allergen", "without gluten",
    "without crustaceans", "without egg", "without fish", "without peanuts",
    "without soy", "without milk and its derivatives", "without lactose",
    "without nuts", "without celery", "without mustard", "without sesame",
    "without sulphites", "without sulfites", "without lupins",
    "without molluscs",
))


class DescriptorMode(Enum):
    CF_FULL = "cf_full"
    CF_INGREDIENTS = "cf_ingredients"
    NN_TAGGED = "nn_tagged"


@dataclass(frozen=True)
class Descriptor:
    """Ordered, deduplicated token list describing one product."""

    product_ref: str
    tokens: tuple[str, ...]
    mode: DescriptorMode
    tag: Optional[int] = None


@dataclass(frozen=True)
class WithoutVocabulary:
    """Global health-claim vocabulary plus its per-product assignment."""

    all_features: tuple[str, ...]
    allergen_subset: frozenset[str]
    per_product: dict[str, tuple[str, ...]]

    def claims(self, ean: str) -> tuple[str, ...]:
        return self.per_product.get(ean, ())

    def allergen_claims(self, ean: str) -> frozenset[str]:
        return frozenset(c for c in self.claims(ean) if c in self.allergen_subset)


@lru_cache(maxsize=None)
def load_stopwords(language: str = "en") -> frozenset[str]:
    """Load a stopword list by language code or by file path."""
    path = Path(language)
    if path.suffix == ".txt" and path.exists():
        text = path.read_text(encoding="utf-8")
    else:
        text = (resources.files("groceryrec") / "stopwords" / f"{language}.txt") \
            .read_text(encoding="utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


def clean_tokens(raw_text: str, stopwords: Optional[Collection[str]] = None) -> list[str]:
    """Bag-of-words token cleaning.

    Parentheses and other punctuation become spaces, tokens containing a
    digit are dropped, stopwords are removed case-insensitively, output
    is lowercase with duplicates removed keeping first occurrence.
    """
    sw = load_stopwords() if stopwords is None else stopwords
    out: list[str] = []
    seen: set[str] = set()
    for token in _NON_WORD.sub(" ", raw_text).split():
        if any(ch.isdigit() for ch in token):
            continue
        token = token.lower()
        if token in sw or token in seen:
            continue
        seen.add(token)
        out.append(token)
    return out


def stem(token: str) -> str:
    """Deterministic suffix stripper: plural and participle endings.

    "trucks" -> "truck", "running" -> "run", "berries" -> "berri".
    """
    t = token
    if t.endswith("sses"):
        t = t[:-2]
    elif t.endswith("ies") and len(t) > 4:
        t = t[:-3] + "i"
    elif t.endswith("ss"):
        pass
    elif t.endswith("s") and len(t) > 3:
        t = t[:-1]
    for suffix in ("ing", "ed"):
        if t.endswith(suffix) and len(t) - len(suffix) >= 3:
            base = t[: -len(suffix)]
            if any(c in _VOWELS for c in base):
                t = base
                if (len(t) >= 2 and t[-1] == t[-2]
                        and t[-1] not in _VOWELS and t[-1] not in "lsz"):
                    t = t[:-1]
            break
    return t


def nn_tokens(raw_text: str, stopwords: Optional[Collection[str]] = None) -> list[str]:
    """Embedding-pipeline token cleaning: clean, stem, then deduplicate."""
    sw = load_stopwords() if stopwords is None else stopwords
    out: list[str] = []
    seen: set[str] = set()
    for token in _NON_WORD.sub(" ", raw_text).split():
        if any(ch.isdigit() for ch in token):
            continue
        token = token.lower()
        if token in sw:
            continue
        token = stem(token)
        if token in seen:
            continue
        seen.add(token)
        out.append(token)
    return out


def build_descriptor(product: Product, mode: DescriptorMode,
                     stopwords: Optional[Collection[str]] = None,
                     tag: Optional[int] = None) -> Descriptor:
    """Build the token descriptor for one product under the given mode."""
    if mode is DescriptorMode.CF_FULL:
        text = " ".join((product.name, product.legal_name, product.ingredients))
        tokens = clean_tokens(text, stopwords)
    elif mode is DescriptorMode.CF_INGREDIENTS:
        tokens = clean_tokens(product.ingredients, stopwords)
    else:
        allergen_text = " ".join(ALLERGEN_TEXT[a] for a in product.allergens)
        text = " ".join((product.name, product.brand, product.ingredients,
                         product.legal_name, allergen_text))
        tokens = nn_tokens(text, stopwords)
    return Descriptor(product.ean, tuple(tokens), mode, tag)


def build_corpus(catalog: Catalog, mode: DescriptorMode,
                 stopwords: Optional[Collection[str]] = None) -> list[Descriptor]:
    """Build descriptors for the whole catalog.

    In NN_TAGGED mode each document gets its zero-based position in the
    catalog as its tag.
    """
    tagged = mode is DescriptorMode.NN_TAGGED
    return [
        build_descriptor(p, mode, stopwords, tag=i if tagged else None)
        for i, p in enumerate(catalog.products)
    ]


def _normalize_claim(part: str) -> str:
    part = re.sub(r",.*$", "", part)
    part = _CONTROL.sub("", part)
    return part.rstrip(".").strip()


def extract_health_messages(product: Product) -> list[str]:
    """Extract health/allergen claim strings from the message columns.

    Messages are lowercased and split on ". "; each piece loses any
    comma tail, control characters and trailing full stops, and survives
    only if it starts with "without " or sits on the health whitelist.
    """
    features: list[str] = []
    seen: set[str] = set()
    for message in product.messages:
        text = message.strip().lower()
        if not text:
            continue
        for part in re.split(r"\. ", text):
            part = _normalize_claim(part)
            if not part:
                continue
            if not (part.startswith("without ") or part in HEALTH_WHITELIST):
                continue
            if part in seen:
                continue
            seen.add(part)
            features.append(part)
    return features


def build_without_vocabulary(catalog: Catalog) -> WithoutVocabulary:
    """Collect the union of per-product claims and its allergen subset."""
    all_features: list[str] = []
    seen: set[str] = set()
    per_product: dict[str, tuple[str, ...]] = {}
    for p in catalog.products:
        claims = extract_health_messages(p)
        per_product[p.ean] = tuple(claims)
        for claim in claims:
            if claim not in seen:
                seen.add(claim)
                all_features.append(claim)
    allergen_subset = frozenset(f for f in all_features if f in ALLERGEN_CLAIMS)
    return WithoutVocabulary(tuple(all_features), allergen_subset, per_product)
