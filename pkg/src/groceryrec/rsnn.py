"""Embedding-based recommenders with allergen-safe candidate pooling.

Candidates must share the source's variety (subcategory when the variety
is "other") and brand attribute, and may not introduce any allergen the
source does not already carry.  Scoring is a chain: a base similarity or
distance between document vectors, a price-ratio adjustment, a
brand-position weight, a weighted nutrition score ratio, and finally a
servings ratio.

The CJ family (cosine, jaccard) multiplies the base value by the price
ratio; the EM family (euclidean, manhattan) divides the price ratio by
the base distance, turning it into a similarity-like score.  After that
conversion a brand match should always help, so both families use the
(100, 10, 1) weights for full/partial/no brand match by default; the
source formulation weighted EM distances the other way around, which
would favor brand mismatches, and remains available behind
``literal_em_weights=True``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Protocol

import numpy as np

from .catalog import Catalog, Product
from .embed import EmbeddingModel, doc_vector
from .errors import (
    EmptyPool,
    MissingNutrition,
    MissingPrice,
    MissingServings,
    UnknownProduct,
    VarietyTooSmall,
)
from .ranking import Approach, Family, RankedAlternatives, rank_candidates
from .similarity import MetricFamily, MetricKind, pairwise
from .textprep import DescriptorMode, build_corpus

#: Division guard for zero distances and zero scores.
EPSILON = 1e-9

#: Variety-size thresholds per approach (first-quartile values observed
#: on the reference data); configuration, not constants.
DEFAULT_VARIETY_THRESHOLDS = {
    Approach.PRO_COM: 15,
    Approach.HTH_BD: 4,
    Approach.PK_BD: 4,
}


class PoolScope(Enum):
    VARIETY = "variety"
    SUBCATEGORY = "subcategory"


class BrandPos(Enum):
    """Brand/brand-type agreement between source and candidate."""

    POS1 = 1   # both match
    POS2 = 2   # exactly one matches
    POS3 = 3   # neither matches


_WEIGHTS = {BrandPos.POS1: 100.0, BrandPos.POS2: 10.0, BrandPos.POS3: 1.0}
_LITERAL_EM_WEIGHTS = {BrandPos.POS1: 1.0, BrandPos.POS2: 10.0, BrandPos.POS3: 100.0}


@dataclass(frozen=True)
class CandidatePool:
    source: str
    members: tuple[str, ...]
    scope: PoolScope
    filters_applied: tuple[str, ...]


@dataclass(frozen=True)
class NutritionScore:
    """Weighted nutrition sum; lower is healthier."""

    ean: str
    h: float
    gf_g: float
    df_g: float


@dataclass(frozen=True)
class ScoredCandidate:
    """Stage-by-stage scores; later stages stay None until computed."""

    ean: str
    d_base: float
    d_r: float
    d_m: float
    pos: BrandPos
    d_h: Optional[float] = None
    d_se: Optional[float] = None


class VectorSource(Protocol):
    """Per-product representations used by the pairwise measures."""

    def vector(self, ean: str) -> np.ndarray: ...

    def token_set(self, ean: str) -> frozenset[str]: ...


class TrainedVectorSource:
    """Adapter binding a trained model to a catalog.

    Documents were tagged with their zero-based catalog position, so the
    mapping is rebuilt from the catalog order.
    """

    def __init__(self, catalog: Catalog, model: EmbeddingModel, stopwords=None):
        self._model = model
        corpus = build_corpus(catalog, DescriptorMode.NN_TAGGED, stopwords)
        self._tag_of = {d.product_ref: d.tag for d in corpus}
        self._tokens = {d.product_ref: frozenset(d.tokens) for d in corpus}

    def vector(self, ean: str) -> np.ndarray:
        tag = self._tag_of.get(ean)
        if tag is None:
            raise UnknownProduct(ean)
        return doc_vector(self._model, tag)

    def token_set(self, ean: str) -> frozenset[str]:
        if ean not in self._tokens:
            raise UnknownProduct(ean)
        return self._tokens[ean]


class StaticVectorSource:
    """Fixed per-product vectors and token sets (e.g. for testing)."""

    def __init__(self, vectors: dict[str, np.ndarray],
                 token_sets: Optional[dict[str, frozenset[str]]] = None):
        self._vectors = vectors
        self._tokens = token_sets or {}

    def vector(self, ean: str) -> np.ndarray:
        if ean not in self._vectors:
            raise UnknownProduct(ean)
        return self._vectors[ean]

    def token_set(self, ean: str) -> frozenset[str]:
        if ean not in self._tokens:
            raise UnknownProduct(ean)
        return self._tokens[ean]


def _require_product(catalog: Catalog, ean: str) -> Product:
    product = catalog.get(ean)
    if product is None:
        raise UnknownProduct(ean)
    return product


def candidate_pool(catalog: Catalog, ean: str) -> CandidatePool:
    """Same scope, same brand attribute, no new allergens.

    Products whose variety is "other" are pooled by subcategory instead,
    since that variety is a catch-all rather than a real product family.
    """
    product = _require_product(catalog, ean)
    if product.variety.lower() == "other":
        scope = PoolScope.SUBCATEGORY
        members = [p for p in catalog.in_subcategory(product.subcategory)
                   if p.ean != ean]
    else:
        scope = PoolScope.VARIETY
        members = [p for p in catalog.in_variety(product.variety)
                   if p.ean != ean]
    if not members:
        raise EmptyPool(ean, scope.value)
    members = [p for p in members if p.brand_attribute == product.brand_attribute]
    if not members:
        raise EmptyPool(ean, "brand_attribute")
    members = [p for p in members if p.allergens.issubset(product.allergens)]
    if not members:
        raise EmptyPool(ean, "allergen")
    return CandidatePool(
        source=ean,
        members=tuple(p.ean for p in members),
        scope=scope,
        filters_applied=(scope.value, "brand_attribute", "allergen"),
    )


def brand_pos(p: Product, q: Product) -> BrandPos:
    matches = int(p.brand == q.brand) + int(p.brand_type == q.brand_type)
    return (BrandPos.POS3, BrandPos.POS2, BrandPos.POS1)[matches]


def _base_value(source: VectorSource, metric: MetricKind, p_ean: str,
                q_ean: str) -> float:
    if metric is MetricKind.JACCARD:
        return pairwise(metric, source.token_set(p_ean), source.token_set(q_ean))
    return pairwise(metric, source.vector(p_ean), source.vector(q_ean))


def score_pro_com(source: VectorSource, metric: MetricKind, p: Product,
                  q: Product, *, literal_em_weights: bool = False) -> ScoredCandidate:
    """Base measure, price-ratio adjustment, then brand weighting."""
    if p.price is None or p.price <= 0 or q.price is None or q.price <= 0:
        raise MissingPrice(f"positive prices required for {p.ean} and {q.ean}")
    d_base = _base_value(source, metric, p.ean, q.ean)
    ratio = min(p.price, q.price) / max(p.price, q.price)
    if metric.family is MetricFamily.CJ:
        d_r = d_base * ratio
        weights = _WEIGHTS
    else:
        d_r = ratio / max(d_base, EPSILON)
        weights = _LITERAL_EM_WEIGHTS if literal_em_weights else _WEIGHTS
    pos = brand_pos(p, q)
    return ScoredCandidate(q.ean, d_base, d_r, d_r * weights[pos], pos)


def nutrition_score(product: Product) -> NutritionScore:
    """Weighted sum over the eight nutrition fields, percentages first
    converted to grams."""
    n = product.nutrition
    if n is None or not n.is_complete:
        raise MissingNutrition(f"{product.ean} lacks a complete nutrition table")
    gf_g = (n.good_fat_pct / 100) * n.fat_g
    df_g = (n.dietary_fiber_pct / 100) * n.carbs_g
    h = (n.protein_g * 100 + gf_g * 200 + df_g * 300 + n.salt_g * 400
         + n.sugar_g * 500 + n.carbs_g * 600 + n.saturated_fat_g * 700
         + n.fat_g * 800)
    return NutritionScore(product.ean, h, gf_g, df_g)


def _check_scope_size(catalog: Catalog, product: Product, threshold: int) -> None:
    if product.variety.lower() == "other":
        size = len(catalog.in_subcategory(product.subcategory))
        label = f"subcategory {product.subcategory!r}"
    else:
        size = len(catalog.in_variety(product.variety))
        label = f"variety {product.variety!r}"
    if size < threshold:
        raise VarietyTooSmall(f"{label} has {size} products, needs {threshold}")


def _score_stage(source: VectorSource, metric: MetricKind, catalog: Catalog,
                 p: Product, stage: Approach, *,
                 literal_em_weights: bool) -> tuple[list[ScoredCandidate],
                                                    list[tuple[str, str]]]:
    """Score every pool member through the stages the approach needs."""
    pool = candidate_pool(catalog, p.ean)
    scored: list[ScoredCandidate] = []
    excluded: list[tuple[str, str]] = []
    for q_ean in pool.members:
        q = catalog.get(q_ean)
        if q.price is None or q.price <= 0:
            excluded.append((q_ean, "missing price"))
            continue
        if stage is not Approach.PRO_COM and (
                q.nutrition is None or not q.nutrition.is_complete):
            excluded.append((q_ean, "missing nutrition"))
            continue
        if stage is Approach.PK_BD and q.servings is None:
            excluded.append((q_ean, "missing servings"))
            continue
        candidate = score_pro_com(source, metric, p, q,
                                  literal_em_weights=literal_em_weights)
        if stage is not Approach.PRO_COM:
            d_h = nutrition_score(q).h / max(candidate.d_m, EPSILON)
            candidate = replace(candidate, d_h=d_h)
        if stage is Approach.PK_BD:
            ratio = min(p.servings, q.servings) / max(p.servings, q.servings)
            candidate = replace(candidate, d_se=ratio / max(candidate.d_h, EPSILON))
        scored.append(candidate)
    return scored, excluded


def _breakdown(c: ScoredCandidate) -> dict[str, float]:
    out = {
        "base": c.d_base,
        "price_adjusted": c.d_r,
        "brand_weighted": c.d_m,
        "brand_pos": float(c.pos.value),
    }
    if c.d_h is not None:
        out["health"] = c.d_h
    if c.d_se is not None:
        out["servings"] = c.d_se
    return out


def recommend_pro_com_nn(source: VectorSource, metric: MetricKind,
                         catalog: Catalog, ean: str, k: Optional[int] = 3,
                         variety_threshold: Optional[int] = None, *,
                         literal_em_weights: bool = False) -> RankedAlternatives:
    """Rank pool members by descending brand-weighted score."""
    p = _require_product(catalog, ean)
    if p.price is None or p.price <= 0:
        raise MissingPrice(f"source {ean} has no positive price")
    threshold = DEFAULT_VARIETY_THRESHOLDS[Approach.PRO_COM] \
        if variety_threshold is None else variety_threshold
    _check_scope_size(catalog, p, threshold)
    scored, excluded = _score_stage(source, metric, catalog, p,
                                    Approach.PRO_COM,
                                    literal_em_weights=literal_em_weights)
    entries = [((-c.d_m,), c.ean, _breakdown(c)) for c in scored]
    return rank_candidates(ean, Approach.PRO_COM, Family.RSNN, entries, k, excluded)


def recommend_hth_bd_nn(source: VectorSource, metric: MetricKind,
                        catalog: Catalog, ean: str, k: Optional[int] = 3,
                        variety_threshold: Optional[int] = None, *,
                        literal_em_weights: bool = False) -> RankedAlternatives:
    """Rank by ascending nutrition-score ratio: lower means healthier."""
    p = _require_product(catalog, ean)
    if p.price is None or p.price <= 0:
        raise MissingPrice(f"source {ean} has no positive price")
    threshold = DEFAULT_VARIETY_THRESHOLDS[Approach.HTH_BD] \
        if variety_threshold is None else variety_threshold
    _check_scope_size(catalog, p, threshold)
    scored, excluded = _score_stage(source, metric, catalog, p,
                                    Approach.HTH_BD,
                                    literal_em_weights=literal_em_weights)
    entries = [((c.d_h,), c.ean, _breakdown(c)) for c in scored]
    return rank_candidates(ean, Approach.HTH_BD, Family.RSNN, entries, k, excluded)


def recommend_pk_bd_nn(source: VectorSource, metric: MetricKind,
                       catalog: Catalog, ean: str, k: Optional[int] = 3,
                       variety_threshold: Optional[int] = None, *,
                       literal_em_weights: bool = False) -> RankedAlternatives:
    """Rank by descending servings ratio over the health score."""
    p = _require_product(catalog, ean)
    if p.price is None or p.price <= 0:
        raise MissingPrice(f"source {ean} has no positive price")
    if p.servings is None:
        raise MissingServings(f"source {ean} has no servings")
    threshold = DEFAULT_VARIETY_THRESHOLDS[Approach.PK_BD] \
        if variety_threshold is None else variety_threshold
    _check_scope_size(catalog, p, threshold)
    scored, excluded = _score_stage(source, metric, catalog, p,
                                    Approach.PK_BD,
                                    literal_em_weights=literal_em_weights)
    entries = [((-c.d_se,), c.ean, _breakdown(c)) for c in scored]
    return rank_candidates(ean, Approach.PK_BD, Family.RSNN, entries, k, excluded)
