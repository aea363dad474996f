"""Bag-of-words recommenders over the binary product matrix.

Three approaches share the same variety-scoped candidate set.  PRO-COM
ranks by ascending content distance; PK-BD refines it with the absolute
servings difference; HTH-BD ranks by allergen-claim compatibility, the
fat+sugar sum, the count of health claims and the ingredient token count
(a proxy for how processed the product is).  Every sort breaks remaining
ties on ascending EAN.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .bow import ProductMatrix, l1_distance
from .catalog import Catalog, Product
from .errors import MissingNutrition, MissingServings, UnknownProduct, VarietyTooSmall
from .ranking import Approach, Family, RankedAlternatives, rank_candidates
from .textprep import Descriptor, WithoutVocabulary

#: A variety needs this many products to offer three alternatives.
DEFAULT_MIN_VARIETY = 4


@dataclass(frozen=True)
class HealthProfile:
    """Per-candidate values backing the HTH-BD sort keys."""

    ean: str
    allergen_similarity: int
    fat_sugar: float
    health_features: int
    processing_level: int


def _require_product(catalog: Catalog, ean: str) -> Product:
    product = catalog.get(ean)
    if product is None:
        raise UnknownProduct(ean)
    return product


def _variety_members(catalog: Catalog, product: Product,
                     min_variety: int) -> list[Product]:
    members = catalog.in_variety(product.variety)
    if len(members) < min_variety:
        raise VarietyTooSmall(
            f"variety {product.variety!r} has {len(members)} products, "
            f"needs {min_variety}"
        )
    return members


def recommend_pro_com(matrix: ProductMatrix, catalog: Catalog, ean: str,
                      k: Optional[int] = 3,
                      min_variety: int = DEFAULT_MIN_VARIETY) -> RankedAlternatives:
    """Rank same-variety products by ascending content distance."""
    product = _require_product(catalog, ean)
    members = _variety_members(catalog, product, min_variety)
    row_p = matrix.row_of(ean)
    entries = []
    for q in members:
        if q.ean == ean:
            continue
        d = l1_distance(matrix, row_p, matrix.row_of(q.ean))
        entries.append(((d,), q.ean, {"content_distance": float(d)}))
    return rank_candidates(ean, Approach.PRO_COM, Family.RSCF, entries, k)


def recommend_pk_bd(matrix: ProductMatrix, catalog: Catalog, ean: str,
                    k: Optional[int] = 3,
                    min_variety: int = DEFAULT_MIN_VARIETY) -> RankedAlternatives:
    """PRO-COM refined by the absolute servings difference."""
    product = _require_product(catalog, ean)
    if product.servings is None:
        raise MissingServings(f"source {ean} has no servings")
    members = _variety_members(catalog, product, min_variety)
    row_p = matrix.row_of(ean)
    entries = []
    excluded = []
    for q in members:
        if q.ean == ean:
            continue
        if q.servings is None:
            excluded.append((q.ean, "missing servings"))
            continue
        d = l1_distance(matrix, row_p, matrix.row_of(q.ean))
        ds = abs(product.servings - q.servings)
        entries.append(((d, ds), q.ean, {
            "content_distance": float(d),
            "servings_distance": float(ds),
        }))
    return rank_candidates(ean, Approach.PK_BD, Family.RSCF, entries, k, excluded)


def allergen_claim_similarity(p_ean: str, q_ean: str,
                              without_vocab: WithoutVocabulary) -> int:
    """1 iff every allergen claim of p also appears among q's claims.

    Vacuously 1 when p carries no allergen claims.
    """
    needed = without_vocab.allergen_claims(p_ean)
    return 1 if needed <= frozenset(without_vocab.claims(q_ean)) else 0


def health_profile(product: Product, source_ean: str,
                   without_vocab: WithoutVocabulary,
                   ingredient_tokens: dict[str, int]) -> HealthProfile:
    nutrition = product.nutrition
    assert nutrition is not None and nutrition.has_fat_and_sugar
    return HealthProfile(
        ean=product.ean,
        allergen_similarity=allergen_claim_similarity(
            source_ean, product.ean, without_vocab),
        fat_sugar=nutrition.fat_g + nutrition.sugar_g,
        health_features=len(without_vocab.claims(product.ean)),
        processing_level=ingredient_tokens.get(product.ean, 0),
    )


def recommend_hth_bd(catalog: Catalog, without_vocab: WithoutVocabulary,
                     descriptors: Sequence[Descriptor], ean: str,
                     k: Optional[int] = 3,
                     min_variety: int = DEFAULT_MIN_VARIETY) -> RankedAlternatives:
    """Rank by allergen compatibility, then fat+sugar, health-claim count
    and processing level (descending, ascending, descending, ascending)."""
    product = _require_product(catalog, ean)
    if product.nutrition is None or not product.nutrition.has_fat_and_sugar:
        raise MissingNutrition(f"source {ean} lacks fat/sugar values")
    members = _variety_members(catalog, product, min_variety)
    ingredient_tokens = {d.product_ref: len(d.tokens) for d in descriptors}
    entries = []
    excluded = []
    for q in members:
        if q.ean == ean:
            continue
        if q.nutrition is None or not q.nutrition.has_fat_and_sugar:
            excluded.append((q.ean, "missing fat/sugar"))
            continue
        profile = health_profile(q, ean, without_vocab, ingredient_tokens)
        key = (-profile.allergen_similarity, profile.fat_sugar,
               -profile.health_features, profile.processing_level)
        entries.append((key, q.ean, {
            "allergen_similarity": float(profile.allergen_similarity),
            "fat_sugar": profile.fat_sugar,
            "health_features": float(profile.health_features),
            "processing_level": float(profile.processing_level),
        }))
    return rank_candidates(ean, Approach.HTH_BD, Family.RSCF, entries, k, excluded)
