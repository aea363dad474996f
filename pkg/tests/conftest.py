"""Shared builders for catalog and corpus fixtures."""

import random

import pytest

from groceryrec.catalog import (
    AllergenFlags,
    Catalog,
    NutritionFacts,
    Product,
    SchemaVersion,
    SyntheticSpec,
    Unit,
    clean_catalog,
    expected_columns,
    generate_synthetic_catalog,
)

_DS1_DEFAULTS = {
    "EAN": "", "Category": "Fresh", "Subcategory": "Fish", "Variety": "Other",
    "Brand": "Generic", "Name": "", "LegalName": "", "Ingredients": "",
    "Servings": "", "Size": "", "Unit": "", "Fat": "", "Sugar": "",
}
_DS2_EXTRA = {
    "BrandType": "manufacturer", "BrandAttribute": "standard", "Price": "",
    "Carbs": "", "DietaryFiberPct": "", "SaturatedFat": "", "GoodFatPct": "",
    "Protein": "", "Salt": "",
}


def _render(schema: SchemaVersion, rows) -> str:
    columns = expected_columns(schema)
    defaults = dict(_DS1_DEFAULTS)
    defaults.update({f"Message{i}": "" for i in range(1, 14)})
    if schema is SchemaVersion.DS2:
        defaults.update(_DS2_EXTRA)
        defaults.update({c: "0" for c in columns if c not in defaults})
    lines = [",".join(columns)]
    for row in rows:
        unknown = set(row) - set(columns)
        assert not unknown, f"unknown columns {unknown}"
        merged = {**defaults, **row}
        lines.append(",".join(str(merged[c]) for c in columns))
    return "\n".join(lines) + "\n"


def ds1_csv(*rows: dict) -> str:
    return _render(SchemaVersion.DS1, rows)


def ds2_csv(*rows: dict) -> str:
    return _render(SchemaVersion.DS2, rows)


_DEFAULT = object()


def make_product(ean, variety="leafy", *, name=None, ingredients="water salt",
                 subcategory="greens", category="fresh", brand="acme",
                 brand_type="manufacturer", brand_attribute="standard",
                 legal_name="produce", servings=2.0, size=250.0,
                 unit=Unit.GRAMS, price=3.0, nutrition=_DEFAULT, messages=(),
                 allergens=()) -> Product:
    if nutrition is _DEFAULT:
        nutrition = NutritionFacts(fat_g=1.0, sugar_g=1.0, carbs_g=5.0,
                                   dietary_fiber_pct=10.0, saturated_fat_g=0.5,
                                   good_fat_pct=20.0, protein_g=2.0, salt_g=0.2)
    if name is None:
        name = f"product {ean}"
    return Product(
        ean=str(ean), category=category, subcategory=subcategory,
        variety=variety, brand=brand, name=name,
        legal_name=legal_name, ingredients=ingredients, servings=servings,
        size=size, unit=unit, brand_type=brand_type,
        brand_attribute=brand_attribute, price=price, nutrition=nutrition,
        messages=tuple(messages), allergens=AllergenFlags.of(*allergens),
    )


def make_catalog(products, schema=SchemaVersion.DS2) -> Catalog:
    return Catalog(tuple(products), schema, provenance="test")


@pytest.fixture
def synthetic_catalog() -> Catalog:
    spec = SyntheticSpec(n_varieties=4, products_per_variety=15, seed=11,
                         allergen_prob=0.1)
    return clean_catalog(generate_synthetic_catalog(spec))


def make_cluster_corpus(n_docs=200, n_clusters=3, tokens_per_cluster=30,
                        doc_len=(12, 20), seed=0):
    """Tagged documents drawn from disjoint per-cluster token pools."""
    from groceryrec.textprep import Descriptor, DescriptorMode

    rng = random.Random(seed)
    pools = [[f"c{c}_w{i}" for i in range(tokens_per_cluster)]
             for c in range(n_clusters)]
    docs, labels = [], []
    for i in range(n_docs):
        cluster = i % n_clusters
        n = rng.randint(*doc_len)
        tokens = rng.sample(pools[cluster], min(n, tokens_per_cluster))
        docs.append(Descriptor(f"d{i}", tuple(tokens),
                               DescriptorMode.NN_TAGGED, tag=i))
        labels.append(cluster)
    return docs, labels


def cluster_cosine_means(doc_vectors, labels):
    """Mean pairwise cosine within clusters and across clusters."""
    import numpy as np

    V = np.asarray(doc_vectors, dtype=float)
    V = V / np.linalg.norm(V, axis=1, keepdims=True)
    G = V @ V.T
    labels = np.asarray(labels)
    same = labels[:, None] == labels[None, :]
    upper = np.triu(np.ones_like(G, dtype=bool), k=1)
    return float(G[same & upper].mean()), float(G[~same & upper].mean())
