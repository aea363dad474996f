"""Product data model, catalog ingestion, cleaning and synthetic generation.

A catalog is an immutable, ordered collection of products parsed from a
CSV file in one of two tabular layouts (DS1 and DS2).  DS2 extends DS1
with brand metadata, price, a full nutrition table and per-allergen flag
columns.  Cleaning removes rows that are unusable for recommendation and
deduplicates identifiers; variety selection drops varieties with too few
products to offer alternatives.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .errors import (
    AllVarietiesFiltered,
    MalformedRow,
    SchemaMismatch,
    UnknownUnit,
)

#: Fixed allergen universe.  The flags form a set, so subset comparison
#: between two products is well defined.
ALLERGENS = (
    "nuts",
    "egg",
    "hazelnuts",
    "fish",
    "sulfates",
    "peanuts",
    "mollusks",
    "lupine",
    "gluten",
    "mustard",
    "soy",
    "crustaceans",
    "milk_lactose",
    "sunflower_seeds",
    "sesame",
    "celery",
)

#: CSV column name per allergen flag (DS2 only).
_ALLERGEN_COLUMNS = {
    "nuts": "Nuts",
    "egg": "Egg",
    "hazelnuts": "Hazelnuts",
    "fish": "Fish",
    "sulfates": "Sulfates",
    "peanuts": "Peanuts",
    "mollusks": "Mollusks",
    "lupine": "Lupine",
    "gluten": "Gluten",
    "mustard": "Mustard",
    "soy": "Soy",
    "crustaceans": "Crustaceans",
    "milk_lactose": "MilkLactose",
    "sunflower_seeds": "SunflowerSeeds",
    "sesame": "Sesame",
    "celery": "Celery",
}

#: Free-text form of each allergen, used when descriptor text is built.
ALLERGEN_TEXT = {
    "nuts": "nuts",
    "egg": "egg",
    "hazelnuts": "hazelnuts",
    "fish": "fish",
    "sulfates": "sulfates",
    "peanuts": "peanuts",
    "mollusks": "mollusks",
    "lupine": "lupine",
    "gluten": "gluten",
    "mustard": "mustard",
    "soy": "soy",
    "crustaceans": "crustaceans",
    "milk_lactose": "milk lactose",
    "sunflower_seeds": "sunflower seeds",
    "sesame": "sesame",
    "celery": "celery",
}


class SchemaVersion(Enum):
    DS1 = "DS1"
    DS2 = "DS2"


class Unit(Enum):
    GRAMS = "g"
    MILLILITERS = "ml"
    UNITS = "units"


_DS1_COLUMNS = (
    ["EAN", "Category", "Subcategory", "Variety", "Brand", "Name", "LegalName",
     "Ingredients", "Servings", "Size", "Unit", "Fat", "Sugar"]
    + [f"Message{i}" for i in range(1, 14)]
)

_DS2_COLUMNS = (
    _DS1_COLUMNS
    + ["BrandType", "BrandAttribute", "Price", "Carbs", "DietaryFiberPct",
       "SaturatedFat", "GoodFatPct", "Protein", "Salt"]
    + [_ALLERGEN_COLUMNS[a] for a in ALLERGENS]
)

MAX_MESSAGES = 13


@dataclass(frozen=True)
class AllergenFlags:
    """Set of allergens a product may contain."""

    present: frozenset[str] = frozenset()

    def __post_init__(self):
        unknown = self.present - set(ALLERGENS)
        if unknown:
            raise ValueError(f"unknown allergens: {sorted(unknown)}")

    @classmethod
    def of(cls, *names: str) -> "AllergenFlags":
        return cls(frozenset(names))

    def issubset(self, other: "AllergenFlags") -> bool:
        return self.present <= other.present

    def __contains__(self, name: str) -> bool:
        return name in self.present

    def __iter__(self) -> Iterator[str]:
        return iter(a for a in ALLERGENS if a in self.present)

    def __len__(self) -> int:
        return len(self.present)


@dataclass(frozen=True)
class NutritionFacts:
    """Per-product nutrition table; fields absent in the source stay None.

    ``dietary_fiber_pct`` is stored as a percentage of carbs and
    ``good_fat_pct`` as a percentage of fat, exactly as the source data
    records them; gram conversion happens at scoring time.
    """

    fat_g: Optional[float] = None
    sugar_g: Optional[float] = None
    carbs_g: Optional[float] = None
    dietary_fiber_pct: Optional[float] = None
    saturated_fat_g: Optional[float] = None
    good_fat_pct: Optional[float] = None
    protein_g: Optional[float] = None
    salt_g: Optional[float] = None

    def __post_init__(self):
        for name in ("fat_g", "sugar_g", "carbs_g", "saturated_fat_g",
                     "protein_g", "salt_g"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be >= 0, got {value}")
        for name in ("dietary_fiber_pct", "good_fat_pct"):
            value = getattr(self, name)
            if value is not None and not (0 <= value <= 100):
                raise ValueError(f"{name} must be in [0, 100], got {value}")

    @property
    def is_complete(self) -> bool:
        """True when all eight fields are present."""
        return None not in (
            self.fat_g, self.sugar_g, self.carbs_g, self.dietary_fiber_pct,
            self.saturated_fat_g, self.good_fat_pct, self.protein_g,
            self.salt_g,
        )

    @property
    def has_fat_and_sugar(self) -> bool:
        return self.fat_g is not None and self.sugar_g is not None


@dataclass(frozen=True)
class Product:
    """One catalog row."""

    ean: str
    category: str
    subcategory: str
    variety: str
    brand: str
    name: str
    legal_name: str
    ingredients: str
    servings: Optional[float] = None
    size: Optional[float] = None
    unit: Optional[Unit] = None
    brand_type: Optional[str] = None
    brand_attribute: Optional[str] = None
    price: Optional[float] = None
    nutrition: Optional[NutritionFacts] = None
    messages: tuple[str, ...] = ()
    allergens: AllergenFlags = AllergenFlags()

    def __post_init__(self):
        if self.servings is not None and self.servings <= 0:
            raise ValueError(f"servings must be > 0, got {self.servings}")
        if self.size is not None and self.size <= 0:
            raise ValueError(f"size must be > 0, got {self.size}")
        if self.price is not None and self.price < 0:
            raise ValueError(f"price must be >= 0, got {self.price}")
        if len(self.messages) > MAX_MESSAGES:
            raise ValueError(f"at most {MAX_MESSAGES} messages allowed")


@dataclass(frozen=True)
class Catalog:
    """Immutable ordered product collection plus its schema version."""

    products: tuple[Product, ...]
    schema_version: SchemaVersion
    provenance: str = field(default="", compare=False)

    def __post_init__(self):
        index: dict[str, Product] = {}
        for p in self.products:
            index.setdefault(p.ean, p)
        object.__setattr__(self, "_by_ean", index)

    def __len__(self) -> int:
        return len(self.products)

    def __iter__(self) -> Iterator[Product]:
        return iter(self.products)

    def get(self, ean: str) -> Optional[Product]:
        return self._by_ean.get(ean)

    def variety_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for p in self.products:
            counts[p.variety] = counts.get(p.variety, 0) + 1
        return counts

    def in_variety(self, variety: str) -> list[Product]:
        return [p for p in self.products if p.variety == variety]

    def in_subcategory(self, subcategory: str) -> list[Product]:
        return [p for p in self.products if p.subcategory == subcategory]


@dataclass(frozen=True)
class VarietySelection:
    """Result of variety filtering: surviving catalog plus the threshold used."""

    catalog: Catalog
    threshold: int
    removed_varieties: tuple[str, ...]


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------


def _parse_number(cell: str, row: int, column: str, *, minimum: Optional[float] = None,
                  maximum: Optional[float] = None, strict_min: bool = False) -> Optional[float]:
    cell = cell.strip()
    if not cell:
        return None
    try:
        value = float(cell)
    except ValueError:
        raise MalformedRow(row, column, f"not a number: {cell!r}") from None
    if not math.isfinite(value):
        raise MalformedRow(row, column, f"not finite: {cell!r}")
    if minimum is not None:
        if strict_min and value <= minimum:
            raise MalformedRow(row, column, f"must be > {minimum}, got {value}")
        if not strict_min and value < minimum:
            raise MalformedRow(row, column, f"must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise MalformedRow(row, column, f"must be <= {maximum}, got {value}")
    return value


def _parse_unit(cell: str, row: int) -> Optional[Unit]:
    cell = cell.strip()
    if not cell:
        return None
    try:
        return Unit(cell)
    except ValueError:
        raise UnknownUnit(row, "Unit", f"unknown unit {cell!r}") from None


def _parse_flag(cell: str, row: int, column: str) -> bool:
    cell = cell.strip()
    if cell in ("", "0"):
        return False
    if cell == "1":
        return True
    raise MalformedRow(row, column, f"allergen flag must be 0 or 1, got {cell!r}")


def expected_columns(schema_version: SchemaVersion) -> list[str]:
    return list(_DS1_COLUMNS if schema_version is SchemaVersion.DS1 else _DS2_COLUMNS)


def load_catalog(source: str | Path, schema_version: SchemaVersion) -> Catalog:
    """Parse a CSV catalog file.

    Missing cells become absent optionals; numeric and enum violations
    raise with the offending row number and column name.
    """
    source = Path(source)
    expected = expected_columns(schema_version)
    products: list[Product] = []
    with source.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != expected:
            raise SchemaMismatch(
                f"{source.name}: header does not match {schema_version.value} schema"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise MalformedRow(lineno, "<row>",
                                   f"expected {len(expected)} cells, got {len(row)}")
            cells = dict(zip(expected, row))
            products.append(_product_from_cells(cells, lineno, schema_version))
    return Catalog(tuple(products), schema_version, provenance=str(source))


def _product_from_cells(cells: dict[str, str], lineno: int,
                        schema_version: SchemaVersion) -> Product:
    messages = tuple(
        cells[f"Message{i}"].strip()
        for i in range(1, 14)
        if cells[f"Message{i}"].strip()
    )
    nutrition_fields = {
        "fat_g": _parse_number(cells["Fat"], lineno, "Fat", minimum=0.0),
        "sugar_g": _parse_number(cells["Sugar"], lineno, "Sugar", minimum=0.0),
    }
    brand_type = brand_attribute = None
    price = None
    allergens = AllergenFlags()
    if schema_version is SchemaVersion.DS2:
        nutrition_fields.update(
            carbs_g=_parse_number(cells["Carbs"], lineno, "Carbs", minimum=0.0),
            dietary_fiber_pct=_parse_number(cells["DietaryFiberPct"], lineno,
                                            "DietaryFiberPct", minimum=0.0, maximum=100.0),
            saturated_fat_g=_parse_number(cells["SaturatedFat"], lineno,
                                          "SaturatedFat", minimum=0.0),
            good_fat_pct=_parse_number(cells["GoodFatPct"], lineno,
                                       "GoodFatPct", minimum=0.0, maximum=100.0),
            protein_g=_parse_number(cells["Protein"], lineno, "Protein", minimum=0.0),
            salt_g=_parse_number(cells["Salt"], lineno, "Salt", minimum=0.0),
        )
        brand_type = cells["BrandType"].strip() or None
        brand_attribute = cells["BrandAttribute"].strip() or None
        price = _parse_number(cells["Price"], lineno, "Price", minimum=0.0)
        allergens = AllergenFlags(frozenset(
            a for a in ALLERGENS
            if _parse_flag(cells[_ALLERGEN_COLUMNS[a]], lineno, _ALLERGEN_COLUMNS[a])
        ))
    nutrition = None
    if any(v is not None for v in nutrition_fields.values()):
        nutrition = NutritionFacts(**nutrition_fields)
    try:
        return Product(
            ean=cells["EAN"].strip(),
            category=cells["Category"].strip(),
            subcategory=cells["Subcategory"].strip(),
            variety=cells["Variety"].strip(),
            brand=cells["Brand"].strip(),
            name=cells["Name"].strip(),
            legal_name=cells["LegalName"].strip(),
            ingredients=cells["Ingredients"].strip(),
            servings=_parse_number(cells["Servings"], lineno, "Servings",
                                   minimum=0.0, strict_min=True),
            size=_parse_number(cells["Size"], lineno, "Size",
                               minimum=0.0, strict_min=True),
            unit=_parse_unit(cells["Unit"], lineno),
            brand_type=brand_type,
            brand_attribute=brand_attribute,
            price=price,
            nutrition=nutrition,
            messages=messages,
            allergens=allergens,
        )
    except ValueError as exc:
        raise MalformedRow(lineno, "<row>", str(exc)) from None


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, Unit):
        return value.value
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_catalog(catalog: Catalog, target: str | Path) -> None:
    """Write the canonical CSV form; ``load_catalog`` round-trips it."""
    target = Path(target)
    columns = expected_columns(catalog.schema_version)
    with target.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for p in catalog.products:
            writer.writerow(_cells_for(p, catalog.schema_version))


def _cells_for(p: Product, schema_version: SchemaVersion) -> list[str]:
    n = p.nutrition or NutritionFacts()
    cells = [
        p.ean, p.category, p.subcategory, p.variety, p.brand, p.name,
        p.legal_name, p.ingredients, _fmt(p.servings), _fmt(p.size),
        _fmt(p.unit), _fmt(n.fat_g), _fmt(n.sugar_g),
    ]
    cells += list(p.messages) + [""] * (MAX_MESSAGES - len(p.messages))
    if schema_version is SchemaVersion.DS2:
        cells += [
            p.brand_type or "", p.brand_attribute or "", _fmt(p.price),
            _fmt(n.carbs_g), _fmt(n.dietary_fiber_pct), _fmt(n.saturated_fat_g),
            _fmt(n.good_fat_pct), _fmt(n.protein_g), _fmt(n.salt_g),
        ]
        cells += ["1" if a in p.allergens else "0" for a in ALLERGENS]
    return cells


# ---------------------------------------------------------------------------
# Cleaning and variety selection
# ---------------------------------------------------------------------------


def clean_catalog(catalog: Catalog) -> Catalog:
    """Remove unusable rows and duplicate identifiers.

    DS1 drops rows lacking a name or servings; DS2 drops rows lacking any
    of name, brand, brand type, brand attribute, variety, ingredients or
    legal name, then rows duplicated on (name, brand).  Both modes then
    drop rows with an empty EAN and deduplicate EANs keeping the first
    occurrence.  Rows with an empty variety are always dropped so that
    grouping by variety stays well defined.  Cleaning is total and
    idempotent.
    """
    rows: Iterable[Product] = catalog.products
    if catalog.schema_version is SchemaVersion.DS1:
        rows = [p for p in rows if p.name and p.servings is not None]
    else:
        rows = [
            p for p in rows
            if p.name and p.brand and p.brand_type and p.brand_attribute
            and p.variety and p.ingredients and p.legal_name
        ]
        seen_nb: set[tuple[str, str]] = set()
        deduped = []
        for p in rows:
            key = (p.name, p.brand)
            if key in seen_nb:
                continue
            seen_nb.add(key)
            deduped.append(p)
        rows = deduped
    rows = [p for p in rows if p.variety]
    seen_ean: set[str] = set()
    kept: list[Product] = []
    for p in rows:
        if not p.ean or p.ean in seen_ean:
            continue
        seen_ean.add(p.ean)
        kept.append(p)
    return Catalog(tuple(kept), catalog.schema_version, provenance=catalog.provenance)


def _nearest_rank_quartile(counts: list[int]) -> int:
    ordered = sorted(counts)
    rank = math.ceil(0.25 * len(ordered))
    return ordered[max(rank, 1) - 1]


def select_varieties(catalog: Catalog, *, min_count: Optional[int] = None,
                     first_quartile: bool = False) -> VarietySelection:
    """Drop varieties whose product count falls below a threshold.

    The threshold is either explicit (``min_count``) or the nearest-rank
    25th percentile of per-variety counts (``first_quartile``).  Products
    in surviving varieties are never removed.
    """
    if (min_count is None) == (not first_quartile):
        raise ValueError("choose exactly one of min_count or first_quartile")
    counts = catalog.variety_counts()
    if not counts:
        raise AllVarietiesFiltered("catalog has no products")
    threshold = min_count if min_count is not None \
        else _nearest_rank_quartile(list(counts.values()))
    removed = tuple(v for v, c in counts.items() if c < threshold)
    survivors = tuple(p for p in catalog.products if counts[p.variety] >= threshold)
    if not survivors:
        raise AllVarietiesFiltered(
            f"threshold {threshold} removed all {len(counts)} varieties"
        )
    kept = Catalog(survivors, catalog.schema_version, provenance=catalog.provenance)
    return VarietySelection(kept, threshold, removed)


# ---------------------------------------------------------------------------
# Synthetic catalogs
# ---------------------------------------------------------------------------

_MASTER_TOKENS = (
    "almond apple apricot barley basil bean beet berry bran broccoli "
    "butter cabbage cacao caramel carrot cashew celeriac cherry chickpea "
    "chili cinnamon cocoa coconut corn cranberry cream cucumber currant "
    "date fennel fig garlic ginger grape hazelnut honey kale leek lemon "
    "lentil lime mango maple melon millet mint mushroom nutmeg oat olive "
    "onion orange oregano paprika parsley peach pear pepper pineapple "
    "pistachio plum potato pumpkin quinoa raisin raspberry rice rosemary "
    "rye saffron sage seaweed sesame spelt spinach strawberry tapioca "
    "thyme tomato turmeric vanilla walnut wheat yeast zucchini"
).split()

_BRANDS = ("acme", "borealis", "cantina", "delica", "eastfield",
           "fable", "granary", "harbor")
_BRAND_TYPES = ("manufacturer", "white")
_BRAND_ATTRIBUTES = ("standard", "premium")
_CLAIM_POOL = (
    "Without sugar", "Without gluten", "Without lactose",
    "Without preservatives", "Without nuts", "Without egg", "Low fat",
)
_NOISE_MESSAGES = ("Room temperature", "Keep refrigerated", "Shake before use")
_SIZES = (100.0, 250.0, 330.0, 500.0, 750.0, 1000.0)


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for deterministic synthetic catalog generation."""

    n_varieties: int
    products_per_variety: int
    seed: int
    vocab_pools: Optional[tuple[tuple[str, ...], ...]] = None
    pool_size: int = 12
    allergen_prob: float = 0.15
    claim_prob: float = 0.4
    price_range: tuple[float, float] = (0.5, 12.0)
    max_servings: int = 6

    def __post_init__(self):
        if self.n_varieties <= 0 or self.products_per_variety <= 0:
            raise ValueError("spec sizes must be positive")
        if not 0 <= self.allergen_prob <= 1 or not 0 <= self.claim_prob <= 1:
            raise ValueError("probabilities must be in [0, 1]")


def generate_synthetic_catalog(spec: SyntheticSpec) -> Catalog:
    """Generate a DS2-schema catalog, reproducible from the seed.

    Ingredient texts are drawn from per-variety token pools so products
    inside a variety share vocabulary.  Prices are synthetic by design.
    """
    rng = random.Random(spec.seed)
    pools = spec.vocab_pools
    if pools is None:
        pools = tuple(
            tuple(rng.sample(_MASTER_TOKENS, spec.pool_size))
            for _ in range(spec.n_varieties)
        )
    products: list[Product] = []
    ean_counter = 10_000_000
    for v in range(spec.n_varieties):
        pool = list(pools[v % len(pools)])
        variety = f"variety{v:02d}"
        subcategory = f"subcat{v // 3:02d}"
        category = f"cat{v // 9:02d}"
        for i in range(spec.products_per_variety):
            ean_counter += 1
            n_ing = rng.randint(3, min(8, len(pool)))
            ingredients = ", ".join(rng.sample(pool, n_ing))
            name_tokens = rng.sample(pool, 2)
            name = f"{name_tokens[0]} {name_tokens[1]} {i:02d}"
            legal = " ".join(rng.sample(pool, 2))
            flags = frozenset(a for a in ALLERGENS if rng.random() < spec.allergen_prob)
            messages: list[str] = []
            if rng.random() < spec.claim_prob:
                messages.extend(rng.sample(_CLAIM_POOL, rng.randint(1, 3)))
            if rng.random() < 0.3:
                messages.append(rng.choice(_NOISE_MESSAGES))
            nutrition = NutritionFacts(
                fat_g=round(rng.uniform(0, 30), 2),
                sugar_g=round(rng.uniform(0, 25), 2),
                carbs_g=round(rng.uniform(0, 60), 2),
                dietary_fiber_pct=round(rng.uniform(0, 40), 2),
                saturated_fat_g=round(rng.uniform(0, 15), 2),
                good_fat_pct=round(rng.uniform(0, 60), 2),
                protein_g=round(rng.uniform(0, 20), 2),
                salt_g=round(rng.uniform(0, 5), 2),
            )
            products.append(Product(
                ean=str(ean_counter),
                category=category,
                subcategory=subcategory,
                variety=variety,
                brand=rng.choice(_BRANDS),
                name=name,
                legal_name=legal,
                ingredients=ingredients,
                servings=float(rng.randint(1, spec.max_servings)),
                size=rng.choice(_SIZES),
                unit=Unit(rng.choice(["g", "ml", "units"])),
                brand_type=rng.choice(_BRAND_TYPES),
                brand_attribute=rng.choice(_BRAND_ATTRIBUTES),
                price=round(rng.uniform(*spec.price_range), 2),
                nutrition=nutrition,
                messages=tuple(messages),
                allergens=AllergenFlags(flags),
            ))
    return Catalog(tuple(products), SchemaVersion.DS2,
                   provenance=f"synthetic(seed={spec.seed})")
