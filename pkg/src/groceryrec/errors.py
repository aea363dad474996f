"""Exception types shared across the package."""


class GroceryRecError(Exception):
    """Base class for all library errors."""


class MalformedRow(GroceryRecError):
    """A catalog row could not be parsed; carries row number and column."""

    def __init__(self, row: int, column: str, detail: str):
        super().__init__(f"row {row}, column {column!r}: {detail}")
        self.row = row
        self.column = column
        self.detail = detail


class UnknownUnit(MalformedRow):
    """Package unit outside the accepted set."""


class SchemaMismatch(GroceryRecError):
    """CSV header does not match the declared schema version."""


class UnknownProduct(GroceryRecError):
    """EAN not present in the catalog (or tag not trained)."""


class VarietyTooSmall(GroceryRecError):
    """Source variety has fewer products than the configured threshold."""


class AllVarietiesFiltered(GroceryRecError):
    """Variety selection removed every product."""


class EmptyCorpus(GroceryRecError):
    """No tokens available to build a vocabulary."""


class AllTokensFiltered(GroceryRecError):
    """Every token fell below the minimum-count threshold."""


class UnknownTag(GroceryRecError):
    """Document tag was never trained."""


class DimensionMismatch(GroceryRecError):
    """Vectors of different lengths passed to a pairwise measure."""


class ZeroVector(GroceryRecError):
    """Cosine similarity is undefined for a zero vector."""


class EmptyPool(GroceryRecError):
    """Candidate pool is empty; names the filter that emptied it."""

    def __init__(self, source: str, stage: str):
        super().__init__(f"no candidates for {source!r} after {stage} filter")
        self.source = source
        self.stage = stage


class MissingPrice(GroceryRecError):
    """Price absent or non-positive where the scoring stage requires it."""


class MissingServings(GroceryRecError):
    """Servings absent where the ranking requires it."""


class MissingNutrition(GroceryRecError):
    """Nutrition table incomplete where the ranking requires it."""


class EmptyGroup(GroceryRecError):
    """No responses fall into the requested evaluation group."""


class InsufficientEligibleProducts(GroceryRecError):
    """Not enough valid source products to fill a survey block."""
