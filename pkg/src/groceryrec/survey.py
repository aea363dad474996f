"""Survey bundle generation: 3 blocks of 10 questions, one block per
approach, each question pairing a source product with the approach's
top-3 alternatives."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Optional

from .catalog import Catalog
from .errors import GroceryRecError, InsufficientEligibleProducts
from .evaluation import SurveyQuestion, TieShape, tie_shape_from_groups
from .ranking import Approach, Family, RankedAlternatives

QUESTIONS_PER_BLOCK = 10

Recommender = Callable[[str], RankedAlternatives]


@dataclass(frozen=True)
class SurveyBlock:
    approach: Approach
    questions: tuple[SurveyQuestion, ...]


@dataclass(frozen=True)
class SurveyBundle:
    survey_id: str
    family: Family
    metric: Optional[str]
    seed: int
    blocks: tuple[SurveyBlock, ...]
    provenance: str = ""

    @property
    def questions(self) -> tuple[SurveyQuestion, ...]:
        return tuple(q for block in self.blocks for q in block.questions)


def block_order(family: Family) -> tuple[Approach, ...]:
    """Block order per family: the embedding survey moved health ahead
    of packaging."""
    if family is Family.RSCF:
        return (Approach.PRO_COM, Approach.PK_BD, Approach.HTH_BD)
    return (Approach.PRO_COM, Approach.HTH_BD, Approach.PK_BD)


def build_survey(catalog: Catalog,
                 recommenders: Mapping[Approach, Recommender],
                 seed: int,
                 family: Family,
                 metric: Optional[str] = None,
                 survey_id: Optional[str] = None,
                 questions_per_block: int = QUESTIONS_PER_BLOCK,
                 provenance: str = "") -> SurveyBundle:
    """Sample source products per block and attach each approach's top-3.

    Candidate sources are visited in a seeded shuffle of the catalog;
    products the recommender rejects (small variety, missing fields,
    empty pool) are skipped until the block is full.
    """
    if survey_id is None:
        metric_part = metric or "none"
        survey_id = f"sv-{family.value}-{metric_part}-{seed}"
    rng = random.Random(seed)
    eans = [p.ean for p in catalog.products]
    blocks: list[SurveyBlock] = []
    for approach in block_order(family):
        recommender = recommenders[approach]
        order = rng.sample(eans, len(eans))
        questions: list[SurveyQuestion] = []
        for ean in order:
            try:
                result = recommender(ean)
            except GroceryRecError:
                continue
            if len(result.candidates) < 3:
                continue
            top3 = result.candidates[:3]
            questions.append(SurveyQuestion(
                id=f"{survey_id}-{approach.value}-{len(questions):02d}",
                approach=approach,
                family=family,
                source=ean,
                options=tuple(c.ean for c in top3),
                tie_shape=tie_shape_from_groups([c.tie_group for c in top3]),
            ))
            if len(questions) == questions_per_block:
                break
        if len(questions) < questions_per_block:
            raise InsufficientEligibleProducts(
                f"block {approach.value}: only {len(questions)} of "
                f"{questions_per_block} questions could be built"
            )
        blocks.append(SurveyBlock(approach, tuple(questions)))
    return SurveyBundle(survey_id, family, metric, seed, tuple(blocks),
                        provenance)


# ---------------------------------------------------------------------------
# JSON persistence
# ---------------------------------------------------------------------------


def bundle_to_dict(bundle: SurveyBundle) -> dict:
    return {
        "survey_id": bundle.survey_id,
        "family": bundle.family.value,
        "metric": bundle.metric,
        "seed": bundle.seed,
        "provenance": bundle.provenance,
        "blocks": [
            {
                "approach": block.approach.value,
                "questions": [
                    {
                        "id": q.id,
                        "source": q.source,
                        "options": list(q.options),
                        "tie_shape": q.tie_shape.value,
                    }
                    for q in block.questions
                ],
            }
            for block in bundle.blocks
        ],
    }


def bundle_from_dict(data: dict) -> SurveyBundle:
    family = Family(data["family"])
    blocks = []
    for raw in data["blocks"]:
        approach = Approach(raw["approach"])
        questions = tuple(
            SurveyQuestion(
                id=q["id"],
                approach=approach,
                family=family,
                source=q["source"],
                options=tuple(q["options"]),
                tie_shape=TieShape(q["tie_shape"]),
            )
            for q in raw["questions"]
        )
        blocks.append(SurveyBlock(approach, questions))
    return SurveyBundle(data["survey_id"], family, data["metric"],
                        data["seed"], tuple(blocks), data.get("provenance", ""))


def save_bundle(bundle: SurveyBundle, target: str | Path) -> None:
    payload = json.dumps(bundle_to_dict(bundle), sort_keys=True, indent=2)
    Path(target).write_text(payload + "\n", encoding="utf-8")


def load_bundle(source: str | Path) -> SurveyBundle:
    return bundle_from_dict(json.loads(Path(source).read_text(encoding="utf-8")))
