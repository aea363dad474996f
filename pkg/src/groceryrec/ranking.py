"""Shared ranked-output types for both recommender families."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence


class Family(Enum):
    RSCF = "rscf"
    RSNN = "rsnn"


class Approach(Enum):
    PRO_COM = "pro_com"
    PK_BD = "pk_bd"
    HTH_BD = "hth_bd"


@dataclass(frozen=True)
class RankedCandidate:
    ean: str
    score_breakdown: dict[str, float]
    tie_group: int


@dataclass(frozen=True)
class RankedAlternatives:
    """Ordered substitute list; candidates with equal sort keys share a
    tie group.  ``excluded`` reports candidates dropped with a reason."""

    source: str
    approach: Approach
    family: Family
    candidates: tuple[RankedCandidate, ...]
    excluded: tuple[tuple[str, str], ...] = ()

    def top(self, k: int) -> tuple[RankedCandidate, ...]:
        return self.candidates[:k]


def rank_candidates(source: str, approach: Approach, family: Family,
                    entries: Sequence[tuple[tuple, str, dict[str, float]]],
                    k: Optional[int],
                    excluded: Sequence[tuple[str, str]] = ()) -> RankedAlternatives:
    """Sort (key, ean, breakdown) entries and assign tie groups.

    Entries sort by key then ean ascending; tie groups are decided by
    exact key equality over the full ordering, before truncating to k.
    """
    ordered = sorted(entries, key=lambda e: (e[0], e[1]))
    candidates: list[RankedCandidate] = []
    group = -1
    previous_key = None
    for key, ean, breakdown in ordered:
        if key != previous_key:
            group += 1
            previous_key = key
        candidates.append(RankedCandidate(ean, breakdown, group))
    if k is not None:
        candidates = candidates[:k]
    return RankedAlternatives(source, approach, family, tuple(candidates),
                              tuple(excluded))


def to_jsonable(result: RankedAlternatives) -> dict:
    """Canonical JSON-ready form, shared by the CLI and the HTTP API."""
    return {
        "source": result.source,
        "approach": result.approach.value,
        "family": result.family.value,
        "candidates": [
            {
                "ean": c.ean,
                "tie_group": c.tie_group,
                "score_breakdown": c.score_breakdown,
            }
            for c in result.candidates
        ],
        "excluded": [{"ean": e, "reason": r} for e, r in result.excluded],
    }
