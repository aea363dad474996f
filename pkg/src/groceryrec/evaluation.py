"""Survey response scoring: MSE by question group, Group-3 accuracy and
expert questionnaire tallies.

Every question shows the recommender's top-3 options.  The correct
answer is always the top-ranked option (target value 1); the respondent's
choice maps to a value that depends on how tied the options were, and the
squared deviation from 1 is averaged.  Group 1 covers all questions,
Group 2 drops fully tied questions, Group 3 keeps only untied ones.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import EmptyGroup
from .ranking import Approach, Family


class TieShape(Enum):
    UNTIED = "untied"
    TOP2_TIED = "top2_tied"
    ALL_TIED = "all_tied"


#: Value of a choice (index 0 = first option) under each tie shape.
_CHOICE_VALUES = {
    TieShape.UNTIED: (1.0, 0.5, 0.0),
    TieShape.TOP2_TIED: (1.0, 1.0, 0.5),
    TieShape.ALL_TIED: (1.0, 1.0, 1.0),
}


@dataclass(frozen=True)
class SurveyQuestion:
    id: str
    approach: Approach
    family: Family
    source: str
    options: tuple[str, str, str]
    tie_shape: TieShape

    def __post_init__(self):
        if len(self.options) != 3:
            raise ValueError("a question carries exactly 3 options")


@dataclass(frozen=True)
class SurveyResponse:
    respondent: str
    question: str
    choice: int
    timestamp: str

    def __post_init__(self):
        if self.choice not in (1, 2, 3):
            raise ValueError(f"choice must be 1, 2 or 3, got {self.choice}")


@dataclass(frozen=True)
class ExpertResponse:
    question: str
    would_select: bool
    selected: Optional[int]
    ranking: tuple[int, int, int]

    def __post_init__(self):
        if self.would_select != (self.selected is not None):
            raise ValueError("selected must be present iff would_select")
        if self.selected is not None and self.selected not in (1, 2, 3):
            raise ValueError(f"selected must be 1, 2 or 3, got {self.selected}")
        if sorted(self.ranking) != [1, 2, 3]:
            raise ValueError(f"ranking must permute (1, 2, 3), got {self.ranking}")


@dataclass(frozen=True)
class ExpertTally:
    chosen_counts: dict[int, int]
    acceptable_fraction: float
    total: int


def tie_shape_from_groups(tie_groups: Sequence[int]) -> TieShape:
    """Derive the question's tie shape from the top-3 tie group ids."""
    first, second, third = tie_groups[:3]
    if first == second == third:
        return TieShape.ALL_TIED
    if first == second:
        return TieShape.TOP2_TIED
    return TieShape.UNTIED


def response_score(choice: int, tie_shape: TieShape) -> float:
    """Value of the chosen option given the question's tie shape."""
    return _CHOICE_VALUES[tie_shape][choice - 1]


def _group_filter(tie_shape: TieShape, group: int) -> bool:
    if group == 1:
        return True
    if group == 2:
        return tie_shape is not TieShape.ALL_TIED
    if group == 3:
        return tie_shape is TieShape.UNTIED
    raise ValueError(f"group must be 1, 2 or 3, got {group}")


def _question_map(questions: Iterable[SurveyQuestion]) -> dict[str, SurveyQuestion]:
    return {q.id: q for q in questions}


def mse_by_group(responses: Sequence[SurveyResponse],
                 questions: Sequence[SurveyQuestion], group: int) -> float:
    """Mean squared deviation from the top-1 target value of 1."""
    by_id = _question_map(questions)
    errors = []
    for r in responses:
        question = by_id.get(r.question)
        if question is None:
            raise ValueError(f"response references unknown question {r.question!r}")
        if _group_filter(question.tie_shape, group):
            errors.append((response_score(r.choice, question.tie_shape) - 1.0) ** 2)
    if not errors:
        raise EmptyGroup(f"no responses in group {group}")
    return sum(errors) / len(errors)


def accuracy_group3(responses: Sequence[SurveyResponse],
                    questions: Sequence[SurveyQuestion]) -> float:
    """Fraction of first-or-second choices over untied questions."""
    by_id = _question_map(questions)
    hits, total = 0, 0
    for r in responses:
        question = by_id.get(r.question)
        if question is None:
            raise ValueError(f"response references unknown question {r.question!r}")
        if question.tie_shape is TieShape.UNTIED:
            total += 1
            hits += r.choice in (1, 2)
    if total == 0:
        raise EmptyGroup("no responses to untied questions")
    return hits / total


def expert_tally(expert_responses: Sequence[ExpertResponse],
                 questions: Sequence[SurveyQuestion]) -> dict[Approach, ExpertTally]:
    """Per-approach option-choice counts and acceptable fraction."""
    by_id = _question_map(questions)
    counts: dict[Approach, dict[int, int]] = {}
    would: dict[Approach, int] = {}
    totals: dict[Approach, int] = {}
    for r in expert_responses:
        question = by_id.get(r.question)
        if question is None:
            raise ValueError(f"expert response references unknown question {r.question!r}")
        approach = question.approach
        counts.setdefault(approach, {1: 0, 2: 0, 3: 0})
        totals[approach] = totals.get(approach, 0) + 1
        if r.would_select:
            would[approach] = would.get(approach, 0) + 1
            counts[approach][r.selected] += 1
    return {
        approach: ExpertTally(
            chosen_counts=counts[approach],
            acceptable_fraction=would.get(approach, 0) / totals[approach],
            total=totals[approach],
        )
        for approach in totals
    }


# ---------------------------------------------------------------------------
# Append-only response persistence (newline-delimited JSON)
# ---------------------------------------------------------------------------


def append_responses(path: str | Path, responses: Iterable[SurveyResponse]) -> int:
    written = 0
    with Path(path).open("a", encoding="utf-8") as handle:
        for r in responses:
            record = {"respondent": r.respondent, "question": r.question,
                      "choice": r.choice, "timestamp": r.timestamp}
            handle.write(json.dumps(record, sort_keys=True) + "\n")
            written += 1
    return written


def read_responses(path: str | Path) -> list[SurveyResponse]:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    with path.open(encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            out.append(SurveyResponse(record["respondent"], record["question"],
                                      record["choice"], record["timestamp"]))
    return out


def append_expert_responses(path: str | Path,
                            responses: Iterable[ExpertResponse]) -> int:
    written = 0
    with Path(path).open("a", encoding="utf-8") as handle:
        for r in responses:
            record = {"question": r.question, "would_select": r.would_select,
                      "selected": r.selected, "ranking": list(r.ranking)}
            handle.write(json.dumps(record, sort_keys=True) + "\n")
            written += 1
    return written


def read_expert_responses(path: str | Path) -> list[ExpertResponse]:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    with path.open(encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            out.append(ExpertResponse(record["question"], record["would_select"],
                                      record["selected"], tuple(record["ranking"])))
    return out


# ---------------------------------------------------------------------------
# Metrics report
# ---------------------------------------------------------------------------


def build_metrics_report(questions: Sequence[SurveyQuestion],
                         responses: Sequence[SurveyResponse],
                         expert_responses: Sequence[ExpertResponse] = ()) -> dict:
    """Approach x group MSE table, Group-3 accuracy, response histograms
    and (when present) the expert tally.  Empty groups surface as nulls
    plus an entry in ``empty_groups`` rather than failing the report."""
    approaches = []
    for q in questions:
        if q.approach not in approaches:
            approaches.append(q.approach)
    report: dict = {
        "n_responses": len(responses),
        "mse": {},
        "accuracy_group3": {},
        "histograms": {},
        "empty_groups": [],
    }
    for approach in approaches:
        block_questions = [q for q in questions if q.approach is approach]
        block_ids = {q.id for q in block_questions}
        block_responses = [r for r in responses if r.question in block_ids]
        mse_row = {}
        for group in (1, 2, 3):
            try:
                mse_row[f"group{group}"] = mse_by_group(
                    block_responses, block_questions, group)
            except EmptyGroup:
                mse_row[f"group{group}"] = None
                report["empty_groups"].append(f"{approach.value}/group{group}")
        report["mse"][approach.value] = mse_row
        try:
            acc = accuracy_group3(block_responses, block_questions)
        except EmptyGroup:
            acc = None
            report["empty_groups"].append(f"{approach.value}/accuracy_group3")
        report["accuracy_group3"][approach.value] = acc
    for q in questions:
        histogram = {"1": 0, "2": 0, "3": 0}
        for r in responses:
            if r.question == q.id:
                histogram[str(r.choice)] += 1
        report["histograms"][q.id] = histogram
    if expert_responses:
        tallies = expert_tally(expert_responses, questions)
        report["expert"] = {
            approach.value: {
                "chosen_counts": {str(k): v for k, v in t.chosen_counts.items()},
                "acceptable_fraction": t.acceptable_fraction,
                "total": t.total,
            }
            for approach, t in tallies.items()
        }
    return report


def render_metrics_text(report: dict) -> str:
    """Plain-text metrics table."""
    lines = [f"responses: {report['n_responses']}",
             "", "MSE by group"]
    header = f"{'approach':<12}{'group1':>12}{'group2':>12}{'group3':>12}"
    lines.append(header)
    for approach, row in report["mse"].items():
        cells = [
            f"{row[g]:.6f}" if row[g] is not None else "-"
            for g in ("group1", "group2", "group3")
        ]
        lines.append(f"{approach:<12}{cells[0]:>12}{cells[1]:>12}{cells[2]:>12}")
    lines += ["", "Accuracy (group 3)"]
    for approach, acc in report["accuracy_group3"].items():
        shown = f"{acc * 100:.2f}%" if acc is not None else "-"
        lines.append(f"{approach:<12}{shown:>12}")
    if report.get("expert"):
        lines += ["", "Expert tally"]
        for approach, t in report["expert"].items():
            lines.append(
                f"{approach:<12}acceptable={t['acceptable_fraction']:.2f} "
                f"counts={t['chosen_counts']}"
            )
    if report["empty_groups"]:
        lines += ["", "empty groups: " + ", ".join(report["empty_groups"])]
    return "\n".join(lines) + "\n"
