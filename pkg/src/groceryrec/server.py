"""HTTP service tying the pipeline together.

Serves recommendations, survey bundles, response collection and metric
reports over a /v1 API.  Catalog, matrices and the embedding model are
loaded once at startup and shared immutably between requests; survey
response appends are serialized through a lock onto an append-only
newline-delimited store.
"""

from __future__ import annotations

import csv
import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import bow, rscf, rsnn
from .catalog import Catalog, Product, SchemaVersion, clean_catalog, load_catalog
from .catalog import expected_columns
from .embed import EmbeddingModel, load_model
from .errors import (
    EmptyPool,
    GroceryRecError,
    MissingNutrition,
    MissingPrice,
    MissingServings,
    UnknownProduct,
    VarietyTooSmall,
)
from .evaluation import (
    ExpertResponse,
    SurveyResponse,
    append_expert_responses,
    append_responses,
    build_metrics_report,
    read_expert_responses,
    read_responses,
    render_metrics_text,
)
from .ranking import Approach, Family, RankedAlternatives, to_jsonable
from .similarity import MetricKind
from .survey import SurveyBundle, load_bundle
from .textprep import DescriptorMode, build_corpus, build_without_vocabulary


def canonical_json(payload) -> bytes:
    """Stable byte encoding shared by the CLI and the HTTP layer."""
    return (json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n") \
        .encode("utf-8")


def detect_schema(path: str | Path) -> SchemaVersion:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        header = next(csv.reader(handle), None)
    for version in SchemaVersion:
        if header == expected_columns(version):
            return version
    raise GroceryRecError(f"{path}: header matches neither DS1 nor DS2")


@dataclass
class ServiceConfig:
    data_dir: Path
    model_path: Optional[Path] = None
    port: int = 8000
    rscf_min_variety: int = rscf.DEFAULT_MIN_VARIETY
    rsnn_thresholds: dict = field(
        default_factory=lambda: dict(rsnn.DEFAULT_VARIETY_THRESHOLDS))

    @property
    def catalog_path(self) -> Path:
        return self.data_dir / "catalog.csv"

    @property
    def surveys_dir(self) -> Path:
        return self.data_dir / "surveys"

    @property
    def responses_dir(self) -> Path:
        return self.data_dir / "responses"


class AppState:
    """Immutable pipeline state shared by all requests."""

    def __init__(self, config: ServiceConfig):
        if not config.catalog_path.exists():
            raise GroceryRecError(f"catalog file missing: {config.catalog_path}")
        self.config = config
        schema = detect_schema(config.catalog_path)
        self.catalog: Catalog = clean_catalog(
            load_catalog(config.catalog_path, schema))
        full = build_corpus(self.catalog, DescriptorMode.CF_FULL)
        self.matrix = bow.vectorize(full, bow.build_vocabulary(full))
        self.ingredient_corpus = build_corpus(self.catalog,
                                              DescriptorMode.CF_INGREDIENTS)
        self.without_vocab = build_without_vocabulary(self.catalog)
        self.model: Optional[EmbeddingModel] = None
        self.vectors: Optional[rsnn.TrainedVectorSource] = None
        if config.model_path is not None:
            if not config.model_path.exists():
                raise GroceryRecError(f"model file missing: {config.model_path}")
            self.model = load_model(config.model_path)
            self.vectors = rsnn.TrainedVectorSource(self.catalog, self.model)

    def recommend(self, ean: str, family: Family, approach: Approach,
                  metric: MetricKind = MetricKind.COSINE,
                  k: Optional[int] = 3) -> RankedAlternatives:
        if family is Family.RSCF:
            min_variety = self.config.rscf_min_variety
            if approach is Approach.PRO_COM:
                return rscf.recommend_pro_com(self.matrix, self.catalog, ean,
                                              k, min_variety)
            if approach is Approach.PK_BD:
                return rscf.recommend_pk_bd(self.matrix, self.catalog, ean,
                                            k, min_variety)
            return rscf.recommend_hth_bd(self.catalog, self.without_vocab,
                                         self.ingredient_corpus, ean, k,
                                         min_variety)
        if self.vectors is None:
            raise GroceryRecError("no embedding model loaded; train one first")
        threshold = self.config.rsnn_thresholds[approach]
        if approach is Approach.PRO_COM:
            return rsnn.recommend_pro_com_nn(self.vectors, metric, self.catalog,
                                             ean, k, threshold)
        if approach is Approach.HTH_BD:
            return rsnn.recommend_hth_bd_nn(self.vectors, metric, self.catalog,
                                            ean, k, threshold)
        return rsnn.recommend_pk_bd_nn(self.vectors, metric, self.catalog,
                                       ean, k, threshold)


class ResponseStore:
    """Append-only newline-delimited response store, one writer at a time."""

    def __init__(self, directory: Path):
        self.directory = directory
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, survey_id: str) -> Path:
        return self.directory / f"{survey_id}.ndjson"

    def _expert_path(self, survey_id: str) -> Path:
        return self.directory / f"{survey_id}-expert.ndjson"

    def responses(self, survey_id: str) -> list[SurveyResponse]:
        return read_responses(self._path(survey_id))

    def expert_responses(self, survey_id: str) -> list[ExpertResponse]:
        return read_expert_responses(self._expert_path(survey_id))

    def append(self, survey_id: str, responses: list[SurveyResponse]) -> tuple[int, int]:
        """Append records not already present; returns (stored, skipped)."""
        with self._lock:
            existing = {(r.respondent, r.question)
                        for r in self.responses(survey_id)}
            fresh = []
            for r in responses:
                key = (r.respondent, r.question)
                if key in existing:
                    continue
                existing.add(key)
                fresh.append(r)
            append_responses(self._path(survey_id), fresh)
            return len(fresh), len(responses) - len(fresh)

    def append_expert(self, survey_id: str,
                      responses: list[ExpertResponse]) -> int:
        with self._lock:
            existing = {r.question for r in self.expert_responses(survey_id)}
            fresh = [r for r in responses if r.question not in existing]
            append_expert_responses(self._expert_path(survey_id), fresh)
            return len(fresh)


def export_report(store: ResponseStore, bundle: SurveyBundle) -> dict:
    """Metrics report over the stored responses for one survey."""
    report = build_metrics_report(
        bundle.questions,
        store.responses(bundle.survey_id),
        store.expert_responses(bundle.survey_id),
    )
    report["survey_id"] = bundle.survey_id
    return report


def _product_payload(p: Product) -> dict:
    nutrition = None
    if p.nutrition is not None:
        nutrition = {
            "fat_g": p.nutrition.fat_g,
            "sugar_g": p.nutrition.sugar_g,
            "carbs_g": p.nutrition.carbs_g,
            "dietary_fiber_pct": p.nutrition.dietary_fiber_pct,
            "saturated_fat_g": p.nutrition.saturated_fat_g,
            "good_fat_pct": p.nutrition.good_fat_pct,
            "protein_g": p.nutrition.protein_g,
            "salt_g": p.nutrition.salt_g,
        }
    return {
        "ean": p.ean,
        "category": p.category,
        "subcategory": p.subcategory,
        "variety": p.variety,
        "brand": p.brand,
        "brand_type": p.brand_type,
        "brand_attribute": p.brand_attribute,
        "name": p.name,
        "legal_name": p.legal_name,
        "ingredients": p.ingredients,
        "servings": p.servings,
        "size": p.size,
        "unit": p.unit.value if p.unit else None,
        "price": p.price,
        "nutrition": nutrition,
        "messages": list(p.messages),
        "allergens": sorted(p.allergens.present),
    }


class _ResponseItem(BaseModel):
    question: str
    choice: int


class _ExpertItem(BaseModel):
    question: str
    would_select: bool
    selected: Optional[int] = None
    ranking: list[int]


class _SubmitBody(BaseModel):
    respondent: str
    responses: list[_ResponseItem] = []
    expert: list[_ExpertItem] = []


def _error(status: int, message: str) -> Response:
    return Response(content=canonical_json({"error": message}), status_code=status,
                    media_type="application/json")


def _json(payload, status: int = 200) -> Response:
    return Response(content=canonical_json(payload), status_code=status,
                    media_type="application/json")


def create_app(config: ServiceConfig) -> FastAPI:
    state = AppState(config)
    store = ResponseStore(config.responses_dir)
    app = FastAPI(title="groceryrec", version="0.1.0")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    app.state.engine = state
    app.state.store = store

    def load_survey(survey_id: str) -> Optional[SurveyBundle]:
        path = config.surveys_dir / f"{survey_id}.json"
        if not path.exists():
            return None
        return load_bundle(path)

    @app.get("/v1/products/{ean}")
    def get_product(ean: str):
        product = state.catalog.get(ean)
        if product is None:
            return _error(404, f"unknown product {ean}")
        return _json(_product_payload(product))

    @app.get("/v1/recommend")
    def recommend(ean: str, family: str = "rscf", approach: str = "pro_com",
                  metric: str = "cosine", k: int = 3):
        try:
            family_v = Family(family)
            approach_v = Approach(approach)
            metric_v = MetricKind(metric)
        except ValueError as exc:
            return _error(422, str(exc))
        try:
            result = state.recommend(ean, family_v, approach_v, metric_v, k)
        except UnknownProduct as exc:
            return _error(404, f"unknown product {exc}")
        except (VarietyTooSmall, EmptyPool, MissingPrice, MissingServings,
                MissingNutrition) as exc:
            return _error(422, str(exc))
        except GroceryRecError as exc:
            return _error(503, str(exc))
        return _json(to_jsonable(result))

    @app.get("/v1/survey/{survey_id}")
    def get_survey(survey_id: str):
        bundle = load_survey(survey_id)
        if bundle is None:
            return _error(404, f"unknown survey {survey_id}")
        from .survey import bundle_to_dict
        return _json(bundle_to_dict(bundle))

    @app.post("/v1/survey/{survey_id}/responses")
    def post_responses(survey_id: str, body: _SubmitBody):
        bundle = load_survey(survey_id)
        if bundle is None:
            return _error(404, f"unknown survey {survey_id}")
        known = {q.id for q in bundle.questions}
        timestamp = datetime.now(timezone.utc).isoformat()
        try:
            records = [
                SurveyResponse(body.respondent, item.question, item.choice,
                               timestamp)
                for item in body.responses
            ]
            expert_records = [
                ExpertResponse(item.question, item.would_select, item.selected,
                               tuple(item.ranking))
                for item in body.expert
            ]
        except ValueError as exc:
            return _error(422, str(exc))
        unknown = [r.question for r in records if r.question not in known]
        unknown += [r.question for r in expert_records if r.question not in known]
        if unknown:
            return _error(422, f"unknown question ids: {unknown}")
        stored, skipped = store.append(survey_id, records)
        expert_stored = store.append_expert(survey_id, expert_records)
        return _json({"stored": stored, "skipped_duplicates": skipped,
                      "expert_stored": expert_stored}, status=201)

    @app.get("/v1/reports/{survey_id}")
    def get_report(survey_id: str, format: str = "json"):
        bundle = load_survey(survey_id)
        if bundle is None:
            return _error(404, f"unknown survey {survey_id}")
        report = export_report(store, bundle)
        if format == "text":
            return Response(content=render_metrics_text(report),
                            media_type="text/plain")
        return _json(report)

    return app


def serve(config: ServiceConfig) -> None:
    """Blocking server start; startup failures raise with their cause."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host="0.0.0.0", port=config.port, log_level="info")
