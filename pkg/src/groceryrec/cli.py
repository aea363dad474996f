"""Command-line interface: ingest -> clean -> train -> recommend ->
survey build -> serve -> eval, plus a synthetic-catalog generator.

All state lives under a data directory (``--data-dir``, env DATA_DIR):
``catalog_raw.csv`` (ingested), ``catalog.csv`` (cleaned), ``model.pvdm``,
``surveys/*.json`` and ``responses/*.ndjson``.
"""

from __future__ import annotations

import argparse
import os
import sys
from functools import partial
from pathlib import Path

from . import rscf, rsnn
from .catalog import (
    SchemaVersion,
    SyntheticSpec,
    clean_catalog,
    generate_synthetic_catalog,
    load_catalog,
    select_varieties,
    write_catalog,
)
from .embed import TrainingConfig, save_model, train
from .errors import GroceryRecError
from .ranking import Approach, Family, to_jsonable
from .server import (
    AppState,
    ResponseStore,
    ServiceConfig,
    canonical_json,
    detect_schema,
    export_report,
    serve,
)
from .similarity import MetricKind
from .survey import build_survey, load_bundle, save_bundle
from .textprep import DescriptorMode, build_corpus
from .evaluation import render_metrics_text


def _data_dir(args) -> Path:
    path = Path(args.data_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _service_config(args, need_model: bool = False) -> ServiceConfig:
    data_dir = _data_dir(args)
    model_path = Path(args.model) if getattr(args, "model", None) else None
    if model_path is None:
        default = data_dir / "model.pvdm"
        if default.exists() or need_model:
            model_path = default
    return ServiceConfig(data_dir=data_dir, model_path=model_path,
                         port=getattr(args, "port", 8000))


def cmd_synth(args) -> int:
    spec = SyntheticSpec(
        n_varieties=args.varieties,
        products_per_variety=args.per_variety,
        seed=args.seed,
        allergen_prob=args.allergen_prob,
    )
    catalog = generate_synthetic_catalog(spec)
    write_catalog(catalog, args.out)
    print(f"wrote {len(catalog)} products to {args.out}")
    return 0


def cmd_ingest(args) -> int:
    schema = SchemaVersion(args.schema.upper())
    catalog = load_catalog(args.input, schema)
    target = _data_dir(args) / "catalog_raw.csv"
    write_catalog(catalog, target)
    print(f"ingested {len(catalog)} products ({schema.value}) -> {target}")
    return 0


def cmd_clean(args) -> int:
    data_dir = _data_dir(args)
    source = data_dir / "catalog_raw.csv"
    if not source.exists():
        raise GroceryRecError(f"{source} missing; run ingest first")
    catalog = load_catalog(source, detect_schema(source))
    cleaned = clean_catalog(catalog)
    message = f"cleaned {len(catalog)} -> {len(cleaned)} products"
    if args.min_count or args.first_quartile:
        selection = select_varieties(
            cleaned,
            min_count=args.min_count,
            first_quartile=bool(args.first_quartile),
        )
        cleaned = selection.catalog
        message += (f"; variety threshold {selection.threshold} kept "
                    f"{len(cleaned)} products")
    target = data_dir / "catalog.csv"
    write_catalog(cleaned, target)
    print(message + f" -> {target}")
    return 0


def cmd_train(args) -> int:
    data_dir = _data_dir(args)
    source = data_dir / "catalog.csv"
    if not source.exists():
        raise GroceryRecError(f"{source} missing; run clean first")
    catalog = clean_catalog(load_catalog(source, detect_schema(source)))
    corpus = build_corpus(catalog, DescriptorMode.NN_TAGGED)
    config = TrainingConfig(
        dim=args.dim, epochs=args.epochs, min_count=args.min_count,
        window=args.window, negative_samples=args.negative,
        learning_rate=args.lr, seed=args.seed,
    )
    model = train(corpus, config)
    target = Path(args.model) if args.model else data_dir / "model.pvdm"
    save_model(model, target)
    last_loss = model.epoch_losses[-1] if model.epoch_losses else float("nan")
    print(f"trained {model.n_docs} documents, vocab {len(model.vocab)}, "
          f"final epoch loss {last_loss:.4f} -> {target}")
    return 0


def cmd_recommend(args) -> int:
    config = _service_config(args, need_model=args.family == "rsnn")
    state = AppState(config)
    result = state.recommend(
        args.ean, Family(args.family), Approach(args.approach),
        MetricKind(args.metric), args.k,
    )
    sys.stdout.buffer.write(canonical_json(to_jsonable(result)))
    return 0


def cmd_survey_build(args) -> int:
    config = _service_config(args, need_model=args.family == "rsnn")
    state = AppState(config)
    family = Family(args.family)
    metric = MetricKind(args.metric)
    if family is Family.RSCF:
        recommenders = {
            Approach.PRO_COM: partial(rscf.recommend_pro_com, state.matrix,
                                      state.catalog),
            Approach.PK_BD: partial(rscf.recommend_pk_bd, state.matrix,
                                    state.catalog),
            Approach.HTH_BD: partial(rscf.recommend_hth_bd, state.catalog,
                                     state.without_vocab,
                                     state.ingredient_corpus),
        }
    else:
        if state.vectors is None:
            raise GroceryRecError("no embedding model loaded; train one first")
        thresholds = config.rsnn_thresholds
        recommenders = {
            Approach.PRO_COM: partial(
                rsnn.recommend_pro_com_nn, state.vectors, metric, state.catalog,
                variety_threshold=thresholds[Approach.PRO_COM]),
            Approach.HTH_BD: partial(
                rsnn.recommend_hth_bd_nn, state.vectors, metric, state.catalog,
                variety_threshold=thresholds[Approach.HTH_BD]),
            Approach.PK_BD: partial(
                rsnn.recommend_pk_bd_nn, state.vectors, metric, state.catalog,
                variety_threshold=thresholds[Approach.PK_BD]),
        }
    bundle = build_survey(
        state.catalog, recommenders, seed=args.seed, family=family,
        metric=args.metric if family is Family.RSNN else None,
        survey_id=args.survey_id,
        provenance=f"catalog={config.catalog_path}",
    )
    config.surveys_dir.mkdir(parents=True, exist_ok=True)
    target = config.surveys_dir / f"{bundle.survey_id}.json"
    save_bundle(bundle, target)
    print(bundle.survey_id)
    return 0


def cmd_serve(args) -> int:
    serve(_service_config(args))
    return 0


def cmd_eval(args) -> int:
    config = _service_config(args)
    bundle = load_bundle(config.surveys_dir / f"{args.survey_id}.json")
    store = ResponseStore(config.responses_dir)
    report = export_report(store, bundle)
    if args.format == "text":
        sys.stdout.write(render_metrics_text(report))
    else:
        sys.stdout.buffer.write(canonical_json(report))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groceryrec")
    parser.add_argument("--data-dir", default=os.environ.get("DATA_DIR", "data"),
                        help="state directory (env DATA_DIR)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic catalog CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--varieties", type=int, default=10)
    p.add_argument("--per-variety", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--allergen-prob", type=float, default=0.15)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="validate and import a catalog CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--schema", choices=["ds1", "ds2"], required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("clean", help="clean the ingested catalog")
    p.add_argument("--min-count", type=int, default=None,
                   help="drop varieties with fewer products")
    p.add_argument("--first-quartile", action="store_true",
                   help="threshold from the 25th percentile of variety sizes")
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("train", help="train the embedding model")
    p.add_argument("--dim", type=int, default=50)
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--min-count", type=int, default=2)
    p.add_argument("--window", type=int, default=2)
    p.add_argument("--negative", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.025)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", default=None, help="output path (env MODEL_PATH)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("recommend", help="rank alternatives for a product")
    p.add_argument("--ean", required=True)
    p.add_argument("--family", choices=["rscf", "rsnn"], default="rscf")
    p.add_argument("--approach", choices=["pro_com", "pk_bd", "hth_bd"],
                   default="pro_com")
    p.add_argument("--metric", choices=[m.value for m in MetricKind],
                   default="cosine")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--model", default=os.environ.get("MODEL_PATH"))
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("survey", help="survey tooling")
    survey_sub = p.add_subparsers(dest="survey_command", required=True)
    pb = survey_sub.add_parser("build", help="generate a survey bundle")
    pb.add_argument("--family", choices=["rscf", "rsnn"], required=True)
    pb.add_argument("--metric", choices=[m.value for m in MetricKind],
                    default="cosine")
    pb.add_argument("--seed", type=int, required=True)
    pb.add_argument("--survey-id", default=None)
    pb.add_argument("--model", default=os.environ.get("MODEL_PATH"))
    pb.set_defaults(func=cmd_survey_build)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--port", type=int,
                   default=int(os.environ.get("PORT", "8000")))
    p.add_argument("--model", default=os.environ.get("MODEL_PATH"))
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("eval", help="export the metrics report for a survey")
    p.add_argument("--survey-id", required=True)
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GroceryRecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
