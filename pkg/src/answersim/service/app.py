"""FastAPI service wrapping the toolkit; the CLI is a thin client of this app.

Errors surface as {"error": ..., "kind": ...} with status 400 for validation
problems and 502 for provider/transport failures.
"""
from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import datagen, lexmetrics, report
from ..corpus import (
    ABLATION_MODES,
    PartitionKey,
    ablate_numbers,
    dedup,
    load_dataset,
    partition,
    save_dataset,
    text_ref,
)
from ..embmetrics import bert_score, bi_encoder_score, layer_sweep
from ..errors import AnswersimError, SchemaError
from ..lexmetrics import NormalizationProfile
from ..providers import (
    HttpProviderClient,
    SentenceFileProvider,
    TokenFileProvider,
    PairScoreFileProvider,
    audit_symmetry,
    metric_scorer,
    pair_provider_scorer,
)
from ..report import EMBEDDING_METRICS, _outcome_json
from . import schemas


def create_app() -> FastAPI:
    app = FastAPI(title="answersim", version="0.1.0")

    @app.exception_handler(AnswersimError)
    async def answersim_error(request: Request, exc: AnswersimError):
        status = 502 if exc.kind == "provider" else 400
        return JSONResponse(status_code=status, content={"error": str(exc), "kind": exc.kind})

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400, content={"error": str(exc.errors()), "kind": "validation"}
        )

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/score", response_model=schemas.ScoreResponse)
    async def score(req: schemas.ScoreRequest):
        unsupported = [m for m in req.metrics if m not in lexmetrics.LEXICAL_METRICS]
        if unsupported:
            raise SchemaError(
                f"/score computes lexical metrics only; use /eval with provider "
                f"bindings for {unsupported}"
            )
        norm = NormalizationProfile.for_language(req.lang)
        results = lexmetrics.score_all(req.a, req.b, norm, req.metrics)
        return schemas.ScoreResponse(scores={s.metric: s.value for s in results})

    @app.post("/eval", response_model=schemas.EvalResponse)
    async def run_eval(req: schemas.EvalRequest):
        config = report.config_from_mapping(req.model_dump())
        result = report.evaluate(config)
        return schemas.EvalResponse(
            dataset=result.dataset_name,
            n_records=result.n_records,
            output_dir=result.output_dir,
            files=result.files,
            correlations=result.correlations,
            timings=result.timings,
        )

    @app.post("/partition", response_model=schemas.PartitionResponse)
    async def run_partition(req: schemas.PartitionRequest):
        dataset = load_dataset(req.dataset, format=req.format)
        norm = NormalizationProfile.for_language(req.lang) if req.lang else dataset.profile()
        parts = partition(dataset, norm)
        files = {}
        if req.output_dir:
            out = Path(req.output_dir)
            out.mkdir(parents=True, exist_ok=True)
            for key, subset in parts.items():
                path = out / f"{key.value}.ndjson"
                save_dataset(subset, path)
                files[key.value] = str(path)
        return schemas.PartitionResponse(
            n_records=len(dataset),
            f1_zero=len(parts[PartitionKey.F1_ZERO]),
            f1_nonzero=len(parts[PartitionKey.F1_NONZERO]),
            files=files,
        )

    @app.post("/dedup", response_model=schemas.DedupResponse)
    async def run_dedup(req: schemas.DedupRequest):
        dataset = load_dataset(req.dataset, format=req.format)
        deduped, removed = dedup(dataset)
        if req.output:
            save_dataset(deduped, req.output)
        return schemas.DedupResponse(
            size_before=len(dataset), removed=removed, size_after=len(deduped),
            output=req.output,
        )

    @app.post("/ablate-numbers", response_model=schemas.AblateResponse)
    async def run_ablate(req: schemas.AblateRequest):
        if req.mode not in ABLATION_MODES:
            raise SchemaError(f"mode must be one of {ABLATION_MODES}, got {req.mode!r}")
        dataset = load_dataset(req.dataset, format=req.format)
        ablated = ablate_numbers(dataset, req.mode)
        if req.output:
            save_dataset(ablated, req.output)
        return schemas.AblateResponse(
            size_before=len(dataset), size_after=len(ablated), output=req.output
        )

    @app.post("/names-gen", response_model=schemas.NamesGenResponse)
    async def run_names_gen(req: schemas.NamesGenRequest):
        entities = datagen.load_person_dump(req.dump, format=req.format)
        kept = datagen.filter_entities(entities, req.nationality, req.max_variants)
        random_scored: list[datagen.NamePair] = []
        scorer_id = None
        if req.include_random:
            if not req.score_endpoint:
                raise SchemaError(
                    "names-gen with random pairs needs score_endpoint for labeling"
                )
            names = [e.canonical_name for e in kept]
            pairs = datagen.random_pairs(names, req.seed)
            with HttpProviderClient(
                req.score_endpoint, batch_size=req.http_batch_size
            ) as client:
                random_scored = datagen.score_pairs(pairs, client.score_pairs)
            scorer_id = req.score_endpoint
        positives = datagen.variant_pairs(kept)
        all_pairs = random_scored + positives
        datagen.write_pairs(
            req.output,
            all_pairs,
            {
                "seed": req.seed,
                "nationality": req.nationality,
                "max_variants": req.max_variants,
                "scorer": scorer_id,
            },
        )
        return schemas.NamesGenResponse(
            entities_total=len(entities),
            entities_kept=len(kept),
            variant_pairs=len(positives),
            random_pairs=len(random_scored),
            total_pairs=len(all_pairs),
            output=req.output,
        )

    @app.post("/numbers-gen", response_model=schemas.NumbersGenResponse)
    async def run_numbers_gen(req: schemas.NumbersGenRequest):
        if req.max_n < 1:
            raise SchemaError("max_n must be >= 1")
        pairs = datagen.numbers_dataset(req.max_n)
        datagen.write_pairs(req.output, pairs, {"max_n": req.max_n})
        positives = sum(1 for p in pairs if p.source == datagen.SOURCE_NUMBER_POS)
        return schemas.NumbersGenResponse(
            positives=positives,
            negatives=len(pairs) - positives,
            total_pairs=len(pairs),
            output=req.output,
        )

    @app.post("/audit-symmetry", response_model=schemas.AuditSymmetryResponse)
    async def run_audit(req: schemas.AuditSymmetryRequest):
        dataset = load_dataset(req.dataset, format=req.format)
        norm = NormalizationProfile.for_language(req.lang) if req.lang else dataset.profile()
        scorer = _audit_scorer(req, norm)
        result = audit_symmetry(scorer, dataset)
        rows = [
            schemas.SymmetryRowModel(
                record_id=row.record_id, score_ab=row.score_ab,
                score_ba=row.score_ba, gap=row.gap,
            )
            for row in result.rows
        ]
        if req.output:
            lines = ["record_id,score_ab,score_ba,gap"]
            lines += [
                f"{r.record_id},{r.score_ab:.4f},{r.score_ba:.4f},{r.gap:.4f}"
                for r in rows
            ]
            Path(req.output).write_text("\n".join(lines) + "\n", encoding="utf-8")
        return schemas.AuditSymmetryResponse(
            n_records=len(dataset),
            max_gap=result.max_gap,
            mean_gap=result.mean_gap,
            rows=rows[: req.limit] if req.limit >= 0 else rows,
            output=req.output,
        )

    @app.post("/layer-sweep", response_model=schemas.LayerSweepResponse)
    async def run_layer_sweep(req: schemas.LayerSweepRequest):
        dataset = load_dataset(req.dataset, format=req.format)
        norm = NormalizationProfile.for_language(req.lang) if req.lang else dataset.profile()
        sets_by_layer = {}
        for path in req.token_embeddings:
            provider = TokenFileProvider.load(path)
            sets_by_layer[provider.layer] = provider.as_mapping()
        rows = layer_sweep(dataset, sets_by_layer, layers=req.layers, use_idf=req.idf, norm=norm)
        return schemas.LayerSweepResponse(
            rows=[
                schemas.LayerSweepRowModel(
                    layer=row.layer,
                    partition=row.partition.value,
                    outcome=_outcome_json(row.outcome),
                )
                for row in rows
            ]
        )

    return app


def _audit_scorer(req: schemas.AuditSymmetryRequest, norm: NormalizationProfile):
    metric = req.metric
    if metric in lexmetrics.LEXICAL_METRICS:
        func = lexmetrics._METRIC_FUNCS[metric]
        # directional convention: first text is the reference
        return metric_scorer(lambda ref, cand: func(cand, ref, norm))
    if metric == "bi_encoder":
        if not req.sentence_embeddings:
            raise SchemaError("bi_encoder audit needs sentence_embeddings")
        provider = SentenceFileProvider.load(req.sentence_embeddings)

        def score_sentence(record, direction):
            a = provider.get(text_ref(record.id, "a"))
            b = provider.get(text_ref(record.id, "b"))
            return bi_encoder_score(a, b) if direction == "ab" else bi_encoder_score(b, a)

        return score_sentence
    if metric == "bert_score":
        if not req.token_embeddings:
            raise SchemaError("bert_score audit needs token_embeddings")
        provider = TokenFileProvider.load(req.token_embeddings)

        def score_token(record, direction):
            a = provider.get(text_ref(record.id, "a"))
            b = provider.get(text_ref(record.id, "b"))
            ref, cand = (a, b) if direction == "ab" else (b, a)
            return bert_score(ref, cand).f1

        return score_token
    if metric == "sas":
        if not req.pair_scores:
            raise SchemaError("sas audit needs pair_scores")
        return pair_provider_scorer(PairScoreFileProvider.load(req.pair_scores))
    raise SchemaError(
        f"unknown audit metric {metric!r}; expected one of "
        f"{sorted(lexmetrics.LEXICAL_METRICS) + sorted(EMBEDDING_METRICS)}"
    )


app = create_app()
