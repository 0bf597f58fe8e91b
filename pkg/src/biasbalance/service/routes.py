"""HTTP endpoints wrapping the core pipeline."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import balancer, baselines, data, metrics, report, significance, verify
from ..errors import (
    BalanceError,
    BuildError,
    DataFormatError,
    InfeasibleError,
    SpanMatchError,
    StaleWeightsError,
    UndefinedMetricError,
)
from ..simplex import SolverConfig
from . import models

INPUT_ERRORS = (DataFormatError, SpanMatchError, BuildError,
                StaleWeightsError, UndefinedMetricError)


def create_app() -> FastAPI:
    app = FastAPI(title="biasbalance", version="0.1.0",
                  description="Test-set balancing weights and weighted bias metrics")

    @app.exception_handler(BalanceError)
    async def _balance_error(request: Request, exc: BalanceError):
        if isinstance(exc, INPUT_ERRORS):
            status, kind = 400, "input"
        elif isinstance(exc, InfeasibleError):
            status, kind = 409, "infeasible"
        else:
            status, kind = 500, "internal"
        return JSONResponse(
            status_code=status,
            content={"error": {"kind": kind, "message": str(exc)}},
        )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/weigh", response_model=models.WeighResponse)
    def weigh(req: models.WeighRequest) -> models.WeighResponse:
        dataset = _load_annotated(req.dataset_tsv, req.annotations_jsonl)
        if req.trim:
            dataset = balancer.trim(dataset, req.max_names, req.max_rank)
        property_sets = data.derive_property_sets(dataset, req.properties)
        cfg = balancer.BalancerConfig(
            naive=req.naive,
            solver=SolverConfig(backend=req.solver_backend),
        )
        assignment = balancer.compute_weights(dataset, property_sets, cfg)
        meta = balancer.assignment_metadata(assignment)
        return models.WeighResponse(
            weights_tsv=balancer.weights_to_tsv(assignment),
            metadata=models.WeighMetadata(
                **meta, trimmed=req.trim, retained_examples=dataset.n,
            ),
        )

    @app.post("/evaluate", response_model=models.EvaluateResponse)
    def evaluate(req: models.EvaluateRequest) -> models.EvaluateResponse:
        dataset = data.parse_gap_tsv(req.dataset_tsv)
        predictions = data.parse_predictions(req.predictions_tsv)
        unknown = metrics.unknown_prediction_ids(predictions, dataset)
        if unknown:
            shown = ", ".join(unknown[:5])
            more = "" if len(unknown) <= 5 else f" (+{len(unknown) - 5} more)"
            raise DataFormatError(
                f"predictions reference ids absent from the dataset: {shown}{more}"
            )
        weight_sets = [
            metrics.WeightSet(label=wf.label,
                              weights=balancer.weights_from_tsv(wf.weights_tsv))
            for wf in req.weight_files
        ]
        reports = metrics.bias_reports(dataset, predictions, weight_sets)
        row = report.rows_from_reports(req.name, reports)
        text, payload = report.render_table([row])
        return models.EvaluateResponse(
            table_text=text,
            table=payload,
            missing_predictions=metrics.missing_predictions(predictions, dataset),
        )

    @app.post("/trim", response_model=models.TrimResponse)
    def trim_endpoint(req: models.TrimRequest) -> models.TrimResponse:
        dataset = _load_annotated(req.dataset_tsv, req.annotations_jsonl)
        trimmed = balancer.trim(dataset, req.max_names, req.max_rank)
        masc = len(trimmed.group(data.Group.MASCULINE))
        return models.TrimResponse(
            dataset_tsv=data.dataset_to_tsv(trimmed),
            annotations_jsonl=data.annotations_to_jsonl(trimmed),
            retained=trimmed.n,
            masculine=masc,
            feminine=trimmed.n - masc,
        )

    @app.post("/analyze", response_model=models.AnalyzeResponse)
    def analyze(req: models.AnalyzeRequest) -> models.AnalyzeResponse:
        dataset = _load_annotated(req.dataset_tsv, req.annotations_jsonl)
        stats = data.dataset_stats(dataset)

        def to_stats(dists):
            return {
                g.value: models.GroupStats(mean=d.mean, std=d.std, total=d.total)
                for g, d in dists.items()
            }

        resp = models.AnalyzeResponse(
            name_count_stats=to_stats(stats.name_counts),
            rank_stats=to_stats(stats.ranks),
            name_count_csv=report.distribution_csv(
                {g.value: d.histogram for g, d in stats.name_counts.items()}),
            rank_csv=report.distribution_csv(
                {g.value: d.histogram for g, d in stats.ranks.items()}),
        )
        if req.weights_tsv is not None:
            weights = balancer.weights_from_tsv(req.weights_tsv)
            by_id = dataset.by_id()
            stray = sorted(i for i in weights if i not in by_id)
            if stray:
                raise DataFormatError(
                    f"weight file references unknown id {stray[0]!r}")
            values = {g.value: [w for i, w in weights.items()
                                if by_id[i].group is g] for g in data.Group}
            hist = report.render_histogram(values, report.WEIGHT_HISTOGRAM)
            outliers = [
                models.WeightOutlier(id=i, group=by_id[i].group.value, weight=w)
                for i, w in sorted(weights.items(), key=lambda kv: (-kv[1], kv[0]))
                if w >= (report.WEIGHT_HISTOGRAM.overflow_above or 0.0)
            ]
            resp = resp.model_copy(update={
                "weight_histogram_csv": hist.to_csv(),
                "weight_histogram": hist.to_json(),
                "weight_outliers": outliers,
                "max_weight": max(weights.values()),
                "zero_weights": sum(1 for w in weights.values() if w == 0.0),
            })
        return resp

    @app.post("/baseline", response_model=models.BaselineResponse)
    def baseline(req: models.BaselineRequest) -> models.BaselineResponse:
        dataset = _load_annotated(req.dataset_tsv, req.annotations_jsonl)
        spec = baselines.BaselineSpec(kind=req.kind, k=req.k,
                                      repetitions=req.repetitions, seed=req.seed)
        if spec.kind == "random":
            result = baselines.random_baseline(dataset, spec.repetitions, spec.seed)
            return models.BaselineResponse(
                predictions_tsv=data.predictions_to_tsv(result.sample),
                summary=models.BaselineSummary(
                    exact_accuracy={g.value: v for g, v in result.exact_accuracy.items()},
                    empirical_accuracy={g.value: v
                                        for g, v in result.empirical_accuracy.items()},
                    empirical_f1={g.value: v for g, v in result.empirical_f1.items()},
                    overall_exact_accuracy=result.overall_exact_accuracy,
                    overall_empirical_accuracy=result.overall_empirical_accuracy,
                    overall_empirical_f1=result.overall_empirical_f1,
                ),
            )
        predictions = baselines.dist_k_baseline(dataset, spec.k)
        return models.BaselineResponse(
            predictions_tsv=data.predictions_to_tsv(predictions),
            summary=models.BaselineSummary(),
        )

    @app.post("/significance", response_model=models.SignificanceResponse)
    def significance_endpoint(req: models.SignificanceRequest
                              ) -> models.SignificanceResponse:
        dataset = data.parse_gap_tsv(req.dataset_tsv)
        preds_1 = data.parse_predictions(req.predictions_1_tsv)
        preds_2 = data.parse_predictions(req.predictions_2_tsv)
        weights = (balancer.weights_from_tsv(req.weights_tsv)
                   if req.weights_tsv is not None else None)
        result = significance.randomization_test(
            preds_1, preds_2, dataset, weights=weights, metric=req.metric,
            iterations=req.iterations, seed=req.seed,
        )
        return models.SignificanceResponse(
            observed=result.observed,
            p_value=result.p_value,
            iterations=result.iterations,
            seed=result.seed,
            metric=result.metric,
            undefined_iterations=result.undefined_iterations,
        )

    @app.post("/verify", response_model=models.VerifyResponse)
    def verify_endpoint(req: models.VerifyRequest) -> models.VerifyResponse:
        checks = verify.run_verification(seed=req.seed, rounds=req.rounds)
        return models.VerifyResponse(
            passed=all(c.passed for c in checks),
            checks=[models.VerifyCheck(name=c.name, passed=c.passed, detail=c.detail)
                    for c in checks],
        )

    return app


def _load_annotated(dataset_tsv: str, annotations_jsonl: str):
    dataset = data.parse_gap_tsv(dataset_tsv)
    return data.parse_name_annotations(annotations_jsonl, dataset)
