"""FastAPI application exposing fits, bench runs, theory checks, and reports.

All endpoints are deterministic functions of their request payloads (plus
referenced files), so the thin CLI client and a remote deployment behave
identically. Responses are rendered with a JSON encoder that permits
non-finite floats, because ratio curves legitimately carry +inf sentinels;
Python JSON parsers accept the resulting Infinity tokens.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__, accounting
from ..accounting import BudgetSplit, PrivacyBudget
from ..boosting import BoostConfig, boosted_adassp_fit_detailed
from ..data import load_csv, one_hot_encode, preprocess, schema_from_json, train_test_split
from ..experiments import (
    ALGORITHMS,
    DatasetSpec,
    ExperimentConfig,
    RunResult,
    grid_size,
    run_experiment,
)
from ..mechanisms import NoiseDraw
from ..metrics import auprc, auroc, f1_at_zero, mse
from ..regression import adassp_fit_detailed
from ..reporting import curve_to_csv, emit_report, ratio_cdf, results_from_jsonl
from ..theorylab import run_theory_suite, theory_rows_to_csv
from .schemas import (
    BenchRequest,
    BenchResponse,
    ConversionResponse,
    CurvePointModel,
    DeltaForMuRequest,
    ExperimentConfigModel,
    FitRequest,
    FitResponse,
    MuForEpsilonDeltaRequest,
    RatioCdfRequest,
    RatioCdfResponse,
    ReleaseModel,
    RunResultModel,
    TheoryRequest,
    TheoryResponse,
    TheoryRowModel,
    VersionResponse,
)

__all__ = ["create_app"]


class LenientJSONResponse(JSONResponse):
    """JSON rendering that tolerates inf (ratio sentinels) in payloads."""

    def render(self, content) -> bytes:
        return json.dumps(
            content, ensure_ascii=False, allow_nan=True, separators=(",", ":")
        ).encode("utf-8")


def _experiment_config(model: ExperimentConfigModel) -> ExperimentConfig:
    datasets = tuple(
        DatasetSpec(
            name=d.name if d.name else Path(d.csv_path).stem,
            csv_path=d.csv_path,
            schema_path=d.schema_path,
        )
        for d in model.datasets
    )
    return ExperimentConfig(
        datasets=datasets,
        algorithms=tuple(model.algorithms),
        epsilons=tuple(model.epsilons),
        taus=tuple(model.taus),
        rounds_grid=tuple(model.rounds_grid),
        seeds=tuple(model.seeds),
        delta=model.delta,
        split_ratio=tuple(model.split_ratio),
        x_clip=model.x_clip,
        test_fraction=model.test_fraction,
        add_intercept=model.add_intercept,
        strict_lambda_mode=model.strict_lambda_mode,
        record_timing=model.record_timing,
    )


def _result_model(r: RunResult) -> RunResultModel:
    return RunResultModel(
        dataset=r.dataset,
        algorithm=r.algorithm,
        epsilon=r.epsilon,
        delta=r.delta,
        tau=r.tau,
        rounds=r.rounds,
        seed=r.seed,
        metrics={k: float(v) for k, v in r.metrics.items()},
        wall_ms=r.wall_ms,
        error=r.error,
    )


def _result_from_model(m: RunResultModel) -> RunResult:
    return RunResult(
        dataset=m.dataset,
        algorithm=m.algorithm,
        epsilon=m.epsilon,
        delta=m.delta,
        tau=m.tau,
        rounds=m.rounds,
        seed=m.seed,
        metrics=dict(m.metrics),
        wall_ms=m.wall_ms,
        error=m.error,
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="privreg",
        version=__version__,
        default_response_class=LenientJSONResponse,
    )

    @app.exception_handler(ValueError)
    async def _on_value_error(request, exc: ValueError):
        return LenientJSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(FileNotFoundError)
    async def _on_missing_file(request, exc: FileNotFoundError):
        return LenientJSONResponse(status_code=404, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/version", response_model=VersionResponse)
    def version() -> VersionResponse:
        return VersionResponse(name="privreg", version=__version__)

    @app.post("/accounting/mu", response_model=ConversionResponse)
    def accounting_mu(req: MuForEpsilonDeltaRequest) -> ConversionResponse:
        mu = accounting.mu_for_epsilon_delta(req.epsilon, req.delta)
        return ConversionResponse(epsilon=req.epsilon, delta=req.delta, mu=mu)

    @app.post("/accounting/delta", response_model=ConversionResponse)
    def accounting_delta(req: DeltaForMuRequest) -> ConversionResponse:
        delta = accounting.delta_for_mu(req.mu, req.epsilon)
        return ConversionResponse(epsilon=req.epsilon, delta=delta, mu=req.mu)

    @app.post("/fit", response_model=FitResponse)
    def fit(req: FitRequest) -> FitResponse:
        if req.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {req.algorithm!r}, expected one of {ALGORITHMS}")
        name = Path(req.csv_path).stem
        schema = schema_from_json(req.schema_path)
        encoded = one_hot_encode(load_csv(req.csv_path, schema), schema)

        test = None
        train = encoded
        if req.test_fraction is not None:
            train, test = train_test_split(
                encoded, req.test_fraction, req.seed, stream_label=f"split/{name}"
            )

        budget = PrivacyBudget.from_epsilon_delta(req.epsilon, req.delta)
        split = BudgetSplit.from_ratio(budget.mu_total, *req.split_ratio)
        # Streams match the bench runner's labels, so a fit request with the
        # same parameters reproduces the corresponding grid cell bit for bit.
        noise = NoiseDraw(
            seed=req.seed,
            stream_label=(
                f"bench/{name}/{req.algorithm}/eps={req.epsilon!r}/"
                f"tau={req.tau!r}/T={req.rounds}"
            ),
        )
        if req.algorithm == "adassp":
            pre = preprocess(
                train, req.x_clip, tau_label=req.tau, add_intercept=req.add_intercept
            )
            detail = adassp_fit_detailed(
                pre, budget, split, noise.child("fit"),
                strict_lambda_mode=req.strict_lambda_mode,
            )
        else:
            pre = preprocess(
                train, req.x_clip, tau_label=None, add_intercept=req.add_intercept
            )
            boost = BoostConfig(
                rounds=req.rounds,
                tau=req.tau,
                split=split,
                x_clip=req.x_clip,
                strict_lambda_mode=req.strict_lambda_mode,
            )
            detail = boosted_adassp_fit_detailed(pre, budget, boost, noise.child("fit"))

        metrics = None
        if test is not None:
            test_pre = preprocess(
                test, req.x_clip, tau_label=None, add_intercept=req.add_intercept
            )
            preds = detail.model.predict(test_pre.X)
            if schema.task == "regression":
                metrics = {"mse": mse(test.y, preds)}
            else:
                metrics = {
                    "f1": f1_at_zero(test.y, preds),
                    "auroc": auroc(test.y, preds),
                    "auprc": auprc(test.y, preds),
                }

        return FitResponse(
            algorithm=req.algorithm,
            theta=[float(v) for v in detail.model.theta],
            lambda_used=detail.stats.lambda_used,
            lambda_hat=detail.stats.lambda_hat,
            mu_total=budget.mu_total,
            epsilon=req.epsilon,
            delta=req.delta,
            seed=req.seed,
            releases=[
                ReleaseModel(label=e.label, mu=e.mu, sensitivity=e.sensitivity)
                for e in detail.ledger.entries
            ],
            metrics=metrics,
        )

    @app.post("/bench", response_model=BenchResponse)
    def bench(req: BenchRequest) -> BenchResponse:
        config = _experiment_config(req.config)
        results = run_experiment(config, fail_fast=req.fail_fast, threads=req.threads)
        report_files: list[str] = []
        if req.out_dir is not None:
            report_files = emit_report(results, [], req.out_dir, config=config)
        return BenchResponse(
            results=[_result_model(r) for r in results],
            grid_size=grid_size(config),
            failure_count=sum(1 for r in results if r.error is not None),
            report_dir=req.out_dir,
            report_files=report_files,
        )

    @app.post("/theory", response_model=TheoryResponse)
    def theory(req: TheoryRequest) -> TheoryResponse:
        rows = run_theory_suite(
            mc_trials=req.mc_trials,
            seed=req.seed,
            claims=req.claims,
            huber_grid_samples=req.huber_grid_samples,
        )
        return TheoryResponse(
            rows=[
                TheoryRowModel(
                    claim=r.claim, point=r.point, bound=r.bound,
                    observed=r.observed, passed=r.passed,
                )
                for r in rows
            ],
            all_passed=all(r.passed for r in rows),
            csv_text=theory_rows_to_csv(rows),
        )

    @app.post("/report/ratio-cdf", response_model=RatioCdfResponse)
    def report_ratio_cdf(req: RatioCdfRequest) -> RatioCdfResponse:
        if (req.results is None) == (req.results_path is None):
            raise ValueError("provide exactly one of results or results_path")
        if req.results is not None:
            results = [_result_from_model(m) for m in req.results]
        else:
            results = results_from_jsonl(req.results_path)
        candidate = [r for r in results if r.algorithm == req.candidate]
        baseline = [r for r in results if r.algorithm == req.baseline]
        if not candidate:
            raise ValueError(f"no results for candidate algorithm {req.candidate!r}")
        if not baseline:
            raise ValueError(f"no results for baseline algorithm {req.baseline!r}")
        curve = ratio_cdf(
            candidate,
            baseline,
            req.metric,
            candidate_name=req.candidate,
            baseline_name=req.baseline,
            optimize_over=req.optimize_over,
        )
        return RatioCdfResponse(
            candidate=curve.candidate,
            baseline=curve.baseline,
            metric=curve.metric,
            points=[
                CurvePointModel(ratio=r, cumulative_count=c) for r, c in curve.points
            ],
            csv_text=curve_to_csv(curve),
        )

    return app
