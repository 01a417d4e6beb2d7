"""HTTP service backing the review dashboard.

Read endpoints serve the persisted audit/enhance artifacts; the verdict
endpoint mutates the review queue (single writer, atomic file persistence);
the prompt preview recomputes the description set from current verdicts so a
reviewer immediately sees what their calls produce. POST /api/enhance runs
the enhancement stage with the verdicts as they stand.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .audit import Weakspot
from .data import DatasetBundle, load_bundle, merge
from .errors import BindFailure, StageError, UnknownKey, WeakauditError
from .pipeline import (
    AUDIT_REPORT,
    ENHANCE_REPORT,
    REVIEW_STATE,
    PipelineConfig,
    run_enhance,
)
from .prompts import build_set
from .review import ReviewQueue


def _weakspot_from_json(data: dict) -> Weakspot:
    return Weakspot(
        pivotal_id=data["pivotal_id"],
        true_class=data["true_class"],
        predicted_class=data["predicted_class"],
        radius=data["radius"],
        perplexity=data["perplexity"],
        neighbor_ids=tuple(data["neighbor_ids"]),
    )


class _State:
    """Artifacts the service answers from, loaded once at startup."""

    def __init__(self, config: PipelineConfig) -> None:
        out = Path(config.out_dir)
        report_path = out / AUDIT_REPORT
        if not report_path.exists():
            raise BindFailure(
                f"no audit report at {report_path}; run the audit stage first"
            )
        self.config = config
        self.out = out
        self.audit_report: dict = json.loads(report_path.read_text(encoding="utf-8"))
        state_path = out / REVIEW_STATE
        if state_path.exists():
            self.queue = ReviewQueue.load(state_path)
        else:
            self.queue = ReviewQueue(path=state_path)
        try:
            train_bundle = load_bundle(config.train_store, config.train_manifest)
            test_bundle = load_bundle(config.test_store, config.test_manifest)
        except WeakauditError as exc:
            raise BindFailure(f"cannot load datasets for service: {exc}") from exc
        self.full_bundle: DatasetBundle = merge(train_bundle, test_bundle)
        self.weakspots = tuple(
            _weakspot_from_json(w) for w in self.audit_report["weakspots"]
        )

    @property
    def enhance_report(self) -> dict | None:
        path = self.out / ENHANCE_REPORT
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        return None


def create_app(config: PipelineConfig, static_dir: str | Path | None = None) -> FastAPI:
    """Build the service app over persisted pipeline artifacts."""
    state = _State(config)
    app = FastAPI(title="weakaudit review service")

    @app.exception_handler(WeakauditError)
    async def _domain_error(_, exc: WeakauditError) -> JSONResponse:
        status = 404 if isinstance(exc, UnknownKey) else 500
        if isinstance(exc, StageError):
            return JSONResponse(
                status_code=500,
                content={"error": str(exc.cause), "stage": exc.stage},
            )
        return JSONResponse(status_code=status, content={"error": str(exc)})

    @app.get("/api/report")
    def get_report() -> dict:
        return {"audit": state.audit_report, "enhance": state.enhance_report}

    @app.get("/api/weakspots")
    def get_weakspots(
        d: float | None = Query(default=None),
        tperp: float | None = Query(default=None),
        true_class: str | None = Query(default=None),
        predicted_class: str | None = Query(default=None),
    ) -> dict:
        if d is None and tperp is None:
            spots = list(state.audit_report["weakspots"])
            radius = state.audit_report["settings"]["audit"]["radius"]
            threshold = state.audit_report["settings"]["audit"]["perplexity_threshold"]
        else:
            rows = state.audit_report["grid"]["rows"]
            match = None
            for row in rows:
                if d is not None and abs(row["radius"] - d) > 1e-9:
                    continue
                if tperp is not None and abs(row["perplexity_threshold"] - tperp) > 1e-9:
                    continue
                match = row
                break
            if match is None:
                raise HTTPException(
                    status_code=404,
                    detail="no grid row matches the requested (d, tperp)",
                )
            spots = list(match["weakspots"])
            radius = match["radius"]
            threshold = match["perplexity_threshold"]
        if true_class is not None:
            spots = [w for w in spots if w["true_class"] == true_class]
        if predicted_class is not None:
            spots = [w for w in spots if w["predicted_class"] == predicted_class]
        return {
            "radius": radius,
            "perplexity_threshold": threshold,
            "count": len(spots),
            "weakspots": spots,
        }

    @app.get("/api/weakspots/{pivotal_id}")
    def get_weakspot(pivotal_id: str) -> dict:
        for spot in state.audit_report["weakspots"]:
            if spot["pivotal_id"] == pivotal_id:
                record = (
                    state.full_bundle.record(pivotal_id).to_json_dict()
                    if state.full_bundle.has_record(pivotal_id)
                    else None
                )
                return {"weakspot": spot, "record": record}
        raise HTTPException(status_code=404, detail=f"no weakspot at {pivotal_id!r}")

    @app.get("/api/associations")
    def get_associations(verdict: str | None = Query(default=None)) -> dict:
        items = [item.to_json_dict() for item in state.queue.items()]
        if verdict is not None:
            items = [item for item in items if item["verdict"] == verdict]
        return {"count": len(items), "items": items}

    @app.post("/api/associations/{object_label}/{predicted_class}/verdict")
    def post_verdict(
        object_label: str,
        predicted_class: str,
        payload: dict = Body(...),
    ) -> dict:
        verdict = payload.get("verdict")
        reviewer = payload.get("reviewer", "")
        if verdict not in ("pending", "spurious", "benign"):
            raise HTTPException(
                status_code=422,
                detail=f"verdict must be pending/spurious/benign, got {verdict!r}",
            )
        if not reviewer:
            raise HTTPException(status_code=422, detail="reviewer must be non-empty")
        item = state.queue.set_verdict((object_label, predicted_class), verdict, reviewer)
        return item.to_json_dict()

    @app.get("/api/prompts")
    def get_prompts() -> dict:
        descriptions = build_set(
            state.weakspots,
            state.queue.spurious(),
            state.full_bundle,
            state.config.attribute_variants,
        )
        return {
            "count": len(descriptions.entries),
            "skipped_missing_caption": descriptions.skipped_missing_caption,
            "entries": [entry.to_json_dict() for entry in descriptions.entries],
        }

    @app.post("/api/enhance")
    def post_enhance() -> dict:
        outcome = run_enhance(state.config, state.queue)
        return outcome.report

    @app.get("/api/metrics/before-after")
    def get_metrics() -> dict:
        enhance = state.enhance_report
        return {
            "before": state.audit_report["baseline_metrics"],
            "before_disparities": state.audit_report["disparities"],
            "after": enhance["after_metrics"] if enhance else None,
            "after_disparities": enhance["after_disparities"] if enhance else None,
            "disparity_reductions": enhance["disparity_reductions"] if enhance else None,
        }

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def serve(
    config: PipelineConfig,
    host: str = "127.0.0.1",
    port: int = 8000,
    static_dir: str | Path | None = None,
) -> None:
    """Run the review service until interrupted."""
    import uvicorn

    app = create_app(config, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port)
