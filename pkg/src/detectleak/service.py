"""HTTP API over the annotation store, plus static hosting for the
annotation UI.

Endpoints: GET /api/pairs/next, POST /api/labels, GET /api/conflicts,
POST /api/adjudications, GET /api/progress, GET /api/labels/export.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .annotation import AnnotationStore, PairState
from .errors import DuplicateSubmission, UsageError


class LabelBody(BaseModel):
    pair_id: str
    annotator: str
    label: str


class AdjudicationBody(BaseModel):
    pair_id: str
    adjudicator: str
    label: str


def _pair_payload(state: PairState) -> dict:
    return {
        "pair_id": state.pair_id,
        "dataset": state.dataset,
        "bench_id": state.bench_id,
        "corpus_id": state.corpus_id,
        "repo_path": state.repo_path,
        "est_j": state.est_j,
        "exact_j": state.exact_j,
        "suggested": state.suggested,
        "bench_text": state.bench_text,
        "corpus_text": state.corpus_text,
        "status": state.status,
    }


def create_app(store: AnnotationStore, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="detectleak annotation service")

    @app.get("/api/pairs/next")
    def next_pair(annotator: str = Query(..., min_length=1)):
        state = store.next_pair(annotator)
        remaining = sum(
            1 for s in store.pairs.values()
            if annotator in s.assigned and annotator not in s.records)
        if state is None:
            return {"pair": None, "remaining": 0}
        return {"pair": _pair_payload(state), "remaining": remaining}

    @app.post("/api/labels")
    def submit_label(body: LabelBody):
        try:
            record = store.submit(body.pair_id, body.annotator, body.label)
        except DuplicateSubmission as exc:
            return JSONResponse(status_code=409, content={
                "error": str(exc), "existing": exc.existing.as_dict()})
        except UsageError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        state = store.pairs[body.pair_id]
        return {"record": record.as_dict(), "pair_status": state.status}

    @app.get("/api/conflicts")
    def conflicts():
        out = []
        for pair_id in store.conflicts():
            state = store.pairs[pair_id]
            payload = _pair_payload(state)
            payload["labels"] = [
                state.records[a].as_dict() for a in sorted(state.records)]
            out.append(payload)
        return {"conflicts": out}

    @app.post("/api/adjudications")
    def adjudicate(body: AdjudicationBody):
        try:
            final = store.adjudicate(body.pair_id, body.adjudicator,
                                     body.label)
        except UsageError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"final": final.as_dict()}

    @app.get("/api/progress")
    def progress():
        return store.progress()

    @app.get("/api/labels/export", response_class=PlainTextResponse)
    def export_labels():
        rows = store.export_labels()
        return "\n".join(json.dumps(row) for row in rows) + ("\n" if rows else "")

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(store_dir: str, host: str = "127.0.0.1", port: int = 8321,
          ui_dir: str | None = None) -> None:
    import uvicorn

    store = AnnotationStore(store_dir)
    app = create_app(store, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
