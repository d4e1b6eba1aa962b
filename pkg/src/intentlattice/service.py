"""HTTP service wrapping the core pipeline.

The CLI is the usual entry point; this exposes the same operations to other
processes: upload a library, inspect the compiled index, rescore structured
lattices, aggregate stats.  The compiled index lives in process state.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .errors import IntentLatticeError
from .index import IndexTransducer, compile_index
from .library import IntentLibrary
from .pipeline import (
    DEFAULT_MIN_SPAN,
    annotation_record,
    rescore_conversation,
    span_changed,
    transcript_records,
)
from .stats import summarize


class Alternative(BaseModel):
    token: str
    posterior: float = Field(gt=0.0)


class RescoreRequest(BaseModel):
    conversation: str = "api"
    # turns -> slots -> alternatives
    turns: list[list[list[Alternative]]]
    min_span: int = Field(default=DEFAULT_MIN_SPAN, ge=1)
    renormalize: bool = False


class RescoreResponse(BaseModel):
    transcripts: list[dict]
    annotations: list[dict]
    baseline: list[dict]


class IndexInfo(BaseModel):
    intents: int
    examples: int
    states: int
    arcs: int


class StatsRequest(BaseModel):
    rescored: list[dict]
    baseline: list[dict]
    transcripts: Optional[list[dict]] = None


def _info(index: IndexTransducer) -> IndexInfo:
    return IndexInfo(
        intents=index.num_intents,
        examples=index.num_examples,
        states=index.fst.num_states,
        arcs=index.fst.num_arcs(),
    )


def create_app(index: Optional[IndexTransducer] = None) -> FastAPI:
    app = FastAPI(title="intentlattice")
    app.state.index = index

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/index", response_model=IndexInfo)
    def build(document: dict) -> IndexInfo:
        try:
            app.state.index = compile_index(IntentLibrary.from_obj(document))
        except IntentLatticeError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return _info(app.state.index)

    @app.get("/index", response_model=IndexInfo)
    def describe() -> IndexInfo:
        if app.state.index is None:
            raise HTTPException(status_code=404, detail="no index loaded")
        return _info(app.state.index)

    @app.post("/rescore", response_model=RescoreResponse)
    def rescore(request: RescoreRequest) -> RescoreResponse:
        if app.state.index is None:
            raise HTTPException(status_code=409, detail="no index loaded")
        turns = [
            [[(alt.token, alt.posterior) for alt in slot] for slot in turn]
            for turn in request.turns
        ]
        try:
            result = rescore_conversation(
                turns, app.state.index, request.min_span, request.renormalize
            )
        except IntentLatticeError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        name = request.conversation
        return RescoreResponse(
            transcripts=transcript_records(name, result),
            annotations=[
                annotation_record(name, a, span_changed(a, result.baseline_turns))
                for a in result.annotations
            ],
            baseline=[
                annotation_record(name, a, False) for a in result.baseline_annotations
            ],
        )

    @app.post("/stats")
    def stats(request: StatsRequest) -> dict:
        return summarize(request.rescored, request.baseline, request.transcripts)

    return app
