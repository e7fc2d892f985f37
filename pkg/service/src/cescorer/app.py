"""HTTP surface: POST /score per the toolkit wire protocol.

Malformed requests get 400, model failures 500. Response ids mirror the
request; ordering is free because callers key results by id.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .model import CrossEncoderScorer


class Pair(BaseModel):
    id: str
    query: str
    score_token: str | None = None
    passage: str


class ScoreRequest(BaseModel):
    pairs: list[Pair]


class ScoreEntry(BaseModel):
    id: str
    score: float


class ScoreResponse(BaseModel):
    scores: list[ScoreEntry]


def create_app(scorer: CrossEncoderScorer) -> FastAPI:
    app = FastAPI(title="cescorer")

    @app.exception_handler(RequestValidationError)
    async def bad_request(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.post("/score", response_model=ScoreResponse)
    def score(request: ScoreRequest) -> ScoreResponse:
        try:
            triples = [(p.query, p.score_token, p.passage) for p in request.pairs]
            values = scorer.score_triples(triples)
        except Exception as exc:  # model/tokenizer failure
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        return ScoreResponse(scores=[
            ScoreEntry(id=pair.id, score=value)
            for pair, value in zip(request.pairs, values)
        ])

    return app
