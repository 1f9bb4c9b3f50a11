"""HTTP wire protocol.

POST /score   body: JSON list of {candidate, reference}, at most 64 entries
              response: JSON list of {bert_score, bart_score}, aligned
GET  /healthz 200 {"status": "ok"} once the scorer is loaded, 503 before
"""

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .scoring import BUILTIN_CHECKPOINT, PairScorer

BATCH_LIMIT = 64


def create_app(checkpoint: str = BUILTIN_CHECKPOINT) -> FastAPI:
    app = FastAPI(title="pair scoring sidecar")
    app.state.scorer = None

    @app.on_event("startup")
    def load():
        app.state.scorer = PairScorer(checkpoint)

    @app.get("/healthz")
    def healthz():
        if app.state.scorer is None:
            return JSONResponse(status_code=503, content={"status": "loading"})
        return {"status": "ok", "checkpoint": app.state.scorer.checkpoint}

    @app.post("/score")
    async def score(request: Request):
        if app.state.scorer is None:
            return JSONResponse(status_code=503, content={"error": "still loading"})
        try:
            body = await request.json()
        except Exception:
            return JSONResponse(status_code=400,
                                content={"error": "body must be valid JSON"})
        if not isinstance(body, list):
            return JSONResponse(
                status_code=400,
                content={"error": "body must be a JSON list of {candidate, reference}"})
        if len(body) > BATCH_LIMIT:
            return JSONResponse(
                status_code=400,
                content={"error": f"batch of {len(body)} exceeds the limit of "
                                  f"{BATCH_LIMIT} pairs"})
        for i, entry in enumerate(body):
            if not isinstance(entry, dict) or "candidate" not in entry \
                    or "reference" not in entry:
                return JSONResponse(
                    status_code=400,
                    content={"error": f"entry {i} must carry 'candidate' and "
                                      f"'reference' strings"})
            if not isinstance(entry["candidate"], str) or \
                    not isinstance(entry["reference"], str):
                return JSONResponse(
                    status_code=400,
                    content={"error": f"entry {i}: candidate and reference must "
                                      f"be strings"})
        return app.state.scorer.score_batch(body)

    return app
