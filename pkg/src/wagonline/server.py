"""HTTP API over the train store, consumed by the operator review console."""

from __future__ import annotations

from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles

from .fusion import FusedTrain
from .mosaic import TrainSummary, manifest_dict
from .publisher import Publisher
from .store import DuplicateTrainId, InvalidCode, NotFound, TrainStore


def create_app(
    store: TrainStore,
    media_dir: str | Path | None = None,
    api_token: str = "",
    publisher: Publisher | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="wagonline", docs_url=None, redoc_url=None)

    def require_token(request: Request) -> None:
        if not api_token:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {api_token}":
            raise HTTPException(status_code=401, detail="missing or wrong API token")

    guarded = [Depends(require_token)]

    @app.post("/api/trains", dependencies=guarded)
    def ingest_train(body: dict) -> dict:
        try:
            if "left_train_id" in body:
                summary = FusedTrain.from_dict(body).to_summary()
            else:
                summary = TrainSummary.from_dict(body)
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=f"not a train summary: {exc}")
        try:
            train_id = store.ingest(summary)
        except DuplicateTrainId as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        if publisher is not None:
            publisher.enqueue(summary.to_dict())
        return {"train_id": train_id}

    @app.get("/api/trains", dependencies=guarded)
    def list_trains() -> list[dict]:
        return store.list_trains()

    @app.get("/api/trains/{train_id}", dependencies=guarded)
    def get_train(train_id: str) -> dict:
        try:
            return store.current_view(train_id)
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/api/trains/{train_id}/mosaic", dependencies=guarded)
    def get_mosaic(train_id: str) -> dict:
        try:
            view = store.current_view(train_id)
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        view.pop("corrections", None)
        return manifest_dict(TrainSummary.from_dict(view))

    @app.patch("/api/trains/{train_id}/wagons/{position}", dependencies=guarded)
    def correct_wagon(train_id: str, position: int, body: dict) -> dict:
        operator = str(body.get("operator", "")).strip()
        if not operator:
            raise HTTPException(status_code=422, detail="operator is required")
        try:
            return store.correct(
                train_id,
                position,
                str(body.get("new_code", "")),
                operator,
                str(body.get("reason", "correction")),
            )
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except InvalidCode as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    if media_dir is not None:
        base = Path(media_dir).resolve()

        @app.get("/media/{crop_ref:path}")
        def media(crop_ref: str) -> FileResponse:
            target = (base / crop_ref).resolve()
            if not target.is_relative_to(base) or not target.is_file():
                raise HTTPException(status_code=404, detail="no such crop")
            return FileResponse(target)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
