"""Read-only HTTP editing service over a completed workspace.

All numerics happen server-side: the UI (or any client) sends edit terms
and receives decoded clouds, segment labels, hyperplane diagnostics, and a
per-edit localization score. Responses are deterministic functions of the
request and the workspace state.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import __version__

from .directions import DirectionBank
from .metrics import STATUS_OK, sls_single
from .navigation import (NavigationError, EditTerm, UNITS_ABSOLUTE,
                         UNITS_DIST_STD, edit_object)
from .pipeline import (load_manifest, load_object_ae, load_object_latents,
                       load_segment_fn)
from .rng import make_rng
from .workspace import Workspace


class EditTermBody(BaseModel):
    direction_id: str
    alpha: float
    units: str = Field(default=UNITS_DIST_STD, pattern="^(absolute|dist_std)$")


class EditBody(BaseModel):
    object_id: str | None = None
    latent: list[float] | None = None
    terms: list[EditTermBody] = Field(default_factory=list)


def _flat(points: np.ndarray) -> list[float]:
    return [float(v) for v in points.reshape(-1)]


class ServerState:
    """Immutable snapshot of the workspace: models, bank, latents."""

    def __init__(self, ws: Workspace):
        self.ws = ws
        self.manifest = load_manifest(ws)
        ck, self.encoder, self.enc_params, self.decoder, self.dec_params = load_object_ae(ws)
        self.checkpoint_hash = ck.hash
        self.segment_fn, seg_ck = load_segment_fn(ws)
        self.segmenter_hash = seg_ck.hash
        self.bank = DirectionBank.load(ws.path("banks/directions.json"))
        self.latents = load_object_latents(ws)
        self.n_points = self.decoder.arch.n_points

    def decode(self, z: np.ndarray) -> np.ndarray:
        cloud, _ = self.decoder.forward(self.dec_params, z[None])
        return cloud[0]


def create_app(workspace_root: str | os.PathLike,
               ui_dir: str | os.PathLike | None = None) -> FastAPI:
    ws = Workspace(workspace_root)
    state = ServerState(ws)
    app = FastAPI(title="partnav", version=__version__)

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "malformed request",
                                                      "detail": exc.errors()})

    @app.get("/api/health")
    def health():
        return {"version": __version__, "checkpoint_hash": state.checkpoint_hash,
                "segmenter_hash": state.segmenter_hash,
                "n_directions": len(state.bank.directions)}

    @app.get("/api/semantics")
    def semantics():
        return {"directions": [
            {"id": d.direction_id, "part": d.part, "semantic": d.semantic,
             "accuracy": d.heldout_accuracy, "dist_std": d.dist_std}
            for d in state.bank.directions
        ]}

    @app.get("/api/objects")
    def objects(n: int = 8):
        ids = state.manifest.ids("holdout") or state.manifest.ids()
        rng = make_rng(state.ws.config.seed, "server-objects")
        order = rng.permutation(len(ids))
        picked = [ids[i] for i in order[:max(0, n)]]
        out = []
        for oid in picked:
            z = state.latents[oid]
            cloud = state.decode(z)
            out.append({"id": oid, "n": cloud.shape[0], "thumbnail": _flat(cloud)})
        return {"objects": out}

    @app.get("/api/object/{object_id}")
    def object_detail(object_id: str):
        if object_id not in state.latents:
            return JSONResponse(status_code=404,
                                content={"error": f"unknown object id {object_id!r}"})
        z = state.latents[object_id]
        cloud = state.decode(z)
        labels = state.segment_fn(cloud)
        return {"id": object_id, "n": cloud.shape[0], "points": _flat(cloud),
                "labels": [int(v) for v in labels]}

    @app.post("/api/edit")
    def edit(body: EditBody):
        if (body.object_id is None) == (body.latent is None):
            return JSONResponse(status_code=400, content={
                "error": "provide exactly one of object_id or latent"})
        if body.object_id is not None:
            if body.object_id not in state.latents:
                return JSONResponse(status_code=404, content={
                    "error": f"unknown object id {body.object_id!r}"})
            base = state.latents[body.object_id]
        else:
            base = np.asarray(body.latent, dtype=np.float64)
            if base.shape != (state.decoder.arch.latent_dim,):
                return JSONResponse(status_code=400, content={
                    "error": f"latent must have dimension {state.decoder.arch.latent_dim}"})
        for t in body.terms:
            if t.direction_id not in state.bank.ids():
                return JSONResponse(status_code=404, content={
                    "error": f"unknown direction id {t.direction_id!r}"})
        terms = [EditTerm(t.direction_id, t.alpha, t.units) for t in body.terms]
        try:
            result = edit_object(base, terms, state.encoder, state.enc_params,
                                 state.decoder, state.dec_params, state.bank,
                                 state.checkpoint_hash)
        except NavigationError as exc:
            return JSONResponse(status_code=409, content={"error": str(exc)})
        orig_labels = state.segment_fn(result.original_cloud)
        edit_labels = state.segment_fn(result.edited_cloud)
        sls = {}
        for part in sorted({state.bank.get(t.direction_id).part for t in terms}):
            sample = sls_single(result.original_cloud, result.edited_cloud,
                                part, state.segment_fn)
            sls[str(part)] = (sample.value if sample.status == STATUS_OK
                              else sample.status)
        return {
            "object_id": body.object_id,
            "n": result.edited_cloud.shape[0],
            "original_points": _flat(result.original_cloud),
            "original_labels": [int(v) for v in orig_labels],
            "edited_points": _flat(result.edited_cloud),
            "edited_labels": [int(v) for v in edit_labels],
            "applied_terms": [{"direction_id": d, "alpha_absolute": a}
                              for d, a in result.applied_terms],
            "diagnostics": result.diagnostics,
            "sls": sls,
        }

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=os.fspath(ui_dir), html=True),
                  name="ui")
    return app
