"""Session-oriented HTTP/JSON facade over the edit pipeline.

Sessions live in process memory; each one lazily runs a single DDIM inversion
per configuration and caches the trace, which attention queries, mask
previews, and edits all share.  Results are versioned: a second edit appends
a new result instead of mutating the old one.
"""

from __future__ import annotations

import base64
import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .attention import aggregate_records
from .diffusion import build_weights, ddim_invert
from .grids import (AttentionMap, BinaryMask, LatentGrid, Point,
                    deserialize_grid, flatten_index, serialize_grid)
from .masks import MaskConfig, generate_mask
from .movement import DragInstruction
from .pipeline import EditConfig, EditReport, EditRequest, run_edit
from .scenes import NAMED_SCENES, grid_to_ppm, map_to_ppm


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, field_name: str | None = None):
        self.status = status
        self.code = code
        self.message = message
        self.field = field_name


class CreateSessionBody(BaseModel):
    scene: str | None = None
    grid_b64: str | None = None
    config: dict = {}
    request_token: str | None = None


class EditBody(BaseModel):
    points: list[dict] = []
    mask: dict | None = None
    overrides: dict = {}


@dataclass
class _EditResult:
    report: EditReport
    result_bytes: bytes


@dataclass
class _Session:
    id: str
    grid: LatentGrid
    config: EditConfig
    status: str = "created"
    lock: threading.Lock = field(default_factory=threading.Lock)
    traces: dict = field(default_factory=dict)  # config key -> (trace, agg matrix)
    edits: list = field(default_factory=list)

    def inversion(self, cfg: EditConfig):
        key = tuple(sorted(cfg.to_json().items()))
        if key not in self.traces:
            dcfg = cfg.denoiser_config(self.grid)
            trace = ddim_invert(self.grid, cfg.inversion_steps, dcfg,
                                cfg.schedule(), build_weights(dcfg))
            self.traces[key] = (trace, aggregate_records(trace.records))
            if self.status == "created":
                self.status = "inverted"
        return self.traces[key]


def create_app() -> FastAPI:
    app = FastAPI(title="attnedit")
    sessions: dict[str, _Session] = {}
    tokens: dict[str, str] = {}
    registry_lock = threading.Lock()
    counter = {"n": 0}

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        body = {"code": exc.code, "message": exc.message}
        if exc.field:
            body["field"] = exc.field
        return JSONResponse(status_code=exc.status, content=body)

    def get_session(sid: str) -> _Session:
        s = sessions.get(sid)
        if s is None:
            raise ApiError(404, "session_not_found", f"no session {sid}")
        return s

    def parse_config(obj: dict, field_name: str) -> EditConfig:
        try:
            return EditConfig.from_json(obj)
        except (TypeError, ValueError) as e:
            raise ApiError(400, "invalid_config", str(e), field_name)

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        cfg = parse_config(body.config, "config")
        with registry_lock:
            if body.request_token and body.request_token in tokens:
                sid = tokens[body.request_token]
                s = sessions[sid]
                return {"id": sid, "status": s.status, "channels": s.grid.channels,
                        "height": s.grid.height, "width": s.grid.width}
            if body.scene is not None:
                if body.scene not in NAMED_SCENES:
                    raise ApiError(400, "unknown_scene",
                                   f"unknown scene {body.scene!r}; have "
                                   f"{sorted(NAMED_SCENES)}", "scene")
                grid = NAMED_SCENES[body.scene]().grid
            elif body.grid_b64 is not None:
                try:
                    grid = deserialize_grid(base64.b64decode(body.grid_b64))
                except ValueError as e:
                    raise ApiError(400, "invalid_grid", str(e), "grid_b64")
            else:
                raise ApiError(400, "missing_input",
                               "provide either 'scene' or 'grid_b64'")
            counter["n"] += 1
            sid = f"s{counter['n']}"
            sessions[sid] = _Session(id=sid, grid=grid, config=cfg)
            if body.request_token:
                tokens[body.request_token] = sid
        s = sessions[sid]
        return {"id": sid, "status": s.status, "channels": grid.channels,
                "height": grid.height, "width": grid.width}

    @app.get("/sessions/{sid}")
    def session_info(sid: str):
        s = get_session(sid)
        return {"id": s.id, "status": s.status, "channels": s.grid.channels,
                "height": s.grid.height, "width": s.grid.width,
                "edits": len(s.edits), "config": s.config.to_json()}

    def query_point(s: _Session, x: int, y: int) -> Point:
        p = Point(x, y)
        if not s.grid.in_bounds(p):
            raise ApiError(400, "out_of_bounds",
                           f"point {tuple(p)} out of bounds for "
                           f"{s.grid.width}x{s.grid.height}", "x")
        return p

    def aggregated_map(s: _Session, p: Point) -> AttentionMap:
        _, agg = s.inversion(s.config)
        idx = flatten_index(p, s.grid.width, s.grid.height)
        return AttentionMap(agg[idx].reshape(s.grid.height, s.grid.width))

    @app.get("/sessions/{sid}/attention")
    def get_attention(sid: str, x: int, y: int, format: str = "json"):
        s = get_session(sid)
        with s.lock:
            amap = aggregated_map(s, query_point(s, x, y))
        if format == "ppm":
            return Response(content=map_to_ppm(amap), media_type="image/x-portable-pixmap")
        return amap.to_json()

    @app.get("/sessions/{sid}/mask")
    def preview_mask(sid: str, x: int, y: int, tau: float = 2.0):
        s = get_session(sid)
        if tau <= 0:
            raise ApiError(400, "invalid_tau", "tau must be positive", "tau")
        with s.lock:
            p = query_point(s, x, y)
            amap = aggregated_map(s, p)
        mask = generate_mask(amap, p, MaskConfig(
            tau=tau, include_handle=s.config.include_handle,
            dilation_radius=s.config.dilation_radius))
        return mask.to_json()

    @app.post("/sessions/{sid}/edits")
    def apply_edit(sid: str, body: EditBody):
        s = get_session(sid)
        cfg = parse_config({**s.config.to_json(), **body.overrides}, "overrides")
        try:
            instructions = tuple(DragInstruction.from_json(p) for p in body.points)
        except (KeyError, TypeError, ValueError) as e:
            raise ApiError(400, "invalid_points", str(e), "points")
        user_mask = None
        if body.mask is not None:
            try:
                user_mask = BinaryMask.from_json(body.mask)
            except (KeyError, ValueError) as e:
                raise ApiError(400, "invalid_mask", str(e), "mask")
        try:
            req = EditRequest(grid=s.grid, instructions=instructions,
                              user_mask=user_mask, config=cfg)
        except ValueError as e:
            raise ApiError(400, "invalid_request", str(e))
        with s.lock:
            try:
                report = run_edit(req)
            except ValueError as e:
                raise ApiError(400, "edit_failed", str(e))
            s.edits.append(_EditResult(report, serialize_grid(report.output)))
            s.status = "edited"
            n = len(s.edits) - 1
        return {
            "n": n,
            "blanks_filled": report.blanks_filled,
            "collisions": report.collisions,
            "timings": report.timings,
            "instructions": [
                {"instruction": a.instruction.to_json(),
                 "mask": a.mask.to_json(),
                 "field": a.field.to_json()}
                for a in report.instructions
            ],
            "result_url": f"/sessions/{sid}/edits/{n}/result",
        }

    def get_edit(sid: str, n: int) -> _EditResult:
        s = get_session(sid)
        if n < 0 or n >= len(s.edits):
            raise ApiError(404, "edit_not_found", f"session {sid} has no edit {n}")
        return s.edits[n]

    @app.get("/sessions/{sid}/edits/{n}/result")
    def edit_result(sid: str, n: int):
        e = get_edit(sid, n)
        return Response(content=e.result_bytes, media_type="application/octet-stream")

    @app.get("/sessions/{sid}/edits/{n}/result.ppm")
    def edit_result_ppm(sid: str, n: int):
        e = get_edit(sid, n)
        return Response(content=grid_to_ppm(e.report.output),
                        media_type="image/x-portable-pixmap")

    return app


app = create_app()
