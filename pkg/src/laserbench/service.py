"""HTTP API for the browser console.

Thin shell over the same planning/simulation/scoring core the CLI uses;
every number served is computed by exactly the code path the CLI runs,
so the two interfaces cannot disagree.

Sessions are in-memory. Mutating requests on one session serialize via a
non-blocking lock: a mutation that arrives while another is in flight is
refused with 409 rather than applied last-write-wins.

Error mapping: malformed request body -> 400 (field diagnostics in the
detail), unknown session or job -> 404, planner/scorer/domain failure ->
422 carrying the structured error, concurrent mutation -> 409.
"""

from __future__ import annotations

import secrets
import tempfile
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .config import TrialConfig, default_config, parse_config
from .coverage import coverage_report, rasterize, stamp_hits, write_heatmap_layer
from .errors import ConfigError, MeshError, WorkbenchError
from .operator_sim import OperatorModel, RngSeed, simulate_pass
from .planner import (
    BOUNDARY_POLICIES,
    LaserSpec,
    TreatmentPlan,
    plan_treatment,
    plan_to_json,
    validate_plan,
)
from .surface import ExclusionZone, Region, SurfaceModel, define_region, load_mesh


@dataclass
class SessionState:
    session_id: str
    surface: SurfaceModel | None = None
    region: Region | None = None
    plan: TreatmentPlan | None = None
    region_doc: dict | None = None  # verbatim echo for client round-trips
    lock: threading.Lock = field(default_factory=threading.Lock)


def _bad_request(message: str) -> HTTPException:
    return HTTPException(status_code=400, detail=message)


def _domain_error(exc: WorkbenchError) -> HTTPException:
    return HTTPException(
        status_code=422,
        detail={"error": type(exc).__name__, "message": str(exc)},
    )


def _require(body: dict, key: str, kind=None):
    if key not in body:
        raise _bad_request(f"missing field {key!r}")
    value = body[key]
    if kind is not None and not isinstance(value, kind):
        raise _bad_request(f"field {key!r} has wrong type {type(value).__name__}")
    return value


def _polygon_from(body_value, field_name: str) -> np.ndarray:
    try:
        poly = np.asarray(body_value, dtype=float)
    except (TypeError, ValueError):
        raise _bad_request(f"field {field_name!r} is not a numeric vertex list")
    if poly.ndim != 2 or poly.shape[1] != 2 or poly.shape[0] < 3:
        raise _bad_request(
            f"field {field_name!r} must be a list of >= 3 [u, v] vertices"
        )
    return poly


def _laser_from(body: dict, default: LaserSpec) -> LaserSpec:
    doc = body.get("laser")
    if doc is None:
        return default
    if not isinstance(doc, dict):
        raise _bad_request("field 'laser' must be an object")
    try:
        return LaserSpec(
            wavelength=float(doc.get("wavelength_nm", default.wavelength)),
            spot_diameter=float(doc.get("spot_diameter_mm", default.spot_diameter)),
            fluence=float(doc.get("fluence_mj_cm2", default.fluence)),
        )
    except (TypeError, ValueError) as exc:
        raise _bad_request(f"field 'laser' invalid: {exc}")


def create_app(config: TrialConfig | None = None) -> FastAPI:
    config = config or default_config()
    app = FastAPI(title="laserbench", version="1")

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        # malformed request bodies are client errors, not semantic ones
        diagnostics = [
            {"loc": [str(part) for part in e.get("loc", ())], "msg": e.get("msg", "")}
            for e in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"detail": diagnostics})

    sessions: dict[str, SessionState] = {}
    registry_lock = threading.Lock()
    jobs: dict[str, dict] = {}
    jobs_lock = threading.Lock()
    executor = ThreadPoolExecutor(max_workers=2)
    app.state.sessions = sessions  # introspection hook (tests, ops)

    def get_session(session_id: str) -> SessionState:
        with registry_lock:
            state = sessions.get(session_id)
        if state is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return state

    class mutation:
        """Non-blocking per-session guard; busy session -> 409."""

        def __init__(self, state: SessionState):
            self.state = state

        def __enter__(self):
            if not self.state.lock.acquire(blocking=False):
                raise HTTPException(
                    status_code=409,
                    detail=f"session {self.state.session_id!r} has a mutation in flight",
                )
            return self.state

        def __exit__(self, *exc_info):
            self.state.lock.release()

    # -- sessions ----------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session():
        session_id = secrets.token_hex(8)
        with registry_lock:
            sessions[session_id] = SessionState(session_id)
        return {"session_id": session_id}

    @app.post("/sessions/{session_id}/mesh")
    async def upload_mesh(session_id: str, request: Request, format: str = Query("ply")):
        state = get_session(session_id)
        if format not in ("ply", "obj"):
            raise _bad_request(f"format must be ply or obj, got {format!r}")
        body = await request.body()
        if not body:
            raise _bad_request("empty mesh upload")
        with mutation(state):
            try:
                with tempfile.NamedTemporaryFile(suffix=f".{format}", mode="wb") as fh:
                    fh.write(body)
                    fh.flush()
                    surface = load_mesh(fh.name)
            except MeshError as exc:
                raise _bad_request(f"mesh does not parse: {exc}")
            state.surface = surface
            state.region = None
            state.plan = None
            state.region_doc = None
            try:
                surface.ensure_uv()
            except MeshError as exc:
                raise _bad_request(f"mesh has no usable parameterization: {exc}")
            u0, v0, u1, v1 = surface.uv_bounds()
            return {
                "vertices": int(surface.vertices.shape[0]),
                "triangles": int(surface.triangles.shape[0]),
                "area_mm2": surface.area(),
                "uv_bounds": {"min": [u0, v0], "max": [u1, v1]},
            }

    @app.post("/sessions/{session_id}/region")
    def define_session_region(session_id: str, body: dict):
        state = get_session(session_id)
        if state.surface is None:
            raise _domain_error(WorkbenchError("no mesh uploaded in this session"))
        selection = _polygon_from(_require(body, "selection", list), "selection")
        exclusions = []
        for i, zone in enumerate(body.get("exclusions", [])):
            if not isinstance(zone, dict):
                raise _bad_request(f"exclusions[{i}] must be an object")
            boundary = _polygon_from(
                _require(zone, "boundary", list), f"exclusions[{i}].boundary"
            )
            try:
                exclusions.append(ExclusionZone(boundary, zone.get("label", "custom")))
            except ValueError as exc:
                raise _bad_request(f"exclusions[{i}]: {exc}")
        margin = body.get("margin_mm", 5.0)
        if not isinstance(margin, (int, float)) or margin < 0:
            raise _bad_request("field 'margin_mm' must be a number >= 0")
        with mutation(state):
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")  # zero-area turns into 422 below
                    region = define_region(
                        state.surface, selection, tuple(exclusions), float(margin)
                    )
            except WorkbenchError as exc:
                raise _domain_error(exc)
            except ValueError as exc:
                raise _bad_request(str(exc))
            if not region.plannable:
                raise _domain_error(
                    WorkbenchError("zero operable area: selection is entirely excluded")
                )
            state.region = region
            state.plan = None
            state.region_doc = {
                "selection": np.asarray(selection, dtype=float).tolist(),
                "exclusions": [
                    {"label": z.label, "boundary": np.asarray(z.boundary, dtype=float).tolist()}
                    for z in exclusions
                ],
                "margin_mm": float(margin),
            }
            return {
                "operable_area_mm2": region.operable_area,
                "selection_area_mm2": region.selection_area,
                "region": state.region_doc,
            }

    @app.get("/sessions/{session_id}/region")
    def get_session_region(session_id: str):
        state = get_session(session_id)
        if state.region_doc is None:
            raise _domain_error(WorkbenchError("no region defined in this session"))
        return {
            "operable_area_mm2": state.region.operable_area,
            "selection_area_mm2": state.region.selection_area,
            "region": state.region_doc,
        }

    @app.post("/sessions/{session_id}/plan")
    def plan_session(session_id: str, body: dict | None = None):
        state = get_session(session_id)
        body = body or {}
        if state.region is None:
            raise _domain_error(WorkbenchError("no region defined in this session"))
        pattern = body.get("pattern", "hex")
        if pattern not in ("hex", "square"):
            raise _bad_request(f"pattern must be hex or square, got {pattern!r}")
        policy = body.get("boundary_policy", "inside")
        if policy not in BOUNDARY_POLICIES:
            raise _bad_request(
                f"boundary_policy must be one of {BOUNDARY_POLICIES}, got {policy!r}"
            )
        laser = _laser_from(body, config.laser)
        standoff = body.get("standoff_mm", config.standoff)
        if not isinstance(standoff, (int, float)) or standoff < 0:
            raise _bad_request("field 'standoff_mm' must be a number >= 0")
        with mutation(state):
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    plan = plan_treatment(
                        state.region, laser, config.kin, float(standoff), pattern, policy
                    )
            except WorkbenchError as exc:
                raise _domain_error(exc)
            report = validate_plan(plan, state.region)
            state.plan = plan
            return {"plan": plan_to_json(plan), "validation": report.to_json()}

    @app.post("/sessions/{session_id}/simulate")
    def simulate_session(session_id: str, body: dict):
        state = get_session(session_id)
        if state.region is None:
            raise _domain_error(WorkbenchError("no region defined in this session"))
        source = body.get("source", "human")
        if source not in ("robot", "human"):
            raise _bad_request(f"source must be robot or human, got {source!r}")
        seed = _require(body, "seed", int)
        stream = body.get("stream", "")
        if not isinstance(stream, str):
            raise _bad_request("field 'stream' must be a string")
        if "model" in body:
            if not isinstance(body["model"], dict):
                raise _bad_request("field 'model' must be an object")
            try:
                model = OperatorModel.from_json(body["model"])
            except (KeyError, TypeError, ValueError) as exc:
                raise _bad_request(f"field 'model' invalid: {exc}")
        else:
            model = config.robot_model if source == "robot" else config.human_model
        laser = _laser_from(body, config.laser)
        standoff = body.get("standoff_mm", config.standoff)
        if not isinstance(standoff, (int, float)) or standoff < 0:
            raise _bad_request("field 'standoff_mm' must be a number >= 0")
        with mutation(state):
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    plan = simulate_pass(
                        state.region,
                        laser,
                        model,
                        RngSeed(seed, stream),
                        float(standoff),
                        source,
                    )
            except WorkbenchError as exc:
                raise _domain_error(exc)
            state.plan = plan
            return {"plan": plan_to_json(plan), "seed": seed, "stream": stream}

    @app.get("/sessions/{session_id}/coverage")
    def coverage_session(session_id: str, pixel: float | None = Query(None, gt=0)):
        state = get_session(session_id)
        if state.region is None or state.plan is None:
            raise _domain_error(WorkbenchError("session needs a region and a plan"))
        try:
            report = coverage_report(
                state.region, state.plan, pixel if pixel else config.pixel_size
            )
        except WorkbenchError as exc:
            raise _domain_error(exc)
        return report.to_json()

    @app.get("/sessions/{session_id}/heatmap")
    def heatmap_session(session_id: str, pixel: float | None = Query(None, gt=0)):
        state = get_session(session_id)
        if state.region is None or state.plan is None:
            raise _domain_error(WorkbenchError("session needs a region and a plan"))
        try:
            mask = rasterize(state.region, pixel if pixel else config.pixel_size)
            uv = state.region.surface.project(state.plan.centers)
            counts = stamp_hits(mask, uv, state.plan.laser.spot_radius)
        except WorkbenchError as exc:
            raise _domain_error(exc)
        blob = write_heatmap_layer(counts, mask.pixel_size)
        return Response(content=blob, media_type="application/octet-stream")

    # -- trial jobs --------------------------------------------------------

    def _run_job(job_id: str, trial_config: TrialConfig) -> None:
        from .trial import run_trial

        try:
            result = run_trial(trial_config)
            doc = {"status": "done", "result": result.to_json()}
        except Exception as exc:  # job must always resolve
            doc = {"status": "failed", "error": str(exc)}
        with jobs_lock:
            jobs[job_id] = doc

    @app.post("/trials", status_code=202)
    def submit_trial(body: dict | None = None):
        try:
            trial_config = parse_config(body) if body else config
        except ConfigError as exc:
            raise _bad_request(f"trial config invalid: {exc}")
        job_id = secrets.token_hex(8)
        with jobs_lock:
            jobs[job_id] = {"status": "running"}
        executor.submit(_run_job, job_id, trial_config)
        return {"job_id": job_id}

    @app.get("/trials/{job_id}")
    def trial_status(job_id: str):
        with jobs_lock:
            doc = jobs.get(job_id)
        if doc is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        return doc

    return app
