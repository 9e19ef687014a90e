"""HTTP + stream front of the editing sessions.

Endpoints (JSON unless noted):

- ``POST /sessions`` → 201 ``{"id"}``
- ``GET  /sessions/{sid}`` → revision, instance names, solve/drop counters
- ``POST /sessions/{sid}/meshes`` (raw OBJ body) → 201 instance name
- ``POST /sessions/{sid}/instances/{name}/rig`` (rig record) → binds, precomputes
- ``POST /sessions/{sid}/instances/{name}/deform`` → solves, bumps revision
- ``GET  /sessions/{sid}/instances/{name}/mesh?rev=N`` → binary wire buffer
- ``POST /sessions/{sid}/render`` → color/depth/mask artifact URLs
- ``POST /sessions/{sid}/enhance`` → runs the latent enhancement pass
- ``GET  /sessions/{sid}/artifacts/{file}`` → artifact bytes
- ``WS   /sessions/{sid}/stream`` → inbound deform requests, outbound
  ``{"type": "revision", ...}`` JSON plus a binary geometry frame

The stream coalesces: a request is dispatched only when the session's writer
slot is free, and every request that was superseded while waiting is
acknowledged inside the winning request's revision message (``superseded``)
instead of being solved. Drag updates therefore cost at most one solve per
writer-slot turnaround, however fast they arrive.
"""

from __future__ import annotations

import asyncio
import logging
import os
import tempfile

import numpy as np
from fastapi import FastAPI, Request, Response, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse, JSONResponse
from starlette.concurrency import run_in_threadpool

from ..enhance import (
    StructuredPredictor,
    ZeroPredictor,
    audit_to_jsonl,
    parse_enhancement_config,
    run_enhancement,
)
from ..render import render_scene, save_color_png, save_depth_png, save_mask_png
from .sessions import SessionError, SessionStore, encode_mesh_buffers

log = logging.getLogger("sculpt3d.service")

_DEFAULT_ENHANCE_CONFIG = {
    "T": 50,
    "tau_f": 0.2,
    "tau_A": 0.5,
    "refiner_fraction": 0.1,
    "feature_layers": ["down0"],
    "attention_layers": ["down0", "down1", "mid"],
    "schedule": {"kind": "linear", "beta_start": 0.001, "beta_end": 0.1},
}

_LATENT_BLOCK = 8  # latent cell per 8x8 pixel block of the coarse render


def _save_depth_artifact(depth, path) -> None:
    """Write the depth PNG, tolerating a scene with zero coverage.

    An instance-free session still renders to a legitimate frame; its depth
    map is all-invalid, which the strict library writer refuses.  The format
    reserves code 0 for invalid pixels, so the vacuous file is simply every
    code at 0 with a collapsed range in the sidecar, and the regular loader
    round-trips it.
    """
    if depth.valid.any():
        save_depth_png(depth, path)
        return
    from PIL import Image

    Image.fromarray(np.zeros(depth.values.shape, dtype=np.uint16)).save(
        os.fspath(path), format="PNG"
    )
    with open(os.fspath(path) + ".meta", "w") as fh:
        fh.write("0\n0\n")


def _structured_predictors(layer_names):
    return (
        StructuredPredictor(layer_names, name="base"),
        StructuredPredictor(layer_names, name="refiner"),
    )


def _zero_predictors(layer_names):
    return (
        ZeroPredictor(layer_names, name="zero"),
        ZeroPredictor(layer_names, name="zero-refiner"),
    )


PREDICTOR_REGISTRY = {
    "structured": _structured_predictors,
    "zero": _zero_predictors,
}


def register_predictor(name, factory):
    """Expose a real denoiser pair under ``name``: factory(layers) -> (base, refiner)."""
    PREDICTOR_REGISTRY[name] = factory


def create_app(artifact_root=None) -> FastAPI:
    """Build the service; ``artifact_root`` anchors per-session outputs."""
    app = FastAPI(title="sculpt3d sessions")
    root = artifact_root if artifact_root is not None else tempfile.mkdtemp(
        prefix="sculpt3d-")
    store = SessionStore(root)
    app.state.store = store

    @app.exception_handler(SessionError)
    async def _session_error(request, exc):
        return JSONResponse(status_code=exc.status, content={"detail": str(exc)})

    @app.post("/sessions", status_code=201)
    def create_session():
        session = store.create()
        log.info("session %s created", session.id)
        return {"id": session.id}

    @app.get("/sessions/{sid}")
    def session_info(sid: str):
        return store.get(sid).info()

    @app.post("/sessions/{sid}/meshes", status_code=201)
    async def upload_mesh(sid: str, request: Request):
        session = store.get(sid)
        body = await request.body()
        name, revision = await run_in_threadpool(session.add_mesh, body)
        return {"instance": name, "revision": revision}

    @app.post("/sessions/{sid}/instances/{name}/rig")
    def attach_rig(sid: str, name: str, record: dict):
        session = store.get(sid)
        kind, revision = session.attach_rig(name, record)
        return {"rig": kind, "revision": revision}

    @app.post("/sessions/{sid}/instances/{name}/deform")
    def deform(sid: str, name: str, payload: dict):
        session = store.get(sid)
        revision, _ = session.deform(name, payload)
        return {"revision": revision}

    @app.get("/sessions/{sid}/instances/{name}/mesh")
    def fetch_mesh(sid: str, name: str, rev: int | None = None):
        blob = store.get(sid).mesh_buffers(name, rev)
        return Response(content=blob, media_type="application/octet-stream")

    @app.post("/sessions/{sid}/render")
    def render(sid: str):
        session = store.get(sid)
        scene, revision = session.scene, session.revision
        result = render_scene(scene)
        session.artifact_dir.mkdir(parents=True, exist_ok=True)
        stem = f"render-{revision:04d}"
        color = session.artifact_dir / f"{stem}.png"
        depth = session.artifact_dir / f"{stem}_depth.png"
        mask = session.artifact_dir / f"{stem}_mask.png"
        save_color_png(result.color, color)
        _save_depth_artifact(result.depth, depth)
        save_mask_png(result.mask, mask)
        base = f"/sessions/{sid}/artifacts"
        log.info("session %s rendered revision %d", sid, revision)
        return {
            "revision": revision,
            "color": f"{base}/{color.name}",
            "depth": f"{base}/{depth.name}",
            "mask": f"{base}/{mask.name}",
        }

    @app.post("/sessions/{sid}/enhance")
    def enhance(sid: str, body: dict | None = None):
        session = store.get(sid)
        body = body or {}
        predictor_name = body.get("predictor", "structured")
        factory = PREDICTOR_REGISTRY.get(predictor_name)
        if factory is None:
            raise SessionError(
                400,
                f"unknown predictor {predictor_name!r} "
                f"(registered: {sorted(PREDICTOR_REGISTRY)})")
        try:
            config, schedule = parse_enhancement_config(
                body.get("config", _DEFAULT_ENHANCE_CONFIG))
        except ValueError as exc:
            raise SessionError(400, f"bad enhancement config: {exc}") from exc
        prompt = body.get("prompt", "")

        result = render_scene(session.scene)
        h, w = result.color.pixels.shape[:2]
        bh, bw = h // _LATENT_BLOCK, w // _LATENT_BLOCK
        latent = (
            result.color.pixels[: bh * _LATENT_BLOCK, : bw * _LATENT_BLOCK]
            .reshape(bh, _LATENT_BLOCK, bw, _LATENT_BLOCK, 3)
            .mean(axis=(1, 3))
            / 255.0
        )
        layers = tuple(sorted({*config.feature_layers, *config.attention_layers}))
        base_pred, refiner = factory(layers or ("mid",))
        try:
            final, audit = run_enhancement(
                latent, {"prompt": ""}, {"prompt": prompt},
                base_pred, refiner, config, schedule)
        except ValueError as exc:
            raise SessionError(400, f"enhancement rejected: {exc}") from exc

        session.artifact_dir.mkdir(parents=True, exist_ok=True)
        stem = f"enhance-{session.revision:04d}"
        audit_path = session.artifact_dir / f"{stem}.audit.jsonl"
        audit_path.write_text(audit_to_jsonl(audit), encoding="utf-8")
        image_path = session.artifact_dir / f"{stem}.png"
        from PIL import Image

        Image.fromarray(
            np.rint(np.clip(final, 0.0, 1.0) * 255.0).astype(np.uint8), "RGB"
        ).save(image_path)
        base = f"/sessions/{sid}/artifacts"
        return {
            "steps": schedule.n_steps,
            "predictor": predictor_name,
            "audit": f"{base}/{audit_path.name}",
            "enhanced": f"{base}/{image_path.name}",
        }

    @app.get("/sessions/{sid}/artifacts/{name}")
    def artifact(sid: str, name: str):
        session = store.get(sid)
        if "/" in name or "\\" in name or name.startswith("."):
            raise SessionError(404, f"no artifact {name!r}")
        path = session.artifact_dir / name
        if not path.is_file():
            raise SessionError(404, f"no artifact {name!r}")
        media = "image/png" if name.endswith(".png") else "text/plain"
        return FileResponse(path, media_type=media)

    @app.websocket("/sessions/{sid}/stream")
    async def stream(ws: WebSocket, sid: str):
        try:
            session = store.get(sid)
        except SessionError:
            await ws.close(code=1008)
            return
        await ws.accept()
        queue: asyncio.Queue = asyncio.Queue()

        async def reader():
            while True:
                try:
                    msg = await ws.receive_json()
                except WebSocketDisconnect:
                    await queue.put(None)
                    return
                except ValueError:
                    await queue.put({"_malformed": True})
                    continue
                await queue.put(msg)

        reader_task = asyncio.create_task(reader())
        closing = False

        def drain(batch):
            nonlocal closing
            while not queue.empty():
                nxt = queue.get_nowait()
                if nxt is None:
                    closing = True
                else:
                    batch.append(nxt)
            return batch

        try:
            while not closing:
                msg = await queue.get()
                if msg is None:
                    break
                batch = drain([msg])
                # dispatch only when the writer slot frees; whatever arrives
                # in the meantime coalesces into this batch
                while not session.write_lock.acquire(blocking=False):
                    await asyncio.sleep(0.001)
                    batch = drain(batch)
                try:
                    # a message that reached the socket while the writer was
                    # busy may still be in flight through the reader task;
                    # give the loop a few turns so it lands before dispatch
                    for _ in range(10):
                        await asyncio.sleep(0)
                    batch = drain(batch)
                    final = batch[-1]
                    superseded = [m.get("seq") for m in batch[:-1]]
                    session.dropped += len(superseded)
                    if final.get("_malformed") or final.get("type") != "deform":
                        await ws.send_json({
                            "type": "error", "seq": final.get("seq"),
                            "message": "messages must be JSON deform requests"})
                        continue
                    payload = {k: v for k, v in final.items()
                               if k not in ("type", "instance", "seq")}
                    try:
                        revision, mesh = await run_in_threadpool(
                            session.deform_locked,
                            final.get("instance"), payload)
                    except SessionError as exc:
                        await ws.send_json({
                            "type": "error", "seq": final.get("seq"),
                            "message": str(exc)})
                        continue
                    await ws.send_json({
                        "type": "revision",
                        "revision": revision,
                        "instance": final.get("instance"),
                        "seq": final.get("seq"),
                        "superseded": superseded,
                    })
                    await ws.send_bytes(encode_mesh_buffers(mesh))
                finally:
                    session.write_lock.release()
        finally:
            reader_task.cancel()

    return app
