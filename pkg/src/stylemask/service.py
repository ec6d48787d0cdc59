"""HTTP facade over a trained checkpoint: a deterministic latent gallery,
synchronous edits, and a content-addressed image cache.

Edits are pure functions of the request tuple, so the image id is a hash
of (checkpoint, backend, source, reference, targets, intensity) and the
cache can be shared aggressively.  All endpoints are read-only over model
state; session state is immutable once the app is built.

API (JSON, version 1):
    GET  /health            -> {status, api_version, checkpoint_id, backend}
    GET  /attributes        -> attribute catalog + intensity bounds
    POST /sample            -> {entries: [{id, seed, index, pose, image_url}]}
    POST /edit              -> {image_id, image_url, content_address, report}
    GET  /images/{image_id} -> PNG bytes
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from pydantic import BaseModel, Field

from .backends.base import Backends
from .editor import DELTA_BOUNDS, DELTA_DEFAULT, EditRequest, edit
from .images import to_png_bytes
from .errors import BackendUnavailableError, InvalidInputError
from .stylespace import StyleCode
from .serialization import decode_array, encode_array
from .trainer import Checkpoint

API_VERSION = 1




@dataclass(frozen=True)
class GalleryEntry:
    """A sampled latent: regenerating from (seed, index) reproduces the
    style code bitwise, so only the id and metadata need to travel."""

    entry_id: str
    seed: int
    index: int
    pose: float

    def to_json(self) -> dict:
        return {
            "id": self.entry_id,
            "seed": self.seed,
            "index": self.index,
            "pose": self.pose,
            "image_url": f"/images/{self.entry_id}",
        }


class SampleBody(BaseModel):
    count: int = Field(default=8, ge=0, le=256)
    seed: int = 0


class EditBody(BaseModel):
    source_id: str
    reference_id: str
    attributes: list[str]
    delta: float = DELTA_DEFAULT


class ImageStore:
    """Content-addressed PNG + style-code store under one directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def png_path(self, image_id: str) -> Path:
        return self.root / f"{image_id}.png"

    def has_image(self, image_id: str) -> bool:
        return self.png_path(image_id).exists()

    def put_image(self, image_id: str, image: np.ndarray) -> None:
        path = self.png_path(image_id)
        if path.exists():
            return
        data = to_png_bytes(image)
        with self._lock:
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(data)
            os.replace(tmp, path)

    def put_code(self, image_id: str, code: StyleCode, meta: dict) -> None:
        path = self.root / f"{image_id}.json"
        if path.exists():
            return
        payload = {
            "values": encode_array(np.asarray(code.values)),
            "editable": [bool(b) for b in code.editable],
            **meta,
        }
        with self._lock:
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(payload))
            os.replace(tmp, path)

    def get_code(self, image_id: str) -> StyleCode | None:
        path = self.root / f"{image_id}.json"
        if not path.exists():
            return None
        raw = json.loads(path.read_text())
        return StyleCode(decode_array(raw["values"]), np.array(raw["editable"], dtype=bool))


def sample_entry_id(manifest_id: str, seed: int, index: int) -> str:
    return hashlib.sha256(f"sample:{manifest_id}:{seed}:{index}".encode()).hexdigest()[:16]


def edit_content_address(
    checkpoint_id: str,
    manifest_id: str,
    source_id: str,
    reference_id: str,
    attributes: Sequence[str],
    delta: float,
) -> str:
    key = ":".join(
        [
            "edit",
            checkpoint_id,
            manifest_id,
            source_id,
            reference_id,
            ",".join(attributes),
            float(delta).hex(),
        ]
    )
    return hashlib.sha256(key.encode()).hexdigest()


def create_app(
    backends: Backends | None,
    checkpoint: Checkpoint | None,
    cache_dir: str | Path,
) -> FastAPI:
    """Build the service app over immutable session state."""
    app = FastAPI(title="stylemask service")
    store = ImageStore(cache_dir)
    checkpoint_id = checkpoint.checkpoint_id if checkpoint else None
    manifest_id = backends.generator.manifest.manifest_id if backends else None

    def require_session() -> tuple[Backends, Checkpoint]:
        if backends is None or checkpoint is None:
            raise HTTPException(status_code=409, detail="no checkpoint loaded")
        return backends, checkpoint

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "api_version": API_VERSION,
            "checkpoint_id": checkpoint_id,
            "backend": backends.generator.manifest.model_id if backends else None,
        }

    @app.get("/attributes")
    def http_attributes():
        bk, ck = require_session()
        attributes = []
        for spec in bk.catalog:
            attributes.append(
                {
                    "name": spec.name,
                    "region": spec.region,
                    "groups": [
                        {"phrases": list(g.phrases), "template": g.template}
                        for g in spec.groups
                    ],
                }
            )
        return {
            "api_version": API_VERSION,
            "checkpoint_id": checkpoint_id,
            "attributes": attributes,
            "delta": {
                "min": DELTA_BOUNDS[0],
                "max": DELTA_BOUNDS[1],
                "default": DELTA_DEFAULT,
            },
        }

    @app.post("/sample")
    def http_sample(body: SampleBody):
        bk, _ = require_session()
        gen = bk.generator
        entries = []
        try:
            for index in range(body.count):
                entry_id = sample_entry_id(manifest_id, body.seed, index)
                z, pose = gen.sample_latent((body.seed, index))
                code = gen.to_style(z, pose)
                if not store.has_image(entry_id):
                    store.put_image(entry_id, gen.synthesize(code))
                store.put_code(
                    entry_id, code, {"seed": body.seed, "index": index, "pose": float(pose[0])}
                )
                entries.append(GalleryEntry(entry_id, body.seed, index, float(pose[0])))
        except BackendUnavailableError as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from exc
        return {"api_version": API_VERSION, "entries": [e.to_json() for e in entries]}

    @app.post("/edit")
    def http_edit(body: EditBody):
        bk, ck = require_session()
        s_src = store.get_code(body.source_id)
        s_ref = store.get_code(body.reference_id)
        if s_src is None or s_ref is None:
            missing = body.source_id if s_src is None else body.reference_id
            raise HTTPException(status_code=404, detail=f"unknown image id {missing!r}")
        for name in body.attributes:
            if name not in bk.catalog.names:
                raise HTTPException(status_code=400, detail=f"unknown attribute {name!r}")
        try:
            request = EditRequest(
                s_src=s_src, s_ref=s_ref, omega=tuple(body.attributes), delta=body.delta
            )
            result = edit(request, ck, bk)
        except InvalidInputError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except BackendUnavailableError as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from exc
        address = edit_content_address(
            checkpoint_id, manifest_id, body.source_id, body.reference_id,
            body.attributes, body.delta,
        )
        image_id = address[:16]
        store.put_image(image_id, result.image)
        # cache the edited code so the result can seed a follow-up edit
        store.put_code(
            image_id,
            result.s_edit,
            {"source_id": body.source_id, "reference_id": body.reference_id,
             "attributes": list(body.attributes), "delta": body.delta},
        )
        return {
            "api_version": API_VERSION,
            "image_id": image_id,
            "image_url": f"/images/{image_id}",
            "content_address": address,
            "delta": body.delta,
            "attributes": list(body.attributes),
            "report": [
                {"name": r.name, "targeted": r.targeted, "distance": r.distance}
                for r in result.report
            ],
        }

    @app.get("/images/{image_id}")
    def http_image(image_id: str):
        path = store.png_path(image_id)
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"unknown image id {image_id!r}")
        return FileResponse(path, media_type="image/png")

    return app


def mount_ui(app: FastAPI, ui_dir: str | Path) -> None:
    """Serve a static single-page bundle at /ui (if built)."""
    from fastapi.staticfiles import StaticFiles

    app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")
