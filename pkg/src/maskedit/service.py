"""HTTP inference service backing the interactive mask-editing UI.

Read-only over an immutable checkpoint snapshot; assets are content
addressed (sha256) with atomic write-temp-then-rename persistence; masks
travel as indexed PNG so they round-trip bit-exactly. Component and
background refs name dataset samples; target-mask refs name either a
dataset sample or an uploaded mask asset.
"""

from __future__ import annotations

import hashlib
import io
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from fastapi import FastAPI, HTTPException, Request, Response
from PIL import Image as PILImage

from .data import FaceDataset, load_manifest
from .datamodel import (
    COMPONENTS,
    ComponentId,
    LabelSchema,
    get_schema,
    save_image,
    save_mask,
    to_unit,
)
from .errors import AlignmentError, MissingSampleError, SchemaError, ShapeError
from .networks import GeneratorNets, load_gan_checkpoint, load_parser_checkpoint
from .pipeline import EditRequest, compute_embedding, generate_from_embeddings
from .preprocess import canonical_landmarks, similarity_fit, warp_affine

MAX_ASSET_BYTES = 16 * 1024 * 1024


class AssetStore:
    """Content-addressed byte store; ids are sha256 hex digests."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def put(self, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        path = self.root / digest
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(data)
            tmp.replace(path)
        return digest

    def get(self, asset_id: str) -> bytes:
        path = self.root / asset_id
        if not path.is_file():
            raise KeyError(asset_id)
        data = path.read_bytes()
        if hashlib.sha256(data).hexdigest() != asset_id:
            raise IOError(f"asset {asset_id} failed content verification")
        return data

    def has(self, asset_id: str) -> bool:
        return (self.root / asset_id).is_file()


@dataclass
class Session:
    """Per-process inference session over one immutable checkpoint.

    The embedding cache is keyed by (sample id, component); dataset samples
    are immutable, so entries never go stale. A different checkpoint means
    a different Session.
    """

    checkpoint_id: str
    gen: GeneratorNets
    schema: LabelSchema
    dataset: FaceDataset
    embeddings: dict[tuple[str, ComponentId], torch.Tensor] = field(default_factory=dict)
    last_target_mask: np.ndarray | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def embedding(self, sample_id: str, component: ComponentId) -> torch.Tensor:
        key = (sample_id, component)
        with self.lock:
            cached = self.embeddings.get(key)
        if cached is not None:
            return cached
        sample = self.dataset.by_id(sample_id)
        emb = compute_embedding(self.gen, self.schema, sample.image, sample.mask, component)
        with self.lock:
            self.embeddings[key] = emb
        return emb


def _png_image_bytes(img: np.ndarray) -> bytes:
    buf = io.BytesIO()
    save_image(img, buf)
    return buf.getvalue()


def _png_mask_bytes(mask: np.ndarray, schema: LabelSchema) -> bytes:
    buf = io.BytesIO()
    save_mask(mask, buf, schema)
    return buf.getvalue()


def _decode_mask_png(data: bytes, schema: LabelSchema) -> np.ndarray:
    try:
        with PILImage.open(io.BytesIO(data)) as im:
            if im.mode != "P":
                raise SchemaError("mask must be an indexed (palette) PNG")
            arr = np.asarray(im).astype(np.int64)
    except SchemaError:
        raise
    except Exception as e:
        raise SchemaError(f"undecodable mask: {e}") from e
    schema.validate_mask(arr)
    return arr


def create_app(
    checkpoint: str | Path | None,
    parser_checkpoint: str | Path,
    asset_dir: str | Path,
    manifest: str | Path | None = None,
) -> FastAPI:
    """Build the service. ``checkpoint`` may be None (generation answers 409)."""
    app = FastAPI(title="maskedit service")
    store = AssetStore(asset_dir)
    _, parser_schema_name, parser, _ = load_parser_checkpoint(parser_checkpoint)
    parser.eval()

    session: Session | None = None
    if checkpoint is not None:
        spec, schema_name, gen, _, step, _ = load_gan_checkpoint(checkpoint)
        schema = get_schema(schema_name)
        dataset = load_manifest(manifest) if manifest else FaceDataset(schema, spec.resolution, [])
        if dataset.schema.name != schema.name:
            raise SchemaError(f"dataset schema {dataset.schema.name!r} != model schema {schema.name!r}")
        session = Session(
            checkpoint_id=f"{Path(checkpoint).name}@{step}",
            gen=gen,
            schema=schema,
            dataset=dataset,
        )
        active_schema = schema
    else:
        active_schema = get_schema(parser_schema_name)

    parser_resolution = parser.spec.resolution

    @app.get("/v1/health")
    def health():
        return {
            "status": "ok",
            "checkpoint": None if session is None else session.checkpoint_id,
            "schema": active_schema.name,
        }

    @app.get("/v1/schema")
    def schema_endpoint():
        return {
            "version": active_schema.name,
            "labels": [
                {
                    "id": i,
                    "name": name,
                    "component": None if comp is None else comp.name.lower(),
                }
                for i, (name, comp) in enumerate(
                    zip(active_schema.labels, active_schema.component_of)
                )
            ],
            "palette": [list(rgb) for rgb in active_schema.palette],
        }

    @app.get("/v1/samples")
    def list_samples():
        if session is None:
            return {"samples": []}
        return {"samples": [s.sample_id for s in session.dataset.samples]}

    @app.get("/v1/samples/{sample_id}/image")
    def sample_image(sample_id: str):
        if session is None:
            raise HTTPException(404, "no dataset loaded")
        try:
            s = session.dataset.by_id(sample_id)
        except MissingSampleError:
            raise HTTPException(404, f"unknown sample {sample_id!r}")
        return Response(content=_png_image_bytes(s.image), media_type="image/png")

    @app.get("/v1/samples/{sample_id}/mask")
    def sample_mask(sample_id: str):
        if session is None:
            raise HTTPException(404, "no dataset loaded")
        try:
            s = session.dataset.by_id(sample_id)
        except MissingSampleError:
            raise HTTPException(404, f"unknown sample {sample_id!r}")
        return Response(
            content=_png_mask_bytes(s.mask, session.schema),
            media_type="image/png",
            headers={"X-Schema-Version": session.schema.name},
        )

    @app.post("/v1/assets")
    async def upload_asset(request: Request):
        data = await request.body()
        if len(data) > MAX_ASSET_BYTES:
            raise HTTPException(413, f"asset exceeds {MAX_ASSET_BYTES} bytes")
        if not data:
            raise HTTPException(400, "empty body")
        asset_id = store.put(data)
        return {"id": asset_id, "size": len(data)}

    @app.get("/v1/assets/{asset_id}")
    def get_asset(asset_id: str):
        try:
            data = store.get(asset_id)
        except KeyError:
            raise HTTPException(404, f"unknown asset {asset_id!r}")
        return Response(content=data, media_type="image/png")

    @app.post("/v1/parse")
    async def parse_image(request: Request, landmarks: str | None = None):
        data = await request.body()
        try:
            with PILImage.open(io.BytesIO(data)) as im:
                rgb = np.asarray(im.convert("RGB"))
        except Exception:
            raise HTTPException(400, "undecodable image")
        img = to_unit(rgb)
        res = parser_resolution
        if landmarks is not None:
            try:
                pts = np.asarray(json.loads(landmarks), dtype=np.float64)
                tf = similarity_fit(pts, canonical_landmarks(res))
                img = warp_affine(img, tf, (res, res), order=1).astype(np.float32)
            except (ValueError, AlignmentError) as e:
                raise HTTPException(422, f"cannot align: {e}")
        elif img.shape[:2] != (res, res):
            raise HTTPException(
                422, f"image is {img.shape[:2]}, expected {res}x{res} or landmarks for alignment")
        with torch.no_grad():
            logits = parser(torch.from_numpy(img.transpose(2, 0, 1).copy()).float().unsqueeze(0))
        mask = logits.argmax(dim=1)[0].numpy().astype(np.int64)
        return Response(
            content=_png_mask_bytes(mask, active_schema),
            media_type="image/png",
            headers={"X-Schema-Version": active_schema.name},
        )

    def _resolve_target_mask(ref: str) -> np.ndarray:
        assert session is not None
        try:
            return session.dataset.by_id(ref).mask
        except MissingSampleError:
            pass
        if store.has(ref):
            mask = _decode_mask_png(store.get(ref), session.schema)
            if mask.shape != (session.gen.spec.resolution, session.gen.spec.resolution):
                raise SchemaError(
                    f"mask is {mask.shape}, model expects {session.gen.spec.resolution}")
            return mask
        raise MissingSampleError(ref)

    @app.post("/v1/generate")
    async def generate_endpoint(request: Request):
        if session is None:
            raise HTTPException(409, "no checkpoint loaded")
        body = await request.body()
        try:
            req = EditRequest.from_json(body.decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as e:
            raise HTTPException(422, f"invalid edit request: {e}")
        timings: dict[str, float] = {}
        t0 = time.perf_counter()
        try:
            target_mask = _resolve_target_mask(req.target_mask)
        except MissingSampleError:
            raise HTTPException(404, f"unknown target mask ref {req.target_mask!r}")
        except SchemaError as e:
            raise HTTPException(422, str(e))
        timings["resolve_mask_ms"] = (time.perf_counter() - t0) * 1e3

        t0 = time.perf_counter()
        try:
            embeddings = {c: session.embedding(req.components[c], c) for c in COMPONENTS}
            background = session.dataset.by_id(req.background).image
        except MissingSampleError as e:
            raise HTTPException(404, f"unknown sample ref {e.args[0]!r}")
        timings["embed_ms"] = (time.perf_counter() - t0) * 1e3

        t0 = time.perf_counter()
        try:
            out = generate_from_embeddings(
                session.gen, session.schema, target_mask, embeddings, background)
        except (SchemaError, ShapeError) as e:
            raise HTTPException(422, str(e))
        timings["decode_ms"] = (time.perf_counter() - t0) * 1e3

        t0 = time.perf_counter()
        png = _png_image_bytes(out)
        timings["encode_ms"] = (time.perf_counter() - t0) * 1e3
        session.last_target_mask = target_mask
        return Response(
            content=png,
            media_type="image/png",
            headers={"X-Stage-Timing-Ms": json.dumps({k: round(v, 3) for k, v in timings.items()})},
        )

    return app
