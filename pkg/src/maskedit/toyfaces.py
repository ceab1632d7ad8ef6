"""Deterministic procedural cartoon-face corpus for CI and desk-scale runs.

Each sample is a flat-shaded face built from ellipse primitives on an
integer grid, so the label mask is exact by construction. Geometry and
colors vary per sample; the five landmarks come straight from the
generating geometry. Same seed -> bit-identical corpus.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datamodel import save_image, save_mask, toy_schema

L_BG, L_SKIN, L_EYE_L, L_EYE_R, L_MOUTH, L_HAIR = range(6)

SKIN_TONES = [
    (0.95, 0.80, 0.69), (0.88, 0.68, 0.55), (0.76, 0.57, 0.42),
    (0.62, 0.45, 0.32), (0.47, 0.33, 0.24), (0.98, 0.86, 0.76),
]
HAIR_COLORS = [
    (0.08, 0.07, 0.07), (0.35, 0.22, 0.12), (0.62, 0.47, 0.22),
    (0.78, 0.64, 0.35), (0.45, 0.13, 0.10), (0.25, 0.25, 0.55),
    (0.55, 0.30, 0.55),
]
EYE_COLORS = [(0.18, 0.35, 0.65), (0.22, 0.50, 0.30), (0.35, 0.23, 0.12), (0.15, 0.15, 0.18)]
MOUTH_COLORS = [(0.75, 0.25, 0.30), (0.62, 0.16, 0.22), (0.85, 0.42, 0.45), (0.55, 0.20, 0.35)]
BG_COLORS = [
    (0.55, 0.65, 0.75), (0.70, 0.70, 0.60), (0.45, 0.52, 0.48),
    (0.75, 0.62, 0.55), (0.35, 0.38, 0.45), (0.62, 0.55, 0.68),
]


def _ellipse(h: int, w: int, cy: float, cx: float, ry: float, rx: float) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w]
    return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


@dataclass(frozen=True)
class ToyFace:
    image: np.ndarray      # (H, W, 3) float32 in [-1, 1]
    mask: np.ndarray       # (H, W) int64 labels of the toy schema
    landmarks: np.ndarray  # (5, 2) float64 (x, y)
    meta: dict


def make_toy_face(rng: np.random.Generator, resolution: int = 64) -> ToyFace:
    """One random cartoon face. Geometry scales with ``resolution``."""
    r = float(resolution)
    mask = np.zeros((resolution, resolution), dtype=np.int64)

    face_cy = r * rng.uniform(0.52, 0.58)
    face_cx = r * rng.uniform(0.46, 0.54)
    face_ry = r * rng.uniform(0.28, 0.36)
    face_rx = r * rng.uniform(0.22, 0.30)
    face = _ellipse(resolution, resolution, face_cy, face_cx, face_ry, face_rx)

    # hair: larger ellipse shifted up, minus the face, cut below a hemline
    hair_ry = face_ry * rng.uniform(1.12, 1.40)
    hair_rx = face_rx * rng.uniform(1.10, 1.35)
    hair_cy = face_cy - face_ry * rng.uniform(0.12, 0.35)
    hair = _ellipse(resolution, resolution, hair_cy, face_cx, hair_ry, hair_rx)
    hemline = face_cy + face_ry * rng.uniform(-0.25, 0.85)
    yy = np.arange(resolution)[:, None]
    hair &= yy <= hemline
    hair &= ~face

    eye_dy = face_ry * rng.uniform(0.28, 0.42)
    eye_dx = face_rx * rng.uniform(0.42, 0.58)
    eye_ry = max(1.2, face_ry * rng.uniform(0.075, 0.125))
    eye_rx = max(1.6, face_rx * rng.uniform(0.14, 0.22))
    eye_cy = face_cy - eye_dy
    eye_l = _ellipse(resolution, resolution, eye_cy, face_cx - eye_dx, eye_ry, eye_rx) & face
    eye_r = _ellipse(resolution, resolution, eye_cy, face_cx + eye_dx, eye_ry, eye_rx) & face

    mouth_cy = face_cy + face_ry * rng.uniform(0.42, 0.60)
    mouth_ry = max(1.2, face_ry * rng.uniform(0.08, 0.16))
    mouth_rx = max(2.0, face_rx * rng.uniform(0.28, 0.46))
    mouth = _ellipse(resolution, resolution, mouth_cy, face_cx, mouth_ry, mouth_rx) & face

    mask[hair] = L_HAIR
    mask[face] = L_SKIN
    mask[eye_l] = L_EYE_L
    mask[eye_r] = L_EYE_R
    mask[mouth] = L_MOUTH

    skin = np.array(SKIN_TONES[rng.integers(len(SKIN_TONES))])
    hairc = np.array(HAIR_COLORS[rng.integers(len(HAIR_COLORS))])
    eyec = np.array(EYE_COLORS[rng.integers(len(EYE_COLORS))])
    mouthc = np.array(MOUTH_COLORS[rng.integers(len(MOUTH_COLORS))])
    bgc = np.array(BG_COLORS[rng.integers(len(BG_COLORS))])

    img = np.empty((resolution, resolution, 3), dtype=np.float64)
    grad = np.linspace(-0.06, 0.06, resolution)[:, None, None] * rng.uniform(0.0, 1.0)
    img[:] = bgc + grad
    img[mask == L_SKIN] = skin
    img[mask == L_HAIR] = hairc
    img[mask == L_EYE_L] = eyec
    img[mask == L_EYE_R] = eyec
    img[mask == L_MOUTH] = mouthc
    img += rng.uniform(-0.015, 0.015, size=img.shape)
    img = np.clip(img, 0.0, 1.0) * 2.0 - 1.0

    landmarks = np.array(
        [
            [face_cx - eye_dx, eye_cy],
            [face_cx + eye_dx, eye_cy],
            [face_cx, face_cy + face_ry * 0.12],
            [face_cx - mouth_rx, mouth_cy],
            [face_cx + mouth_rx, mouth_cy],
        ],
        dtype=np.float64,
    )
    meta = {"palette_group": int(rng.integers(3))}
    return ToyFace(image=img.astype(np.float32), mask=mask, landmarks=landmarks, meta=meta)


def write_toy_corpus(out_dir: str | Path, n: int, seed: int, resolution: int = 64) -> Path:
    """Emit n faces as PNG pairs plus a JSONL manifest; returns manifest path.

    The manifest record format is the package-wide dataset manifest: one
    JSON object per line with image path, mask path, five (x, y) landmarks,
    schema name, and free-form metadata.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    schema = toy_schema()
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        face = make_toy_face(rng, resolution)
        img_name = f"face_{i:04d}.png"
        mask_name = f"face_{i:04d}_mask.png"
        save_image(face.image, out_dir / img_name)
        save_mask(face.mask, out_dir / mask_name, schema)
        records.append(
            {
                "id": f"face_{i:04d}",
                "image": img_name,
                "mask": mask_name,
                "landmarks": [[round(float(x), 3), round(float(y), 3)] for x, y in face.landmarks],
                "meta": face.meta,
            }
        )
    manifest = out_dir / "manifest.jsonl"
    with open(manifest, "w") as f:
        f.write(json.dumps({"schema": schema.name, "resolution": resolution, "count": n}) + "\n")
        for rec in records:
            f.write(json.dumps(rec) + "\n")
    (out_dir / "schema.json").write_text(schema.to_manifest())
    return manifest
