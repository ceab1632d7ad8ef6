"""Dataset manifests and in-memory face datasets.

A manifest is JSONL: a header line carrying the schema name, resolution and
count, then one record per face with image path, mask path and optionally
five (x, y) landmarks. Paths are relative to the manifest's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datamodel import LabelSchema, get_schema, load_image, load_mask, save_image, save_mask
from .errors import MissingSampleError, ShapeError
from .preprocess import align, canonical_landmarks


@dataclass(frozen=True)
class FaceSample:
    sample_id: str
    image: np.ndarray  # (H, W, 3) float32 in [-1, 1]
    mask: np.ndarray   # (H, W) int64
    landmarks: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


@dataclass
class FaceDataset:
    """Fully materialized dataset; samples are immutable values."""

    schema: LabelSchema
    resolution: int
    samples: list[FaceSample]

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, i: int) -> FaceSample:
        return self.samples[i]

    def by_id(self, sample_id: str) -> FaceSample:
        for s in self.samples:
            if s.sample_id == sample_id:
                return s
        raise MissingSampleError(f"no sample with id {sample_id!r}")

    def subset(self, indices) -> "FaceDataset":
        return FaceDataset(self.schema, self.resolution, [self.samples[i] for i in indices])


def load_manifest(path: str | Path) -> FaceDataset:
    path = Path(path)
    root = path.parent
    with open(path) as f:
        lines = [json.loads(line) for line in f if line.strip()]
    if not lines:
        raise IOError(f"manifest {path} is empty")
    header, records = lines[0], lines[1:]
    schema = get_schema(header["schema"])
    resolution = int(header["resolution"])
    samples = []
    for rec in records:
        img = load_image(root / rec["image"])
        mask = load_mask(root / rec["mask"], schema)
        if img.shape[:2] != mask.shape:
            raise ShapeError(f"sample {rec['id']}: image {img.shape[:2]} vs mask {mask.shape}")
        lm = rec.get("landmarks")
        samples.append(
            FaceSample(
                sample_id=rec["id"],
                image=img,
                mask=mask,
                landmarks=None if lm is None else np.asarray(lm, dtype=np.float64),
                meta=rec.get("meta", {}),
            )
        )
    return FaceDataset(schema=schema, resolution=resolution, samples=samples)


def prep_dataset(manifest_in: str | Path, out_dir: str | Path, resolution: int) -> Path:
    """Align every face to the canonical template at ``resolution``.

    Writes aligned PNG pairs and a new manifest (landmarks are consumed by
    alignment and not carried forward). Returns the new manifest path.
    """
    ds = load_manifest(manifest_in)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    canon = canonical_landmarks(resolution)
    records = []
    for s in ds.samples:
        if s.landmarks is None:
            raise ShapeError(f"sample {s.sample_id} has no landmarks; cannot align")
        aligned = align(s.image, s.mask, s.landmarks, canon, resolution)
        img_name = f"{s.sample_id}.png"
        mask_name = f"{s.sample_id}_mask.png"
        save_image(aligned.image, out_dir / img_name)
        save_mask(aligned.mask, out_dir / mask_name, ds.schema)
        records.append({"id": s.sample_id, "image": img_name, "mask": mask_name, "meta": s.meta})
    manifest = out_dir / "manifest.jsonl"
    header = {
        "schema": ds.schema.name,
        "resolution": resolution,
        "count": len(records),
        # the exact template the similarity fit targeted, for reproducibility
        "canonical_landmarks": [[round(float(x), 4), round(float(y), 4)] for x, y in canon],
    }
    with open(manifest, "w") as f:
        f.write(json.dumps(header) + "\n")
        for rec in records:
            f.write(json.dumps(rec) + "\n")
    (out_dir / "schema.json").write_text(ds.schema.to_manifest())
    return manifest


def split_dataset(ds: FaceDataset, val_fraction: float = 0.1, test_fraction: float = 0.1) -> tuple[FaceDataset, FaceDataset, FaceDataset]:
    """Deterministic contiguous train/val/test split."""
    n = len(ds)
    n_test = max(1, int(round(n * test_fraction)))
    n_val = max(1, int(round(n * val_fraction)))
    n_train = n - n_val - n_test
    if n_train <= 0:
        raise ValueError(f"dataset of {n} too small to split")
    idx = list(range(n))
    return ds.subset(idx[:n_train]), ds.subset(idx[n_train : n_train + n_val]), ds.subset(idx[n_train + n_val :])
