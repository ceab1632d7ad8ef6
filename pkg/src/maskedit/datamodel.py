"""Core value types: label schemas, masks, images, component crops.

Conventions used everywhere in the package:

* images are float32 arrays of shape (H, W, 3) with values in [-1, 1];
  conversion to/from 8-bit happens only at PNG I/O boundaries,
* label masks are integer arrays of shape (H, W) holding label ids,
* one-hot masks are uint8 arrays of shape (H, W, C) with per-pixel sum 1,
* crop sizes are stored as (height, width).
"""

from __future__ import annotations

import colorsys
import json
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import SchemaError, ShapeError

SCHEMA_FORMAT_VERSION = 1

BACKGROUND = "background"


class ComponentId(IntEnum):
    """The five editable facial regions, in fixed index order.

    "Left"/"right" are viewer-relative: LEFT_EYE is the eye with the
    smaller column coordinate in an upright face image.
    """

    LEFT_EYE = 0
    RIGHT_EYE = 1
    MOUTH = 2
    SKIN_NOSE = 3
    HAIR = 4


COMPONENTS = tuple(ComponentId)

# Component crop sizes (height, width) at the 256x256 reference resolution.
# Eyes and mouth are wider than tall; skin and hair use the full frame.
BASE_RESOLUTION = 256
BASE_CROP_SIZES: dict[ComponentId, tuple[int, int]] = {
    ComponentId.LEFT_EYE: (32, 48),
    ComponentId.RIGHT_EYE: (32, 48),
    ComponentId.MOUTH: (80, 144),
    ComponentId.SKIN_NOSE: (256, 256),
    ComponentId.HAIR: (256, 256),
}


def crop_sizes(resolution: int, downsample_factor: int = 4) -> dict[ComponentId, tuple[int, int]]:
    """Per-component crop sizes scaled to ``resolution``.

    Sizes scale linearly from the 256 reference and are rounded up to the
    nearest even multiple of ``downsample_factor`` so encoder feature maps
    keep exact integer shapes. At 256 and 64 the sizes are the reference
    values unchanged.
    """
    if resolution <= 0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    step = max(2, downsample_factor if downsample_factor % 2 == 0 else 2 * downsample_factor)
    out = {}
    for comp, (h, w) in BASE_CROP_SIZES.items():
        sh = int(np.ceil(h * resolution / BASE_RESOLUTION / step) * step)
        sw = int(np.ceil(w * resolution / BASE_RESOLUTION / step) * step)
        out[comp] = (max(step, sh), max(step, sw))
    return out


@dataclass(frozen=True)
class LabelSchema:
    """Ordered label table plus the label -> component assignment.

    ``component_of`` maps every label id to a ComponentId or to None for
    background. Label ids are contiguous from 0 and 0 is background.
    """

    name: str
    labels: tuple[str, ...]
    component_of: tuple[ComponentId | None, ...]
    palette: tuple[tuple[int, int, int], ...] = field(default=())

    def __post_init__(self):
        if len(self.labels) != len(self.component_of):
            raise SchemaError("labels and component_of must have equal length")
        if not self.labels:
            raise SchemaError("schema needs at least one label")
        if self.component_of[0] is not None or self.labels[0] != BACKGROUND:
            raise SchemaError("label 0 must be background")
        if not self.palette:
            object.__setattr__(self, "palette", default_palette(len(self.labels)))
        if len(self.palette) != len(self.labels):
            raise SchemaError("palette must cover every label")

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    def labels_of(self, component: ComponentId) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.component_of) if c == component)

    def background_labels(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.component_of) if c is None)

    def flip_permutation(self) -> np.ndarray:
        """Label permutation applied when an image is mirrored horizontally.

        Pairs labels whose names differ only by a left/right token, so eye
        and eyebrow labels swap sides and everything else stays fixed.
        """
        perm = np.arange(self.n_labels)
        by_name = {n: i for i, n in enumerate(self.labels)}
        for i, n in enumerate(self.labels):
            for a, b in (("left", "right"), ("right", "left"), ("_l", "_r"), ("_r", "_l")):
                if a in n:
                    other = n.replace(a, b)
                    if other in by_name:
                        perm[i] = by_name[other]
                    break
        return perm

    def validate_mask(self, mask: np.ndarray) -> None:
        if mask.ndim != 2:
            raise ShapeError(f"mask must be 2-D, got shape {mask.shape}")
        if mask.size == 0:
            raise ShapeError("mask is empty")
        lo, hi = int(mask.min()), int(mask.max())
        if lo < 0 or hi >= self.n_labels:
            raise SchemaError(
                f"mask values [{lo}, {hi}] outside schema '{self.name}' with {self.n_labels} labels"
            )

    def to_manifest(self) -> str:
        doc = {
            "format_version": SCHEMA_FORMAT_VERSION,
            "name": self.name,
            "labels": [
                {
                    "id": i,
                    "name": n,
                    "component": None if c is None else ComponentId(c).name,
                }
                for i, (n, c) in enumerate(zip(self.labels, self.component_of))
            ],
            "palette": [list(rgb) for rgb in self.palette],
        }
        return json.dumps(doc, indent=2)

    @staticmethod
    def from_manifest(text: str) -> "LabelSchema":
        doc = json.loads(text)
        if doc.get("format_version") != SCHEMA_FORMAT_VERSION:
            raise SchemaError(f"unsupported schema manifest version {doc.get('format_version')!r}")
        rows = sorted(doc["labels"], key=lambda r: r["id"])
        if [r["id"] for r in rows] != list(range(len(rows))):
            raise SchemaError("label ids must be contiguous from 0")
        return LabelSchema(
            name=doc["name"],
            labels=tuple(r["name"] for r in rows),
            component_of=tuple(
                None if r["component"] is None else ComponentId[r["component"]] for r in rows
            ),
            palette=tuple(tuple(rgb) for rgb in doc.get("palette", [])),
        )


def default_palette(n: int) -> tuple[tuple[int, int, int], ...]:
    """Deterministic display colors: black background, fixed table, HSV tail."""
    base = [
        (0, 0, 0),        # background
        (228, 185, 142),  # skin
        (106, 64, 40),    # left brow
        (140, 86, 54),    # right brow
        (65, 105, 225),   # left eye
        (46, 139, 87),    # right eye
        (233, 150, 122),  # nose
        (199, 56, 79),    # upper lip
        (138, 17, 41),    # inner mouth
        (222, 93, 131),   # lower lip
        (96, 57, 153),    # hair
    ]
    colors = list(base[:n])
    i = len(colors)
    while len(colors) < n:
        h = (i * 0.61803398875) % 1.0
        r, g, b = colorsys.hsv_to_rgb(h, 0.75, 0.9)
        colors.append((int(r * 255), int(g * 255), int(b * 255)))
        i += 1
    return tuple(colors)


def helen_schema() -> LabelSchema:
    """11-label face schema: eyebrows ride with their eye, nose with skin."""
    labels = (
        BACKGROUND, "skin", "left_eyebrow", "right_eyebrow", "left_eye",
        "right_eye", "nose", "upper_lip", "inner_mouth", "lower_lip", "hair",
    )
    component_of = (
        None,
        ComponentId.SKIN_NOSE,
        ComponentId.LEFT_EYE,
        ComponentId.RIGHT_EYE,
        ComponentId.LEFT_EYE,
        ComponentId.RIGHT_EYE,
        ComponentId.SKIN_NOSE,
        ComponentId.MOUTH,
        ComponentId.MOUTH,
        ComponentId.MOUTH,
        ComponentId.HAIR,
    )
    return LabelSchema(name="helen-v1", labels=labels, component_of=component_of)


def toy_schema() -> LabelSchema:
    """6-label cartoon-face schema used by the deterministic CI corpus."""
    labels = (BACKGROUND, "skin", "left_eye", "right_eye", "mouth", "hair")
    component_of = (
        None,
        ComponentId.SKIN_NOSE,
        ComponentId.LEFT_EYE,
        ComponentId.RIGHT_EYE,
        ComponentId.MOUTH,
        ComponentId.HAIR,
    )
    palette = (
        (0, 0, 0),
        (228, 185, 142),
        (65, 105, 225),
        (46, 139, 87),
        (199, 56, 79),
        (96, 57, 153),
    )
    return LabelSchema(name="toy-v1", labels=labels, component_of=component_of, palette=palette)


SCHEMAS = {"helen-v1": helen_schema, "toy-v1": toy_schema}


def get_schema(name: str) -> LabelSchema:
    try:
        return SCHEMAS[name]()
    except KeyError:
        raise SchemaError(f"unknown schema {name!r}; known: {sorted(SCHEMAS)}") from None


# ---------------------------------------------------------------------------
# one-hot encoding


def encode_onehot(mask: np.ndarray, schema: LabelSchema) -> np.ndarray:
    """(H, W) label mask -> (H, W, C) uint8 one-hot planes."""
    schema.validate_mask(mask)
    eye = np.eye(schema.n_labels, dtype=np.uint8)
    return eye[mask]


def decode_onehot(onehot: np.ndarray) -> np.ndarray:
    """Inverse of encode_onehot via per-pixel argmax."""
    if onehot.ndim != 3:
        raise ShapeError(f"one-hot mask must be 3-D, got shape {onehot.shape}")
    return onehot.argmax(axis=2).astype(np.int64)


def component_region(mask: np.ndarray, component: ComponentId, schema: LabelSchema) -> np.ndarray:
    """Boolean map of pixels whose label belongs to ``component``."""
    schema.validate_mask(mask)
    labels = schema.labels_of(component)
    if not labels:
        return np.zeros(mask.shape, dtype=bool)
    return np.isin(mask, labels)


def foreground_region(mask: np.ndarray, schema: LabelSchema) -> np.ndarray:
    """Union of all five component regions (everything except background)."""
    schema.validate_mask(mask)
    return ~np.isin(mask, schema.background_labels())


# ---------------------------------------------------------------------------
# component crops


@dataclass(frozen=True)
class ComponentCrop:
    """Fixed-size patch of one facial component.

    ``image`` is (h, w, 3) in [-1, 1] and zero outside the component;
    ``valid`` marks in-component pixels; ``top_left`` is the window's
    (row, col) in the frame so placement can invert the crop; ``present``
    is False when the component has no pixels (image stays all-zero).
    """

    component: ComponentId
    image: np.ndarray
    valid: np.ndarray
    top_left: tuple[int, int]
    present: bool

    def __post_init__(self):
        if self.image.shape[:2] != self.valid.shape:
            raise ShapeError("crop image and valid mask disagree on spatial size")


# ---------------------------------------------------------------------------
# pixel-range conversion and PNG I/O


def to_unit(img_u8: np.ndarray) -> np.ndarray:
    """uint8 [0, 255] -> float32 [-1, 1]."""
    return (img_u8.astype(np.float32) / 127.5) - 1.0


def to_uint8(img: np.ndarray) -> np.ndarray:
    """float [-1, 1] -> uint8, rounding to nearest."""
    x = (np.clip(img, -1.0, 1.0) + 1.0) * 127.5
    return np.round(x).astype(np.uint8)


def save_image(img: np.ndarray, path: str | Path) -> None:
    """Write a [-1, 1] float image as 8-bit RGB PNG."""
    if img.ndim != 3 or img.shape[2] != 3:
        raise ShapeError(f"image must be (H, W, 3), got {img.shape}")
    PILImage.fromarray(to_uint8(img), mode="RGB").save(path, format="PNG")


def load_image(path: str | Path) -> np.ndarray:
    """Read an RGB PNG into a [-1, 1] float image."""
    try:
        with PILImage.open(path) as im:
            arr = np.asarray(im.convert("RGB"))
    except Exception as e:
        raise IOError(f"cannot read image {path}: {e}") from e
    if arr.size == 0:
        raise IOError(f"image {path} is empty")
    return to_unit(arr)


def save_mask(mask: np.ndarray, path: str | Path, schema: LabelSchema) -> None:
    """Write a label mask as an 8-bit indexed PNG with the schema palette."""
    schema.validate_mask(mask)
    im = PILImage.fromarray(mask.astype(np.uint8), mode="P")
    flat = []
    for rgb in schema.palette:
        flat.extend(rgb)
    im.putpalette(flat)
    im.save(path, format="PNG")


def load_mask(path: str | Path, schema: LabelSchema) -> np.ndarray:
    """Read an indexed PNG written by save_mask; values validate bit-exactly."""
    try:
        with PILImage.open(path) as im:
            if im.mode != "P":
                raise IOError(f"mask {path} is not an indexed (palette) PNG")
            arr = np.asarray(im).astype(np.int64)
    except IOError:
        raise
    except Exception as e:
        raise IOError(f"cannot read mask {path}: {e}") from e
    if arr.size == 0:
        raise IOError(f"mask {path} is empty")
    schema.validate_mask(arr)
    return arr
