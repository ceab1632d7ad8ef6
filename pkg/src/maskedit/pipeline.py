"""The full generator: component extraction -> embedding -> placement at
target centroids -> mask-guided decoding -> background fusion, plus the
editing entry points (mask-to-face, component transfer, face swap+).

Appearance comes from the per-component source images; shape comes from the
target mask, because every sourced embedding is re-centered at the target
mask's component centroid before decoding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import torch

from .data import FaceDataset, FaceSample
from .datamodel import COMPONENTS, ComponentId, LabelSchema, encode_onehot
from .errors import ShapeError
from .networks import GeneratorNets, NetSpec
from .preprocess import AlignedSample, ComponentCenter, component_centers, extract_background, extract_component

EDIT_REQUEST_FORMAT_VERSION = 1

IDENTITY_TRANSFORM = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def place(
    feature: torch.Tensor,
    center: ComponentCenter,
    canvas_hw: tuple[int, int],
    downsample_factor: int,
) -> torch.Tensor:
    """Paste one (C, h, w) feature into an all-zero canvas of canvas_hw.

    ``center`` is in working-resolution pixels and is mapped to the feature
    grid by dividing by the downsample factor and rounding half-up. The
    pasted window is centered there; rows/cols falling outside the canvas
    are dropped. An absent center leaves the canvas all zero.
    """
    if feature.dim() != 3:
        raise ShapeError(f"feature must be (C, h, w), got shape {tuple(feature.shape)}")
    c, h, w = feature.shape
    ch, cw = canvas_hw
    if h > ch or w > cw:
        raise ShapeError(f"feature {h}x{w} larger than canvas {ch}x{cw}")
    canvas = feature.new_zeros((c, ch, cw))
    if not center.present:
        return canvas
    cy = _round_half_up(center.center[0] / downsample_factor)
    cx = _round_half_up(center.center[1] / downsample_factor)
    top = cy - h // 2
    left = cx - w // 2
    dst_t, dst_b = max(top, 0), min(top + h, ch)
    dst_l, dst_r = max(left, 0), min(left + w, cw)
    if dst_t >= dst_b or dst_l >= dst_r:
        return canvas
    src_t, src_l = dst_t - top, dst_l - left
    canvas[:, dst_t:dst_b, dst_l:dst_r] = feature[
        :, src_t : src_t + (dst_b - dst_t), src_l : src_l + (dst_r - dst_l)
    ]
    return canvas


def assemble(canvases: list[torch.Tensor], mask_features: torch.Tensor) -> torch.Tensor:
    """Channel-concatenate the five placement canvases (fixed component
    order) followed by the mask features."""
    if len(canvases) != len(COMPONENTS):
        raise ShapeError(f"expected {len(COMPONENTS)} canvases, got {len(canvases)}")
    for t in canvases:
        if t.shape[-2:] != mask_features.shape[-2:]:
            raise ShapeError(
                f"canvas {tuple(t.shape[-2:])} vs mask features "
                f"{tuple(mask_features.shape[-2:])} spatial mismatch")
    return torch.cat(list(canvases) + [mask_features], dim=-3)


# ---------------------------------------------------------------------------
# batched forward pass


@dataclass
class GeneratorBatch:
    """Everything the generator forward needs, channel-first tensors."""

    crops: dict[ComponentId, torch.Tensor]            # (B, 3, h_c, w_c)
    valids: dict[ComponentId, torch.Tensor]           # (B, h_c, w_c) bool
    centers: dict[ComponentId, torch.Tensor]          # (B, 2) long, working px
    center_present: dict[ComponentId, torch.Tensor]   # (B,) bool
    onehot_target: torch.Tensor                       # (B, C, H, W) float
    target_mask: torch.Tensor                         # (B, H, W) long
    background: torch.Tensor                          # (B, 3, H, W)
    target_image: torch.Tensor | None = None          # (B, 3, H, W), real x_t


@dataclass
class GeneratorOutput:
    image: torch.Tensor                               # (B, 3, H, W) final result
    foreground: torch.Tensor                          # (B, 3, H, W) pre-fusion
    features: dict[ComponentId, torch.Tensor]
    recons: dict[ComponentId, torch.Tensor]


def _img_to_tensor(img: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(img.transpose(2, 0, 1))).float()


def _tensor_to_img(t: torch.Tensor) -> np.ndarray:
    return t.detach().cpu().numpy().transpose(1, 2, 0).astype(np.float32)


def build_generator_batch(
    schema: LabelSchema,
    spec: NetSpec,
    component_sources: dict[ComponentId, list[FaceSample]],
    target_images: list[np.ndarray],
    target_masks: list[np.ndarray],
) -> GeneratorBatch:
    """Assemble tensors from numpy samples.

    ``component_sources[c]`` lists the sample supplying component ``c`` for
    each batch element (ordinary generation uses the same source sample for
    every component). Targets supply the conditioning mask, the background
    pixels, and the real image for the discriminator."""
    b = len(target_images)
    for c in COMPONENTS:
        if len(component_sources[c]) != b:
            raise ShapeError(f"{c.name}: {len(component_sources[c])} sources for batch of {b}")
    crops, valids, centers, presents = {}, {}, {}, {}
    for c in COMPONENTS:
        crop_list, valid_list = [], []
        for s in component_sources[c]:
            aligned = AlignedSample(image=s.image, mask=s.mask, transform=IDENTITY_TRANSFORM)
            crop = extract_component(aligned, c, schema, spec.downsample_factor)
            crop_list.append(_img_to_tensor(crop.image))
            valid_list.append(torch.from_numpy(crop.valid))
        crops[c] = torch.stack(crop_list)
        valids[c] = torch.stack(valid_list)
    for c in COMPONENTS:
        ctr_list, pres_list = [], []
        for m in target_masks:
            cc = next(x for x in component_centers(m, schema) if x.component == c)
            ctr_list.append(torch.tensor(cc.center, dtype=torch.long))
            pres_list.append(cc.present)
        centers[c] = torch.stack(ctr_list)
        presents[c] = torch.tensor(pres_list, dtype=torch.bool)
    onehot = torch.stack(
        [torch.from_numpy(encode_onehot(m, schema).transpose(2, 0, 1).copy()).float() for m in target_masks]
    )
    bg = torch.stack(
        [_img_to_tensor(extract_background(x, m, schema)) for x, m in zip(target_images, target_masks)]
    )
    return GeneratorBatch(
        crops=crops,
        valids=valids,
        centers=centers,
        center_present=presents,
        onehot_target=onehot,
        target_mask=torch.stack([torch.from_numpy(m.astype(np.int64)) for m in target_masks]),
        background=bg,
        target_image=torch.stack([_img_to_tensor(x) for x in target_images]),
    )


def place_batch(
    features: torch.Tensor,
    centers: torch.Tensor,
    present: torch.Tensor,
    canvas_hw: tuple[int, int],
    downsample_factor: int,
) -> torch.Tensor:
    """Batched place(): one canvas per element, absent centers stay zero."""
    out = []
    for i in range(features.shape[0]):
        cc = ComponentCenter(
            component=ComponentId.LEFT_EYE,  # component identity is irrelevant here
            center=(int(centers[i, 0]), int(centers[i, 1])),
            present=bool(present[i]),
        )
        out.append(place(features[i], cc, canvas_hw, downsample_factor))
    return torch.stack(out)


def generator_forward(gen: GeneratorNets, batch: GeneratorBatch) -> GeneratorOutput:
    """Full differentiable forward pass of the editing generator."""
    spec = gen.spec
    feature_hw = (batch.onehot_target.shape[-2] // spec.downsample_factor,
                  batch.onehot_target.shape[-1] // spec.downsample_factor)
    features, recons, canvases = {}, {}, []
    for c in COMPONENTS:
        f = gen.local_encode(c, batch.crops[c])
        features[c] = f
        recons[c] = gen.local_decode(c, f)
        canvases.append(place_batch(f, batch.centers[c], batch.center_present[c],
                                    feature_hw, spec.downsample_factor))
    mask_features = gen.mask_encode(batch.onehot_target)
    fused = assemble(canvases, mask_features)
    fg = gen.foreground_decode(fused)
    bgf = gen.background_encode(batch.background)
    out = gen.fuse_decode(fg, bgf)
    return GeneratorOutput(image=out, foreground=fg, features=features, recons=recons)


# ---------------------------------------------------------------------------
# editing entry points


@dataclass(frozen=True)
class EditRequest:
    """Declarative edit: a target mask ref, five component source refs, and
    a background source ref. Refs are sample ids (CLI) or asset ids (service)."""

    target_mask: str
    components: dict[ComponentId, str]
    background: str

    def __post_init__(self):
        missing = [c.name for c in COMPONENTS if c not in self.components]
        if missing:
            raise ValueError(f"edit request missing component sources: {missing}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "format_version": EDIT_REQUEST_FORMAT_VERSION,
                "target_mask": self.target_mask,
                "components": {c.name.lower(): self.components[c] for c in COMPONENTS},
                "background": self.background,
            },
            indent=2,
        )

    @staticmethod
    def from_json(text: str) -> "EditRequest":
        doc = json.loads(text)
        if doc.get("format_version") != EDIT_REQUEST_FORMAT_VERSION:
            raise ValueError(f"unsupported edit request version {doc.get('format_version')!r}")
        comps = {}
        for c in COMPONENTS:
            key = c.name.lower()
            if key not in doc.get("components", {}):
                raise ValueError(f"edit request missing component {key!r}")
            comps[c] = doc["components"][key]
        return EditRequest(target_mask=doc["target_mask"], components=comps, background=doc["background"])


@torch.no_grad()
def compute_embedding(
    gen: GeneratorNets,
    schema: LabelSchema,
    image: np.ndarray,
    mask: np.ndarray,
    component: ComponentId,
) -> torch.Tensor:
    """Encode one component of one face into its (1, C, h, w) embedding."""
    was_training = gen.training
    gen.eval()
    try:
        aligned = AlignedSample(image=image, mask=mask, transform=IDENTITY_TRANSFORM)
        crop = extract_component(aligned, component, schema, gen.spec.downsample_factor)
        return gen.local_encode(component, _img_to_tensor(crop.image).unsqueeze(0))
    finally:
        if was_training:
            gen.train()


@torch.no_grad()
def generate_from_embeddings(
    gen: GeneratorNets,
    schema: LabelSchema,
    target_mask: np.ndarray,
    embeddings: dict[ComponentId, torch.Tensor],
    background_image: np.ndarray,
) -> np.ndarray:
    """Decode precomputed component embeddings under a target mask.

    The shared tail of every editing entry point: placement at the target
    centroids, mask-guided decoding, background fusion. Deterministic in
    evaluation mode."""
    schema.validate_mask(target_mask)
    spec = gen.spec
    was_training = gen.training
    gen.eval()
    try:
        feature_hw = (target_mask.shape[0] // spec.downsample_factor,
                      target_mask.shape[1] // spec.downsample_factor)
        centers = {c.component: c for c in component_centers(target_mask, schema)}
        canvases = [
            place(embeddings[c][0], centers[c], feature_hw, spec.downsample_factor).unsqueeze(0)
            for c in COMPONENTS
        ]
        onehot = torch.from_numpy(
            encode_onehot(target_mask, schema).transpose(2, 0, 1).copy()
        ).float().unsqueeze(0)
        fused = assemble(canvases, gen.mask_encode(onehot))
        fg = gen.foreground_decode(fused)
        bg = _img_to_tensor(extract_background(background_image, target_mask, schema)).unsqueeze(0)
        out = gen.fuse_decode(fg, gen.background_encode(bg))
    finally:
        if was_training:
            gen.train()
    return _tensor_to_img(out[0])


def generate_edit(
    gen: GeneratorNets,
    schema: LabelSchema,
    target_mask: np.ndarray,
    sources: dict[ComponentId, FaceSample],
    background_image: np.ndarray,
) -> np.ndarray:
    """Core mixed generation: appearance per component from ``sources``,
    geometry from ``target_mask``, pixels outside the face from
    ``background_image``. Runs in evaluation mode; deterministic."""
    embeddings = {
        c: compute_embedding(gen, schema, sources[c].image, sources[c].mask, c)
        for c in COMPONENTS
    }
    return generate_from_embeddings(gen, schema, target_mask, embeddings, background_image)


def generate(
    gen: GeneratorNets,
    schema: LabelSchema,
    source_image: np.ndarray,
    source_mask: np.ndarray,
    target_image: np.ndarray,
    target_mask: np.ndarray,
) -> np.ndarray:
    """Ordinary generation: all five components from one source face."""
    src = FaceSample(sample_id="source", image=source_image, mask=source_mask)
    return generate_edit(
        gen, schema, target_mask,
        sources={c: src for c in COMPONENTS},
        background_image=target_image,
    )


def generate_mixed(
    gen: GeneratorNets,
    schema: LabelSchema,
    request: EditRequest,
    dataset: FaceDataset,
    target_mask: np.ndarray | None = None,
) -> np.ndarray:
    """Resolve an edit request against a dataset and generate.

    ``request.target_mask`` may name a dataset sample (its stored mask is
    used) unless an explicit edited ``target_mask`` array is supplied.
    Covers component transfer, mask editing, and face swap+."""
    sources = {c: dataset.by_id(request.components[c]) for c in COMPONENTS}
    bg = dataset.by_id(request.background)
    if target_mask is None:
        target_mask = dataset.by_id(request.target_mask).mask
    return generate_edit(gen, schema, target_mask, sources, bg.image)


def swap_request(source_id: str, target_id: str) -> EditRequest:
    """Face swap+: every component (hair included) from the source face,
    mask and background from the target face."""
    return EditRequest(
        target_mask=target_id,
        components={c: source_id for c in COMPONENTS},
        background=target_id,
    )
