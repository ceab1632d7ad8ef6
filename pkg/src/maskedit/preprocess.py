"""Everything upstream of the networks: landmark alignment, component
cropping, centroid extraction, background extraction.

Landmarks are (x, y) pixel coordinates in the order: left eye, right eye,
nose tip, left mouth corner, right mouth corner ("left" = smaller x in an
upright face). Alignment fits a least-squares similarity onto a canonical
template and resamples with bilinear (image) / nearest (mask) kernels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .datamodel import (
    ComponentCrop,
    ComponentId,
    COMPONENTS,
    LabelSchema,
    component_region,
    crop_sizes,
    foreground_region,
)
from .errors import AlignmentError, ShapeError

# Canonical five-point template as (x, y) fractions of the frame, derived
# from the widely used 112x112 alignment constants. Multiply by the working
# resolution to get pixel coordinates.
CANONICAL_TEMPLATE = np.array(
    [
        [0.34191, 0.46157],
        [0.65653, 0.45983],
        [0.50022, 0.64050],
        [0.37097, 0.82469],
        [0.63151, 0.82325],
    ],
    dtype=np.float64,
)


def canonical_landmarks(resolution: int) -> np.ndarray:
    """Template landmarks in pixels for a square working frame."""
    return CANONICAL_TEMPLATE * float(resolution)


@dataclass(frozen=True)
class AlignedSample:
    """Working-resolution image/mask pair plus the similarity that made it.

    ``transform`` maps source (x, y, 1) to aligned (x, y): a 2x3 matrix
    [[s cos, -s sin, tx], [s sin, s cos, ty]].
    """

    image: np.ndarray
    mask: np.ndarray
    transform: np.ndarray

    def __post_init__(self):
        if self.image.shape[:2] != self.mask.shape:
            raise ShapeError("aligned image and mask disagree on spatial size")


def similarity_fit(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Least-squares similarity (uniform scale + rotation + translation)
    mapping ``src`` points onto ``dst``, both (N, 2) in (x, y).

    Umeyama's closed form via SVD of the cross-covariance, with the
    determinant sign correction.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 2:
        raise AlignmentError(f"need matching (N, 2) point sets, got {src.shape} vs {dst.shape}")
    if not (np.isfinite(src).all() and np.isfinite(dst).all()):
        raise AlignmentError("landmarks contain non-finite coordinates")

    mu_s = src.mean(axis=0)
    mu_d = dst.mean(axis=0)
    src_c = src - mu_s
    dst_c = dst - mu_d
    var_s = (src_c**2).sum() / len(src)
    if var_s < 1e-12:
        raise AlignmentError("landmarks are (near-)coincident; similarity fit is degenerate")

    cov = dst_c.T @ src_c / len(src)
    u, s, vt = np.linalg.svd(cov)
    d = np.sign(np.linalg.det(u) * np.linalg.det(vt))
    corr = np.diag([1.0, d])
    rot = u @ corr @ vt
    scale = (s * np.diag(corr)).sum() / var_s
    if not np.isfinite(scale) or scale < 1e-9:
        raise AlignmentError(f"degenerate similarity scale {scale}")
    t = mu_d - scale * rot @ mu_s
    return np.column_stack([scale * rot, t])


def warp_affine(arr: np.ndarray, transform: np.ndarray, out_size: tuple[int, int], order: int, cval: float = 0.0) -> np.ndarray:
    """Apply a forward 2x3 (x, y) similarity with scipy's inverse mapping.

    ``order`` 1 = bilinear (images), 0 = nearest (label masks).
    """
    a = transform[:, :2]
    t = transform[:, 2]
    inv_a = np.linalg.inv(a)
    inv_t = -inv_a @ t
    # scipy works in (row, col) = (y, x): swap both axes of the matrix.
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    m_rc = swap @ inv_a @ swap
    t_rc = inv_t[::-1]
    # snap float noise to exact integers: scipy fills mode="constant" for
    # coordinates even epsilon outside the frame, which would zero borders
    # on an identity-fit transform
    m_rc = np.where(np.abs(m_rc - np.round(m_rc)) < 1e-9, np.round(m_rc), m_rc)
    t_rc = np.where(np.abs(t_rc - np.round(t_rc)) < 1e-9, np.round(t_rc), t_rc)
    out_h, out_w = out_size
    if arr.ndim == 2:
        return ndimage.affine_transform(
            arr, m_rc, offset=t_rc, output_shape=(out_h, out_w), order=order,
            mode="constant", cval=cval, prefilter=False,
        )
    planes = [
        ndimage.affine_transform(
            arr[..., c], m_rc, offset=t_rc, output_shape=(out_h, out_w), order=order,
            mode="constant", cval=cval, prefilter=False,
        )
        for c in range(arr.shape[2])
    ]
    return np.stack(planes, axis=2)


def align(
    image: np.ndarray,
    mask: np.ndarray,
    landmarks: np.ndarray,
    canonical: np.ndarray,
    out_size: int,
) -> AlignedSample:
    """Fit landmarks -> canonical and resample image (bilinear) and mask
    (nearest) into an out_size x out_size frame."""
    if out_size <= 0:
        raise ValueError(f"out_size must be positive, got {out_size}")
    landmarks = np.asarray(landmarks, dtype=np.float64)
    if landmarks.shape != (5, 2):
        raise AlignmentError(f"need five (x, y) landmarks, got shape {landmarks.shape}")
    h, w = mask.shape
    if (landmarks[:, 0] < 0).any() or (landmarks[:, 1] < 0).any() \
            or (landmarks[:, 0] > w).any() or (landmarks[:, 1] > h).any():
        raise AlignmentError("landmarks fall outside the source image")
    tf = similarity_fit(landmarks, np.asarray(canonical, dtype=np.float64))
    out_img = warp_affine(image.astype(np.float32), tf, (out_size, out_size), order=1)
    out_mask = warp_affine(mask, tf, (out_size, out_size), order=0)
    return AlignedSample(image=out_img.astype(np.float32), mask=out_mask, transform=tf)


@dataclass(frozen=True)
class ComponentCenter:
    """Integer centroid of a component's pixels; present=False when empty."""

    component: ComponentId
    center: tuple[int, int]  # (row, col)
    present: bool


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def component_centers(mask: np.ndarray, schema: LabelSchema) -> list[ComponentCenter]:
    """Arithmetic-mean centroid per component, rounded half-up."""
    out = []
    for comp in COMPONENTS:
        region = component_region(mask, comp, schema)
        rows, cols = np.nonzero(region)
        if rows.size == 0:
            out.append(ComponentCenter(comp, (0, 0), present=False))
        else:
            cy = _round_half_up(rows.mean())
            cx = _round_half_up(cols.mean())
            out.append(ComponentCenter(comp, (cy, cx), present=True))
    return out


def _clamped_window(center: tuple[int, int], size: tuple[int, int], frame: tuple[int, int]) -> tuple[int, int]:
    """Top-left of a size window centered at center, shifted to lie inside frame."""
    ch, cw = size
    fh, fw = frame
    if ch > fh or cw > fw:
        raise ShapeError(f"crop window {size} exceeds frame {frame}")
    top = min(max(center[0] - ch // 2, 0), fh - ch)
    left = min(max(center[1] - cw // 2, 0), fw - cw)
    return top, left


def extract_component(
    sample: AlignedSample,
    component: ComponentId,
    schema: LabelSchema,
    downsample_factor: int = 4,
) -> ComponentCrop:
    """Fixed-size crop around the component centroid, clamped into frame.

    Pixels outside the component's labels are zeroed and marked invalid.
    Absent component -> all-zero crop with present=False.
    """
    frame = sample.mask.shape
    size = crop_sizes(frame[0], downsample_factor)[component]
    region = component_region(sample.mask, component, schema)
    rows, cols = np.nonzero(region)
    if rows.size == 0:
        return ComponentCrop(
            component=component,
            image=np.zeros(size + (3,), dtype=np.float32),
            valid=np.zeros(size, dtype=bool),
            top_left=(0, 0),
            present=False,
        )
    center = (_round_half_up(rows.mean()), _round_half_up(cols.mean()))
    top, left = _clamped_window(center, size, frame)
    win_img = sample.image[top : top + size[0], left : left + size[1]]
    win_valid = region[top : top + size[0], left : left + size[1]]
    return ComponentCrop(
        component=component,
        image=(win_img * win_valid[..., None]).astype(np.float32),
        valid=win_valid.copy(),
        top_left=(top, left),
        present=True,
    )


def extract_background(image: np.ndarray, mask: np.ndarray, schema: LabelSchema) -> np.ndarray:
    """Zero every pixel claimed by any of the five components."""
    if image.shape[:2] != mask.shape:
        raise ShapeError("image and mask disagree on spatial size")
    fg = foreground_region(mask, schema)
    return (image * ~fg[..., None]).astype(np.float32)
