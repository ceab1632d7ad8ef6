import numpy as np
import pytest

from maskedit.datamodel import COMPONENTS, ComponentId, crop_sizes, toy_schema
from maskedit.errors import AlignmentError
from maskedit.preprocess import (
    AlignedSample,
    align,
    canonical_landmarks,
    component_centers,
    extract_background,
    extract_component,
    similarity_fit,
    warp_affine,
)
from maskedit.toyfaces import make_toy_face

SCHEMA = toy_schema()
IDENTITY = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def apply_tf(tf, pts):
    return pts @ tf[:, :2].T + tf[:, 2]


# ---------------------------------------------------------------------------
# similarity fit


def test_fit_identity():
    pts = canonical_landmarks(64)
    tf = similarity_fit(pts, pts)
    np.testing.assert_allclose(tf, IDENTITY, atol=1e-9)


def test_fit_pure_translation_closed_form():
    # moving the sources by (+10, +10) must be undone by a (-10, -10) shift
    canon = canonical_landmarks(64)
    src = canon + np.array([10.0, 10.0])
    tf = similarity_fit(src, canon)
    expected = np.array([[1.0, 0.0, -10.0], [0.0, 1.0, -10.0]])
    np.testing.assert_allclose(tf, expected, atol=1e-9)
    np.testing.assert_allclose(apply_tf(tf, src), canon, atol=1e-9)


def test_fit_recovers_known_similarity():
    rng = np.random.default_rng(5)
    pts = rng.uniform(10, 50, size=(5, 2))
    theta, scale, t = 0.3, 1.7, np.array([4.0, -2.0])
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    dst = scale * pts @ rot.T + t
    tf = similarity_fit(pts, dst)
    np.testing.assert_allclose(tf[:, :2], scale * rot, atol=1e-9)
    np.testing.assert_allclose(tf[:, 2], t, atol=1e-8)


def test_fit_least_squares_beats_residual():
    # noisy correspondences: fitted transform must still be the LS optimum,
    # checked against a dense grid search over translations
    rng = np.random.default_rng(11)
    pts = rng.uniform(0, 60, size=(5, 2))
    dst = pts + np.array([3.0, -1.0]) + rng.normal(0, 0.3, size=(5, 2))
    tf = similarity_fit(pts, dst)
    res_fit = ((apply_tf(tf, pts) - dst) ** 2).sum()
    for dx in np.linspace(2.0, 4.0, 9):
        for dy in np.linspace(-2.0, 0.0, 9):
            res_grid = ((pts + [dx, dy] - dst) ** 2).sum()
            assert res_fit <= res_grid + 1e-9


def test_fit_degenerate_coincident():
    pts = np.ones((5, 2)) * 13.0
    with pytest.raises(AlignmentError):
        similarity_fit(pts, canonical_landmarks(64))


def test_fit_nonfinite():
    pts = canonical_landmarks(64)
    bad = pts.copy()
    bad[0, 0] = np.nan
    with pytest.raises(AlignmentError):
        similarity_fit(bad, pts)


# ---------------------------------------------------------------------------
# align


def _toy(resolution=64, seed=0):
    return make_toy_face(np.random.default_rng(seed), resolution)


def test_align_fixed_point():
    face = _toy()
    canon = face.landmarks  # already canonical: transform must be identity
    out = align(face.image, face.mask, face.landmarks, canon, 64)
    np.testing.assert_allclose(out.transform, IDENTITY, atol=1e-9)
    np.testing.assert_allclose(out.image, face.image, atol=1e-6)
    assert (out.mask == face.mask).all()


def test_align_translation():
    face = _toy()
    canon = face.landmarks + np.array([10.0, 10.0])
    # landmarks == canon - 10: fit must translate by +10 (x and y)
    out = align(face.image, face.mask, face.landmarks, canon, 96)
    np.testing.assert_allclose(out.transform[:, 2], [10.0, 10.0], atol=1e-9)
    residual = apply_tf(out.transform, face.landmarks) - canon
    assert np.abs(residual).max() < 1e-9


def test_align_coincident_landmarks_error():
    face = _toy()
    with pytest.raises(AlignmentError):
        align(face.image, face.mask, np.full((5, 2), 20.0), canonical_landmarks(64), 64)


def test_align_landmarks_outside_frame():
    face = _toy()
    lm = face.landmarks.copy()
    lm[2] = [500.0, 500.0]
    with pytest.raises(AlignmentError):
        align(face.image, face.mask, lm, canonical_landmarks(64), 64)


def test_align_rejects_bad_out_size():
    face = _toy()
    with pytest.raises(ValueError):
        align(face.image, face.mask, face.landmarks, canonical_landmarks(64), 0)


def test_align_equivariance_under_similarity():
    # pre-shifting the input by an integer translation must not change the
    # aligned output beyond resampling tolerance (2/255)
    face = _toy(resolution=64, seed=3)
    big = np.zeros((96, 96, 3), dtype=np.float32)
    big_mask = np.zeros((96, 96), dtype=np.int64)
    big[8:72, 8:72] = face.image
    big_mask[8:72, 8:72] = face.mask
    lm = face.landmarks + 8.0
    canon = canonical_landmarks(64)
    base = align(big, big_mask, lm, canon, 64)

    shift = np.array([5.0, 3.0])
    moved = np.zeros_like(big)
    moved_mask = np.zeros_like(big_mask)
    moved[8 + 3 : 72 + 3, 8 + 5 : 72 + 5] = face.image
    moved_mask[8 + 3 : 72 + 3, 8 + 5 : 72 + 5] = face.mask
    out = align(moved, moved_mask, lm + shift, canon, 64)

    assert np.abs(out.image - base.image).max() <= 2.0 / 255.0 + 1e-6
    assert (out.mask == base.mask).mean() > 0.995


def test_warp_affine_identity_is_exact():
    rng = np.random.default_rng(4)
    img = rng.uniform(-1, 1, size=(16, 16, 3)).astype(np.float32)
    out = warp_affine(img, IDENTITY, (16, 16), order=1)
    np.testing.assert_allclose(out, img, atol=1e-7)


# ---------------------------------------------------------------------------
# component centers


def test_center_symmetric_region():
    mask = np.zeros((11, 11), dtype=np.int64)
    eye = SCHEMA.labels.index("left_eye")
    mask[4:7, 4:7] = eye
    centers = {c.component: c for c in component_centers(mask, SCHEMA)}
    c = centers[ComponentId.LEFT_EYE]
    assert c.present and c.center == (5, 5)


def test_center_absent_component():
    mask = np.zeros((8, 8), dtype=np.int64)
    centers = {c.component: c for c in component_centers(mask, SCHEMA)}
    assert not centers[ComponentId.HAIR].present


def test_center_l_shaped_region_brute_force():
    mask = np.zeros((16, 16), dtype=np.int64)
    hair = SCHEMA.labels.index("hair")
    mask[2:10, 2] = hair
    mask[9, 2:12] = hair
    rows, cols = [], []
    for r in range(16):
        for c in range(16):
            if mask[r, c] == hair:
                rows.append(r)
                cols.append(c)
    expect = (int(np.floor(np.mean(rows) + 0.5)), int(np.floor(np.mean(cols) + 0.5)))
    got = {c.component: c for c in component_centers(mask, SCHEMA)}[ComponentId.HAIR]
    assert got.present and got.center == expect


# ---------------------------------------------------------------------------
# component crops


def _aligned(image, mask):
    return AlignedSample(image=image, mask=mask, transform=IDENTITY)


def test_extract_single_pixel_component():
    img = np.full((64, 64, 3), 0.5, dtype=np.float32)
    mask = np.zeros((64, 64), dtype=np.int64)
    eye = SCHEMA.labels.index("left_eye")
    mask[30, 30] = eye
    crop = extract_component(_aligned(img, mask), ComponentId.LEFT_EYE, SCHEMA)
    assert crop.present
    assert crop.valid.sum() == 1
    h, w = crop_sizes(64)[ComponentId.LEFT_EYE]
    assert crop.image.shape == (h, w, 3)
    assert crop.top_left == (30 - h // 2, 30 - w // 2)
    # exactly one nonzero pixel, value preserved
    nz = np.nonzero(crop.valid)
    assert crop.image[nz][0].tolist() == [0.5, 0.5, 0.5]
    assert np.count_nonzero(crop.image.sum(axis=2)) == 1


def test_extract_absent_component():
    img = np.zeros((64, 64, 3), dtype=np.float32)
    mask = np.zeros((64, 64), dtype=np.int64)
    crop = extract_component(_aligned(img, mask), ComponentId.MOUTH, SCHEMA)
    assert not crop.present
    assert not crop.image.any() and not crop.valid.any()


def test_extract_clamps_at_frame_edge():
    img = np.full((64, 64, 3), 0.25, dtype=np.float32)
    mask = np.zeros((64, 64), dtype=np.int64)
    eye = SCHEMA.labels.index("right_eye")
    mask[0:3, 61:64] = eye  # near the top-right corner
    crop = extract_component(_aligned(img, mask), ComponentId.RIGHT_EYE, SCHEMA)
    h, w = crop_sizes(64)[ComponentId.RIGHT_EYE]
    # direct index arithmetic: centroid (1, 62); unclamped window would start
    # at (1 - h//2, 62 - w//2) and must clamp into [0, 64 - size]
    top = min(max(1 - h // 2, 0), 64 - h)
    left = min(max(62 - w // 2, 0), 64 - w)
    assert crop.top_left == (top, left)
    window_region = (mask[top : top + h, left : left + w] == eye)
    assert (crop.valid == window_region).all()


def test_extract_zero_outside_valid():
    face = _toy(seed=8)
    for comp in COMPONENTS:
        crop = extract_component(_aligned(face.image, face.mask), comp, SCHEMA)
        outside = ~crop.valid
        assert np.abs(crop.image[outside]).sum() == 0.0


# ---------------------------------------------------------------------------
# background


def test_background_all_background_mask():
    img = np.full((8, 8, 3), 0.7, dtype=np.float32)
    mask = np.zeros((8, 8), dtype=np.int64)
    np.testing.assert_array_equal(extract_background(img, mask, SCHEMA), img)


def test_background_all_foreground_mask():
    img = np.full((8, 8, 3), 0.7, dtype=np.float32)
    mask = np.full((8, 8), SCHEMA.labels.index("skin"), dtype=np.int64)
    assert not extract_background(img, mask, SCHEMA).any()


def test_background_mixed_per_pixel_oracle():
    face = _toy(seed=9)
    bg = extract_background(face.image, face.mask, SCHEMA)
    from maskedit.datamodel import component_region

    fg_union = np.zeros(face.mask.shape, dtype=bool)
    for comp in COMPONENTS:
        fg_union |= component_region(face.mask, comp, SCHEMA)
    for r in range(0, 64, 7):
        for c in range(0, 64, 7):
            if fg_union[r, c]:
                assert (bg[r, c] == 0).all()
            else:
                assert (bg[r, c] == face.image[r, c]).all()


def test_frame_tiling_every_pixel_claimed_once():
    face = _toy(seed=10)
    from maskedit.datamodel import component_region

    count = np.zeros(face.mask.shape, dtype=int)
    for comp in COMPONENTS:
        count += component_region(face.mask, comp, SCHEMA).astype(int)
    bg = extract_background(np.ones_like(face.image), face.mask, SCHEMA)
    count += (bg[..., 0] != 0).astype(int)
    assert (count == 1).all()
