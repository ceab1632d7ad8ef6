"""Feature placement: component embeddings pasted into zero canvases at the
target mask's centroids, then assembled with the mask features.

Run:  python demos/04_placement.py
"""

import numpy as np
import torch

from maskedit.datamodel import COMPONENTS, toy_schema
from maskedit.pipeline import assemble, place
from maskedit.preprocess import ComponentCenter, component_centers
from maskedit.toyfaces import make_toy_face

schema = toy_schema()
face = make_toy_face(np.random.default_rng(1), 64)
centers = component_centers(face.mask, schema)

print("component centroids of a toy face (row, col):")
for c in centers:
    print(f"  {c.component.name:10s} present={c.present} center={c.center}")

feature_hw = (16, 16)  # 64 / downsample factor 4
print("\npasting 2-channel mock embeddings at those centroids:")
canvases = []
for c in centers:
    feat = torch.ones(2, 3, 3) * (c.component.value + 1)
    canvas = place(feat, c, feature_hw, downsample_factor=4)
    canvases.append(canvas)
    nz = canvas[0].nonzero()
    window = (tuple(nz.min(0).values.tolist()), tuple(nz.max(0).values.tolist())) if len(nz) else None
    print(f"  {c.component.name:10s} nonzero window {window}, "
          f"outside-window sum = {float(canvas.abs().sum() - canvas[:, nz[:, 0], nz[:, 1]].abs().sum() if len(nz) else 0):.1f}")

mask_features = torch.zeros(4, *feature_hw)
fused = assemble([c for c in canvases], mask_features)
print(f"\nassembled tensor channels: {fused.shape[0]} "
      f"(= 5 components x 2 + 4 mask channels)")

clipped = place(torch.ones(1, 5, 5), ComponentCenter(COMPONENTS[0], (0, 0), True), feature_hw, 4)
print(f"corner paste keeps only the in-bounds quadrant: {int(clipped.sum())} of 25 cells")
