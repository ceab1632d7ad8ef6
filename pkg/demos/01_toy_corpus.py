"""Generate the deterministic cartoon-face corpus and render a contact sheet.

The corpus is the package's CI workhorse: exact masks by construction,
landmarks straight from the generating geometry, bit-identical for a fixed
seed.

Run:  python demos/01_toy_corpus.py [out_dir]
"""

import sys
from pathlib import Path

import numpy as np

from maskedit.data import load_manifest
from maskedit.datamodel import save_image, toy_schema
from maskedit.toyfaces import write_toy_corpus

out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/toy_corpus")
manifest = write_toy_corpus(out_dir / "corpus", n=24, seed=0, resolution=64)
ds = load_manifest(manifest)
print(f"wrote {len(ds)} faces under {out_dir / 'corpus'}")

schema = toy_schema()
palette = np.array(schema.palette, dtype=np.float32) / 127.5 - 1.0

# 4x6 grid: face image with its mask rendered beside it
rows = []
for r in range(4):
    cells = []
    for c in range(6):
        s = ds[r * 6 + c]
        mask_rgb = palette[s.mask]
        cells.append(np.concatenate([s.image, mask_rgb], axis=1))
    rows.append(np.concatenate(cells, axis=1))
sheet = np.concatenate(rows, axis=0)
save_image(sheet, out_dir / "contact_sheet.png")
print(f"contact sheet at {out_dir / 'contact_sheet.png'}")

counts = {name: int((ds[0].mask == i).sum()) for i, name in enumerate(schema.labels)}
print("label pixel counts of the first face:", counts)
