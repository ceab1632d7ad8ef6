"""Quantitative evaluation on the toy model: Frechet distance between real
and generated sets (desk-scale embedders), and mask accuracy under the
independent parser.

Requires demo 05's run directory:
    python demos/07_evaluate.py [run_dir]
"""

import sys
from pathlib import Path

import numpy as np

from maskedit.data import load_manifest, split_dataset
from maskedit.evaluation import (
    ParserBottleneckExtractor,
    PixelStatsExtractor,
    compute_fid,
    fit_stats,
    fid,
    format_metric_record,
    mean_mask_accuracy,
)
from maskedit.networks import load_gan_checkpoint, load_parser_checkpoint
from maskedit.pipeline import generate

run_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/toy_run")
ckpt = run_dir / "run" / "final.ckpt"
if not ckpt.exists():
    sys.exit(f"no checkpoint at {ckpt}; run demos/05_train_toy.py first")

_, _, gen, _, _, _ = load_gan_checkpoint(ckpt)
_, _, indep_parser, _ = load_parser_checkpoint(run_dir / "indep_parser.ckpt")
ds = load_manifest(run_dir / "corpus" / "manifest.jsonl")
train_ds, _, test_ds = split_dataset(ds)
schema = ds.schema

print("== unit anchors ==")
rng = np.random.default_rng(0)
feats = rng.normal(size=(64, 8))
s = fit_stats(feats, "demo")
print(f"fid(a, a) = {fid(s, s):.2e} (identity -> 0)")

print("\n== generated vs real ==")
rng = np.random.default_rng(1)
gen_imgs, masks = [], []
for _ in range(24):
    i, j = rng.integers(len(test_ds)), rng.integers(len(test_ds))
    while j == i:
        j = rng.integers(len(test_ds))
    out = generate(gen, schema, test_ds[int(i)].image, test_ds[int(i)].mask,
                   test_ds[int(j)].image, test_ds[int(j)].mask)
    gen_imgs.append(out)
    masks.append(test_ds[int(j)].mask)
gen_arr = np.stack(gen_imgs)
real_arr = np.stack([s.image for s in train_ds.samples[:64]])

for extractor in (PixelStatsExtractor(), ParserBottleneckExtractor(indep_parser)):
    value = compute_fid(gen_arr, real_arr, extractor)
    print(format_metric_record("fid", extractor.name, (len(gen_arr), len(real_arr)), value))
print("(absolute values are extractor-specific; compare only within one extractor)")

acc = mean_mask_accuracy(gen_imgs, masks, indep_parser)
print(f"\nmask accuracy of generated images vs their target masks: {acc:.4f}")
