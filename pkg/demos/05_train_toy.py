"""End-to-end toy training: parser pretraining, then adversarial training
with the strict paired/unpaired alternation. Writes checkpoints reusable by
demos 06 and 07.

Run:  python demos/05_train_toy.py [steps] [out_dir]
      (default 400 steps, a few minutes on CPU; raise for better quality)
"""

import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from maskedit.data import load_manifest, split_dataset
from maskedit.datamodel import save_image
from maskedit.networks import NetSpec, ParserSpec
from maskedit.pipeline import generate
from maskedit.toyfaces import write_toy_corpus
from maskedit.training import GanTrainer, TrainConfig, pretrain_parser, read_metrics
from maskedit.losses import LossWeights

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 400
out_dir = Path(sys.argv[2] if len(sys.argv) > 2 else "demo_out/toy_run")
out_dir.mkdir(parents=True, exist_ok=True)

manifest = write_toy_corpus(out_dir / "corpus", n=200, seed=7, resolution=64)
ds = load_manifest(manifest)
train_ds, val_ds, test_ds = split_dataset(ds)
print(f"corpus: {len(train_ds)} train / {len(val_ds)} val / {len(test_ds)} test")

config = TrainConfig(
    resolution=64,
    seed=0,
    batch_size=4,
    gan_steps=steps,
    parser_steps=400,
    lr_decay=True,
    lr_d=1e-4,
    weights=LossWeights(lambda_local=10, lambda_global=50, lambda_gd=1, lambda_gp=3, lambda_fm=1),
    netspec=NetSpec(resolution=64, n_labels=6, base_channels=16, embed_channels=32,
                    mask_feature_channels=64, background_channels=32,
                    disc_base_channels=16, disc_layers=3, n_resblocks=2),
    parserspec=ParserSpec(resolution=64, n_labels=6, base_channels=16, levels=3),
)

t0 = time.time()
parser, hist = pretrain_parser(config, train_ds, val_ds, out_path=out_dir / "parser.ckpt")
print(f"parser: validation pixel accuracy {hist['final_val_accuracy']:.4f} "
      f"({time.time() - t0:.0f}s)")

indep_cfg = replace(config, seed=99, parserspec=replace(config.parserspec, base_channels=20))
_, ihist = pretrain_parser(indep_cfg, train_ds, val_ds, out_path=out_dir / "indep_parser.ckpt")
print(f"independent parser: validation pixel accuracy {ihist['final_val_accuracy']:.4f}")

t0 = time.time()
trainer = GanTrainer(config, train_ds, parser, out_dir / "run")
final = trainer.run()
print(f"adversarial training: {steps} steps in {(time.time() - t0) / 60:.1f} min; "
      f"checkpoint at {final}")

mets = read_metrics(trainer.metrics_path)
glob = [m["loss_global"] for m in mets if m["mode"] == "P"]
k = max(1, len(glob) // 10)
print(f"paired reconstruction MSE: first-10% {np.mean(glob[:k]):.4f} -> "
      f"last-10% {np.mean(glob[-k:]):.4f}")

# sample outputs: reconstruct and transfer
schema = ds.schema
s, t = test_ds[0], test_ds[1]
recon = generate(trainer.gen, schema, s.image, s.mask, s.image, s.mask)
transfer = generate(trainer.gen, schema, s.image, s.mask, t.image, t.mask)
strip = np.concatenate([s.image, recon, t.image, transfer], axis=1)
save_image(strip, out_dir / "samples.png")
print(f"sample strip (source | recon | target | transfer) at {out_dir / 'samples.png'}")
