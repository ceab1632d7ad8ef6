"""Command-line surface.

Exit codes: 0 success, 1 usage error, 2 data/validation error,
3 runtime/numeric error. All randomness funnels through explicit --seed
flags; commands write only under their declared output paths.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import data as data_mod
from . import evaluation as eval_mod
from .datamodel import get_schema, load_image, load_mask, save_image
from .errors import (
    AlignmentError,
    CheckpointError,
    MaskEditError,
    MissingSampleError,
    NumericError,
    SchemaError,
    ShapeError,
)
from .networks import load_gan_checkpoint, load_parser_checkpoint
from .pipeline import EditRequest, generate, generate_mixed, swap_request
from .toyfaces import write_toy_corpus
from .training import GanTrainer, TrainConfig, pretrain_parser


@click.group()
def cli():
    """Mask-guided portrait editing toolkit."""


@cli.command("make-toy-data")
@click.option("--n", type=int, required=True, help="Number of faces to generate.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--resolution", type=int, default=64, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def cmd_make_toy_data(n, seed, resolution, out_dir):
    """Emit a deterministic procedural cartoon-face corpus."""
    if n < 0:
        raise click.UsageError("--n must be >= 0")
    manifest = write_toy_corpus(out_dir, n, seed, resolution)
    click.echo(f"wrote {n} faces; manifest at {manifest}")


@cli.command("prep")
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--resolution", type=int, default=64, show_default=True)
def cmd_prep(manifest, out_dir, resolution):
    """Align a raw dataset to the canonical landmark template."""
    out = data_mod.prep_dataset(manifest, out_dir, resolution)
    click.echo(f"aligned manifest at {out}")


def _load_config(path: str | None, resolution: int, seed: int, n_labels: int) -> TrainConfig:
    if path is not None:
        return TrainConfig.from_json(Path(path).read_text())
    from .networks import NetSpec, ParserSpec

    return TrainConfig(
        resolution=resolution,
        seed=seed,
        netspec=NetSpec(resolution=resolution, n_labels=n_labels),
        parserspec=ParserSpec(resolution=resolution, n_labels=n_labels),
    )


@cli.command("pretrain-parser")
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--steps", type=int, default=None, help="Override parser step count.")
def cmd_pretrain_parser(manifest, out_path, config_path, seed, steps):
    """Train the face parser on labeled pairs; reports validation accuracy."""
    ds = data_mod.load_manifest(manifest)
    train_ds, val_ds, _ = data_mod.split_dataset(ds)
    config = _load_config(config_path, ds.resolution, seed, ds.schema.n_labels)
    if steps is not None:
        from dataclasses import replace

        config = replace(config, parser_steps=steps)
    _, history = pretrain_parser(config, train_ds, val_ds, out_path=out_path)
    click.echo(f"validation pixel accuracy: {history['final_val_accuracy']:.4f}")
    click.echo(f"checkpoint at {out_path}")


@cli.command("train")
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--parser-checkpoint", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--steps", type=int, default=None, help="Override GAN step count.")
@click.option("--resume", "resume_path", type=click.Path(exists=True), default=None)
def cmd_train(manifest, parser_checkpoint, out_dir, config_path, seed, steps, resume_path):
    """Adversarial training with the paired/unpaired alternation."""
    ds = data_mod.load_manifest(manifest)
    train_ds, _, _ = data_mod.split_dataset(ds)
    config = _load_config(config_path, ds.resolution, seed, ds.schema.n_labels)
    if steps is not None:
        from dataclasses import replace

        config = replace(config, gan_steps=steps)
    pspec, pschema, parser, _ = load_parser_checkpoint(parser_checkpoint)
    if pschema != ds.schema.name:
        raise SchemaError(f"parser schema {pschema!r} != dataset schema {ds.schema.name!r}")
    trainer = GanTrainer(config, train_ds, parser, out_dir)
    if resume_path is not None:
        trainer.resume(resume_path)
    final = trainer.run()
    click.echo(f"final checkpoint at {final}")


def _load_model(checkpoint):
    spec, schema_name, gen, disc, step, extra = load_gan_checkpoint(checkpoint)
    return spec, get_schema(schema_name), gen


def _fit_to_resolution(image, mask, resolution):
    """Resize an image/mask pair to the model's working resolution
    (bilinear for pixels, nearest for labels). No-op when already there."""
    import numpy as np

    from .preprocess import warp_affine

    if image.shape[:2] == (resolution, resolution) and mask.shape == (resolution, resolution):
        return image, mask
    h, w = mask.shape
    tf = np.array([[resolution / w, 0.0, 0.0], [0.0, resolution / h, 0.0]])
    out_img = warp_affine(image, tf, (resolution, resolution), order=1).astype("float32")
    out_mask = warp_affine(mask, tf, (resolution, resolution), order=0)
    return out_img, out_mask


@cli.command("generate")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--source-image", type=click.Path(exists=True), required=True)
@click.option("--source-mask", type=click.Path(exists=True), required=True)
@click.option("--target-image", type=click.Path(exists=True), required=True)
@click.option("--target-mask", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def cmd_generate(checkpoint, source_image, source_mask, target_image, target_mask, out_path):
    """Generate one face: appearance from source, geometry/background from target."""
    spec, schema, gen = _load_model(checkpoint)
    x_s = load_image(source_image)
    m_s = load_mask(source_mask, schema)
    x_t = load_image(target_image)
    m_t = load_mask(target_mask, schema)
    for arr, m, name in ((x_s, m_s, "source"), (x_t, m_t, "target")):
        if arr.shape[:2] != m.shape:
            raise ShapeError(f"{name} image {arr.shape[:2]} vs mask {m.shape}")
    x_s, m_s = _fit_to_resolution(x_s, m_s, spec.resolution)
    x_t, m_t = _fit_to_resolution(x_t, m_t, spec.resolution)
    out = generate(gen, schema, x_s, m_s, x_t, m_t)
    save_image(out, out_path)
    click.echo(f"wrote {out_path}")


@cli.command("edit")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--request", "request_path", type=click.Path(exists=True), required=True)
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--target-mask", "mask_path", type=click.Path(exists=True), default=None,
              help="Edited mask PNG overriding the request's target mask ref.")
@click.option("--out", "out_path", type=click.Path(), required=True)
def cmd_edit(checkpoint, request_path, manifest, mask_path, out_path):
    """Apply a declarative edit request (component transfer / mask edit)."""
    spec, schema, gen = _load_model(checkpoint)
    try:
        req = EditRequest.from_json(Path(request_path).read_text())
    except (ValueError, json.JSONDecodeError) as e:
        raise SchemaError(f"malformed edit request: {e}") from e
    ds = data_mod.load_manifest(manifest)
    override = load_mask(mask_path, schema) if mask_path else None
    out = generate_mixed(gen, schema, req, ds, target_mask=override)
    save_image(out, out_path)
    click.echo(f"wrote {out_path}")


@cli.command("swap")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--source-id", required=True, help="Sample supplying all five components.")
@click.option("--target-id", required=True, help="Sample supplying mask and background.")
@click.option("--out", "out_path", type=click.Path(), required=True)
def cmd_swap(checkpoint, manifest, source_id, target_id, out_path):
    """Face swap+: swap every component, hair included, onto the target."""
    spec, schema, gen = _load_model(checkpoint)
    ds = data_mod.load_manifest(manifest)
    out = generate_mixed(gen, schema, swap_request(source_id, target_id), ds)
    save_image(out, out_path)
    click.echo(f"wrote {out_path}")


@cli.command("eval-fid")
@click.option("--manifest-a", type=click.Path(exists=True), required=True)
@click.option("--manifest-b", type=click.Path(exists=True), required=True)
@click.option("--parser-checkpoint", type=click.Path(exists=True), default=None,
              help="Use this parser's bottleneck as the embedder (default: pixel stats).")
def cmd_eval_fid(manifest_a, manifest_b, parser_checkpoint):
    """Frechet distance between two datasets under a desk-scale embedder."""
    ds_a = data_mod.load_manifest(manifest_a)
    ds_b = data_mod.load_manifest(manifest_b)
    imgs_a = np.stack([s.image for s in ds_a.samples])
    imgs_b = np.stack([s.image for s in ds_b.samples])
    if parser_checkpoint:
        _, _, parser, _ = load_parser_checkpoint(parser_checkpoint)
        extractor = eval_mod.ParserBottleneckExtractor(parser)
    else:
        extractor = eval_mod.PixelStatsExtractor()
    value = eval_mod.compute_fid(imgs_a, imgs_b, extractor)
    click.echo(eval_mod.format_metric_record("fid", extractor.name, (len(ds_a), len(ds_b)), value))


@cli.command("eval-mask-acc")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--parser-checkpoint", type=click.Path(exists=True), required=True,
              help="Independent parser (trained separately from the loss parser).")
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--pairs", type=int, default=32, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def cmd_eval_mask_acc(checkpoint, parser_checkpoint, manifest, pairs, seed):
    """Per-pixel agreement of parsed generations with their target masks."""
    spec, schema, gen = _load_model(checkpoint)
    _, pschema, parser, _ = load_parser_checkpoint(parser_checkpoint)
    if pschema != schema.name:
        raise SchemaError(f"parser schema {pschema!r} != model schema {schema.name!r}")
    ds = data_mod.load_manifest(manifest)
    rng = np.random.default_rng(seed)
    images, masks = [], []
    for _ in range(pairs):
        i = int(rng.integers(len(ds)))
        j = int(rng.integers(len(ds)))
        while j == i:
            j = int(rng.integers(len(ds)))
        out = generate(gen, schema, ds[i].image, ds[i].mask, ds[j].image, ds[j].mask)
        images.append(out)
        masks.append(ds[j].mask)
    acc = eval_mod.mean_mask_accuracy(images, masks, parser)
    click.echo(eval_mod.format_metric_record("mask_accuracy", "independent-parser", (pairs, pairs), acc))


@cli.command("eval-augment")
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--synth-manifest", type=click.Path(exists=True), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
def cmd_eval_augment(manifest, synth_manifest, config_path, seed):
    """Train three parsers (plain / augmented / augmented+synthetic)."""
    ds = data_mod.load_manifest(manifest)
    synth = data_mod.load_manifest(synth_manifest)
    train_ds, _, test_ds = data_mod.split_dataset(ds)
    config = _load_config(config_path, ds.resolution, seed, ds.schema.n_labels)
    rows = eval_mod.augmentation_experiment(train_ds, synth, test_ds, config)
    for name, acc in rows.items():
        click.echo(f"{name}: {acc:.4f}")


@cli.command("serve")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--parser-checkpoint", type=click.Path(exists=True), required=True)
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--assets", "asset_dir", type=click.Path(), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8750, show_default=True)
def cmd_serve(checkpoint, parser_checkpoint, manifest, asset_dir, host, port):
    """Run the HTTP inference service backing the mask-editing UI."""
    import uvicorn

    from .service import create_app

    app = create_app(checkpoint, parser_checkpoint, asset_dir, manifest=manifest)
    uvicorn.run(app, host=host, port=port)


def main(argv: list[str] | None = None) -> int:
    """Entry point mapping exceptions onto the documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as e:
        click.echo(f"usage error: {e.format_message()}", err=True)
        return 1
    except click.exceptions.Exit as e:
        return 0 if e.exit_code == 0 else 1
    except click.Abort:
        return 1
    except (SchemaError, ShapeError, AlignmentError, MissingSampleError, CheckpointError, IOError) as e:
        click.echo(f"data error: {e}", err=True)
        return 2
    except (NumericError, MaskEditError) as e:
        click.echo(f"runtime error: {e}", err=True)
        return 3
    except Exception as e:  # anything unexpected is a runtime failure
        click.echo(f"runtime error: {type(e).__name__}: {e}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
