"""Two-phase training orchestration.

Phase 1 pretrains the U-Net face parser with pixel-wise cross entropy.
Phase 2 runs adversarial training with a strict paired/unpaired (1+1)
alternation: even steps reconstruct (source == target, all losses), odd
steps transfer (source != target, global reconstruction and feature
matching weights forced to zero). The parser stays frozen throughout
phase 2. Checkpoints carry optimizer and RNG state so a resumed run
continues bit-identically.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from .data import FaceDataset, FaceSample
from .datamodel import COMPONENTS, LabelSchema
from .errors import CheckpointError, NumericError
from .losses import (
    LossReport,
    LossWeights,
    discriminator_loss,
    feature_matching_loss,
    generator_adversarial_loss,
    global_reconstruction_loss,
    local_reconstruction_loss,
    mask_alignment_loss,
    parsing_cross_entropy,
    total_generator_loss,
)
from .networks import (
    GeneratorNets,
    MultiScaleDiscriminator,
    NetSpec,
    ParserNet,
    ParserSpec,
    load_gan_checkpoint,
    save_gan_checkpoint,
    save_parser_checkpoint,
)
from .pipeline import build_generator_batch, generator_forward
from .preprocess import warp_affine

CONFIG_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Full experiment definition; serializes to versioned JSON."""

    resolution: int = 64
    seed: int = 0
    batch_size: int = 4
    lr_g: float = 2e-4
    lr_d: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    gan_steps: int = 2000
    checkpoint_every: int = 500
    grad_accum: int = 1
    lr_decay: bool = False
    pair_filter_key: str | None = None
    parser_steps: int = 500
    parser_batch_size: int = 16
    parser_lr: float = 2e-3
    parser_augment: bool = False
    weights: LossWeights = field(default_factory=LossWeights)
    netspec: NetSpec = field(default_factory=lambda: NetSpec(resolution=64, n_labels=6))
    parserspec: ParserSpec = field(default_factory=lambda: ParserSpec(resolution=64, n_labels=6))

    def __post_init__(self):
        for name in ("resolution", "batch_size", "gan_steps", "checkpoint_every",
                     "grad_accum", "parser_steps", "parser_batch_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.netspec.resolution != self.resolution or self.parserspec.resolution != self.resolution:
            raise ValueError("netspec/parserspec resolution must match the working resolution")

    def to_json(self) -> str:
        doc = asdict(self)
        doc["format_version"] = CONFIG_FORMAT_VERSION
        return json.dumps(doc, indent=2)

    @staticmethod
    def from_json(text: str) -> "TrainConfig":
        doc = json.loads(text)
        if doc.pop("format_version", None) != CONFIG_FORMAT_VERSION:
            raise ValueError("unsupported train config version")
        doc["weights"] = LossWeights(**doc["weights"])
        doc["netspec"] = NetSpec(**doc["netspec"])
        doc["parserspec"] = ParserSpec(**doc["parserspec"])
        return TrainConfig(**doc)


def step_mode(step: int) -> str:
    """Strict P, U, P, U alternation keyed on the global step index."""
    return "paired" if step % 2 == 0 else "unpaired"


# ---------------------------------------------------------------------------
# parser pretraining


def _images_tensor(samples: list[FaceSample]) -> torch.Tensor:
    return torch.stack(
        [torch.from_numpy(s.image.transpose(2, 0, 1).copy()).float() for s in samples]
    )


def _masks_tensor(samples: list[FaceSample]) -> torch.Tensor:
    return torch.stack([torch.from_numpy(s.mask.astype(np.int64)) for s in samples])


def augment_pair(
    image: np.ndarray, mask: np.ndarray, rng: np.random.Generator, schema: LabelSchema
) -> tuple[np.ndarray, np.ndarray]:
    """Standard parser-training augmentation: flip, shift, scale, rotation.

    A horizontal flip relabels side-specific labels through the schema's
    flip permutation so left/right components stay semantically correct.
    """
    h, w = mask.shape
    if rng.random() < 0.5:
        image = image[:, ::-1].copy()
        mask = schema.flip_permutation()[mask[:, ::-1]].copy()
    angle = rng.uniform(-15, 15) * np.pi / 180.0
    scale = rng.uniform(0.9, 1.1)
    tx = rng.uniform(-0.05, 0.05) * w
    ty = rng.uniform(-0.05, 0.05) * h
    c, s = np.cos(angle) * scale, np.sin(angle) * scale
    cx, cy = w / 2.0, h / 2.0
    # rotate+scale about the center, then translate
    tf = np.array(
        [
            [c, -s, cx - c * cx + s * cy + tx],
            [s, c, cy - s * cx - c * cy + ty],
        ]
    )
    out_img = warp_affine(image, tf, (h, w), order=1)
    out_mask = warp_affine(mask, tf, (h, w), order=0)
    return out_img.astype(np.float32), out_mask


def pixel_accuracy(parser: ParserNet, ds: FaceDataset, batch_size: int = 16) -> float:
    """Fraction of pixels where argmax parse equals the ground-truth label."""
    parser.eval()
    correct = 0
    total = 0
    with torch.no_grad():
        for i in range(0, len(ds), batch_size):
            chunk = ds.samples[i : i + batch_size]
            logits = parser(_images_tensor(chunk))
            pred = logits.argmax(dim=1)
            target = _masks_tensor(chunk)
            correct += int((pred == target).sum())
            total += target.numel()
    return correct / max(total, 1)


def pretrain_parser(
    config: TrainConfig,
    train_ds: FaceDataset,
    val_ds: FaceDataset,
    out_path: str | Path | None = None,
    augment: bool | None = None,
) -> tuple[ParserNet, dict]:
    """Minimize pixel-wise cross entropy; returns the net and a history with
    per-eval validation accuracy. Deterministic given config.seed."""
    if len(train_ds) == 0:
        raise ValueError("empty training dataset")
    if augment is None:
        augment = config.parser_augment
    torch.manual_seed(config.seed)
    parser = ParserNet(config.parserspec)
    opt = torch.optim.Adam(parser.parameters(), lr=config.parser_lr,
                           betas=(config.beta1, config.beta2))
    rng = np.random.default_rng(config.seed)
    schema = train_ds.schema
    history = {"val_accuracy": [], "steps": []}
    eval_every = max(1, config.parser_steps // 5)
    parser.train()
    for step in range(config.parser_steps):
        idx = rng.integers(0, len(train_ds), size=config.parser_batch_size)
        pairs = [(train_ds[int(i)].image, train_ds[int(i)].mask) for i in idx]
        if augment:
            pairs = [augment_pair(img, m, rng, schema) for img, m in pairs]
        images = torch.stack([torch.from_numpy(im.transpose(2, 0, 1).copy()).float() for im, _ in pairs])
        masks = torch.stack([torch.from_numpy(m.astype(np.int64)) for _, m in pairs])
        logits = parser(images)
        loss = parsing_cross_entropy(logits, masks)
        if not torch.isfinite(loss):
            raise NumericError(f"parser loss non-finite at step {step}")
        opt.zero_grad()
        loss.backward()
        opt.step()
        if (step + 1) % eval_every == 0 or step + 1 == config.parser_steps:
            acc = pixel_accuracy(parser, val_ds)
            history["val_accuracy"].append(acc)
            history["steps"].append(step + 1)
            parser.train()
    parser.eval()
    history["final_val_accuracy"] = history["val_accuracy"][-1] if history["val_accuracy"] else float("nan")
    if out_path is not None:
        save_parser_checkpoint(out_path, config.parserspec, train_ds.schema.name, parser,
                               extra={"val_accuracy": history["final_val_accuracy"]})
    return parser, history


# ---------------------------------------------------------------------------
# adversarial training


def freeze(module: torch.nn.Module) -> torch.nn.Module:
    for p in module.parameters():
        p.requires_grad_(False)
    return module.eval()


class GanTrainer:
    """Single-writer training loop over the generator and discriminators.

    The parser passed in is frozen (never optimized, never in train mode);
    its parameters are bit-identical before and after any number of steps.
    """

    def __init__(
        self,
        config: TrainConfig,
        dataset: FaceDataset,
        parser: ParserNet,
        out_dir: str | Path,
    ):
        if len(dataset) < 2:
            raise ValueError("need at least two samples for unpaired steps")
        self.config = config
        self.dataset = dataset
        self.schema = dataset.schema
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.parser = freeze(parser)
        torch.manual_seed(config.seed)
        self.gen = GeneratorNets(config.netspec)
        self.disc = MultiScaleDiscriminator(config.netspec)
        self.opt_g = torch.optim.Adam(self.gen.parameters(), lr=config.lr_g,
                                      betas=(config.beta1, config.beta2))
        self.opt_d = torch.optim.Adam(self.disc.parameters(), lr=config.lr_d,
                                      betas=(config.beta1, config.beta2))
        self.rng = np.random.default_rng(config.seed + 1)
        self.step = 0
        self.metrics_path = self.out_dir / "metrics.jsonl"
        (self.out_dir / "config.json").write_text(config.to_json())

    # -- batch sampling ------------------------------------------------------

    def _sample_indices(self, mode: str) -> tuple[np.ndarray, np.ndarray]:
        n = len(self.dataset)
        src = self.rng.integers(0, n, size=self.config.batch_size)
        if mode == "paired":
            return src, src.copy()
        tgt = self.rng.integers(0, n, size=self.config.batch_size)
        for i in range(len(tgt)):
            tries = 0
            while tgt[i] == src[i] or not self._pair_ok(int(src[i]), int(tgt[i])):
                tgt[i] = self.rng.integers(0, n)
                tries += 1
                if tries > 200:
                    raise ValueError("cannot sample a distinct compatible pair; filter too strict")
        return src, tgt

    def _pair_ok(self, i: int, j: int) -> bool:
        key = self.config.pair_filter_key
        if key is None:
            return True
        return self.dataset[i].meta.get(key) == self.dataset[j].meta.get(key)

    def _build_batch(self, src_idx: np.ndarray, tgt_idx: np.ndarray):
        sources = [self.dataset[int(i)] for i in src_idx]
        targets = [self.dataset[int(i)] for i in tgt_idx]
        return build_generator_batch(
            self.schema,
            self.config.netspec,
            component_sources={c: sources for c in COMPONENTS},
            target_images=[t.image for t in targets],
            target_masks=[t.mask for t in targets],
        )

    # -- single step ---------------------------------------------------------

    def train_step(self, mode: str, batches) -> tuple[LossReport, LossReport]:
        """One discriminator update then one generator update.

        ``batches`` is one GeneratorBatch or a list of them (gradient
        accumulation); each optimizer still steps exactly once.
        """
        if mode not in ("paired", "unpaired"):
            raise ValueError(f"bad mode {mode!r}")
        if not isinstance(batches, (list, tuple)):
            batches = [batches]
        cfg = self.config
        self.gen.train()
        self.disc.train()
        scale = 1.0 / len(batches)

        forwards = [generator_forward(self.gen, b) for b in batches]

        # discriminator update (fake path detached)
        self.opt_d.zero_grad(set_to_none=True)
        d_total = 0.0
        for batch, out in zip(batches, forwards):
            real_out = self.disc(batch.target_image, batch.onehot_target)
            fake_out_d = self.disc(out.image.detach(), batch.onehot_target)
            d_loss = discriminator_loss([s for s, _ in real_out], [s for s, _ in fake_out_d])
            if not torch.isfinite(d_loss):
                self._diagnostic_abort("discriminator", d_loss)
            (scale * d_loss).backward()
            d_total += scale * float(d_loss.detach())
        self.opt_d.step()
        d_report = LossReport(terms={"d": d_total}, weights={"d": 1.0}, total=d_total)

        # generator update
        self.opt_g.zero_grad(set_to_none=True)
        g_report = None
        for batch, out in zip(batches, forwards):
            fake = out.image
            onehot = batch.onehot_target
            terms: dict[str, torch.Tensor] = {}
            local_terms = [
                local_reconstruction_loss(batch.crops[c], out.recons[c], batch.valids[c])
                for c in COMPONENTS
                if bool(batch.valids[c].any())
            ]
            if local_terms:
                terms["local"] = sum(local_terms) / len(local_terms)
            fake_out_g = self.disc(fake, onehot)
            terms["adv"] = generator_adversarial_loss([s for s, _ in fake_out_g])
            if mode == "paired":
                terms["global"] = global_reconstruction_loss(fake, batch.target_image)
                with torch.no_grad():
                    real_feats = [f for _, f in self.disc(batch.target_image, onehot)]
                terms["fm"] = feature_matching_loss([f for _, f in fake_out_g], real_feats)
            if cfg.weights.lambda_gp > 0:
                terms["parse"] = mask_alignment_loss(fake, batch.target_mask, self.parser)
            g_loss, report = total_generator_loss(terms, cfg.weights, mode)
            if not torch.isfinite(g_loss):
                self._diagnostic_abort("generator", g_loss)
            (scale * g_loss).backward()
            if g_report is None:
                g_report = report
                g_report.terms = {k: scale * v for k, v in report.terms.items()}
                g_report.total = scale * report.total
            else:
                for k, v in report.terms.items():
                    g_report.terms[k] += scale * v
                g_report.total += scale * report.total
        self.opt_g.step()
        return d_report, g_report

    def _diagnostic_abort(self, which: str, loss: torch.Tensor):
        snap = self.out_dir / f"diagnostic_step{self.step}.ckpt"
        save_gan_checkpoint(snap, self.config.netspec, self.schema.name, self.gen, self.disc,
                            step=self.step, extra={"aborted_on": which})
        raise NumericError(f"{which} loss non-finite at step {self.step}; snapshot at {snap}")

    # -- loop / checkpointing --------------------------------------------------

    def _lr_factor(self) -> float:
        """Linear decay to 10% over the configured run; a pure function of
        the step index, so resumed runs continue identically."""
        if not self.config.lr_decay:
            return 1.0
        frac = min(self.step / max(self.config.gan_steps, 1), 1.0)
        return 1.0 - 0.9 * frac

    def _apply_lr(self) -> None:
        factor = self._lr_factor()
        for group in self.opt_g.param_groups:
            group["lr"] = self.config.lr_g * factor
        for group in self.opt_d.param_groups:
            group["lr"] = self.config.lr_d * factor

    def run(self, n_steps: int | None = None) -> Path:
        """Run to config.gan_steps (or ``n_steps`` more), checkpointing on
        cadence; returns the final checkpoint path."""
        target = self.step + n_steps if n_steps is not None else self.config.gan_steps
        with open(self.metrics_path, "a") as metrics:
            while self.step < target:
                self._apply_lr()
                mode = step_mode(self.step)
                batches = []
                for _ in range(self.config.grad_accum):
                    src, tgt = self._sample_indices(mode)
                    batches.append(self._build_batch(src, tgt))
                d_report, g_report = self.train_step(mode, batches)
                rec = {
                    "step": self.step,
                    "mode": "P" if mode == "paired" else "U",
                    "d_total": d_report.total,
                }
                rec.update(g_report.as_record())
                metrics.write(json.dumps(rec) + "\n")
                self.step += 1
                if self.step % self.config.checkpoint_every == 0 and self.step < target:
                    self.save_checkpoint(self.out_dir / f"step_{self.step:06d}.ckpt")
        final = self.out_dir / "final.ckpt"
        self.save_checkpoint(final)
        return final

    def save_checkpoint(self, path: str | Path) -> None:
        extra = {
            "optim_g": self.opt_g.state_dict(),
            "optim_d": self.opt_d.state_dict(),
            "torch_rng": torch.get_rng_state(),
            "numpy_rng": self.rng.bit_generator.state,
            "config": self.config.to_json(),
        }
        save_gan_checkpoint(path, self.config.netspec, self.schema.name, self.gen, self.disc,
                            step=self.step, extra=extra)

    def resume(self, path: str | Path) -> None:
        """Restore parameters, optimizer moments and RNG state exactly."""
        spec, schema_name, gen, disc, step, extra = load_gan_checkpoint(path)
        if spec != self.config.netspec:
            raise CheckpointError("checkpoint netspec differs from the configured netspec")
        if schema_name != self.schema.name:
            raise CheckpointError(f"checkpoint schema {schema_name!r} vs dataset {self.schema.name!r}")
        if "optim_g" not in extra or "numpy_rng" not in extra:
            raise CheckpointError("checkpoint lacks optimizer/rng state; cannot resume")
        self.gen.load_state_dict(gen.state_dict())
        self.disc.load_state_dict(disc.state_dict())
        self.opt_g.load_state_dict(extra["optim_g"])
        self.opt_d.load_state_dict(extra["optim_d"])
        torch.set_rng_state(extra["torch_rng"])
        self.rng.bit_generator.state = extra["numpy_rng"]
        self.step = step


def read_metrics(path: str | Path) -> list[dict]:
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]
