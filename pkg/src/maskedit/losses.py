"""Training objectives as pure differentiable functions.

All discriminator scores are logits; the sigmoid is folded into the losses
through logsigmoid so every term is numerically stable. Expectations are
batch means, patch score maps are averaged, and multi-scale terms sum over
scales. Every loss is >= 0 with 0 exactly at its documented minimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn.functional as F

from .errors import NumericError, ShapeError


@dataclass(frozen=True)
class LossWeights:
    """Trade-off weights; the four headline weights default to (10, 1, 1, 1)."""

    lambda_local: float = 10.0
    lambda_global: float = 1.0
    lambda_gd: float = 1.0
    lambda_gp: float = 1.0
    lambda_fm: float = 1.0

    def __post_init__(self):
        for name in ("lambda_local", "lambda_global", "lambda_gd", "lambda_gp", "lambda_fm"):
            v = getattr(self, name)
            if not (v >= 0.0 and v == v and v != float("inf")):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")


@dataclass
class LossReport:
    """Named raw terms, their effective weights, and the weighted total."""

    terms: dict[str, float] = field(default_factory=dict)
    weights: dict[str, float] = field(default_factory=dict)
    total: float = 0.0

    def as_record(self) -> dict:
        rec = {f"loss_{k}": v for k, v in self.terms.items()}
        rec["total"] = self.total
        return rec


def _check_same_shape(a: torch.Tensor, b: torch.Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{what}: shapes {tuple(a.shape)} vs {tuple(b.shape)} differ")


def local_reconstruction_loss(crop: torch.Tensor, recon: torch.Tensor, valid: torch.Tensor) -> torch.Tensor:
    """Half mean-squared error over valid (in-component) pixels.

    ``valid`` broadcasts over the channel axis; a crop with no valid pixels
    contributes exactly zero.
    """
    _check_same_shape(crop, recon, "local reconstruction")
    if valid.shape[-2:] != crop.shape[-2:]:
        raise ShapeError(f"valid mask {tuple(valid.shape)} does not match crop {tuple(crop.shape)}")
    v = valid.to(crop.dtype)
    if v.dim() == crop.dim() - 1:
        v = v.unsqueeze(-3)
    diff2 = (recon - crop) ** 2 * v
    denom = v.expand_as(diff2).sum()
    if denom.item() == 0:
        return torch.zeros((), dtype=crop.dtype, device=crop.device)
    return 0.5 * diff2.sum() / denom


def global_reconstruction_loss(generated: torch.Tensor, source: torch.Tensor) -> torch.Tensor:
    """Half mean-squared error over all pixels (paired mode only)."""
    _check_same_shape(generated, source, "global reconstruction")
    return 0.5 * F.mse_loss(generated, source)


def _check_finite(scores, what: str) -> None:
    for s in scores:
        if not torch.isfinite(s).all():
            raise NumericError(f"{what} scores are non-finite")


def discriminator_loss(real_scores: list[torch.Tensor], fake_scores: list[torch.Tensor]) -> torch.Tensor:
    """-E[log sigma(real)] - E[log(1 - sigma(fake))], summed over scales.

    The fake path must already be detached from the generator.
    """
    if len(real_scores) != len(fake_scores):
        raise ShapeError("real and fake score lists differ in scale count")
    _check_finite(real_scores, "real")
    _check_finite(fake_scores, "fake")
    total = None
    for r, f in zip(real_scores, fake_scores):
        term = -F.logsigmoid(r).mean() - F.logsigmoid(-f).mean()
        total = term if total is None else total + term
    return total


def generator_adversarial_loss(fake_scores: list[torch.Tensor]) -> torch.Tensor:
    """-E[log sigma(fake)], summed over scales."""
    _check_finite(fake_scores, "fake")
    total = None
    for f in fake_scores:
        term = -F.logsigmoid(f).mean()
        total = term if total is None else total + term
    return total


def feature_matching_loss(fake_feats: list[torch.Tensor], real_feats: list[torch.Tensor]) -> torch.Tensor:
    """Half mean-squared distance between discriminator features, summed
    over scales. Real features must come in detached."""
    if len(fake_feats) != len(real_feats):
        raise ShapeError("fake and real feature lists differ in scale count")
    total = None
    for ff, rf in zip(fake_feats, real_feats):
        _check_same_shape(ff, rf, "feature matching")
        term = 0.5 * F.mse_loss(ff, rf)
        total = term if total is None else total + term
    return total


def parsing_cross_entropy(logits: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean over pixels of -log softmax probability of the target label."""
    if logits.shape[-2:] != target.shape[-2:]:
        raise ShapeError(f"logits {tuple(logits.shape)} vs target {tuple(target.shape)} spatial mismatch")
    n_labels = logits.shape[-3]
    if int(target.min()) < 0 or int(target.max()) >= n_labels:
        raise ShapeError(f"target labels outside [0, {n_labels})")
    if logits.dim() == 3:
        logits = logits.unsqueeze(0)
        target = target.unsqueeze(0)
    return F.cross_entropy(logits, target)


def mask_alignment_loss(generated: torch.Tensor, target_mask: torch.Tensor, parser) -> torch.Tensor:
    """Cross entropy of a frozen parser's prediction on the generated image
    against the conditioning mask. Gradient flows into ``generated`` only;
    callers keep the parser's parameters out of the optimizer."""
    logits = parser(generated)
    return parsing_cross_entropy(logits, target_mask)


def total_generator_loss(
    terms: dict[str, torch.Tensor | float],
    weights: LossWeights,
    mode: str,
) -> tuple[torch.Tensor, LossReport]:
    """Combine raw loss terms into the single generator objective.

    ``terms`` may contain: local, global, adv, fm, parse (missing terms count
    as 0). Unpaired mode forces the global and feature-matching weights to
    zero. Returns the differentiable total plus a float report whose total
    equals the weighted sum of terms at accumulation precision.
    """
    if mode not in ("paired", "unpaired"):
        raise ValueError(f"mode must be 'paired' or 'unpaired', got {mode!r}")
    lam_global = weights.lambda_global
    lam_fm = weights.lambda_fm
    if mode == "unpaired":
        lam_global = 0.0
        lam_fm = 0.0
    eff = {
        "local": weights.lambda_local,
        "global": lam_global,
        "adv": weights.lambda_gd,
        "fm": weights.lambda_gd * lam_fm,
        "parse": weights.lambda_gp,
    }
    total = None
    report_terms = {}
    for name, w in eff.items():
        t = terms.get(name, 0.0)
        tv = float(t) if not torch.is_tensor(t) else float(t.detach())
        report_terms[name] = tv
        if w != 0.0 and torch.is_tensor(t):
            piece = w * t
            total = piece if total is None else total + piece
        elif w != 0.0 and tv != 0.0:
            piece = torch.tensor(w * tv)
            total = piece if total is None else total + piece
    if total is None:
        total = torch.zeros(())
    report = LossReport(
        terms=report_terms,
        weights=eff,
        total=sum(eff[k] * report_terms[k] for k in eff),
    )
    if not torch.isfinite(total):
        raise NumericError(f"generator loss is non-finite: {report.terms}")
    return total, report
