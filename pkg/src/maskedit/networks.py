"""Architectural contracts: five local auto-encoders, mask encoder,
foreground decoder, background encoder + fusion decoder, two patch
discriminators at different scales, and a U-Net face parser.

Encoders are strided-conv stacks, decoders use residual blocks with
nearest-neighbor upsampling, discriminators are patch-style with four
downsampling stages. All widths/depths live in NetSpec / ParserSpec and are
serialized into every checkpoint; loading validates shape compatibility.

Inputs and outputs are channel-first float tensors; images in [-1, 1].
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn
import torch.nn.functional as F

from .datamodel import COMPONENTS, ComponentId, crop_sizes
from .errors import CheckpointError, ShapeError

CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class NetSpec:
    """Widths, depths and shape contracts for the generator/discriminator stack."""

    resolution: int = 256
    n_labels: int = 11
    downsample_factor: int = 4
    base_channels: int = 32
    embed_channels: int = 64
    mask_feature_channels: int = 128
    background_channels: int = 64
    disc_base_channels: int = 32
    disc_layers: int = 4
    n_resblocks: int = 3
    normalization: str = "instance"
    nonlinearity: str = "relu"

    def __post_init__(self):
        f = self.downsample_factor
        if f < 1 or (f & (f - 1)) != 0:
            raise ValueError(f"downsample_factor must be a power of 2, got {f}")
        if self.resolution % f != 0:
            raise ValueError(f"downsample_factor {f} must divide resolution {self.resolution}")
        for name in ("base_channels", "embed_channels", "mask_feature_channels",
                     "background_channels", "disc_base_channels", "n_labels"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        # scale-2 discriminator sees resolution/2 and must keep >= 2 px after its stages
        if self.resolution // 2 // (2 ** self.disc_layers) < 2:
            raise ValueError(
                f"resolution {self.resolution} too small for {self.disc_layers} discriminator stages"
            )

    @property
    def n_down(self) -> int:
        return int(np.log2(self.downsample_factor))

    @property
    def fused_channels(self) -> int:
        return len(COMPONENTS) * self.embed_channels + self.mask_feature_channels

    @property
    def feature_size(self) -> tuple[int, int]:
        s = self.resolution // self.downsample_factor
        return (s, s)

    def crop_size(self, component: ComponentId) -> tuple[int, int]:
        return crop_sizes(self.resolution, self.downsample_factor)[component]


@dataclass(frozen=True)
class ParserSpec:
    """U-Net face parser contract (trained separately from the GAN)."""

    resolution: int = 256
    n_labels: int = 11
    base_channels: int = 32
    levels: int = 3

    def __post_init__(self):
        if self.resolution % (2 ** self.levels) != 0:
            raise ValueError(
                f"{self.levels} U-Net levels need resolution divisible by {2 ** self.levels}"
            )


def _norm(kind: str, ch: int) -> nn.Module:
    if kind == "instance":
        return nn.InstanceNorm2d(ch, affine=True)
    if kind == "batch":
        return nn.BatchNorm2d(ch)
    if kind == "none":
        return nn.Identity()
    raise ValueError(f"unknown normalization {kind!r}")


def _act(kind: str) -> nn.Module:
    if kind == "relu":
        return nn.ReLU(inplace=True)
    if kind == "lrelu":
        return nn.LeakyReLU(0.2, inplace=True)
    raise ValueError(f"unknown nonlinearity {kind!r}")


def init_weights(module: nn.Module) -> None:
    """DCGAN-style init: conv weights ~ N(0, 0.02), norm gains ~ N(1, 0.02)."""
    for m in module.modules():
        if isinstance(m, nn.Conv2d):
            nn.init.normal_(m.weight, 0.0, 0.02)
            if m.bias is not None:
                nn.init.zeros_(m.bias)
        elif isinstance(m, (nn.InstanceNorm2d, nn.BatchNorm2d)) and m.weight is not None:
            nn.init.normal_(m.weight, 1.0, 0.02)
            nn.init.zeros_(m.bias)


class ResBlock(nn.Module):
    def __init__(self, ch: int, norm: str, act: str):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(ch, ch, 3, 1, 1), _norm(norm, ch), _act(act),
            nn.Conv2d(ch, ch, 3, 1, 1), _norm(norm, ch),
        )

    def forward(self, x):
        return x + self.body(x)


class ConvEncoder(nn.Module):
    """conv stem + n_down strided conv stages + linear projection head."""

    def __init__(self, in_ch: int, base: int, out_ch: int, n_down: int, norm: str, act: str):
        super().__init__()
        layers = [nn.Conv2d(in_ch, base, 3, 1, 1), _norm(norm, base), _act(act)]
        ch = base
        for _ in range(n_down):
            layers += [nn.Conv2d(ch, ch * 2, 3, 2, 1), _norm(norm, ch * 2), _act(act)]
            ch *= 2
        layers += [nn.Conv2d(ch, out_ch, 3, 1, 1)]
        self.net = nn.Sequential(*layers)
        init_weights(self)

    def forward(self, x):
        return self.net(x)


class ConvDecoder(nn.Module):
    """resblocks at depth, then n_up nearest-neighbor upsample+conv stages, tanh output."""

    def __init__(self, in_ch: int, width: int, out_ch: int, n_up: int, n_res: int, norm: str, act: str):
        super().__init__()
        layers = [nn.Conv2d(in_ch, width, 3, 1, 1), _norm(norm, width), _act(act)]
        layers += [ResBlock(width, norm, act) for _ in range(n_res)]
        ch = width
        for _ in range(n_up):
            nxt = max(ch // 2, 8)
            layers += [
                nn.Upsample(scale_factor=2, mode="nearest"),
                nn.Conv2d(ch, nxt, 3, 1, 1), _norm(norm, nxt), _act(act),
            ]
            ch = nxt
        layers += [nn.Conv2d(ch, out_ch, 3, 1, 1), nn.Tanh()]
        self.net = nn.Sequential(*layers)
        init_weights(self)

    def forward(self, x):
        return self.net(x)


class LocalAutoEncoder(nn.Module):
    """Embedding auto-encoder for one facial component."""

    def __init__(self, spec: NetSpec):
        super().__init__()
        self.encoder = ConvEncoder(3, spec.base_channels, spec.embed_channels,
                                   spec.n_down, spec.normalization, spec.nonlinearity)
        self.decoder = ConvDecoder(spec.embed_channels, spec.base_channels * spec.downsample_factor,
                                   3, spec.n_down, 1, spec.normalization, spec.nonlinearity)

    def encode(self, x):
        return self.encoder(x)

    def decode(self, f):
        return self.decoder(f)


class PatchDiscriminator(nn.Module):
    """Patch-level conditional discriminator; returns (score logits, last features)."""

    def __init__(self, in_ch: int, base: int, n_layers: int):
        super().__init__()
        blocks = [nn.Sequential(nn.Conv2d(in_ch, base, 4, 2, 1), nn.LeakyReLU(0.2, inplace=True))]
        ch = base
        for _ in range(n_layers - 1):
            nxt = min(ch * 2, base * 8)
            blocks.append(nn.Sequential(
                nn.Conv2d(ch, nxt, 4, 2, 1),
                nn.InstanceNorm2d(nxt, affine=True),
                nn.LeakyReLU(0.2, inplace=True),
            ))
            ch = nxt
        self.blocks = nn.ModuleList(blocks)
        self.head = nn.Conv2d(ch, 1, 4, 1, 1)
        init_weights(self)

    def forward(self, x):
        for b in self.blocks:
            x = b(x)
        return self.head(x), x


class MultiScaleDiscriminator(nn.Module):
    """Two identically built patch discriminators; scale 2 sees 2x avg-pooled input."""

    def __init__(self, spec: NetSpec):
        super().__init__()
        in_ch = 3 + spec.n_labels
        self.scales = nn.ModuleList(
            [PatchDiscriminator(in_ch, spec.disc_base_channels, spec.disc_layers) for _ in range(2)]
        )
        self.n_labels = spec.n_labels

    def forward(self, img: torch.Tensor, onehot: torch.Tensor) -> list[tuple[torch.Tensor, torch.Tensor]]:
        if img.shape[-2:] != onehot.shape[-2:]:
            raise ShapeError(f"image {tuple(img.shape)} vs mask {tuple(onehot.shape)} spatial mismatch")
        if onehot.shape[1] != self.n_labels:
            raise ShapeError(f"conditioning mask has {onehot.shape[1]} channels, expected {self.n_labels}")
        x = torch.cat([img, onehot], dim=1)
        outs = []
        for i, d in enumerate(self.scales):
            xi = F.avg_pool2d(x, 2) if i == 1 else x
            outs.append(d(xi))
        return outs

    def discriminate(self, scale: int, img: torch.Tensor, onehot: torch.Tensor):
        if scale not in (1, 2):
            raise ValueError(f"scale must be 1 or 2, got {scale}")
        return self.forward(img, onehot)[scale - 1]


class GeneratorNets(nn.Module):
    """All learnable generator-side sub-networks, one attribute per role."""

    def __init__(self, spec: NetSpec):
        super().__init__()
        self.spec = spec
        self.locals = nn.ModuleDict({c.name: LocalAutoEncoder(spec) for c in COMPONENTS})
        self.mask_encoder = ConvEncoder(spec.n_labels, spec.base_channels, spec.mask_feature_channels,
                                        spec.n_down, spec.normalization, spec.nonlinearity)
        self.foreground_decoder = ConvDecoder(
            spec.fused_channels, spec.base_channels * spec.downsample_factor, 3,
            spec.n_down, spec.n_resblocks, spec.normalization, spec.nonlinearity)
        self.background_encoder = ConvEncoder(3, spec.base_channels, spec.background_channels,
                                              spec.n_down, spec.normalization, spec.nonlinearity)
        # fusion: re-encode the foreground image, join the background feature
        # at feature resolution, decode back to the working resolution
        self.fusion_encoder = ConvEncoder(3, spec.base_channels,
                                          spec.base_channels * spec.downsample_factor,
                                          spec.n_down, spec.normalization, spec.nonlinearity)
        self.fusion_decoder = ConvDecoder(
            spec.base_channels * spec.downsample_factor + spec.background_channels,
            spec.base_channels * spec.downsample_factor, 3,
            spec.n_down, 2, spec.normalization, spec.nonlinearity)

    # -- per-role ops with shape validation ---------------------------------

    def local_encode(self, component: ComponentId, crop: torch.Tensor) -> torch.Tensor:
        expected = self.spec.crop_size(component)
        if tuple(crop.shape[-2:]) != expected:
            raise ShapeError(
                f"{component.name} crop is {tuple(crop.shape[-2:])}, expected {expected}")
        return self.locals[component.name].encode(crop)

    def local_decode(self, component: ComponentId, feature: torch.Tensor) -> torch.Tensor:
        return self.locals[component.name].decode(feature)

    def mask_encode(self, onehot: torch.Tensor) -> torch.Tensor:
        if onehot.shape[1] != self.spec.n_labels:
            raise ShapeError(f"one-hot mask has {onehot.shape[1]} channels, expected {self.spec.n_labels}")
        return self.mask_encoder(onehot)

    def foreground_decode(self, fused: torch.Tensor) -> torch.Tensor:
        if fused.shape[1] != self.spec.fused_channels:
            raise ShapeError(
                f"fused tensor has {fused.shape[1]} channels, expected {self.spec.fused_channels}")
        return self.foreground_decoder(fused)

    def background_encode(self, bg: torch.Tensor) -> torch.Tensor:
        return self.background_encoder(bg)

    def fuse_decode(self, fg: torch.Tensor, bg_feature: torch.Tensor) -> torch.Tensor:
        if fg.shape[1] != 3:
            raise ShapeError(f"foreground image must have 3 channels, got {fg.shape[1]}")
        enc = self.fusion_encoder(fg)
        if enc.shape[-2:] != bg_feature.shape[-2:]:
            raise ShapeError(
                f"foreground features {tuple(enc.shape[-2:])} vs background features "
                f"{tuple(bg_feature.shape[-2:])} spatial mismatch")
        return self.fusion_decoder(torch.cat([enc, bg_feature], dim=1))


class DoubleConv(nn.Module):
    def __init__(self, in_ch: int, out_ch: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(in_ch, out_ch, 3, 1, 1), nn.InstanceNorm2d(out_ch, affine=True), nn.ReLU(inplace=True),
            nn.Conv2d(out_ch, out_ch, 3, 1, 1), nn.InstanceNorm2d(out_ch, affine=True), nn.ReLU(inplace=True),
        )

    def forward(self, x):
        return self.net(x)


class ParserNet(nn.Module):
    """U-Net with skip connections; per-pixel logits over the label set."""

    def __init__(self, spec: ParserSpec):
        super().__init__()
        self.spec = spec
        b = spec.base_channels
        chans = [b * (2 ** i) for i in range(spec.levels + 1)]
        self.inc = DoubleConv(3, chans[0])
        self.downs = nn.ModuleList(
            [DoubleConv(chans[i], chans[i + 1]) for i in range(spec.levels)]
        )
        self.ups = nn.ModuleList(
            [nn.Conv2d(chans[i + 1], chans[i], 3, 1, 1) for i in reversed(range(spec.levels))]
        )
        self.up_blocks = nn.ModuleList(
            [DoubleConv(chans[i] * 2, chans[i]) for i in reversed(range(spec.levels))]
        )
        self.head = nn.Conv2d(chans[0], spec.n_labels, 1)
        init_weights(self)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-1] % (2 ** self.spec.levels) or x.shape[-2] % (2 ** self.spec.levels):
            raise ShapeError(
                f"parser input {tuple(x.shape[-2:])} not divisible by {2 ** self.spec.levels}")
        skips = []
        h = self.inc(x)
        for down in self.downs:
            skips.append(h)
            h = down(F.max_pool2d(h, 2))
        for up, block, skip in zip(self.ups, self.up_blocks, reversed(skips)):
            h = up(F.interpolate(h, scale_factor=2, mode="nearest"))
            h = block(torch.cat([h, skip], dim=1))
        return self.head(h)

    def bottleneck(self, x: torch.Tensor) -> torch.Tensor:
        """Deepest feature map, used as a pluggable embedding for metrics."""
        h = self.inc(x)
        for down in self.downs:
            h = down(F.max_pool2d(h, 2))
        return h


def parse_logits(parser: ParserNet, img: torch.Tensor) -> torch.Tensor:
    """(B, 3, H, W) image -> (B, C, H, W) label logits."""
    return parser(img)


# ---------------------------------------------------------------------------
# checkpoints


def _validate_state(module: nn.Module, state: dict, name: str) -> None:
    own = module.state_dict()
    if set(own) != set(state):
        missing = set(own) - set(state)
        extra = set(state) - set(own)
        raise CheckpointError(f"{name}: parameter names mismatch (missing={sorted(missing)[:3]}, extra={sorted(extra)[:3]})")
    for k, v in state.items():
        if tuple(own[k].shape) != tuple(v.shape):
            raise CheckpointError(f"{name}.{k}: shape {tuple(v.shape)} incompatible with spec {tuple(own[k].shape)}")


def save_gan_checkpoint(
    path: str | Path,
    spec: NetSpec,
    schema_name: str,
    gen: GeneratorNets,
    disc: MultiScaleDiscriminator,
    step: int = 0,
    extra: dict | None = None,
) -> None:
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "kind": "gan",
        "netspec": asdict(spec),
        "schema": schema_name,
        "step": step,
        "nets": {"generator": gen.state_dict(), "discriminator": disc.state_dict()},
        "extra": extra or {},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(payload, tmp)
    tmp.replace(path)


def load_gan_checkpoint(path: str | Path) -> tuple[NetSpec, str, GeneratorNets, MultiScaleDiscriminator, int, dict]:
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if not isinstance(payload, dict) or payload.get("kind") != "gan":
        raise CheckpointError(f"{path} is not a generator checkpoint")
    if payload.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {payload.get('format_version')!r}")
    spec = NetSpec(**payload["netspec"])
    gen = GeneratorNets(spec)
    disc = MultiScaleDiscriminator(spec)
    _validate_state(gen, payload["nets"]["generator"], "generator")
    _validate_state(disc, payload["nets"]["discriminator"], "discriminator")
    gen.load_state_dict(payload["nets"]["generator"])
    disc.load_state_dict(payload["nets"]["discriminator"])
    return spec, payload["schema"], gen, disc, payload["step"], payload.get("extra", {})


def save_parser_checkpoint(path: str | Path, spec: ParserSpec, schema_name: str, parser: ParserNet, extra: dict | None = None) -> None:
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "kind": "parser",
        "parserspec": asdict(spec),
        "schema": schema_name,
        "net": parser.state_dict(),
        "extra": extra or {},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(payload, tmp)
    tmp.replace(path)


def load_parser_checkpoint(path: str | Path) -> tuple[ParserSpec, str, ParserNet, dict]:
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if not isinstance(payload, dict) or payload.get("kind") != "parser":
        raise CheckpointError(f"{path} is not a parser checkpoint")
    if payload.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {payload.get('format_version')!r}")
    spec = ParserSpec(**payload["parserspec"])
    parser = ParserNet(spec)
    _validate_state(parser, payload["net"], "parser")
    parser.load_state_dict(payload["net"])
    return spec, payload["schema"], parser, payload.get("extra", {})
