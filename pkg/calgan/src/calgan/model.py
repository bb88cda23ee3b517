"""U-Net generator and patch discriminator, 4x4 stride-2 convolutions
throughout.

The generator encodes with 8 stride-2 convs and decodes with 8 mirrored
transposed convs plus skip connections; a 256x256 input bottoms out at 1x1.
The discriminator is a 4-layer stride-2 stack whose last conv emits a
1-channel spatial map of per-patch real/fake probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

__all__ = [
    "GeneratorConfig",
    "DiscriminatorConfig",
    "UNetGenerator",
    "PatchDiscriminator",
]

KERNEL = 4
STRIDE = 2


@dataclass(frozen=True)
class GeneratorConfig:
    """Encoder/decoder shape; the 4th input channel is the region mask."""

    in_channels: int = 4
    out_channels: int = 3
    depth: int = 8
    base_width: int = 64
    resolution: int = 256

    def __post_init__(self) -> None:
        if self.in_channels != 4:
            raise ValueError("generator input is RGB + mask: exactly 4 channels")
        if self.depth != 8:
            raise ValueError("encoder depth is fixed at 8")
        if self.resolution % (2 ** self.depth) != 0:
            raise ValueError(
                f"resolution {self.resolution} is not divisible by 2^{self.depth}; "
                f"letterbox inputs to a multiple of {2 ** self.depth}"
            )
        if self.base_width < 1:
            raise ValueError("base_width must be positive")


@dataclass(frozen=True)
class DiscriminatorConfig:
    """Conditional patch discriminator over concat(x RGB, mask, y RGB)."""

    in_channels: int = 7
    depth: int = 4
    base_width: int = 64

    def __post_init__(self) -> None:
        if self.depth != 4:
            raise ValueError("discriminator depth is fixed at 4")
        if self.base_width < 1:
            raise ValueError("base_width must be positive")


def _encoder_widths(base: int, depth: int) -> list[int]:
    # 64,128,256,512,512,512,512,512 for base 64
    return [min(base * (2 ** i), base * 8) for i in range(depth)]


class UNetGenerator(nn.Module):
    """8-down/8-up U-Net with skip connections and a tanh output in [-1, 1].

    BatchNorm sits on every layer except the first encoder conv, the 1x1
    bottleneck, and the output conv; no dropout, so the mapping is
    deterministic (there is no noise input).
    """

    def __init__(self, cfg: GeneratorConfig = GeneratorConfig()):
        super().__init__()
        self.cfg = cfg
        widths = _encoder_widths(cfg.base_width, cfg.depth)

        self.encoders = nn.ModuleList()
        in_ch = cfg.in_channels
        for i, out_ch in enumerate(widths):
            block: list[nn.Module] = []
            if i > 0:
                block.append(nn.LeakyReLU(0.2, inplace=True))
            block.append(nn.Conv2d(in_ch, out_ch, KERNEL, STRIDE, padding=1))
            if 0 < i < cfg.depth - 1:
                block.append(nn.BatchNorm2d(out_ch))
            self.encoders.append(nn.Sequential(*block))
            in_ch = out_ch

        self.decoders = nn.ModuleList()
        for i in range(cfg.depth):
            mirror = widths[cfg.depth - 1 - i]
            out_ch = widths[cfg.depth - 2 - i] if i < cfg.depth - 1 else cfg.out_channels
            in_ch = mirror if i == 0 else mirror * 2  # skip concat doubles input
            block = [nn.ReLU(inplace=True),
                     nn.ConvTranspose2d(in_ch, out_ch, KERNEL, STRIDE, padding=1)]
            if i < cfg.depth - 1:
                block.append(nn.BatchNorm2d(out_ch))
            else:
                block.append(nn.Tanh())
            self.decoders.append(nn.Sequential(*block))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[1] != self.cfg.in_channels:
            raise ValueError(
                f"expected {self.cfg.in_channels}-channel input (RGB + mask), "
                f"got {x.shape[1]}"
            )
        if x.shape[2] % (2 ** self.cfg.depth) or x.shape[3] % (2 ** self.cfg.depth):
            raise ValueError(
                f"spatial dims {tuple(x.shape[2:])} must be divisible by "
                f"{2 ** self.cfg.depth}"
            )
        skips = []
        out = x
        for encoder in self.encoders:
            out = encoder(out)
            skips.append(out)
        for i, decoder in enumerate(self.decoders):
            if i == 0:
                out = decoder(skips[-1])
            else:
                out = decoder(torch.cat([out, skips[-1 - i]], dim=1))
        return out


class PatchDiscriminator(nn.Module):
    """Four 4x4 stride-2 convs; the last maps straight to the 1-channel
    patch probability map (sigmoid)."""

    def __init__(self, cfg: DiscriminatorConfig = DiscriminatorConfig()):
        super().__init__()
        self.cfg = cfg
        widths = [cfg.base_width * (2 ** i) for i in range(cfg.depth - 1)] + [1]
        layers: list[nn.Module] = []
        in_ch = cfg.in_channels
        for i, out_ch in enumerate(widths):
            layers.append(nn.Conv2d(in_ch, out_ch, KERNEL, STRIDE, padding=1))
            if i < cfg.depth - 1:
                layers.append(nn.LeakyReLU(0.2, inplace=True))
            in_ch = out_ch
        layers.append(nn.Sigmoid())
        self.net = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor, mask: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        if mask.shape[1] != 1:
            raise ValueError("mask must be a single channel")
        return self.net(torch.cat([x, mask, y], dim=1))


def conv_layers(module: nn.Module) -> list[nn.Module]:
    """All (transposed) convolution layers, for architecture assertions."""
    return [
        m for m in module.modules()
        if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d))
    ]
