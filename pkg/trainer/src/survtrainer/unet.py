"""Width-scalable U-Net: 4 pooling stages down, 4 transpose-conv stages up,
skip connections, sigmoid head. ``width_mult`` shrinks every stage for
desk-scale runs (1.0 gives the classic 64..1024 channel ladder)."""

from __future__ import annotations

import torch
from torch import nn

BASE_WIDTHS = (64, 128, 256, 512, 1024)


def stage_widths(width_mult: float) -> list[int]:
    return [max(2, int(round(w * width_mult))) for w in BASE_WIDTHS]


class DoubleConv(nn.Module):
    def __init__(self, in_ch: int, out_ch: int):
        super().__init__()
        self.block = nn.Sequential(
            nn.Conv2d(in_ch, out_ch, 3, padding=1),
            nn.BatchNorm2d(out_ch),
            nn.ReLU(inplace=True),
            nn.Conv2d(out_ch, out_ch, 3, padding=1),
            nn.BatchNorm2d(out_ch),
            nn.ReLU(inplace=True),
        )

    def forward(self, x):
        return self.block(x)


class UNet(nn.Module):
    def __init__(self, in_channels: int = 6, width_mult: float = 1.0):
        super().__init__()
        widths = stage_widths(width_mult)
        self.in_channels = in_channels
        self.width_mult = width_mult

        self.inc = DoubleConv(in_channels, widths[0])
        self.downs = nn.ModuleList([
            nn.Sequential(nn.MaxPool2d(2), DoubleConv(widths[i], widths[i + 1]))
            for i in range(4)
        ])
        self.ups = nn.ModuleList([
            nn.ConvTranspose2d(widths[i + 1], widths[i], 2, stride=2)
            for i in reversed(range(4))
        ])
        self.up_convs = nn.ModuleList([
            DoubleConv(widths[i] * 2, widths[i]) for i in reversed(range(4))
        ])
        self.head = nn.Conv2d(widths[0], 1, 1)
        self.apply(_init_he)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-1] % 16 or x.shape[-2] % 16:
            raise ValueError(f"input sides must be divisible by 16, got {tuple(x.shape[-2:])}")
        skips = [self.inc(x)]
        for down in self.downs:
            skips.append(down(skips[-1]))
        out = skips.pop()
        for up, conv in zip(self.ups, self.up_convs):
            out = up(out)
            out = conv(torch.cat([skips.pop(), out], dim=1))
        return torch.sigmoid(self.head(out))


def _init_he(module: nn.Module) -> None:
    if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d)):
        nn.init.kaiming_normal_(module.weight, nonlinearity="relu")
        if module.bias is not None:
            nn.init.zeros_(module.bias)


def parameter_counts(model: nn.Module) -> tuple[int, int]:
    """(total, trainable); buffers such as batch-norm running stats count as
    non-trainable."""
    trainable = sum(p.numel() for p in model.parameters() if p.requires_grad)
    frozen = sum(p.numel() for p in model.parameters() if not p.requires_grad)
    buffers = sum(b.numel() for b in model.buffers())
    total = trainable + frozen + buffers
    return total, trainable
