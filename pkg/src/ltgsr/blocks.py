"""Residual and multi-scale feature processing (MSFP) blocks.

An MSFP block applies one residual block per scale, then exchanges
information across scales: every map is resized to every target scale
(bicubic upsampling for coarser sources, chains of stride-2 convolutions
for finer ones), concatenated, and merged back to the target's channel
count by a 3x3 convolution. Spatial dims and channel counts are preserved,
so blocks stack freely.
"""

from typing import Sequence

import torch
import torch.nn as nn
import torch.nn.functional as F


class ResidualBlock(nn.Module):
    """conv3x3 -> relu -> conv3x3 with identity skip, no normalization."""

    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x):
        return x + self.conv2(F.relu(self.conv1(x)))


def _upsample(x, factor: int):
    return F.interpolate(x, scale_factor=factor, mode="bicubic", align_corners=False)


class MSFPBlock(nn.Module):
    """Shape-preserving cross-scale fusion over a pyramid of feature maps.

    ``channels`` is ordered finest to coarsest; consecutive scales differ
    spatially by exactly 2x.
    """

    def __init__(self, channels: Sequence[int]):
        super().__init__()
        self.channels = tuple(channels)
        n = len(self.channels)
        self.residual = nn.ModuleList(ResidualBlock(c) for c in self.channels)
        self.down = nn.ModuleDict()
        for src in range(n):
            for dst in range(src + 1, n):
                steps = [nn.Conv2d(self.channels[src], self.channels[src], 3,
                                   stride=2, padding=1) for _ in range(dst - src)]
                self.down[f"{src}to{dst}"] = nn.Sequential(*steps)
        total = sum(self.channels)
        self.fuse = nn.ModuleList(nn.Conv2d(total, c, 3, padding=1) for c in self.channels)

    def forward(self, feats):
        if len(feats) != len(self.channels):
            raise ValueError(f"expected {len(self.channels)} maps, got {len(feats)}")
        mid = [block(f) for block, f in zip(self.residual, feats)]
        out = []
        for dst in range(len(mid)):
            parts = []
            for src in range(len(mid)):
                if src == dst:
                    parts.append(mid[src])
                elif src < dst:
                    parts.append(self.down[f"{src}to{dst}"](mid[src]))
                else:
                    parts.append(_upsample(mid[src], 2 ** (src - dst)))
            out.append(self.fuse[dst](torch.cat(parts, dim=1)))
        return tuple(out)


def conv_param_count(c_in: int, c_out: int, kernel: int) -> int:
    return c_in * c_out * kernel * kernel + c_out


def msfp_param_count(channels: Sequence[int]) -> int:
    """Closed-form trainable scalar count of one MSFPBlock."""
    channels = tuple(channels)
    n = len(channels)
    total = 0
    for c in channels:
        total += 2 * conv_param_count(c, c, 3)  # residual block
    for src in range(n):
        for dst in range(src + 1, n):
            total += (dst - src) * conv_param_count(channels[src], channels[src], 3)
    for c in channels:
        total += conv_param_count(sum(channels), c, 3)
    return total
