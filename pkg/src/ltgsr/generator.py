"""Learnable texture generator (LTG).

Consumes the LR feature pyramid and emits a generated texture pyramid with
the same shapes the searcher would return, so the decoder can run without
any reference image. Entry 1x1 convolutions per scale, m stacked MSFP
blocks, exit 1x1 convolutions per scale.
"""

from dataclasses import dataclass
from typing import Tuple

import torch.nn as nn

from .blocks import MSFPBlock, conv_param_count, msfp_param_count


@dataclass
class LTGConfig:
    m: int = 3
    channels: Tuple[int, int, int] = (64, 128, 256)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if any(c < 1 for c in self.channels):
            raise ValueError(f"channel counts must be >= 1, got {self.channels}")


class TextureGenerator(nn.Module):
    def __init__(self, cfg: LTGConfig = LTGConfig()):
        super().__init__()
        self.cfg = cfg
        self.entry = nn.ModuleList(nn.Conv2d(c, c, 1) for c in cfg.channels)
        self.blocks = nn.ModuleList(MSFPBlock(cfg.channels) for _ in range(cfg.m))
        self.exit = nn.ModuleList(nn.Conv2d(c, c, 1) for c in cfg.channels)

    def forward(self, pyramid):
        """LR feature pyramid (finest first) -> generated texture pyramid."""
        feats = tuple(conv(f) for conv, f in zip(self.entry, pyramid))
        for block in self.blocks:
            feats = block(feats)
        return tuple(conv(f) for conv, f in zip(self.exit, feats))


def count_params(cfg: LTGConfig) -> int:
    """Closed-form trainable scalar count of the LTG; affine in cfg.m."""
    per_scale_io = sum(2 * conv_param_count(c, c, 1) for c in cfg.channels)
    return per_scale_io + cfg.m * msfp_param_count(cfg.channels)
