"""Three-scale convolutional feature encoder.

Stage 1 keeps full resolution at C1 channels; stages 2 and 3 each max-pool
2x before their convolutions (C2 at H/2, C3 at H/4). Two further pooled
stages extend the stack to a single deep map at H/16 used only by the
perceptual objective. Weights are seeded random by default; a checkpoint
with an "encoder." parameter group can be loaded instead.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import torch
import torch.nn as nn


@dataclass
class EncoderConfig:
    channels: Tuple[int, int, int] = (64, 128, 256)
    pretrained_weights_path: Optional[str] = None
    trainable: bool = True

    def __post_init__(self):
        if any(c < 1 for c in self.channels):
            raise ValueError(f"channel counts must be >= 1, got {self.channels}")


class FeaturePyramid(NamedTuple):
    f1: torch.Tensor  # (B, C1, H, W)
    f2: torch.Tensor  # (B, C2, H/2, W/2)
    f3: torch.Tensor  # (B, C3, H/4, W/4)


def _check_divisible(x, factor):
    if x.shape[-2] % factor or x.shape[-1] % factor:
        raise ValueError(
            f"spatial dims {tuple(x.shape[-2:])} must be divisible by {factor}"
        )


class Encoder(nn.Module):
    def __init__(self, cfg: EncoderConfig = EncoderConfig()):
        super().__init__()
        c1, c2, c3 = cfg.channels
        deep = 2 * c3
        self.cfg = cfg
        self.stage1 = nn.Sequential(
            nn.Conv2d(1, c1, 3, padding=1), nn.ReLU(),
            nn.Conv2d(c1, c1, 3, padding=1), nn.ReLU(),
        )
        self.stage2 = nn.Sequential(
            nn.MaxPool2d(2),
            nn.Conv2d(c1, c2, 3, padding=1), nn.ReLU(),
            nn.Conv2d(c2, c2, 3, padding=1), nn.ReLU(),
        )
        self.stage3 = nn.Sequential(
            nn.MaxPool2d(2),
            nn.Conv2d(c2, c3, 3, padding=1), nn.ReLU(),
            nn.Conv2d(c3, c3, 3, padding=1), nn.ReLU(),
        )
        self.stage4 = nn.Sequential(
            nn.MaxPool2d(2), nn.Conv2d(c3, deep, 3, padding=1), nn.ReLU()
        )
        self.stage5 = nn.Sequential(
            nn.MaxPool2d(2), nn.Conv2d(deep, deep, 3, padding=1), nn.ReLU()
        )
        if not cfg.trainable:
            self.requires_grad_(False)
        if cfg.pretrained_weights_path is not None:
            from .checkpoint import load_params_into

            load_params_into(cfg.pretrained_weights_path, self, prefix="encoder.")

    def forward(self, x: torch.Tensor) -> FeaturePyramid:
        """(B, 1, H, W) image batch -> feature pyramid; H, W divisible by 4."""
        _check_divisible(x, 4)
        f1 = self.stage1(x)
        f2 = self.stage2(f1)
        f3 = self.stage3(f2)
        return FeaturePyramid(f1, f2, f3)

    def deep_feature(self, x: torch.Tensor) -> torch.Tensor:
        """Deep map at H/16 x W/16 for the perceptual objective; dims % 16 == 0."""
        _check_divisible(x, 16)
        pyr = self.forward(x)
        return self.stage5(self.stage4(pyr.f3))
