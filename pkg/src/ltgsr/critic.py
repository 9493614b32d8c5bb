"""Wasserstein critic: strided conv stack with a dense scalar head.

Five stride-2 3x3 convolutions (leaky rectifier, slope 0.2) followed by
global average pooling and a linear layer, so any input of at least 32 px
produces one score per batch element.
"""

from typing import Sequence

import torch.nn as nn


class Critic(nn.Module):
    def __init__(self, channels: Sequence[int] = (32, 64, 128, 256, 512), in_channels: int = 1):
        super().__init__()
        layers = []
        prev = in_channels
        for c in channels:
            layers += [nn.Conv2d(prev, c, 3, stride=2, padding=1), nn.LeakyReLU(0.2)]
            prev = c
        self.features = nn.Sequential(*layers)
        self.head = nn.Linear(prev, 1)

    def forward(self, x):
        """(B, 1, H, W) image batch -> (B,) scores."""
        h = self.features(x)
        return self.head(h.mean(dim=(2, 3))).squeeze(1)
