"""Progressive coarse-to-fine fusion decoder.

At each scale the texture map is gated by its relevance map, merged with
the LR features (concat + conv, with a residual connection back to the LR
features), combined with the bicubic-upscaled decoder feature from the
coarser scale, refined by residual blocks, and cross-fused with the
already-computed coarser decoder features through an MSFP block. The
coarsest scale skips the last two steps (nothing coarser exists yet). The
refined features of all scales are brought to full resolution and a final
convolution produces the output image; by default it is a residual added
onto the input image, and clamping to [0, 1] happens only at inference.
"""

from dataclasses import dataclass
from typing import Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from .blocks import MSFPBlock, ResidualBlock, _upsample


@dataclass
class DecoderConfig:
    n_res_blocks: int = 2
    channels: Tuple[int, int, int] = (64, 128, 256)
    global_skip: bool = True

    def __post_init__(self):
        if self.n_res_blocks < 1:
            raise ValueError(f"n_res_blocks must be >= 1, got {self.n_res_blocks}")


class FusionDecoder(nn.Module):
    def __init__(self, cfg: DecoderConfig = DecoderConfig()):
        super().__init__()
        self.cfg = cfg
        c = cfg.channels
        self.texture_merge = nn.ModuleList(nn.Conv2d(2 * ci, ci, 3, padding=1) for ci in c)
        # merge with the upscaled coarser decoder feature; absent at the coarsest scale
        self.coarse_merge = nn.ModuleList(
            nn.Conv2d(c[i] + c[i + 1], c[i], 3, padding=1) for i in range(2)
        )
        self.refine = nn.ModuleList(
            nn.Sequential(*[ResidualBlock(ci) for _ in range(cfg.n_res_blocks)]) for ci in c
        )
        self.cross_fuse = nn.ModuleList([MSFPBlock(c[:2]), MSFPBlock(c)])
        self.head = nn.Conv2d(sum(c), 1, 3, padding=1)

    def block(self, scale: int, f_lr, texture, relevance, d_prev=None, d_coarser=()):
        """One decoder stage. ``scale`` is the pyramid level (0 finest,
        2 coarsest); d_prev must be None exactly at the coarsest level."""
        if f_lr.shape != texture.shape:
            raise ValueError(
                f"feature/texture shape mismatch: {tuple(f_lr.shape)} vs {tuple(texture.shape)}"
            )
        if relevance.shape[-2:] != f_lr.shape[-2:]:
            raise ValueError(
                f"relevance dims {tuple(relevance.shape[-2:])} do not match "
                f"features {tuple(f_lr.shape[-2:])}"
            )
        if (d_prev is None) != (scale == 2):
            raise ValueError("d_prev must be supplied exactly for the non-coarsest scales")
        x = self.texture_merge[scale](torch.cat([f_lr, texture * relevance], dim=1)) + f_lr
        if d_prev is not None:
            x = self.coarse_merge[scale](torch.cat([x, _upsample(d_prev, 2)], dim=1))
        x = self.refine[scale](x)
        if scale < 2:
            fused = self.cross_fuse[scale]((x, *d_coarser))
            x = fused[0]
        return x

    def forward(self, f_lr_pyramid, textures, relevance, lr_image=None, clamp=False):
        """Decode a pyramid triple into an image on the LR grid.

        relevance maps are single-channel, broadcast across texture
        channels. lr_image enables the global residual skip (cfg.global_skip).
        """
        d3 = self.block(2, f_lr_pyramid[2], textures[2], self._rel(relevance[2]))
        d2 = self.block(1, f_lr_pyramid[1], textures[1], self._rel(relevance[1]),
                        d_prev=d3, d_coarser=(d3,))
        d1 = self.block(0, f_lr_pyramid[0], textures[0], self._rel(relevance[0]),
                        d_prev=d2, d_coarser=(d2, d3))
        full = torch.cat([d1, _upsample(d2, 2), _upsample(d3, 4)], dim=1)
        out = self.head(full)
        if self.cfg.global_skip:
            if lr_image is None:
                raise ValueError("global skip needs the LR image")
            out = out + lr_image
        if clamp:
            out = out.clamp(0.0, 1.0)
        return out

    @staticmethod
    def _rel(r):
        if r.ndim == 2:
            return r[None, None]
        if r.ndim == 3:
            return r[:, None]
        return r
