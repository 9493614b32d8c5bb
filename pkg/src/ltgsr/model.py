"""Full model: encoder + texture generator + decoder + critic.

Submodule attribute names (encoder, ltg, decoder, critic) fix the
hierarchical parameter names used by the checkpoint format. Initialization
is seeded Kaiming-style fan-in scaling with zero biases, applied over the
sorted parameter names so it is reproducible regardless of construction
order.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import torch
import torch.nn as nn

from .critic import Critic
from .decoder import DecoderConfig, FusionDecoder
from .encoder import Encoder, EncoderConfig
from .generator import LTGConfig, TextureGenerator
from .search import search_textures_batched


@dataclass
class ModelConfig:
    channels: Tuple[int, int, int] = (64, 128, 256)
    msfp_blocks: int = 3
    n_res_blocks: int = 2
    critic_channels: Tuple[int, ...] = (32, 64, 128, 256, 512)
    patch: int = 3
    normalize_relevance: bool = True
    global_skip: bool = True
    encoder_trainable: bool = True
    encoder_weights: Optional[str] = None

    def encoder_config(self):
        return EncoderConfig(self.channels, self.encoder_weights, self.encoder_trainable)

    def ltg_config(self):
        return LTGConfig(self.msfp_blocks, self.channels)

    def decoder_config(self):
        return DecoderConfig(self.n_res_blocks, self.channels, self.global_skip)


REDUCED_CHANNELS = (16, 32, 64)


def reduced_config(**overrides) -> ModelConfig:
    """Desk-scale profile: narrow channels, small critic."""
    defaults = dict(channels=REDUCED_CHANNELS, critic_channels=(16, 32, 64, 128, 128))
    defaults.update(overrides)
    return ModelConfig(**defaults)


class SRModel(nn.Module):
    def __init__(self, cfg: ModelConfig = ModelConfig()):
        super().__init__()
        self.cfg = cfg
        self.encoder = Encoder(cfg.encoder_config())
        self.ltg = TextureGenerator(cfg.ltg_config())
        self.decoder = FusionDecoder(cfg.decoder_config())
        self.critic = Critic(cfg.critic_channels)

    def init_params(self, seed: int):
        init_params(self, seed)
        return self

    def search(self, lr, ref, ref_down):
        """Search path on image batches: returns (textures, relevance, idx)
        as batched per-scale lists plus the encoder pyramids used."""
        f_lr = self.encoder(lr)
        f_ref = self.encoder(ref)
        f_rd = self.encoder(ref_down)
        textures, relevance, idx = search_textures_batched(
            f_lr.f3, f_rd.f3, tuple(f_ref), self.cfg.patch, self.cfg.normalize_relevance
        )
        return f_lr, textures, relevance, idx

    def sr_with_ref(self, lr, ref, ref_down, clamp: bool = True):
        """Full search-path super-resolution (evaluation harness only)."""
        f_lr, textures, relevance, _ = self.search(lr, ref, ref_down)
        return self.decoder(tuple(f_lr), textures, relevance, lr_image=lr, clamp=clamp)

    def sr_refless(self, lr, clamp: bool = True):
        """Reference-free inference: generated textures, relevance == 1."""
        if lr.shape[-2] % 16 or lr.shape[-1] % 16:
            raise ValueError(f"input dims {tuple(lr.shape[-2:])} must be divisible by 16")
        f_lr = self.encoder(lr)
        textures = self.ltg(tuple(f_lr))
        relevance = [torch.ones(t.shape[0], 1, *t.shape[-2:], dtype=t.dtype) for t in textures]
        return self.decoder(tuple(f_lr), textures, relevance, lr_image=lr, clamp=clamp)


def init_params(module: nn.Module, seed: int):
    """Seeded fan-in normal init for weights, zeros for biases."""
    gen = torch.Generator().manual_seed(seed)
    for name, p in sorted(module.named_parameters(), key=lambda kv: kv[0]):
        with torch.no_grad():
            if p.ndim >= 2:
                fan_in = p[0].numel()
                std = (2.0 / fan_in) ** 0.5
                vals = torch.randn(p.shape, generator=gen, dtype=torch.float64) * std
                p.copy_(vals.to(p.dtype))
            else:
                p.zero_()
    return module
