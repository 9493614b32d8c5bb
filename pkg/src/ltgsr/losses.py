"""Training objectives.

Reconstruction (mean absolute error), two-term perceptual distance, the
Wasserstein critic objective with gradient penalty, the generator's
adversarial term, the texture-generation consistency term, and the
weighted total. Norm reductions are means over elements so the weights
stay scale-free across crop sizes.
"""

from dataclasses import dataclass

import numpy as np
import torch


@dataclass
class LossWeights:
    lambda_per: float = 1e-2
    lambda_tg: float = 0.3
    lambda_adv: float = 1e-3
    gp_lambda: float = 10.0

    def __post_init__(self):
        for name in ("lambda_per", "lambda_tg", "lambda_adv", "gp_lambda"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def rec_loss(hr, sr):
    """Mean absolute pixel difference."""
    if hr.shape != sr.shape:
        raise ValueError(f"shape mismatch: {tuple(hr.shape)} vs {tuple(sr.shape)}")
    return (hr - sr).abs().mean()


def perceptual_loss(hr, sr, searched_textures, encoder, k: int = 3):
    """Deep-feature distance plus texture-feature consistency.

    Term 1: mean squared distance between the deep maps of HR and SR.
    Term 2: mean over the first k pyramid scales of the mean squared
    distance between the SR features and the searched textures.
    """
    if k > 3 or k < 0:
        raise ValueError(f"k must be in 0..3, got {k}")
    if k > 0 and searched_textures is None:
        raise ValueError("textures required when k > 0")
    term1 = (encoder.deep_feature(hr) - encoder.deep_feature(sr)).pow(2).mean()
    if k == 0:
        return term1
    sr_pyr = encoder(sr)
    term2 = 0.0
    for i in range(k):
        t = searched_textures[i]
        g = sr_pyr[i]
        if t.ndim == g.ndim - 1:
            t = t.unsqueeze(0)
        if t.shape != g.shape:
            raise ValueError(
                f"texture shape {tuple(t.shape)} does not match features {tuple(g.shape)}"
            )
        term2 = term2 + (g - t).pow(2).mean()
    return term1 + term2 / k


def critic_loss(d_real, d_fake, gp):
    """mean(d_fake) - mean(d_real) + gp."""
    if d_real.shape[0] != d_fake.shape[0]:
        raise ValueError("real/fake batch sizes differ")
    return d_fake.mean() - d_real.mean() + gp


def gradient_penalty(critic, hr_batch, sr_batch, gp_lambda: float = 10.0, seed: int = 0,
                     create_graph: bool = True):
    """Two-sided gradient penalty on random interpolates.

    Draws one uniform mixing coefficient per sample (seeded), evaluates the
    critic gradient at the interpolate and penalizes its L2 norm's squared
    distance from 1, scaled by gp_lambda.
    """
    if hr_batch.shape != sr_batch.shape:
        raise ValueError("batch shape mismatch")
    b = hr_batch.shape[0]
    eps_np = np.random.default_rng(seed).uniform(size=b)
    eps = torch.as_tensor(eps_np, dtype=hr_batch.dtype).view(b, *([1] * (hr_batch.ndim - 1)))
    x_hat = (eps * hr_batch.detach() + (1.0 - eps) * sr_batch.detach()).requires_grad_(True)
    scores = critic(x_hat)
    grads = torch.autograd.grad(scores.sum(), x_hat, create_graph=create_graph)[0]
    norms = grads.flatten(1).norm(dim=1)
    return gp_lambda * ((norms - 1.0) ** 2).mean()


def generator_adv_loss(d_fake):
    """Negated mean critic score of the generated batch."""
    if d_fake.numel() == 0:
        raise ValueError("empty batch")
    return -d_fake.mean()


def texture_gen_loss(searched, generated, relevance):
    """Relevance-weighted squared distance between searched and generated
    textures, normalized per scale by C*H*W and averaged over scales.

    ``relevance`` maps are single-channel and broadcast across texture
    channels.
    """
    if len(searched) != len(generated) or len(searched) != len(relevance):
        raise ValueError("scale count mismatch")
    total = 0.0
    for t, t_hat, r in zip(searched, generated, relevance):
        if t.shape != t_hat.shape:
            raise ValueError(
                f"texture shape mismatch: {tuple(t.shape)} vs {tuple(t_hat.shape)}"
            )
        if r.ndim == 2:  # (H, W)
            r = r[None, None] if t.ndim == 4 else r[None]
        elif r.ndim == 3 and t.ndim == 4:  # (B, H, W)
            r = r[:, None]
        if r.shape[-2:] != t.shape[-2:]:
            raise ValueError(
                f"relevance dims {tuple(r.shape[-2:])} do not match textures "
                f"{tuple(t.shape[-2:])}"
            )
        total = total + ((t - t_hat).pow(2) * r).mean()
    return total / len(searched)


def total_loss(rec, per, tg, adv, weights: LossWeights):
    """rec + lambda_per*per + lambda_tg*tg + lambda_adv*adv."""
    return (rec + weights.lambda_per * per + weights.lambda_tg * tg
            + weights.lambda_adv * adv)
