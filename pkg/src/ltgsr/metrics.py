"""Quantitative evaluation: PSNR, SSIM, encoder-feature perceptual distance,
and the reference-sensitivity study.

The perceptual distance ("pdist") is a proxy computed from this package's
own encoder with fixed seeded weights; it is a pseudo-metric for ranking
within this artifact and is NOT comparable to published learned-perceptual
scores.
"""

import math
from dataclasses import dataclass, field
from typing import List

import numpy as np
import torch
from scipy.signal import convolve2d

from .encoder import Encoder, EncoderConfig
from .errors import InvalidStateError
from .model import init_params
from .tensorops import to_tensor


def psnr(a, b) -> float:
    """10*log10(1/MSE) with peak 1.0; +inf for identical images."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_window(size=11, sigma=1.5):
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


_SSIM_WINDOW = _gaussian_window()


def ssim(a, b) -> float:
    """Single-scale SSIM: Gaussian window 11, sigma 1.5, K1=0.01, K2=0.03,
    dynamic range 1.0, averaged over valid window positions."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    if min(x.shape) < 11:
        raise ValueError(f"images must be at least 11x11, got {x.shape}")
    win = _SSIM_WINDOW
    c1 = (0.01 * 1.0) ** 2
    c2 = (0.03 * 1.0) ** 2

    def filt(img):
        return convolve2d(img, win, mode="valid")

    mu_x = filt(x)
    mu_y = filt(y)
    sigma_x = filt(x * x) - mu_x * mu_x
    sigma_y = filt(y * y) - mu_y * mu_y
    sigma_xy = filt(x * y) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * sigma_xy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (sigma_x + sigma_y + c2)
    return float(np.mean(num / den))


_PDIST_SEED = 0x9D157
_pdist_encoders = {}


def _default_pdist_encoder(channels=(16, 32, 64)):
    if channels not in _pdist_encoders:
        enc = Encoder(EncoderConfig(channels, trainable=False))
        init_params(enc, _PDIST_SEED)
        _pdist_encoders[channels] = enc
    return _pdist_encoders[channels]


def perceptual_distance(a, b, feat_encoder: Encoder = None) -> float:
    """Mean squared distance between unit-normalized encoder features,
    averaged over the three pyramid scales. Zero for identical inputs."""
    x = np.asarray(a)
    y = np.asarray(b)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    if x.shape[0] % 4 or x.shape[1] % 4:
        raise ValueError(f"dims {x.shape} must be divisible by 4")
    enc = feat_encoder if feat_encoder is not None else _default_pdist_encoder()
    with torch.no_grad():
        pyr_a = enc(to_tensor(x))
        pyr_b = enc(to_tensor(y))
        total = 0.0
        for fa, fb in zip(pyr_a, pyr_b):
            na = fa / fa.norm(dim=1, keepdim=True).clamp_min(1e-12)
            nb = fb / fb.norm(dim=1, keepdim=True).clamp_min(1e-12)
            total += float((na - nb).pow(2).mean())
    return total / 3.0


@dataclass
class MetricReport:
    psnr: float
    ssim: float
    pdist: float
    per_image: List[dict] = field(default_factory=list)

    def to_json_dict(self):
        def enc(v):
            return "inf" if v == math.inf else v

        return {
            "psnr": enc(self.psnr),
            "ssim": self.ssim,
            "pdist": self.pdist,
            "per_image": [{k: enc(v) for k, v in row.items()} for row in self.per_image],
        }


def _finite_mean(values):
    return float(np.mean([v for v in values])) if values else 0.0


def evaluate_model(trainer_or_model, dataset) -> MetricReport:
    """Refless-inference metrics of a model over a dataset of SampleGroups."""
    from .training import Trainer

    infer = (trainer_or_model.infer if isinstance(trainer_or_model, Trainer)
             else trainer_or_model)
    rows = []
    for i, g in enumerate(dataset):
        sr = infer(g.lr)
        rows.append({
            "index": i,
            "psnr": psnr(g.hr, sr),
            "ssim": ssim(g.hr, sr),
            "pdist": perceptual_distance(g.hr, sr),
        })
    return MetricReport(
        psnr=_finite_mean([r["psnr"] for r in rows]),
        ssim=_finite_mean([r["ssim"] for r in rows]),
        pdist=_finite_mean([r["pdist"] for r in rows]),
        per_image=rows,
    )


def ref_sensitivity(trainer, dataset, seeds) -> dict:
    """Reference-shuffle robustness study on a trained checkpoint.

    For each seed the references are permuted over the dataset and both
    inference paths are scored: the search path uses the shuffled reference
    pair, the generator path ignores references entirely (its rows must be
    identical across seeds).
    """
    if trainer.global_step == 0:
        raise InvalidStateError("ref_sensitivity needs a trained checkpoint")
    report = {"ltg": [], "search": []}
    for seed in seeds:
        perm = np.random.default_rng(seed).permutation(len(dataset))
        search_rows, ltg_rows = [], []
        for i, g in enumerate(dataset):
            donor = dataset[int(perm[i])]
            sr_search = trainer.infer_with_ref(g.lr, donor.ref, donor.ref_down)
            sr_ltg = trainer.infer(g.lr)
            search_rows.append({"index": i, "psnr": psnr(g.hr, sr_search),
                                "ssim": ssim(g.hr, sr_search)})
            ltg_rows.append({"index": i, "psnr": psnr(g.hr, sr_ltg),
                             "ssim": ssim(g.hr, sr_ltg)})
        for mode, rows in (("search", search_rows), ("ltg", ltg_rows)):
            report[mode].append({
                "seed": int(seed),
                "psnr_mean": _finite_mean([r["psnr"] for r in rows]),
                "psnr_std": float(np.std([r["psnr"] for r in rows])),
                "ssim_mean": _finite_mean([r["ssim"] for r in rows]),
                "ssim_std": float(np.std([r["ssim"] for r in rows])),
                "per_image": rows,
            })
    return report
