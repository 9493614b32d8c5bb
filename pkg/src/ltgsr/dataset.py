"""Aligned LR-HR-Ref-Ref_down training groups and their on-disk layout."""

import json
import os
from dataclasses import dataclass

import numpy as np

from .image_io import read_fgrid, write_fgrid, write_png
from .phantom import degrade, generate_phantom

MANIFEST_NAME = "manifest.json"


@dataclass
class SampleGroup:
    lr: np.ndarray
    hr: np.ndarray
    ref: np.ndarray
    ref_down: np.ndarray

    def __post_init__(self):
        if self.lr.shape != self.hr.shape:
            raise ValueError(f"lr/hr dims differ: {self.lr.shape} vs {self.hr.shape}")
        if self.ref.shape != self.ref_down.shape:
            raise ValueError(
                f"ref/ref_down dims differ: {self.ref.shape} vs {self.ref_down.shape}"
            )
        for name in ("lr", "hr", "ref", "ref_down"):
            h, w = getattr(self, name).shape
            if h % 4 or w % 4:
                raise ValueError(f"{name} dims {h}x{w} not divisible by 4")


def make_dataset(n, seed, height, width, noise_amp=0.05):
    """n deterministic sample groups; the Ref of each group is an independent
    phantom drawn with a different seed than its HR."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    groups = []
    for _ in range(n):
        hr_seed = int(rng.integers(0, 2**31))
        ref_seed = int(rng.integers(0, 2**31))
        while ref_seed == hr_seed:
            ref_seed = int(rng.integers(0, 2**31))
        lr_noise = int(rng.integers(0, 2**31))
        ref_noise = int(rng.integers(0, 2**31))
        hr = generate_phantom(hr_seed, height, width)
        ref = generate_phantom(ref_seed, height, width)
        groups.append(
            SampleGroup(
                lr=degrade(hr, lr_noise, noise_amp),
                hr=hr,
                ref=ref,
                ref_down=degrade(ref, ref_noise, noise_amp),
            )
        )
    return groups


_PARTS = ("lr", "hr", "ref", "ref_down")


def save_dataset(groups, out_dir, seed=None, png_previews=False):
    """Write groups as FGRID files plus a JSON manifest (paths + seed)."""
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for i, g in enumerate(groups):
        entry = {}
        for part in _PARTS:
            fname = f"group{i:04d}_{part}.fgrid"
            write_fgrid(os.path.join(out_dir, fname), getattr(g, part))
            entry[part] = fname
            if png_previews:
                write_png(os.path.join(out_dir, fname.replace(".fgrid", ".png")), getattr(g, part))
        entries.append(entry)
    h, w = groups[0].hr.shape
    manifest = {"seed": seed, "n": len(groups), "height": h, "width": w, "groups": entries}
    with open(os.path.join(out_dir, MANIFEST_NAME), "w") as fh:
        json.dump(manifest, fh, indent=2)
    return manifest


def load_dataset(data_dir):
    with open(os.path.join(data_dir, MANIFEST_NAME)) as fh:
        manifest = json.load(fh)
    groups = []
    for entry in manifest["groups"]:
        imgs = {part: read_fgrid(os.path.join(data_dir, entry[part])) for part in _PARTS}
        groups.append(SampleGroup(**imgs))
    return groups
