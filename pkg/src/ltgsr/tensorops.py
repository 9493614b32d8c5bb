"""Small numpy <-> torch helpers shared by the network modules."""

import numpy as np
import torch


def to_tensor(img, dtype=torch.float32):
    """2-D numpy image -> (1, 1, H, W) tensor."""
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {arr.shape}")
    return torch.from_numpy(np.ascontiguousarray(arr)).to(dtype)[None, None]


def to_image(t):
    """(1, 1, H, W) or (1, H, W) or (H, W) tensor -> 2-D float32 numpy image."""
    x = t.detach()
    while x.ndim > 2:
        if x.shape[0] != 1:
            raise ValueError(f"cannot squeeze batch/channel dim of shape {tuple(t.shape)}")
        x = x[0]
    return x.cpu().numpy().astype(np.float32)


def stack_images(imgs, dtype=torch.float32):
    """List of 2-D numpy images -> (B, 1, H, W) tensor."""
    return torch.cat([to_tensor(im, dtype) for im in imgs], dim=0)
