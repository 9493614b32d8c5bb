"""Synthetic vascular phantoms and the acquisition degradation.

generate_phantom draws a branching tree of curvilinear bright vessels on a
dark speckled background with a central dark disk, loosely mimicking an
en-face retinal flow image. degrade simulates an undersampled acquisition
of the same scene: 2x decimation, additive speckle-like noise, then bicubic
upscaling back onto the original grid.
"""

import numpy as np

from .bicubic import bicubic_resize


def _check_dims(height, width):
    if height < 32 or width < 32:
        raise ValueError(f"phantom dims must be >= 32, got {height}x{width}")
    if height % 4 or width % 4:
        raise ValueError(f"phantom dims must be divisible by 4, got {height}x{width}")


def _stamp(canvas, y, x, radius, value):
    """Composite a Gaussian bump of given radius at (y, x) via max-blend."""
    h, w = canvas.shape
    r = max(1, int(np.ceil(3.0 * radius)))
    y0, y1 = max(0, int(y) - r), min(h, int(y) + r + 1)
    x0, x1 = max(0, int(x) - r), min(w, int(x) + r + 1)
    if y0 >= y1 or x0 >= x1:
        return
    yy, xx = np.mgrid[y0:y1, x0:x1]
    d2 = (yy - y) ** 2 + (xx - x) ** 2
    bump = value * np.exp(-d2 / (2.0 * radius**2))
    np.maximum(canvas[y0:y1, x0:x1], bump, out=canvas[y0:y1, x0:x1])


def generate_phantom(seed, height, width):
    """Deterministic vessel phantom for the given seed; values in [0, 1]."""
    _check_dims(height, width)
    rng = np.random.default_rng(seed)
    cy, cx = height / 2.0, width / 2.0
    faz_radius = 0.09 * min(height, width)
    max_extent = 0.75 * float(np.hypot(height, width))

    vessels = np.zeros((height, width), dtype=np.float64)
    n_trunks = max(6, min(height, width) // 16)
    # (y, x, heading, half-width, depth) seeds around the central ring
    stack = []
    for _ in range(n_trunks):
        theta = rng.uniform(0.0, 2.0 * np.pi)
        r0 = faz_radius * 1.15
        stack.append(
            (cy + r0 * np.sin(theta), cx + r0 * np.cos(theta), theta, rng.uniform(1.1, 2.0), 0)
        )

    while stack:
        y, x, heading, half_width, depth = stack.pop()
        intensity = rng.uniform(0.65, 0.95)
        n_steps = int(rng.integers(max(height, width) // 2, max(height, width)))
        for _ in range(n_steps):
            heading += rng.normal(0.0, 0.16)
            # gentle outward pull keeps trunks from orbiting the center
            outward = np.arctan2(y - cy, x - cx)
            heading += 0.08 * np.sin(outward - heading)
            y += np.sin(heading)
            x += np.cos(heading)
            if not (-4 < y < height + 4 and -4 < x < width + 4):
                break
            if np.hypot(y - cy, x - cx) > max_extent:
                break
            speckle = 0.8 + 0.35 * rng.random()
            _stamp(vessels, y, x, half_width / 1.7, intensity * speckle)
            half_width = max(0.55, half_width * 0.999)
            if depth < 3 and rng.random() < 0.035:
                split = rng.uniform(0.35, 0.9) * (1 if rng.random() < 0.5 else -1)
                stack.append((y, x, heading + split, half_width * 0.75, depth + 1))

    yy, xx = np.mgrid[0:height, 0:width]
    dist = np.hypot(yy - cy, xx - cx)
    # capillary-free central zone: taper vessels to zero inside the disk
    taper = np.clip((dist - 0.8 * faz_radius) / (0.6 * faz_radius), 0.0, 1.0)
    vessels *= taper

    background = 0.055 * rng.gamma(2.0, 1.0, size=(height, width))
    background *= 0.45 + 0.55 * np.clip(dist / (2.5 * faz_radius), 0.0, 1.0)

    img = np.clip(np.maximum(background, vessels), 0.0, 1.0)
    return img.astype(np.float32)


def degrade(hr, noise_seed, noise_amp=0.05):
    """Simulated low-density acquisition of ``hr`` on the same pixel grid.

    2x decimation, seeded additive speckle-like noise (amplitude scales with
    local brightness), bicubic x2 back up, clamped to [0, 1]. Output dims
    equal input dims.
    """
    arr = np.asarray(hr, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {arr.shape}")
    h, w = arr.shape
    if h % 2 or w % 2:
        raise ValueError(f"degrade needs even dims, got {h}x{w}")
    small = arr[::2, ::2].copy()
    if noise_amp != 0.0:
        rng = np.random.default_rng(noise_seed)
        small += noise_amp * (0.25 + small) * rng.standard_normal(small.shape)
    small = np.clip(small, 0.0, 1.0)
    return bicubic_resize(small, 2)
