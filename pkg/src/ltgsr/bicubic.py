"""Native bicubic resampling for the data pipeline.

Cubic convolution kernel with a = -0.5, separable, with edge-clamped
sampling. Only the factors used by the acquisition simulation (2 and 1/2)
are accepted. Differentiable in-network resizing lives in the torch modules
and is independent of this resampler.
"""

from fractions import Fraction

import numpy as np

_A = -0.5


def _kernel(x):
    x = np.abs(x)
    w = np.zeros_like(x)
    near = x <= 1.0
    far = (x > 1.0) & (x < 2.0)
    w[near] = (_A + 2.0) * x[near] ** 3 - (_A + 3.0) * x[near] ** 2 + 1.0
    w[far] = _A * x[far] ** 3 - 5.0 * _A * x[far] ** 2 + 8.0 * _A * x[far] - 4.0 * _A
    return w


def _resample_axis(arr, n_out, scale):
    """Resample axis 0 of ``arr`` to length n_out with clamped 4-tap cubic."""
    n_in = arr.shape[0]
    # destination pixel centers mapped into source coordinates
    src = (np.arange(n_out) + 0.5) / scale - 0.5
    base = np.floor(src).astype(int)
    frac = src - base
    out = np.zeros((n_out,) + arr.shape[1:], dtype=np.float64)
    norm = np.zeros(n_out, dtype=np.float64)
    for tap in range(-1, 3):
        idx = np.clip(base + tap, 0, n_in - 1)
        w = _kernel(frac - tap)
        out += w.reshape((-1,) + (1,) * (arr.ndim - 1)) * arr[idx]
        norm += w
    return out / norm.reshape((-1,) + (1,) * (arr.ndim - 1))


def bicubic_resize(img, scale):
    """Resize by a factor of 2 or 1/2; output dims must come out integral.

    Values are clipped back to [0, 1] (cubic overshoot would otherwise leave
    the image range).
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {arr.shape}")
    frac = Fraction(scale).limit_denominator(16)
    if frac not in (Fraction(2), Fraction(1, 2)):
        raise ValueError(f"scale must be 2 or 1/2, got {scale}")
    h, w = arr.shape
    if (h * frac.numerator) % frac.denominator or (w * frac.numerator) % frac.denominator:
        raise ValueError(f"scale {frac} of dims {arr.shape} is not integral")
    out_h = h * frac.numerator // frac.denominator
    out_w = w * frac.numerator // frac.denominator
    s = float(frac)
    out = _resample_axis(arr, out_h, s)
    out = _resample_axis(out.T, out_w, s).T
    return np.clip(out, 0.0, 1.0).astype(np.float32)
