"""FFT phase-correlation registration and overlap cropping.

Translation-only: forward transforms of both images, normalized cross-power
spectrum, inverse transform, argmax of the correlation surface. Ties on the
surface are broken by smallest |dy|+|dx|, then smallest dy, then dx.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, RegistrationFailedError

MIN_OVERLAP = 32


@dataclass(frozen=True)
class Shift:
    dy: int
    dx: int


def phase_correlate(fixed, moving):
    """Integer translation such that moving ~= circular-shift(fixed, dy, dx)."""
    a = np.asarray(fixed, dtype=np.float64)
    b = np.asarray(moving, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim != 2:
        raise ValueError("phase_correlate expects 2-D images")
    if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
        raise DegenerateInputError("constant image has no off-DC spectrum energy")

    fa = np.fft.fft2(a)
    fb = np.fft.fft2(b)
    cross = np.conj(fa) * fb
    mag = np.abs(cross)
    cross = np.where(mag > 1e-15, cross / np.maximum(mag, 1e-300), 0.0)
    surface = np.real(np.fft.ifft2(cross))

    h, w = surface.shape
    peak = surface.max()
    candidates = np.argwhere(surface == peak)

    def unwrap(idx, n):
        return idx - n if idx > n // 2 else idx

    best = min(
        ((unwrap(int(y), h), unwrap(int(x), w)) for y, x in candidates),
        key=lambda s: (abs(s[0]) + abs(s[1]), s[0], s[1]),
    )
    return Shift(best[0], best[1])


def register_crop(hr, lr_full):
    """Estimate the translation and crop both images to the aligned overlap.

    The overlap rectangle of two equal frames offset by (dy, dx) is trimmed
    (top-left anchored) so both output dims are divisible by 4. Raises
    RegistrationFailedError when the overlap drops below 32x32.
    """
    a = np.asarray(hr)
    b = np.asarray(lr_full)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    shift = phase_correlate(a, b)
    h, w = a.shape
    overlap_h = h - abs(shift.dy)
    overlap_w = w - abs(shift.dx)
    if overlap_h < MIN_OVERLAP or overlap_w < MIN_OVERLAP:
        raise RegistrationFailedError(
            f"overlap {overlap_h}x{overlap_w} below minimum {MIN_OVERLAP}"
        )
    out_h = overlap_h - overlap_h % 4
    out_w = overlap_w - overlap_w % 4
    # lr(y, x) = hr(y - dy, x - dx): hr row r maps to lr row r + dy
    hr_y0 = max(0, -shift.dy)
    hr_x0 = max(0, -shift.dx)
    lr_y0 = hr_y0 + shift.dy
    lr_x0 = hr_x0 + shift.dx
    hr_crop = a[hr_y0 : hr_y0 + out_h, hr_x0 : hr_x0 + out_w]
    lr_crop = b[lr_y0 : lr_y0 + out_h, lr_x0 : lr_x0 + out_w]
    return hr_crop.copy(), lr_crop.copy()
