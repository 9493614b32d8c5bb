"""Image validation and persistence.

Images are 2-D float grids in [0, 1]. Two on-disk forms are supported:

* 8-bit grayscale PNG (lossy: quantized to 256 levels), for previews.
* "FGRID" raw float format, lossless. 16-byte header:
  magic ``FGRID\\0`` (6 bytes), u16 version, u32 height, u32 width,
  all little-endian, followed by row-major float32 pixels.
"""

import struct

import numpy as np
from PIL import Image as PILImage

FGRID_MAGIC = b"FGRID\0"
FGRID_VERSION = 1
_HEADER = struct.Struct("<6sHII")

MIN_SIDE = 8


def validate_image(img, min_side=MIN_SIDE):
    """Check the 2-D [0,1] float-grid invariants; returns the array as float32.

    Raises ValueError for wrong rank, non-finite values, out-of-range values
    or sides below ``min_side``.
    """
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValueError(f"image must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < min_side or arr.shape[1] < min_side:
        raise ValueError(f"image sides must be >= {min_side}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("image values must lie in [0, 1]")
    return arr.astype(np.float32, copy=False)


def write_fgrid(path, img):
    arr = validate_image(img)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FGRID_MAGIC, FGRID_VERSION, h, w))
        fh.write(arr.astype("<f4").tobytes())


def read_fgrid(path):
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"{path}: truncated FGRID header")
        magic, version, h, w = _HEADER.unpack(header)
        if magic != FGRID_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != FGRID_VERSION:
            raise ValueError(f"{path}: unsupported FGRID version {version}")
        data = fh.read(4 * h * w)
    if len(data) != 4 * h * w:
        raise ValueError(f"{path}: truncated pixel payload")
    return np.frombuffer(data, dtype="<f4").reshape(h, w).astype(np.float32)


def write_png(path, img):
    arr = validate_image(img)
    q = np.round(arr * 255.0).astype(np.uint8)
    PILImage.fromarray(q, mode="L").save(path)


def read_png(path):
    with PILImage.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float32) / 255.0
    return arr


def read_image(path):
    """Dispatch on extension: .fgrid is read losslessly, anything else via PIL."""
    path = str(path)
    if path.endswith(".fgrid"):
        return read_fgrid(path)
    return read_png(path)


def write_image(path, img):
    path = str(path)
    if path.endswith(".fgrid"):
        write_fgrid(path, img)
    else:
        write_png(path, img)
