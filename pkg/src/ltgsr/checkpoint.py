"""Single-file checkpoint format.

Layout: 8-byte magic "LTGCKPT1", u32 little-endian header length, UTF-8
JSON header, then the concatenated raw little-endian float32 blobs. The
header carries the config snapshot, epoch/step counters, RNG states, per-
parameter optimizer step counts, and a table of blob names/shapes/offsets.
Model parameters appear under "param/<name>" with the hierarchical names
"encoder.", "ltg.", "decoder.", "critic."; optimizer moments under
"optim/<group>/<name>/exp_avg[_sq]".
"""

import json
import struct

import numpy as np
import torch

MAGIC = b"LTGCKPT1"
VERSION = 1


def write_checkpoint(path, meta: dict, blobs: dict):
    """meta must be JSON-serializable; blobs map names to float tensors/arrays."""
    table = []
    payload = bytearray()
    for name in sorted(blobs):
        arr = blobs[name]
        if isinstance(arr, torch.Tensor):
            arr = arr.detach().cpu().numpy()
        arr = np.asarray(arr, dtype="<f4")
        table.append(
            {"name": name, "shape": list(arr.shape), "offset": len(payload), "numel": arr.size}
        )
        payload.extend(arr.tobytes())
    header = dict(meta)
    header["version"] = VERSION
    header["blobs"] = table
    raw = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        fh.write(bytes(payload))


def read_checkpoint(path):
    """Returns (meta, blobs) with blobs as float32 numpy arrays."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad checkpoint magic {magic!r}")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        if header.get("version") != VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version")
        payload = fh.read()
    blobs = {}
    for entry in header.pop("blobs"):
        start = entry["offset"]
        end = start + 4 * entry["numel"]
        arr = np.frombuffer(payload[start:end], dtype="<f4").reshape(entry["shape"])
        blobs[entry["name"]] = arr.copy()
    return header, blobs


def model_blobs(model: torch.nn.Module):
    return {f"param/{name}": p for name, p in model.named_parameters()}


def load_model_params(model: torch.nn.Module, blobs: dict):
    """Copy "param/..." blobs into the model by name; missing names raise."""
    with torch.no_grad():
        for name, p in model.named_parameters():
            key = f"param/{name}"
            if key not in blobs:
                raise ValueError(f"checkpoint is missing parameter {name}")
            arr = blobs[key]
            if tuple(arr.shape) != tuple(p.shape):
                raise ValueError(
                    f"shape mismatch for {name}: {arr.shape} vs {tuple(p.shape)}"
                )
            p.copy_(torch.from_numpy(arr).to(p.dtype))
    return model


def load_params_into(path, module: torch.nn.Module, prefix: str):
    """Load the subset of parameters under ``prefix`` into a bare submodule
    (e.g. prefix "encoder." into an Encoder)."""
    _, blobs = read_checkpoint(path)
    with torch.no_grad():
        for name, p in module.named_parameters():
            key = f"param/{prefix}{name}"
            if key not in blobs:
                raise ValueError(f"checkpoint has no parameter {prefix}{name}")
            p.copy_(torch.from_numpy(blobs[key]).to(p.dtype))
    return module
