"""Versioned binary checkpoints.

Layout: magic "NTCK", u32 version, u32 length + canonical JSON block
(model config plus run metadata), u32 tensor count, then per tensor:
u32 name length, name, u32 ndim, u32 dims..., little-endian f32 payload.
Round trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch

from ..errors import DataError
from .config import ModelConfig
from .network import DualDecoderModel

MAGIC = b"NTCK"
VERSION = 1


def state_arrays(model: DualDecoderModel) -> dict[str, np.ndarray]:
    return {
        name: tensor.detach().cpu().numpy().astype("<f4")
        for name, tensor in model.state_dict().items()
    }


def save_checkpoint(
    path: str | Path,
    config: ModelConfig,
    state: dict[str, np.ndarray],
    meta: dict | None = None,
) -> None:
    header = {"config": json.loads(config.to_json()), "meta": meta or {}}
    payload = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(payload)))
        fh.write(payload)
        fh.write(struct.pack("<I", len(state)))
        for name, arr in state.items():
            arr = np.ascontiguousarray(arr, dtype="<f4")
            name_bytes = name.encode("utf-8")
            fh.write(struct.pack("<I", len(name_bytes)))
            fh.write(name_bytes)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes(order="C"))


def _read_exact(fh, size: int, what: str) -> bytes:
    data = fh.read(size)
    if len(data) != size:
        raise DataError(f"truncated checkpoint while reading {what}")
    return data


def load_checkpoint(path: str | Path) -> tuple[ModelConfig, dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, "magic") != MAGIC:
            raise DataError(f"{path}: not a NTCK checkpoint")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {version}")
        (hlen,) = struct.unpack("<I", _read_exact(fh, 4, "header length"))
        header = json.loads(_read_exact(fh, hlen, "header"))
        (count,) = struct.unpack("<I", _read_exact(fh, 4, "tensor count"))
        state: dict[str, np.ndarray] = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<I", _read_exact(fh, 4, "name length"))
            name = _read_exact(fh, nlen, "name").decode("utf-8")
            (ndim,) = struct.unpack("<I", _read_exact(fh, 4, "ndim"))
            shape = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim, "shape"))
            numel = int(np.prod(shape)) if ndim else 1
            raw = _read_exact(fh, numel * 4, f"tensor {name}")
            state[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
    config = ModelConfig(**header["config"])
    return config, header.get("meta", {}), state


def restore_model(path: str | Path) -> tuple[DualDecoderModel, dict]:
    """Rebuild a model in eval mode from a checkpoint file."""
    config, meta, state = load_checkpoint(path)
    model = DualDecoderModel(config)
    tensors = {k: torch.from_numpy(v).to(dict(model.state_dict())[k].dtype) for k, v in state.items()}
    model.load_state_dict(tensors)
    model.eval()
    return model, meta
