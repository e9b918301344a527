"""Checkpoint files: magic, version, a JSON header, then raw float32 tensors.

Byte layout::

    b"IRASCKPT" | uint32 version | uint64 header length | header JSON | payload

All integers and tensor payloads are little-endian. The header records the
architecture config, per-stage feature shapes, the training step and, for
every tensor, its name, parameter group, shape and payload offset.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch

from .errors import ConfigurationError, CorruptCheckpointError
from .network import IrasNet, ModelConfig

MAGIC = b"IRASCKPT"
VERSION = 1
_PREFIX = struct.Struct("<8sIQ")


def save_checkpoint(model: IrasNet, path, training_step: int = 0) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cfg = model.cfg
    tensors, blobs, offset = [], [], 0
    for name, t in model.state_dict().items():
        arr = t.detach().cpu().numpy().astype("<f4")
        blob = arr.tobytes(order="C")
        tensors.append({"name": name, "group": model.group_of(name),
                        "shape": list(arr.shape), "offset": offset, "nbytes": len(blob),
                        "dtype": str(t.dtype).replace("torch.", "")})
        blobs.append(blob)
        offset += len(blob)
    header = {
        "format_version": VERSION,
        "architecture": cfg.to_dict(),
        "n_stages": len(cfg.channels),
        "stage_shapes": [[c, s, s] for c, s in zip(cfg.channels, cfg.stage_sizes())],
        "training_step": int(training_step),
        "payload_bytes": offset,
        "tensors": tensors,
    }
    head = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(MAGIC, VERSION, len(head)))
        fh.write(head)
        for blob in blobs:
            fh.write(blob)
    return path


def read_header(path) -> dict:
    return _read(path)[0]


def _read(path) -> tuple[dict, bytes]:
    raw = Path(path).read_bytes()
    if len(raw) < _PREFIX.size:
        raise CorruptCheckpointError(f"{path}: truncated checkpoint")
    magic, version, head_len = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise CorruptCheckpointError(f"{path}: not a checkpoint file")
    if version != VERSION:
        raise ConfigurationError(f"{path}: checkpoint version {version}, expected {VERSION}")
    end = _PREFIX.size + head_len
    if len(raw) < end:
        raise CorruptCheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(raw[_PREFIX.size:end])
    except ValueError as exc:
        raise CorruptCheckpointError(f"{path}: unreadable header") from exc
    payload = raw[end:]
    if len(payload) != header.get("payload_bytes"):
        raise CorruptCheckpointError(
            f"{path}: payload has {len(payload)} bytes, header says {header.get('payload_bytes')}")
    return header, payload


def load_checkpoint(path, expected_config: ModelConfig | None = None) -> tuple[IrasNet, dict]:
    header, payload = _read(path)
    cfg = ModelConfig.from_dict(header["architecture"])
    if expected_config is not None and expected_config != cfg:
        raise ConfigurationError("checkpoint architecture does not match the expected config")
    model = IrasNet(cfg)
    state = model.state_dict()
    names = {t["name"] for t in header["tensors"]}
    if names != set(state):
        raise ConfigurationError("checkpoint tensors do not match the architecture")
    for t in header["tensors"]:
        arr = np.frombuffer(payload, dtype="<f4", count=t["nbytes"] // 4, offset=t["offset"])
        target = state[t["name"]]
        if list(target.shape) != t["shape"]:
            raise ConfigurationError(f"shape mismatch for {t['name']}")
        state[t["name"]] = torch.from_numpy(arr.reshape(t["shape"]).copy()).to(target.dtype)
    model.load_state_dict(state)
    model.eval()
    return model, header
