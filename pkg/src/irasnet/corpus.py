"""On-disk chip corpus.

Layout of one split directory::

    manifest.json            split-level listing
    chip_000000.f32          amplitude, little-endian float32, row-major
    chip_000000_mt.u8        target mask, one byte per pixel
    chip_000000_ms.u8        shadow mask
    chip_000000.json         sidecar: label, domain (name and code d), spec fields, flags
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .sar_scene import ChipSpec, SarChip

FORMAT = "irasnet-corpus"
# numeric domain tag written to sidecars next to the name
DOMAIN_CODES = {"Syn": 1, "Aug": 2, "MeaLike": 3}
VERSION = 1


def _clean_flags(flags: dict) -> dict:
    return {k: (v.item() if isinstance(v, np.generic) else v) for k, v in flags.items()}


def write_corpus(chips: list[SarChip], path, split: str = "train") -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for stale in path.glob("chip_*"):
        stale.unlink()
    entries = []
    for i, chip in enumerate(chips):
        cid = f"chip_{i:06d}"
        chip.amplitude.astype("<f4").tofile(path / f"{cid}.f32")
        has_masks = chip.m_t is not None and chip.m_s is not None
        if has_masks:
            chip.m_t.astype(np.uint8).tofile(path / f"{cid}_mt.u8")
            chip.m_s.astype(np.uint8).tofile(path / f"{cid}_ms.u8")
        sidecar = {"label": int(chip.label), "domain": chip.domain,
                   "d": DOMAIN_CODES[chip.domain],
                   "shape": list(chip.amplitude.shape), "has_masks": has_masks,
                   "spec": chip.meta.to_dict() if chip.meta else None,
                   "flags": _clean_flags(chip.flags)}
        (path / f"{cid}.json").write_text(json.dumps(sidecar, sort_keys=True, indent=1))
        entries.append({"id": cid, "label": int(chip.label), "domain": chip.domain})
    manifest = {"format": FORMAT, "version": VERSION, "split": split,
                "n_chips": len(chips), "chips": entries}
    (path / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1))
    return path


def read_corpus(path, with_masks: bool = True) -> list[SarChip]:
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"no corpus manifest in {path}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format") != FORMAT:
        raise ValueError(f"{path} is not a chip corpus")
    chips = []
    for entry in manifest["chips"]:
        cid = entry["id"]
        side = json.loads((path / f"{cid}.json").read_text())
        shape = tuple(side["shape"])
        amp = np.fromfile(path / f"{cid}.f32", dtype="<f4").reshape(shape).astype(float)
        m_t = m_s = None
        if with_masks and side.get("has_masks", True):
            m_t = np.fromfile(path / f"{cid}_mt.u8", dtype=np.uint8).reshape(shape).astype(bool)
            m_s = np.fromfile(path / f"{cid}_ms.u8", dtype=np.uint8).reshape(shape).astype(bool)
        spec = ChipSpec(**side["spec"]) if side.get("spec") else None
        chips.append(SarChip(amp, m_t, m_s, side["label"], side["domain"], spec,
                             dict(side.get("flags", {}))))
    return chips
