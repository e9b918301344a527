"""Threshold-based target/shadow segmentation and the masked-region operators.

The segmentation works on the chip rescaled to [0, 255]:

* target: pixels at or above ``max(min_target_intensity, median + (std_threshold/50) * std)``,
  cleaned by a 3x3 open/close and reduced to the largest connected component;
* shadow: pixels at or below ``min + shadow_threshold * (median - min)``,
  cleaned the same way and kept only where a component touches the target.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

_STRUCT = np.ones((3, 3), dtype=bool)
# std_threshold is expressed relative to this reference spread
_STD_REF = 50.0


@dataclass(frozen=True)
class SegParams:
    min_target_intensity: float
    std_threshold: float
    shadow_threshold: float

    def __post_init__(self):
        if self.min_target_intensity <= 0 or self.std_threshold <= 0:
            raise ValueError("segmentation thresholds must be positive")
        if not 0.0 < self.shadow_threshold < 1.0:
            raise ValueError("shadow_threshold must lie in (0, 1)")


SYNTHETIC_PARAMS = SegParams(30.0, 50.0, 0.33)
MEASURED_PARAMS = SegParams(35.0, 50.0, 0.45)


class Segmentation(NamedTuple):
    m_t: np.ndarray
    m_s: np.ndarray
    degenerate: bool


def _clean(mask: np.ndarray) -> np.ndarray:
    """3x3 open then close; edge padding keeps regions touching the border."""
    padded = np.pad(mask, 2, mode="edge")
    padded = ndimage.binary_opening(padded, structure=_STRUCT)
    padded = ndimage.binary_closing(padded, structure=_STRUCT)
    return padded[2:-2, 2:-2]


def segment(amplitude: np.ndarray, params: SegParams = SYNTHETIC_PARAMS) -> Segmentation:
    a = np.asarray(amplitude, dtype=float)
    empty = np.zeros(a.shape, dtype=bool)
    lo, hi = float(a.min()), float(a.max())
    if hi - lo <= 1e-12:
        return Segmentation(empty, empty.copy(), True)
    img = 255.0 * (a - lo) / (hi - lo)
    med = float(np.median(img))

    t_thr = max(params.min_target_intensity,
                med + params.std_threshold / _STD_REF * float(img.std()))
    cand = _clean(img >= t_thr)
    labels, n = ndimage.label(cand, structure=_STRUCT)
    if n == 0:
        return Segmentation(empty, empty.copy(), True)
    sizes = ndimage.sum_labels(cand, labels, index=np.arange(1, n + 1))
    m_t = labels == (int(np.argmax(sizes)) + 1)

    s_thr = img.min() + params.shadow_threshold * (med - img.min())
    s_cand = _clean(img <= s_thr) & ~m_t
    s_labels, n_s = ndimage.label(s_cand, structure=_STRUCT)
    touching = np.unique(s_labels[ndimage.binary_dilation(m_t, structure=_STRUCT)])
    touching = touching[touching > 0]
    m_s = np.isin(s_labels, touching) & ~m_t
    return Segmentation(m_t, m_s, False)


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    union = np.logical_or(a, b).sum()
    return float(np.logical_and(a, b).sum() / union) if union else 1.0


def _apply(I: np.ndarray, m: np.ndarray) -> np.ndarray:
    I = np.asarray(I)
    m = np.asarray(m)
    if I.shape != m.shape:
        raise ValueError(f"mask shape {m.shape} does not match image shape {I.shape}")
    return I * m.astype(I.dtype if np.issubdtype(I.dtype, np.floating) else float)


def apply_target_mask(I: np.ndarray, m_t: np.ndarray) -> np.ndarray:
    """Element-wise ``I * m_t``: clutter and shadow pixels zeroed."""
    return _apply(I, m_t)


def apply_shadow_mask(I: np.ndarray, m_s: np.ndarray) -> np.ndarray:
    """Element-wise ``I * m_s``."""
    return _apply(I, m_s)
