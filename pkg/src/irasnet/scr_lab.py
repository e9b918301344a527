"""Signal-to-clutter ratio at image and feature level, and the SCR-sweep /
unknown-clutter test-set builders."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sar_scene import SarChip

INF_DB = float("inf")


@dataclass(frozen=True)
class ScrReport:
    value_db: float
    target_peak: float
    clutter_mean: float
    n_clutter: int


def _scr_db(peak: float, clutter_mean: float) -> float:
    if clutter_mean <= 0.0:
        return INF_DB
    if peak <= 0.0:
        return -INF_DB
    return float(20.0 * np.log10(peak / clutter_mean))


def image_scr(amplitude: np.ndarray, m_t: np.ndarray, m_c: np.ndarray) -> ScrReport:
    """20 log10(peak target amplitude / mean clutter amplitude).

    An empty clutter mask, or a clutter region that is identically zero,
    yields the ``+inf`` sentinel.
    """
    amplitude = np.asarray(amplitude, dtype=float)
    m_t = np.asarray(m_t, dtype=bool)
    m_c = np.asarray(m_c, dtype=bool)
    if m_t.shape != amplitude.shape or m_c.shape != amplitude.shape:
        raise ValueError("mask shapes must match the image")
    if not m_t.any():
        raise ValueError("target mask is empty")
    peak = float(amplitude[m_t].max())
    n_c = int(m_c.sum())
    mean_c = float(amplitude[m_c].mean()) if n_c else 0.0
    return ScrReport(_scr_db(peak, mean_c), peak, mean_c, n_c)


def chip_scr(chip: SarChip) -> ScrReport:
    return image_scr(chip.amplitude, chip.m_t, chip.m_c)


def shift_scr(chip: SarChip, delta_db: float) -> SarChip:
    """Scale clutter pixels by 10**(-delta/20); target and shadow untouched.

    If the gain would push clutter above 1 the result is clipped and
    ``flags['clipped']`` is set.
    """
    if delta_db == 0:
        return chip.replace(amplitude=chip.amplitude.copy(), flags=dict(chip.flags))
    gain = 10.0 ** (-delta_db / 20.0)
    m_c = chip.m_c
    amp = chip.amplitude.copy()
    scaled = amp[m_c] * gain
    clipped = bool((scaled > 1.0).any())
    amp[m_c] = np.minimum(scaled, 1.0)
    flags = dict(chip.flags)
    if clipped:
        flags["clipped"] = True
    return chip.replace(amplitude=amp, flags=flags)


def sweep_deltas(range_db=(-3.0, 3.0), step_db: float = 0.5) -> list[float]:
    lo, hi = range_db
    n = (hi - lo) / step_db
    if step_db <= 0 or abs(n - round(n)) > 1e-9:
        raise ValueError("step must evenly divide the sweep range")
    return [float(lo + k * step_db) for k in range(int(round(n)) + 1)]


def build_scr_sweep(chips: list[SarChip], range_db=(-3.0, 3.0),
                    step_db: float = 0.5) -> dict[float, list[SarChip]]:
    """One shifted copy of the whole corpus per delta; inputs are not mutated."""
    return {d: [shift_scr(c, d) for c in chips] for d in sweep_deltas(range_db, step_db)}


def composite_clutter(chip: SarChip, clutter_patch: np.ndarray) -> SarChip:
    """Replace clutter pixels with the top-left chip-sized crop of ``clutter_patch``."""
    patch = np.asarray(clutter_patch, dtype=float)
    p, q = chip.amplitude.shape
    if patch.ndim != 2 or patch.shape[0] < p or patch.shape[1] < q:
        raise ValueError("clutter patch must be at least chip-sized")
    m_c = chip.m_c
    amp = chip.amplitude.copy()
    amp[m_c] = np.clip(patch[:p, :q][m_c], 0.0, 1.0)
    return chip.replace(amplitude=amp, flags=dict(chip.flags))


def downsample_masks(m_t: np.ndarray, m_s: np.ndarray,
                     size: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-neighbour target mask and pure-clutter mask at feature resolution.

    A feature cell counts as clutter only when its whole pixel block is
    clutter; shadow and mixed cells are left out of both masks.
    """
    m_t = np.asarray(m_t, dtype=bool)
    m_s = np.asarray(m_s, dtype=bool)
    p, q = m_t.shape
    w, h = size
    if p % w or q % h:
        raise ValueError(f"mask shape {m_t.shape} not a multiple of {size}")
    fr, fc = p // w, q // h
    t_ds = m_t[fr // 2::fr, fc // 2::fc]
    clutter = ~(m_t | m_s)
    c_ds = clutter.reshape(w, fr, h, fc).all(axis=(1, 3)) & ~t_ds
    return t_ds, c_ds


def feature_scr(F: np.ndarray, m_t_ds: np.ndarray, m_c_ds: np.ndarray) -> float:
    """Peak target-region activation over mean |clutter-region activation|, in dB.

    ``F`` is C x W x H; the masks are W x H at the same spatial size.
    """
    F = np.asarray(F, dtype=float)
    m_t_ds = np.asarray(m_t_ds, dtype=bool)
    m_c_ds = np.asarray(m_c_ds, dtype=bool)
    if F.ndim != 3 or F.shape[1:] != m_t_ds.shape or F.shape[1:] != m_c_ds.shape:
        raise ValueError("masks must match the feature map's spatial size")
    if not m_t_ds.any():
        raise ValueError("downsampled target mask is empty")
    peak = float(F[:, m_t_ds].max())
    mean_c = float(np.abs(F[:, m_c_ds]).mean()) if m_c_ds.any() else 0.0
    return _scr_db(peak, mean_c)
