"""Synthetic SAR chip rendering.

Chips are rendered from a small set of vehicle-like archetypes: a polygonal
hull with a per-class layout of bright scatterers, a shadow projected away
from the radar, and a textured clutter background. Everything is speckled
with a multiplicative L-look gamma model. Ground-truth target and shadow
masks delimit exactly the rendered regions.

Image convention: arrays are indexed ``[row, col]``; the radar illuminates
from the top of the chip (row 0 is near range), so shadows extend toward
increasing row index.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage
from skimage.draw import polygon as draw_polygon

from .errors import ConfigurationError

DOMAINS = ("Syn", "Aug", "MeaLike")

# Hull vertices (x along the vehicle length, y across), scatterer
# positions and hull height, all in units of half the chip size. ``ribs`` is
# the (period in pixels, angle to the hull axis in degrees) of the periodic
# return pattern across the hull surface.
_ARCHETYPES = (
    dict(hull=[(-0.34, -0.16), (0.34, -0.16), (0.34, 0.16), (-0.34, 0.16)],
         dots=[(-0.22, 0.0), (0.0, 0.0), (0.22, 0.0)], height=0.09,
         ribs=(3.0, 0)),
    dict(hull=[(-0.42, -0.10), (0.42, -0.10), (0.42, 0.10), (-0.42, 0.10)],
         dots=[(-0.34, -0.05), (0.34, 0.05)], height=0.05,
         ribs=(4.0, 90)),
    dict(hull=[(-0.32, -0.18), (0.32, -0.18), (0.32, -0.02), (-0.08, -0.02),
               (-0.08, 0.18), (-0.32, 0.18)],
         dots=[(-0.20, 0.10), (0.22, -0.10)], height=0.07,
         ribs=(5.0, 0)),
    dict(hull=[(-0.36, -0.18), (-0.12, -0.18), (-0.12, -0.06), (0.36, -0.06),
               (0.36, 0.06), (-0.12, 0.06), (-0.12, 0.18), (-0.36, 0.18)],
         dots=[(-0.24, -0.12), (-0.24, 0.12), (0.28, 0.0)], height=0.06,
         ribs=(6.5, 90)),
    dict(hull=[(-0.36, -0.18), (0.36, -0.08), (0.36, 0.08), (-0.36, 0.18)],
         dots=[(-0.26, 0.0), (0.26, 0.0)], height=0.08,
         ribs=(3.5, 45)),
    dict(hull=[(-0.30, 0.0), (-0.15, -0.20), (0.15, -0.20), (0.30, 0.0),
               (0.15, 0.20), (-0.15, 0.20)],
         dots=[(0.0, -0.12), (0.0, 0.12)], height=0.10,
         ribs=(8.0, 0)),
    dict(hull=[(-0.34, -0.18), (0.34, -0.18), (0.34, 0.18), (0.10, 0.18),
               (0.10, 0.02), (-0.10, 0.02), (-0.10, 0.18), (-0.34, 0.18)],
         dots=[(-0.24, 0.10), (0.24, 0.10), (0.0, -0.10)], height=0.07,
         ribs=(4.5, -45)),
    dict(hull=[(-0.08, -0.24), (0.08, -0.24), (0.08, -0.08), (0.30, -0.08),
               (0.30, 0.08), (0.08, 0.08), (0.08, 0.24), (-0.08, 0.24),
               (-0.08, 0.08), (-0.30, 0.08), (-0.30, -0.08), (-0.08, -0.08)],
         dots=[(0.0, 0.0)], height=0.08,
         ribs=(6.0, 0)),
    dict(hull=[(-0.36, -0.14), (0.14, -0.14), (0.38, 0.0), (0.14, 0.14),
               (-0.36, 0.14)],
         dots=[(0.26, 0.0), (-0.28, -0.08), (-0.28, 0.08)], height=0.06,
         ribs=(3.0, 90)),
    dict(hull=[(-0.30, -0.20), (0.30, -0.20), (0.30, 0.20), (0.06, 0.20),
               (0.06, 0.28), (-0.10, 0.28), (-0.10, 0.20), (-0.30, 0.20)],
         dots=[(-0.02, 0.24), (-0.18, -0.10), (0.18, -0.10)], height=0.11,
         ribs=(5.5, 45)),
)
N_CLASSES = len(_ARCHETYPES)

TRAIN_TEXTURES = ("ground_smooth", "ground_fine", "ground_furrow", "ground_patchy")
MEASURED_TEXTURES = ("ground_mottled",)
UNKNOWN_TEXTURES = ("urban_blobs", "rural_streaks")
TEXTURES = TRAIN_TEXTURES + MEASURED_TEXTURES + UNKNOWN_TEXTURES

SHADOW_LEVEL = 0.03


@dataclass(frozen=True)
class ChipSpec:
    """Imaging parameters for one rendered chip."""

    class_id: int
    azimuth_deg: float = 0.0
    depression_deg: float = 15.0
    target_reflectivity: float = 0.8
    clutter_texture_id: str = "ground_smooth"
    clutter_level: float = 0.2
    speckle_looks: int = 4
    seed: int = 0
    width: int = 64
    height: int = 64

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ConfigurationError("chip width and height must be positive")
        if not 0.0 < self.target_reflectivity <= 1.0:
            raise ConfigurationError("target_reflectivity must lie in (0, 1]")
        if self.speckle_looks < 1:
            raise ConfigurationError("speckle_looks must be >= 1")
        if not 0.0 < self.clutter_level < 1.0:
            raise ConfigurationError("clutter_level must lie in (0, 1)")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class SarChip:
    """One amplitude chip with its ground truth.

    ``m_t``/``m_s`` may be ``None`` for chips without ground truth
    (inference-only inputs).
    """

    amplitude: np.ndarray
    m_t: np.ndarray | None
    m_s: np.ndarray | None
    label: int
    domain: str = "Syn"
    meta: ChipSpec | None = None
    flags: dict = field(default_factory=dict)

    @property
    def m_c(self) -> np.ndarray:
        """Clutter mask: everything outside target and shadow."""
        if self.m_t is None or self.m_s is None:
            raise ValueError("chip has no ground-truth masks")
        return ~(self.m_t | self.m_s)

    def replace(self, **changes) -> "SarChip":
        return replace(self, **changes)


def _seed_streams(seed: int, n: int) -> list[np.random.Generator]:
    ss = np.random.SeedSequence(int(seed) & 0xFFFF_FFFF_FFFF_FFFF)
    return [np.random.default_rng(s) for s in ss.spawn(n)]


def _to_pixels(points, spec: ChipSpec) -> tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(points, dtype=float)
    theta = np.deg2rad(spec.azimuth_deg)
    c, s = np.cos(theta), np.sin(theta)
    x = pts[:, 0] * c - pts[:, 1] * s
    y = pts[:, 0] * s + pts[:, 1] * c
    half = min(spec.width, spec.height) / 2.0
    rows = (spec.height - 1) / 2.0 + y * half
    cols = (spec.width - 1) / 2.0 + x * half
    return rows, cols


def target_mask(spec: ChipSpec) -> np.ndarray:
    """Rasterized hull of the spec's class, rotated by its azimuth."""
    arch = _archetype(spec.class_id)
    rows, cols = _to_pixels(arch["hull"], spec)
    mask = np.zeros((spec.height, spec.width), dtype=bool)
    rr, cc = draw_polygon(rows, cols, shape=mask.shape)
    mask[rr, cc] = True
    if not mask.any():
        # degenerate tiny chip: keep at least the centre pixel
        mask[spec.height // 2, spec.width // 2] = True
    return mask


def shadow_length(spec: ChipSpec) -> int:
    """Shadow extent in pixels: hull height times cot(depression)."""
    arch = _archetype(spec.class_id)
    h_px = arch["height"] * min(spec.width, spec.height) / 2.0
    return max(1, int(round(h_px / np.tan(np.deg2rad(spec.depression_deg)))))


def shadow_mask(m_t: np.ndarray, length: int) -> np.ndarray:
    """Sweep the target silhouette away from the radar, minus the target."""
    sweep = np.zeros_like(m_t)
    for k in range(1, length + 1):
        sweep[k:] |= m_t[:-k]
    return sweep & ~m_t


def _archetype(class_id: int) -> dict:
    if not 0 <= class_id < N_CLASSES:
        raise ConfigurationError(f"unknown class_id {class_id}")
    return _ARCHETYPES[class_id]


def _unit_field(shape, rng, sigma) -> np.ndarray:
    f = ndimage.gaussian_filter(rng.standard_normal(shape), sigma, mode="wrap")
    return (f - f.mean()) / (f.std() + 1e-12)


def clutter_texture(texture_id: str, shape: tuple[int, int],
                    rng: np.random.Generator) -> np.ndarray:
    """Nonnegative unit-mean clutter reflectivity field."""
    if texture_id == "ground_smooth":
        t = 1.0 + 0.20 * _unit_field(shape, rng, 3.0)
    elif texture_id == "ground_fine":
        t = 1.0 + 0.25 * _unit_field(shape, rng, 0.8)
    elif texture_id == "ground_furrow":
        t = 1.0 + 0.25 * _unit_field(shape, rng, (0.7, 4.0))
    elif texture_id == "ground_patchy":
        t = 1.0 + 0.35 * np.tanh(2.0 * _unit_field(shape, rng, 5.0))
    elif texture_id == "ground_mottled":
        t = 1.0 + 0.2 * _unit_field(shape, rng, 1.5) + 0.2 * _unit_field(shape, rng, 6.0)
    elif texture_id == "urban_blobs":
        t = 0.7 + 0.1 * _unit_field(shape, rng, 1.0)
        rr, cc = np.mgrid[: shape[0], : shape[1]]
        for _ in range(rng.integers(6, 12)):
            r0, c0 = rng.uniform(0, shape[0]), rng.uniform(0, shape[1])
            h, w = rng.uniform(2, 6, size=2)
            t = t + rng.uniform(0.8, 1.6) * ((np.abs(rr - r0) < h) & (np.abs(cc - c0) < w))
    elif texture_id == "rural_streaks":
        t = 0.8 + 0.15 * _unit_field(shape, rng, 1.0)
        rr, cc = np.mgrid[: shape[0], : shape[1]]
        for _ in range(rng.integers(3, 6)):
            ang = rng.uniform(0, np.pi)
            off = rng.uniform(-0.5, 0.5) * max(shape)
            d = (rr - shape[0] / 2) * np.cos(ang) - (cc - shape[1] / 2) * np.sin(ang) - off
            t = t + rng.uniform(0.5, 1.2) * np.exp(-0.5 * (d / rng.uniform(0.7, 1.5)) ** 2)
        for _ in range(rng.integers(3, 7)):
            r0, c0 = rng.uniform(0, shape[0]), rng.uniform(0, shape[1])
            t = t + rng.uniform(0.6, 1.2) * np.exp(
                -((rr - r0) ** 2 + (cc - c0) ** 2) / (2 * rng.uniform(1.5, 3.0) ** 2))
    else:
        raise ConfigurationError(f"unknown clutter_texture_id {texture_id!r}")
    t = np.clip(t, 0.0, None)
    return t / t.mean()


def add_speckle(amplitude: np.ndarray, looks: int, seed: int) -> np.ndarray:
    """Multiply by i.i.d. unit-mean gamma(looks, 1/looks) factors, clip to [0, 1]."""
    if looks < 1:
        raise ValueError("looks must be >= 1")
    rng = np.random.default_rng(int(seed) & 0xFFFF_FFFF_FFFF_FFFF)
    mult = rng.gamma(shape=looks, scale=1.0 / looks, size=np.shape(amplitude))
    return np.clip(np.asarray(amplitude, dtype=float) * mult, 0.0, 1.0)


def render_chip(spec: ChipSpec, domain: str = "Syn") -> SarChip:
    """Render one chip; a pure function of ``spec``."""
    if domain not in DOMAINS:
        raise ConfigurationError(f"unknown domain tag {domain!r}")
    arch = _archetype(spec.class_id)
    shape = (spec.height, spec.width)
    tex_rng, tgt_rng, speckle_rng = _seed_streams(spec.seed, 3)

    m_t = target_mask(spec)
    m_s = shadow_mask(m_t, shadow_length(spec))

    amp = spec.clutter_level * clutter_texture(spec.clutter_texture_id, shape, tex_rng)
    amp[m_s] = SHADOW_LEVEL

    # hull body plus bright point scatterers, confined to the hull
    rr, cc = np.mgrid[: shape[0], : shape[1]]
    period, rib_angle = arch["ribs"]
    theta = np.deg2rad(spec.azimuth_deg + rib_angle)
    u = (cc - (spec.width - 1) / 2.0) * np.cos(theta) + (rr - (spec.height - 1) / 2.0) * np.sin(theta)
    ribs = 0.5 + 0.5 * np.cos(2.0 * np.pi * u / period)
    body = spec.target_reflectivity * (0.55 + 0.4 * ribs + 0.08 * _unit_field(shape, tgt_rng, 1.0))
    rows, cols = _to_pixels(arch["dots"], spec)
    sigma = max(0.8, 0.02 * min(shape))
    for r0, c0 in zip(rows, cols):
        body += 0.6 * np.exp(-((rr - r0) ** 2 + (cc - c0) ** 2) / (2 * sigma**2))
    amp[m_t] = body[m_t]

    speckle_seed = int(speckle_rng.integers(0, 2**63))
    amp = add_speckle(amp, spec.speckle_looks, speckle_seed)
    return SarChip(amplitude=amp, m_t=m_t, m_s=m_s, label=spec.class_id,
                   domain=domain, meta=spec)
