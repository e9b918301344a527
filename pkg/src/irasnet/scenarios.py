"""Domain descriptions, the four experimental scenarios, and dataset builders."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .sar_scene import (
    DOMAINS, MEASURED_TEXTURES, N_CLASSES, TEXTURES, TRAIN_TEXTURES, UNKNOWN_TEXTURES,
    ChipSpec, ConfigurationError, SarChip, clutter_texture, render_chip,
)
from .scr_lab import build_scr_sweep, composite_clutter, shift_scr


@dataclass(frozen=True)
class DomainSpec:
    """How chip specs are drawn for one domain.

    ``class_clutter_bias`` is the probability that a chip's clutter texture
    and level follow a class-specific assignment instead of being drawn at
    random; synthetic training data uses it to carry clutter patterns that
    correlate with the label.
    """

    tag: str = "Syn"
    textures: tuple[str, ...] = TRAIN_TEXTURES
    depression_range: tuple[float, float] = (14.0, 17.0)
    azimuth_range: tuple[float, float] = (10.0, 80.0)
    reflectivity_range: tuple[float, float] = (0.6, 0.9)
    clutter_level_range: tuple[float, float] = (0.14, 0.26)
    speckle_looks: int = 4
    class_clutter_bias: float = 0.0
    scr_offset_db: float = 0.0

    def __post_init__(self):
        if self.tag not in DOMAINS:
            raise ConfigurationError(f"unknown domain tag {self.tag!r}")
        for t in self.textures:
            if t not in TEXTURES:
                raise ConfigurationError(f"unknown clutter_texture_id {t!r}")
        if not 0.0 <= self.class_clutter_bias <= 1.0:
            raise ConfigurationError("class_clutter_bias must lie in [0, 1]")


SYNTHETIC = DomainSpec(tag="Syn", class_clutter_bias=0.8)
MEASURED_LIKE = DomainSpec(tag="MeaLike", textures=MEASURED_TEXTURES,
                           reflectivity_range=(0.55, 0.85), speckle_looks=3,
                           clutter_level_range=(0.18, 0.22), scr_offset_db=-2.0)


@dataclass(frozen=True)
class ScenarioSpec:
    id: int
    train: DomainSpec = SYNTHETIC
    test: DomainSpec = MEASURED_LIKE
    sweep: tuple[float, float, float] | None = None
    clutter_source: tuple[str, ...] | None = None
    n_classes: int = N_CLASSES
    chip_size: int = 64

    def __post_init__(self):
        if self.id not in (1, 2, 3, 4):
            raise ConfigurationError("scenario id must be 1..4")
        if self.id == 3 and self.sweep is None:
            raise ConfigurationError("scenario 3 requires an SCR sweep")
        if self.id == 4 and not self.clutter_source:
            raise ConfigurationError("scenario 4 requires a clutter source")
        if not 1 <= self.n_classes <= N_CLASSES:
            raise ConfigurationError(f"n_classes must lie in 1..{N_CLASSES}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        d = dict(d)
        for key in ("train", "test"):
            if isinstance(d.get(key), dict):
                d[key] = DomainSpec(**{k: tuple(v) if isinstance(v, list) else v
                                       for k, v in d[key].items()})
        for key in ("sweep", "clutter_source"):
            if isinstance(d.get(key), list):
                d[key] = tuple(d[key])
        return cls(**d)


def scenario(scenario_id: int, **overrides) -> ScenarioSpec:
    """Default desk-scale analog of one of the four experimental scenarios."""
    if scenario_id == 1:
        spec = ScenarioSpec(
            1,
            train=DomainSpec(**{**asdict(SYNTHETIC), "depression_range": (14.0, 16.0)}),
            test=DomainSpec(**{**asdict(MEASURED_LIKE), "depression_range": (17.0, 17.0)}))
    elif scenario_id == 2:
        spec = ScenarioSpec(2)
    elif scenario_id == 3:
        spec = ScenarioSpec(3, sweep=(-3.0, 3.0, 0.5))
    elif scenario_id == 4:
        spec = ScenarioSpec(4, clutter_source=UNKNOWN_TEXTURES)
    else:
        raise ConfigurationError("scenario id must be 1..4")
    return ScenarioSpec(**{**spec.__dict__, **overrides})


def draw_specs(domain: DomainSpec, n_classes: int, n_per_class: int, seed: int,
               size: int = 64) -> list[ChipSpec]:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5CE4E]))
    chip_seeds = np.random.SeedSequence(int(seed)).generate_state(
        n_classes * n_per_class, dtype=np.uint64)
    lvl_lo, lvl_hi = domain.clutter_level_range
    specs = []
    for c in range(n_classes):
        for i in range(n_per_class):
            if rng.uniform() < domain.class_clutter_bias:
                texture = domain.textures[c % len(domain.textures)]
                frac = c / max(n_classes - 1, 1)
                level = lvl_lo + (lvl_hi - lvl_lo) * np.clip(frac + rng.normal(0, 0.05), 0, 1)
            else:
                texture = domain.textures[rng.integers(len(domain.textures))]
                level = rng.uniform(lvl_lo, lvl_hi)
            specs.append(ChipSpec(
                class_id=c,
                azimuth_deg=float(rng.uniform(*domain.azimuth_range)),
                depression_deg=float(rng.uniform(*domain.depression_range)),
                target_reflectivity=float(rng.uniform(*domain.reflectivity_range)),
                clutter_texture_id=texture,
                clutter_level=float(level),
                speckle_looks=domain.speckle_looks,
                seed=int(chip_seeds[c * n_per_class + i]),
                width=size, height=size))
    return specs


def make_dataset(scenario: ScenarioSpec, n_per_class: int, seed: int,
                 split: str = "train") -> list[SarChip]:
    """Balanced, deterministic chip set for the scenario's train or test domain."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    if split not in ("train", "test"):
        raise ValueError("split must be 'train' or 'test'")
    domain = scenario.train if split == "train" else scenario.test
    specs = draw_specs(domain, scenario.n_classes, n_per_class, seed, scenario.chip_size)
    chips = [render_chip(s, domain=domain.tag) for s in specs]
    if domain.scr_offset_db:
        chips = [_offset(c, domain.scr_offset_db) for c in chips]
    return chips


def _offset(chip: SarChip, delta_db: float) -> SarChip:
    # the domain offset gets its own flag so later sweeps report only their own clipping
    out = shift_scr(chip, delta_db)
    flags = dict(out.flags)
    if flags.pop("clipped", False):
        flags["offset_clipped"] = True
    return out.replace(flags=flags)


def unknown_clutter_set(chips: list[SarChip], textures: tuple[str, ...], seed: int,
                        level: float = 0.2, looks: int = 3) -> list[SarChip]:
    """Swap each chip's clutter for a speckled patch from an unseen texture family."""
    seeds = np.random.SeedSequence(int(seed)).generate_state(len(chips), dtype=np.uint64)
    out = []
    for chip, s in zip(chips, seeds):
        rng = np.random.default_rng(int(s))
        tex = textures[int(rng.integers(len(textures)))]
        patch = level * clutter_texture(tex, chip.amplitude.shape, rng)
        patch = patch * rng.gamma(looks, 1.0 / looks, size=patch.shape)
        out.append(composite_clutter(chip, patch))
    return out


def build_test_sets(scenario: ScenarioSpec, n_per_class: int, seed: int
                    ) -> dict[str, list[SarChip]]:
    """Named test sets: ``measured`` always, plus the sweep or unknown-clutter sets."""
    base = make_dataset(scenario, n_per_class, seed, split="test")
    sets = {"measured": base}
    if scenario.sweep is not None:
        lo, hi, step = scenario.sweep
        for d, chips in build_scr_sweep(base, (lo, hi), step).items():
            sets[f"scr_{d:+.1f}dB"] = chips
    if scenario.clutter_source:
        sets["unknown_clutter"] = unknown_clutter_set(base, scenario.clutter_source, seed + 1)
    return sets
