"""The desk-scale domain-generalisation protocol used by the trend checks.

One seed fixes the synthetic corpus, its augmented copies, the measured-like
test set and the model initialisation, so every model variant trained under
the same seed sees identical data.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

from .domain_aug import AugParams, build_source_domains
from .evalkit import ABLATION_GRID, AblationConfig
from .network import IrasNet, ModelConfig
from .sar_scene import SarChip
from .scenarios import ScenarioSpec, make_dataset, scenario
from .scr_lab import build_scr_sweep
from .trainer import TrainConfig, TrainLog, train

# the three headline variants, taken from the ablation grid
VARIANTS = {"cnn": ABLATION_GRID[0], "cnn_grl": ABLATION_GRID[1], "irasnet": ABLATION_GRID[-1]}


@dataclass(frozen=True)
class ToyProtocol:
    n_per_class: int = 30
    n_test_per_class: int = 30
    augment_factor: int = 3
    epochs: int = 30
    batch_size: int = 32
    lr: float = 3e-3
    channels: tuple[int, int] = (8, 16)
    scenario_id: int = 2
    seeds: tuple[int, ...] = (0, 1, 2)

    def scenario(self) -> ScenarioSpec:
        return scenario(self.scenario_id)

    def model_config(self) -> ModelConfig:
        return ModelConfig(channels=self.channels)

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size, lr=self.lr,
                           seed=int(seed))

    def source_domains(self, seed: int) -> dict[str, list[SarChip]]:
        syn = make_dataset(self.scenario(), self.n_per_class, seed=1000 + int(seed))
        return build_source_domains(
            syn, AugParams(augment_factor=self.augment_factor, seed=2000 + int(seed)))

    def test_set(self, seed: int) -> list[SarChip]:
        return make_dataset(self.scenario(), self.n_test_per_class, seed=3000 + int(seed),
                            split="test")

    def sweep(self, seed: int, step: float = 0.5) -> dict[float, list[SarChip]]:
        return build_scr_sweep(self.test_set(seed), (-3.0, 3.0), step)

    def to_dict(self) -> dict:
        return asdict(self)


def train_variant(protocol: ToyProtocol, variant: str | AblationConfig, seed: int,
                  source_domains=None) -> tuple[IrasNet, TrainLog]:
    """Train one ablation row (or a named variant) under ``seed``."""
    cfg = VARIANTS[variant] if isinstance(variant, str) else variant
    if source_domains is None:
        source_domains = protocol.source_domains(seed)
    m_cfg, t_cfg = cfg.configure(protocol.model_config(), protocol.train_config(seed))
    return train(source_domains, t_cfg, m_cfg)
