"""Backbone with per-stage CRMs, classifier and domain heads, mask-GT encoder."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import torch
import torch.nn.functional as F
from torch import nn

from .crm import CRM, CrmOutput, mask_loss
from .errors import ConfigurationError, ContractError
from .nn_core import ConvBnRelu, grl

N_STAGES = 2


@dataclass(frozen=True)
class ModelConfig:
    in_size: int = 64
    n_classes: int = 10
    channels: tuple[int, int] = (16, 32)
    stem_kernel: int = 5
    use_crm: bool = True
    use_f_t: bool = True
    use_f_s: bool = True
    attn_channels: int | None = None
    disc_hidden: int = 64

    def __post_init__(self):
        if self.in_size % (2 ** N_STAGES):
            raise ConfigurationError(
                f"input size {self.in_size} not divisible by the stage strides")
        if len(self.channels) != N_STAGES:
            raise ConfigurationError(f"expected {N_STAGES} channel widths")

    def stage_sizes(self) -> list[int]:
        return [self.in_size // 2 ** (k + 1) for k in range(N_STAGES)]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["channels"] = tuple(d["channels"])
        return cls(**d)


class ModelOutput(NamedTuple):
    logits: torch.Tensor
    domain_logits: torch.Tensor
    features: list          # per-stage output (CRM output when present)
    crm: list               # per-stage CrmOutput or None
    mask_losses: list       # per-stage (L_T, L_S) or empty when masks not given

    @property
    def probs(self):
        return F.softmax(self.logits, dim=1)

    @property
    def domain_probs(self):
        return F.softmax(self.domain_logits, dim=1)


class _Trunk(nn.Module):
    """Stem and stage convolutions shared in layout by backbone and mask encoder."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        c1, c2 = cfg.channels
        self.stem = ConvBnRelu(1, c1, cfg.stem_kernel)
        self.stages = nn.ModuleList([ConvBnRelu(c1, c1, 3), ConvBnRelu(c1, c2, 3)])


class MaskEncoder(_Trunk):
    """Encodes a binary mask into each stage's feature shape."""

    def forward(self, m: torch.Tensor) -> list[torch.Tensor]:
        x = F.max_pool2d(self.stem(m), 2)
        out = []
        for k, stage in enumerate(self.stages):
            if k:
                x = F.max_pool2d(x, 2)
            x = stage(x)
            out.append(x)
        return out


class IrasNet(_Trunk):
    def __init__(self, cfg: ModelConfig = ModelConfig()):
        super().__init__(cfg)
        self.cfg = cfg
        c1, c2 = cfg.channels
        self.crms = nn.ModuleList(
            [CRM(c, cfg.attn_channels, cfg.use_f_t, cfg.use_f_s) for c in (c1, c2)]
            if cfg.use_crm else [])
        self.classifier = nn.Linear(c2, cfg.n_classes)
        self.discriminator = nn.Sequential(
            nn.Linear(c2, cfg.disc_hidden), nn.ReLU(), nn.Linear(cfg.disc_hidden, 2))
        self.mask_encoder = MaskEncoder(cfg) if cfg.use_crm else None

    def param_groups(self) -> dict[str, list[tuple[str, nn.Parameter]]]:
        """Disjoint parameter groups: theta_F, theta_Y, theta_D, theta_M."""
        groups = {"theta_F": [], "theta_Y": [], "theta_D": [], "theta_M": []}
        for name, p in self.named_parameters():
            groups[self.group_of(name)].append((name, p))
        return groups

    @staticmethod
    def group_of(name: str) -> str:
        head = name.split(".")[0]
        return {"classifier": "theta_Y", "discriminator": "theta_D",
                "mask_encoder": "theta_M"}.get(head, "theta_F")

    def _check_input(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() == 3:
            x = x.unsqueeze(1)
        s = self.cfg.in_size
        if x.dim() != 4 or x.shape[1] != 1 or x.shape[2:] != (s, s):
            raise ConfigurationError(
                f"expected input of shape (B, 1, {s}, {s}), got {tuple(x.shape)}")
        return x

    def forward(self, x: torch.Tensor, m_t: torch.Tensor | None = None,
                m_s: torch.Tensor | None = None, lam: float = 1.0,
                supervise: bool = False) -> ModelOutput:
        """Forward pass; with ``supervise`` the masks are encoded and the
        per-stage mask losses returned. The prediction never depends on masks."""
        x = self._check_input(x)
        if supervise and (m_t is None or m_s is None):
            raise ContractError("supervised forward requires target and shadow masks")
        h = F.max_pool2d(self.stem(x), 2)
        features, crm_outs = [], []
        for k, stage in enumerate(self.stages):
            if k:
                h = F.max_pool2d(h, 2)
            h = stage(h)
            if self.cfg.use_crm:
                out: CrmOutput = self.crms[k](h)
                h = out.f_out
                crm_outs.append(out)
            else:
                crm_outs.append(None)
            features.append(h)
        pooled = h.mean(dim=(2, 3))
        logits = self.classifier(pooled)
        domain_logits = self.discriminator(grl(pooled, lam))

        losses = []
        if supervise and self.cfg.use_crm:
            enc_t = self.mask_encoder(self._check_input(m_t).to(x.dtype))
            enc_s = self.mask_encoder(self._check_input(m_s).to(x.dtype))
            for out, h_t, h_s in zip(crm_outs, enc_t, enc_s):
                losses.append((mask_loss(out.f_tm, h_t), mask_loss(out.f_sm, h_s)))
        return ModelOutput(logits, domain_logits, features, crm_outs, losses)
