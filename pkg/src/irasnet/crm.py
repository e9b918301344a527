"""Clutter reduction module: three-branch split, positional supervision via
encoded ground-truth masks, and the spatial attention that rescales the input."""
from __future__ import annotations

from typing import NamedTuple

import torch
import torch.nn.functional as F
from torch import nn

from .errors import ContractError
from .nn_core import EPS, ConvBnRelu


class CrmOutput(NamedTuple):
    f_out: torch.Tensor
    f_tm: torch.Tensor
    f_sm: torch.Tensor
    z_s: torch.Tensor


class CRM(nn.Module):
    """``f_out = z_s * f_in`` with ``z_s`` built from target/shadow mask branches.

    ``use_f_t``/``use_f_s`` switch the attention input from the region
    features ``ReLU(f_tm * f_in')`` / ``ReLU(f_sm * f_in')`` back to the raw
    mask branches.
    """

    def __init__(self, channels: int, attn_channels: int | None = None,
                 use_f_t: bool = True, use_f_s: bool = True):
        super().__init__()
        self.use_f_t = use_f_t
        self.use_f_s = use_f_s
        self.tm_branch = nn.Sequential(*(ConvBnRelu(channels, channels, 5) for _ in range(3)))
        self.sm_branch = nn.Sequential(*(ConvBnRelu(channels, channels, 5) for _ in range(3)))
        self.in_proj = ConvBnRelu(channels, channels, 1)
        self.attn_conv = nn.Conv2d(2 * channels, attn_channels or channels, 3, padding=1)

    def branch_split(self, f_in):
        return self.tm_branch(f_in), self.sm_branch(f_in), self.in_proj(f_in)

    @staticmethod
    def region_features(f_tm, f_sm, f_in_prime):
        return F.relu(f_tm * f_in_prime), F.relu(f_sm * f_in_prime)

    def attention(self, f_t, f_s):
        # channel-wise mean turns C' x W x H into the 1 x W x H map
        return F.relu(self.attn_conv(torch.cat([f_t, f_s], dim=1))).mean(dim=1, keepdim=True)

    def forward(self, f_in: torch.Tensor) -> CrmOutput:
        f_tm, f_sm, f_in_prime = self.branch_split(f_in)
        f_t, f_s = self.region_features(f_tm, f_sm, f_in_prime)
        z_s = self.attention(f_t if self.use_f_t else f_tm, f_s if self.use_f_s else f_sm)
        return CrmOutput(z_s * f_in, f_tm, f_sm, z_s)


def crm_forward(crm: CRM, f_in: torch.Tensor, masks=None, training: bool = False) -> CrmOutput:
    """Run a CRM; ``masks`` are needed only to supervise training, never for the value."""
    if training and masks is None:
        raise ContractError("training-mode CRM call requires ground-truth masks")
    return crm(f_in)


def normalize_encoding(h: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Per-sample min-max scaling to [0, 1]; constant samples map to zeros.

    Returns the scaled tensor and a boolean vector marking degenerate samples.
    """
    flat = h.flatten(1)
    lo = flat.min(dim=1, keepdim=True).values
    hi = flat.max(dim=1, keepdim=True).values
    span = hi - lo
    degenerate = span.squeeze(1) <= EPS
    scaled = torch.where(span > EPS, (flat - lo) / span.clamp_min(EPS), torch.zeros_like(flat))
    return scaled.view_as(h), degenerate


def mask_loss(f_branch: torch.Tensor, h: torch.Tensor, return_flags: bool = False,
              normalize: bool = True):
    """``-(1/N_S) sum h log sigmoid(f)`` averaged over the batch, ``N_S = C*W*H``.

    ``h`` is min-max normalised per sample unless ``normalize`` is False, in
    which case it must already lie in [0, 1]. The log is clamped at ``log(1e-12)``.
    """
    if f_branch.shape != h.shape:
        raise ValueError(f"shape mismatch {tuple(f_branch.shape)} vs {tuple(h.shape)}")
    if normalize:
        h_n, degenerate = normalize_encoding(h)
    else:
        if h.min() < 0 or h.max() > 1:
            raise ValueError("unnormalised encodings must lie in [0, 1]")
        h_n, degenerate = h, torch.zeros(h.shape[0], dtype=torch.bool)
    log_f = F.logsigmoid(f_branch).clamp_min(torch.log(torch.tensor(EPS, dtype=f_branch.dtype)))
    loss = -(h_n * log_f).flatten(1).mean(dim=1).mean()
    if return_flags:
        return loss, degenerate
    return loss
