"""Building blocks: conv-BN-ReLU, gradient reversal, and the NLL losses."""
from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .errors import ConfigurationError

EPS = 1e-12


class ConvBnRelu(nn.Module):
    """``ReLU(BN(conv_k(x)))`` with same-size padding."""

    def __init__(self, in_channels: int, out_channels: int, kernel: int = 3):
        super().__init__()
        if kernel % 2 != 1:
            raise ConfigurationError("kernel size must be odd")
        self.in_channels = in_channels
        self.conv = nn.Conv2d(in_channels, out_channels, kernel, padding=kernel // 2)
        self.bn = nn.BatchNorm2d(out_channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[1] != self.in_channels:
            raise ConfigurationError(
                f"expected {self.in_channels} input channels, got {x.shape[1]}")
        return F.relu(self.bn(self.conv(x)))


def conv_bn_relu(x: torch.Tensor, kernel: int, out_channels: int) -> torch.Tensor:
    """Functional form with a freshly initialised block (mainly for probing shapes)."""
    return ConvBnRelu(x.shape[1], out_channels, kernel).to(x.dtype)(x)


class _GradReverse(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x, lam):
        ctx.lam = lam
        return x.view_as(x)

    @staticmethod
    def backward(ctx, grad_output):
        return -ctx.lam * grad_output, None


def grl(x: torch.Tensor, lam: float = 1.0) -> torch.Tensor:
    """Identity forward; backward multiplies the incoming gradient by ``-lam``."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return _GradReverse.apply(x, float(lam))


class GradientReversal(nn.Module):
    def __init__(self, lam: float = 1.0):
        super().__init__()
        self.lam = lam

    def forward(self, x):
        return grl(x, self.lam)


@dataclass(frozen=True)
class GrlConfig:
    """``lambda`` is the plateau value; ``ramp`` follows 2/(1+exp(-10p)) - 1."""

    lam: float = 1.0
    schedule: str = "ramp"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.schedule not in ("constant", "ramp"):
            raise ValueError(f"unknown lambda schedule {self.schedule!r}")

    def at(self, progress: float) -> float:
        if self.schedule == "constant":
            return self.lam
        p = min(max(progress, 0.0), 1.0)
        return self.lam * (2.0 / (1.0 + math.exp(-10.0 * p)) - 1.0)


def _nll(log_probs: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    return -log_probs.gather(1, labels.long().view(-1, 1)).mean()


def cls_loss(pred_probs: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean negative log-probability of the true class (probabilities in, eps-clamped)."""
    row_sums = pred_probs.sum(dim=1)
    if not torch.allclose(row_sums, torch.ones_like(row_sums), atol=1e-6):
        raise ValueError("rows of pred_probs must sum to 1")
    return _nll(torch.log(pred_probs.clamp_min(EPS)), labels)


def adv_loss(domain_probs: torch.Tensor, domain_labels: torch.Tensor) -> torch.Tensor:
    if domain_probs.shape[1] != 2:
        raise ValueError("adversarial loss expects K = 2 domains")
    return cls_loss(domain_probs, domain_labels)


def nll_from_logits(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Same value as ``cls_loss(softmax(logits))`` via log-sum-exp."""
    return _nll(F.log_softmax(logits, dim=1), labels)
