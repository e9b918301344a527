"""Adversarial training with CRM mask supervision, and mask-free inference."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import torch
import torch.nn.functional as F

from .errors import ConfigurationError, ContractError, TrainingDivergedError
from .network import IrasNet, ModelConfig
from .nn_core import GrlConfig
from .sar_scene import SarChip

log = logging.getLogger(__name__)

DOMAIN_INDEX = {"Syn": 0, "Aug": 1}


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation settings.

    ``lam`` is the plateau of the gradient-reversal weight (ramped when
    ``grl_schedule == "ramp"``); ``mask_lambda`` weights the mask losses and
    defaults to ``lam``. The discriminator learns ``disc_lr_scale`` times
    faster than the rest; at equal rates the reversed gradient lets the
    feature extractor inflate its features and the adversarial loss runs
    away. With ``recalibrate_bn`` the batch-norm running statistics are
    recomputed from the training chips once optimisation ends, since the
    exponential averages lag far behind the weights on short runs.
    """

    epochs: int = 100
    lr: float = 1e-3
    batch_size: int = 64
    lam: float = 1.0
    grl_schedule: str = "ramp"
    mask_lambda: float | None = None
    use_adv: bool = True
    use_l_t: bool = True
    use_l_s: bool = True
    disc_lr_scale: float = 10.0
    max_steps: int | None = None
    recalibrate_bn: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigurationError("epochs and batch_size must be >= 1")
        if self.lr <= 0 or self.disc_lr_scale <= 0:
            raise ConfigurationError("learning rates must be positive")
        GrlConfig(self.lam, self.grl_schedule)

    @property
    def grl(self) -> GrlConfig:
        return GrlConfig(self.lam, self.grl_schedule)

    @property
    def mask_weight(self) -> float:
        return self.lam if self.mask_lambda is None else self.mask_lambda

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainLog:
    records: list = field(default_factory=list)
    steps: int = 0

    def to_jsonl(self) -> str:
        import json
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)


def chips_to_tensors(chips: list[SarChip], need_masks: bool = False,
                     need_domains: bool = False) -> dict[str, torch.Tensor]:
    x = torch.from_numpy(np.stack([c.amplitude for c in chips]).astype(np.float32)).unsqueeze(1)
    out = {"x": x, "y": torch.tensor([c.label for c in chips], dtype=torch.long)}
    if need_masks:
        if any(c.m_t is None or c.m_s is None for c in chips):
            raise ContractError("every training chip must carry target and shadow masks")
        out["m_t"] = torch.from_numpy(np.stack([c.m_t for c in chips]).astype(np.float32)).unsqueeze(1)
        out["m_s"] = torch.from_numpy(np.stack([c.m_s for c in chips]).astype(np.float32)).unsqueeze(1)
    if need_domains:
        try:
            out["d"] = torch.tensor([DOMAIN_INDEX[c.domain] for c in chips], dtype=torch.long)
        except KeyError as exc:
            raise ContractError(f"training chips must be tagged Syn or Aug, got {exc}") from None
    return out


def _flatten_domains(source_domains) -> list[SarChip]:
    if isinstance(source_domains, dict):
        return [c for key in ("Syn", "Aug") for c in source_domains.get(key, [])]
    return list(source_domains)


def objective(model: IrasNet, batch: dict, cfg: TrainConfig, lam: float):
    """Total loss plus its parts for one batch.

    The adversarial term enters with weight one: the gradient reversal inside
    the model turns it into ``-lam * dL_adv`` for the feature extractor while
    the discriminator descends ``L_adv``.
    """
    supervise = model.cfg.use_crm and (cfg.use_l_t or cfg.use_l_s)
    out = model(batch["x"], batch.get("m_t"), batch.get("m_s"),
                lam=lam if cfg.use_adv else 0.0, supervise=supervise)
    l_cls = F.cross_entropy(out.logits, batch["y"])
    l_adv = F.cross_entropy(out.domain_logits, batch["d"])
    l_mask = out.logits.new_zeros(())
    for l_t, l_s in out.mask_losses:
        if cfg.use_l_t:
            l_mask = l_mask + l_t
        if cfg.use_l_s:
            l_mask = l_mask + l_s
    total = l_cls + l_adv + cfg.mask_weight * l_mask
    return total, {"cls": l_cls, "adv": l_adv, "mask": l_mask}, out


def group_gradients(model: IrasNet, loss: torch.Tensor) -> dict[str, float]:
    """Largest absolute gradient of ``loss`` in each parameter group (0 if untouched)."""
    named = list(model.named_parameters())
    grads = torch.autograd.grad(loss, [p for _, p in named], retain_graph=True,
                                allow_unused=True)
    out = {g: 0.0 for g in ("theta_F", "theta_Y", "theta_D", "theta_M")}
    for (name, _), g in zip(named, grads):
        if g is not None:
            key = model.group_of(name)
            out[key] = max(out[key], float(g.abs().max()))
    return out


def train(source_domains, config: TrainConfig = TrainConfig(),
          model_config: ModelConfig = ModelConfig()) -> tuple[IrasNet, TrainLog]:
    chips = _flatten_domains(source_domains)
    if not chips:
        raise ValueError("no training chips")
    torch.manual_seed(config.seed)
    model = IrasNet(model_config)
    supervise = model_config.use_crm and (config.use_l_t or config.use_l_s)
    data = chips_to_tensors(chips, need_masks=supervise, need_domains=True)
    n = data["x"].shape[0]
    groups = model.param_groups()
    opt = torch.optim.Adam([
        {"params": [p for k in ("theta_F", "theta_Y", "theta_M") for _, p in groups[k]]},
        {"params": [p for _, p in groups["theta_D"]], "lr": config.lr * config.disc_lr_scale},
    ], lr=config.lr)
    rng = np.random.default_rng(config.seed)
    steps_per_epoch = math.ceil(n / config.batch_size)
    total_steps = config.epochs * steps_per_epoch
    if config.max_steps is not None:
        total_steps = min(total_steps, config.max_steps)
    tlog = TrainLog()
    step = 0
    for epoch in range(config.epochs):
        if step >= total_steps:
            break
        t0 = time.perf_counter()
        model.train()
        perm = rng.permutation(n)
        sums = {"cls": 0.0, "adv": 0.0, "mask": 0.0}
        correct = d_correct = seen = 0
        for start in range(0, n, config.batch_size):
            if step >= total_steps:
                break
            idx = torch.from_numpy(perm[start:start + config.batch_size])
            batch = {k: v[idx] for k, v in data.items()}
            lam = config.grl.at(step / max(total_steps - 1, 1))
            total, parts, out = objective(model, batch, config, lam)
            if not torch.isfinite(total):
                snapshot = {"epoch": epoch, "step": step,
                            **{k: float(v.detach()) for k, v in parts.items()}}
                raise TrainingDivergedError(f"non-finite loss: {snapshot}")
            opt.zero_grad(set_to_none=True)
            total.backward()
            opt.step()
            b = len(idx)
            for k, v in parts.items():
                sums[k] += float(v.detach()) * b
            correct += int((out.logits.argmax(1) == batch["y"]).sum())
            d_correct += int((out.domain_logits.argmax(1) == batch["d"]).sum())
            seen += b
            step += 1
        rec = {"epoch": epoch, "cls_loss": sums["cls"] / seen, "adv_loss": sums["adv"] / seen,
               "mask_loss": sums["mask"] / seen, "train_acc": correct / seen,
               "domain_acc": d_correct / seen, "wall_time": time.perf_counter() - t0}
        tlog.records.append(rec)
        log.info("epoch %d: cls %.4f adv %.4f mask %.4f acc %.3f", epoch,
                 rec["cls_loss"], rec["adv_loss"], rec["mask_loss"], rec["train_acc"])
    tlog.steps = step
    if config.recalibrate_bn:
        # shuffled so each batch mixes classes and domains like a training batch
        shuffled = data["x"][torch.from_numpy(rng.permutation(n))]
        recalibrate_batchnorm(model, shuffled, config.batch_size)
    model.eval()
    return model, tlog


@torch.no_grad()
def recalibrate_batchnorm(model: IrasNet, x: torch.Tensor, batch_size: int = 64) -> None:
    """Replace BN running statistics by their exact average over ``x``."""
    bns = [m for m in model.modules() if isinstance(m, torch.nn.modules.batchnorm._BatchNorm)]
    if not bns:
        return
    saved = [bn.momentum for bn in bns]
    for bn in bns:
        bn.reset_running_stats()
        bn.momentum = None      # cumulative moving average
    model.train()
    for start in range(0, x.shape[0], batch_size):
        model(x[start:start + batch_size], lam=0.0)
    for bn, mom in zip(bns, saved):
        bn.momentum = mom
    model.eval()


@torch.no_grad()
def predict_proba(model: IrasNet, amplitudes, batch_size: int = 256) -> np.ndarray:
    """Class posteriors in inference mode; only amplitudes are consulted."""
    model.eval()
    x = torch.as_tensor(np.asarray(amplitudes, dtype=np.float32))
    if x.dim() == 2:
        x = x.unsqueeze(0)
    probs = [model(x[i:i + batch_size]).probs for i in range(0, x.shape[0], batch_size)]
    return torch.cat(probs).numpy()


def infer(chip_amplitude, model: IrasNet) -> tuple[int, np.ndarray]:
    """Predicted label and class probabilities for one chip (or its amplitude array)."""
    amp = chip_amplitude.amplitude if isinstance(chip_amplitude, SarChip) else chip_amplitude
    probs = predict_proba(model, np.asarray(amp)[None])[0]
    return int(np.argmax(probs)), probs
