"""Evaluation: accuracy, feature-map SCR curves, region attribution, ablations."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import torch

from .network import IrasNet, ModelConfig
from .sar_scene import SarChip
from .scr_lab import downsample_masks, feature_scr
from .trainer import TrainConfig, predict_proba, train

REGIONS = ("target", "shadow", "clutter")


def evaluate_accuracy(model: IrasNet, test_set: list[SarChip]) -> float:
    if not test_set:
        raise ValueError("empty test set")
    probs = predict_proba(model, np.stack([c.amplitude for c in test_set]))
    labels = np.array([c.label for c in test_set])
    return float((probs.argmax(axis=1) == labels).mean())


@torch.no_grad()
def stage_features(model: IrasNet, chips: list[SarChip], stage: int,
                   batch_size: int = 128) -> np.ndarray:
    """Inference-mode output of ``stage`` (1-based) for every chip, N x C x W x H."""
    if not 1 <= stage <= len(model.cfg.channels):
        raise ValueError(f"stage {stage} has no recorded features")
    model.eval()
    x = torch.from_numpy(np.stack([c.amplitude for c in chips]).astype(np.float32))
    out = [model(x[i:i + batch_size]).features[stage - 1].numpy()
           for i in range(0, len(chips), batch_size)]
    return np.concatenate(out)


def feature_scr_values(model: IrasNet, chips: list[SarChip], stage: int) -> np.ndarray:
    feats = stage_features(model, chips, stage)
    size = feats.shape[2:]
    vals = []
    for f, chip in zip(feats, chips):
        t_ds, c_ds = downsample_masks(chip.m_t, chip.m_s, size)
        vals.append(feature_scr(f, t_ds, c_ds) if t_ds.any() else math.nan)
    return np.array(vals)


def summarize_scr(values: np.ndarray) -> dict:
    """Mean over finite values; +inf sentinels are counted, not averaged."""
    finite = values[np.isfinite(values)]
    return {"mean_db": float(finite.mean()) if finite.size else math.nan,
            "n_inf": int(np.isposinf(values).sum()), "n": int(values.size)}


def mean_feature_scr(model: IrasNet, chips: list[SarChip], stage: int) -> dict:
    return summarize_scr(feature_scr_values(model, chips, stage))


def scr_curve(model: IrasNet, sweep_sets: dict[float, list[SarChip]], stage: int) -> dict:
    points = []
    for delta in sorted(sweep_sets):
        chips = sweep_sets[delta]
        scr = mean_feature_scr(model, chips, stage)
        points.append({"delta_db": float(delta), "accuracy": evaluate_accuracy(model, chips),
                       "mean_feature_scr_db": scr["mean_db"], "n_inf": scr["n_inf"]})
    acc = {p["delta_db"]: p["accuracy"] for p in points}
    summary = {}
    if {0.0, -3.0} <= acc.keys():
        summary["delta_acc_0_m3"] = acc[0.0] - acc[-3.0]
    if {0.0, 3.0} <= acc.keys():
        summary["delta_acc_0_p3"] = acc[0.0] - acc[3.0]
    return {"stage": stage, "points": points, **summary}


# -- attribution -------------------------------------------------------------

@dataclass
class AttributionReport:
    shares: dict
    method: str
    samples: int
    fill_value: float
    degenerate: bool = False
    pixel_db: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("pixel_db")
        return d


def _players(chip: SarChip, grid: int) -> tuple[list[np.ndarray], list[str]]:
    """Grid cells split by ground-truth region, so every player is region-pure."""
    p, q = chip.amplitude.shape
    rows = np.minimum(np.arange(p) * grid // p, grid - 1)
    cols = np.minimum(np.arange(q) * grid // q, grid - 1)
    cell = rows[:, None] * grid + cols[None, :]
    region = np.where(chip.m_t, 0, np.where(chip.m_s, 1, 2))
    masks, tags = [], []
    for k in range(grid * grid):
        for r in range(3):
            m = (cell == k) & (region == r)
            if m.any():
                masks.append(m)
                tags.append(REGIONS[r])
    return masks, tags


def attribute(model: IrasNet, chip: SarChip, fill_value: float | None = None,
              n_coalitions: int = 256, grid: int = 8, seed: int = 0,
              floor_db: float = -40.0) -> AttributionReport:
    """Permutation-sampling Shapley values of the predicted-class probability.

    Players are grid cells intersected with the target/shadow/clutter masks;
    absent players are filled with ``fill_value`` (default: the chip's clutter
    mean). ``n_coalitions // grid**2`` permutations are drawn, half of them the
    reverses of the other half.
    """
    per_cell = n_coalitions // (grid * grid)
    if per_cell < 2:
        raise ValueError("coalition budget must give at least 2 coalitions per superpixel")
    if chip.m_t is None or chip.m_s is None:
        raise ValueError("attribution needs ground-truth masks")
    amp = chip.amplitude.astype(np.float32)
    if fill_value is None:
        fill_value = float(amp[chip.m_c].mean())
    masks, tags = _players(chip, grid)
    n = len(masks)
    cls = int(np.argmax(predict_proba(model, amp[None])[0]))
    rng = np.random.default_rng(seed)

    perms = []
    for _ in range((per_cell + 1) // 2):
        p = rng.permutation(n)
        perms += [p, p[::-1]]
    perms = perms[:per_cell]

    phi = np.zeros(n)
    base = np.full_like(amp, fill_value)
    for perm in perms:
        imgs = np.empty((n + 1,) + amp.shape, dtype=np.float32)
        cur = base.copy()
        imgs[0] = cur
        for j, player in enumerate(perm):
            cur[masks[player]] = amp[masks[player]]
            imgs[j + 1] = cur
        v = predict_proba(model, imgs)[:, cls]
        phi[perm] += np.diff(v)
    phi /= len(perms)

    pixel = np.zeros(amp.shape)
    for m, val in zip(masks, phi):
        pixel[m] = abs(val) / m.sum()
    peak = pixel.max()
    if peak <= 1e-12:
        shares = {r: 1.0 / 3.0 for r in REGIONS}
        return AttributionReport(shares, "shapley-permutation", len(perms) * (n + 1),
                                 fill_value, degenerate=True,
                                 pixel_db=np.full(amp.shape, floor_db))
    with np.errstate(divide="ignore"):
        pixel_db = np.maximum(20.0 * np.log10(pixel / peak), floor_db)
    kept = np.where(pixel_db > floor_db, pixel, 0.0)
    sums = {"target": kept[chip.m_t].sum(), "shadow": kept[chip.m_s].sum(),
            "clutter": kept[chip.m_c].sum()}
    total = sum(sums.values())
    shares = {r: float(v / total) for r, v in sums.items()}
    return AttributionReport(shares, "shapley-permutation", len(perms) * (n + 1),
                             fill_value, pixel_db=pixel_db)


def corpus_clutter_mean(chips: list[SarChip]) -> float:
    """Mean amplitude over the clutter pixels of a whole set."""
    total = sum(float(c.amplitude[c.m_c].sum()) for c in chips)
    count = sum(int(c.m_c.sum()) for c in chips)
    if not count:
        raise ValueError("no clutter pixels in the set")
    return total / count


def mean_attribution(model: IrasNet, chips: list[SarChip], seed: int = 0, **kwargs) -> dict:
    """Region shares averaged over ``chips``, occluding with the set's clutter mean."""
    fill = kwargs.pop("fill_value", None)
    if fill is None:
        fill = corpus_clutter_mean(chips)
    reports = [attribute(model, c, fill_value=fill, seed=seed + i, **kwargs)
               for i, c in enumerate(chips)]
    return {r: float(np.mean([rep.shares[r] for rep in reports])) for r in REGIONS} | {
        "n_degenerate": sum(rep.degenerate for rep in reports), "n": len(reports),
        "fill_value": fill}


# -- ablation ----------------------------------------------------------------

@dataclass(frozen=True)
class AblationConfig:
    use_f_t: bool = True
    use_f_s: bool = True
    use_l_t: bool = True
    use_l_s: bool = True
    use_l_adv: bool = True
    label: str = ""

    @property
    def uses_crm(self) -> bool:
        return self.use_f_t or self.use_f_s or self.use_l_t or self.use_l_s

    def configure(self, model_cfg: ModelConfig, train_cfg: TrainConfig
                  ) -> tuple[ModelConfig, TrainConfig]:
        m = replace(model_cfg, use_crm=self.uses_crm, use_f_t=self.use_f_t,
                    use_f_s=self.use_f_s)
        t = replace(train_cfg, use_adv=self.use_l_adv, use_l_t=self.use_l_t,
                    use_l_s=self.use_l_s)
        return m, t


def _row(label, ft, fs, lt, ls, adv):
    return AblationConfig(ft, fs, lt, ls, adv, label)


# Rows of the component ablation, plain CNN first and the full model last.
ABLATION_GRID = (
    _row("CNN", False, False, False, False, False),
    _row("CNN+L_adv", False, False, False, False, True),
    _row("L_T+L_S+L_adv", False, False, True, True, True),
    _row("F_T+L_T+L_adv", True, False, True, False, True),
    _row("F_S+L_S+L_adv", False, True, False, True, True),
    _row("F_T+F_S+L_adv", True, True, False, False, True),
    _row("F_T+F_S+L_T+L_adv", True, True, True, False, True),
    _row("F_T+F_S+L_S+L_adv", True, True, False, True, True),
    _row("F_T+F_S+L_T+L_S", True, True, True, True, False),
    _row("IRASNet", True, True, True, True, True),
)


def run_ablation(grid, corpus, test_set: list[SarChip], seeds,
                 model_cfg: ModelConfig = ModelConfig(),
                 train_cfg: TrainConfig = TrainConfig(), cache: dict | None = None) -> list[dict]:
    """Train every row for every seed; report mean accuracy and delta vs the first
    (plain CNN) row. ``cache`` maps ``(row, seed)`` to an already-measured accuracy
    and is filled as rows are trained."""
    if not seeds:
        raise ValueError("at least one seed is required")
    cache = {} if cache is None else cache
    rows = []
    for cfg in grid:
        accs = []
        for seed in seeds:
            key = (cfg, int(seed))
            if key not in cache:
                m_cfg, t_cfg = cfg.configure(model_cfg, replace(train_cfg, seed=int(seed)))
                model, _ = train(corpus, t_cfg, m_cfg)
                cache[key] = evaluate_accuracy(model, test_set)
            accs.append(cache[key])
        rows.append({"label": cfg.label, "toggles": {k: v for k, v in asdict(cfg).items()
                                                     if k != "label"},
                     "accuracies": accs, "mean_accuracy": float(np.mean(accs))})
    base = rows[0]["mean_accuracy"]
    for r in rows:
        r["delta_vs_first"] = r["mean_accuracy"] - base
    return rows
