"""Command-line entry point.

Every subcommand reads an optional JSON config (``--config`` or the
``IRASNET_CONFIG`` environment variable); explicit flags win over file
values. Reports go to stdout as JSON (and to ``--report`` when given).
Failures print one ``error: <kind>: <message>`` line on stderr and exit 1;
usage errors exit 2.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .corpus import read_corpus, write_corpus

CONFIG_ENV = "IRASNET_CONFIG"

log = logging.getLogger("irasnet")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- config plumbing -----------------------------------------------------------

def _load_config(path) -> dict:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError(f"config {path} must hold a JSON object")
    return cfg


def _pick(args, cfg: dict, name: str, default=None):
    """Flag value if given, else the config value, else ``default``."""
    val = getattr(args, name, None)
    if val is not None:
        return val
    return cfg.get(name, default)


def _dataclass_from(cls, section: dict, **overrides):
    known = {f.name for f in fields(cls)}
    unknown = set(section) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    values = {k: tuple(v) if isinstance(v, list) else v for k, v in section.items()}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return cls(**values)


def _model_config(args, cfg):
    from .network import ModelConfig
    channels = tuple(args.channels) if getattr(args, "channels", None) else None
    return _dataclass_from(ModelConfig, cfg.get("model", {}), channels=channels)


def _train_config(args, cfg, seed):
    from .trainer import TrainConfig
    return _dataclass_from(TrainConfig, cfg.get("train", {}), epochs=args.epochs, lr=args.lr,
                           batch_size=args.batch_size, lam=args.lam, seed=seed)


def _emit(report: dict, args) -> None:
    text = json.dumps(report, sort_keys=True, indent=1, allow_nan=True)
    if getattr(args, "report", None):
        Path(args.report).parent.mkdir(parents=True, exist_ok=True)
        Path(args.report).write_text(text + "\n")
    print(text)


def _read_many(paths) -> list:
    chips = []
    for p in paths:
        chips.extend(read_corpus(p))
    return chips


# -- subcommands ---------------------------------------------------------------

def cmd_gen_data(args, cfg):
    from .scenarios import make_dataset, scenario
    sc = scenario(int(_pick(args, cfg, "scenario", 2)),
                  n_classes=int(_pick(args, cfg, "classes", 10)))
    seed = int(_pick(args, cfg, "seed", 0))
    split = _pick(args, cfg, "split", "train")
    chips = make_dataset(sc, int(_pick(args, cfg, "per_class", 30)), seed, split=split)
    out = write_corpus(chips, args.out, split=split)
    return {"command": "gen-data", "out": str(out), "n_chips": len(chips), "seed": seed,
            "scenario": sc.id, "split": split}


def cmd_segment(args, cfg):
    from .segmentation import MEASURED_PARAMS, SYNTHETIC_PARAMS, mask_iou, segment
    params = {"synthetic": SYNTHETIC_PARAMS, "measured": MEASURED_PARAMS}[
        _pick(args, cfg, "params", "synthetic")]
    chips = read_corpus(args.corpus)
    out, ious, degenerate = [], [], 0
    for c in chips:
        seg = segment(c.amplitude, params)
        degenerate += seg.degenerate
        if c.m_t is not None:
            ious.append(mask_iou(seg.m_t, c.m_t))
        out.append(c.replace(m_t=seg.m_t, m_s=seg.m_s,
                             flags=dict(c.flags, segmented=True, seg_degenerate=seg.degenerate)))
    write_corpus(out, args.out, split="segmented")
    return {"command": "segment", "out": str(args.out), "n_chips": len(out),
            "n_degenerate": degenerate,
            "mean_target_iou": float(np.mean(ious)) if ious else None}


def cmd_augment(args, cfg):
    from .domain_aug import AugParams, build_source_domains
    seed = int(_pick(args, cfg, "seed", 0))
    params = _dataclass_from(AugParams, cfg.get("aug", {}), augment_factor=args.factor,
                             sigma_g=args.sigma_g, seed=seed)
    doms = build_source_domains(read_corpus(args.corpus), params)
    write_corpus(doms["Aug"], args.out, split="aug")
    return {"command": "augment", "out": str(args.out), "n_chips": len(doms["Aug"]),
            "seed": seed, "augment_factor": params.augment_factor}


def cmd_build_scenarios(args, cfg):
    from .scenarios import build_test_sets, scenario
    sc = scenario(int(_pick(args, cfg, "scenario", 2)))
    seed = int(_pick(args, cfg, "seed", 0))
    sets = build_test_sets(sc, int(_pick(args, cfg, "per_class", 30)), seed)
    root = Path(args.out)
    for name, chips in sets.items():
        write_corpus(chips, root / name, split=name)
    (root / "scenario.json").write_text(json.dumps(sc.to_dict(), sort_keys=True, indent=1))
    return {"command": "build-scenarios", "scenario": sc.id, "seed": seed,
            "sets": {k: len(v) for k, v in sets.items()}}


def cmd_train(args, cfg):
    from .checkpoint import save_checkpoint
    from .protocol import VARIANTS
    from .trainer import train
    seed = int(_pick(args, cfg, "seed", 0))
    m_cfg, t_cfg = _model_config(args, cfg), _train_config(args, cfg, seed)
    variant = _pick(args, cfg, "variant", "irasnet")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {sorted(VARIANTS)}")
    m_cfg, t_cfg = VARIANTS[variant].configure(m_cfg, t_cfg)
    chips = _read_many(args.corpus)
    model, tlog = train(chips, t_cfg, m_cfg)
    ckpt = save_checkpoint(model, args.out, training_step=tlog.steps)
    log_path = Path(args.log) if args.log else ckpt.with_suffix(".jsonl")
    log_path.write_text(tlog.to_jsonl())
    return {"command": "train", "checkpoint": str(ckpt), "log": str(log_path),
            "steps": tlog.steps, "seed": seed, "variant": variant,
            "final_train_acc": tlog.records[-1]["train_acc"] if tlog.records else None}


def cmd_eval(args, cfg):
    from .checkpoint import load_checkpoint
    from .evalkit import evaluate_accuracy
    model, header = load_checkpoint(args.checkpoint)
    chips = _read_many(args.corpus)
    return {"scenario": int(_pick(args, cfg, "scenario", 2)),
            "accuracy": evaluate_accuracy(model, chips),
            "seed": int(_pick(args, cfg, "seed", 0)), "n": len(chips),
            "training_step": header["training_step"]}


def cmd_scr_sweep(args, cfg):
    from .scr_lab import build_scr_sweep, chip_scr
    src = Path(args.corpus)
    chips = read_corpus(src)
    step = float(_pick(args, cfg, "step", 0.5))
    sweep = build_scr_sweep(chips, (-3.0, 3.0), step)
    sets = []
    for delta, shifted in sweep.items():
        out = src.parent / f"{src.name}_scr{delta:+.1f}dB"
        write_corpus(shifted, out, split=f"scr{delta:+.1f}dB")
        scr = [chip_scr(c).value_db for c in shifted]
        sets.append({"delta_db": delta, "dir": str(out), "mean_scr_db": float(np.mean(scr)),
                     "n_clipped": sum(bool(c.flags.get("clipped")) for c in shifted)})
    return {"command": "scr-sweep", "n_sets": len(sets), "sets": sets}


def cmd_scr_sweep_eval(args, cfg):
    from .checkpoint import load_checkpoint
    from .evalkit import scr_curve
    from .scr_lab import build_scr_sweep
    model, _ = load_checkpoint(args.checkpoint)
    sweep = build_scr_sweep(_read_many(args.corpus), (-3.0, 3.0),
                            float(_pick(args, cfg, "step", 0.5)))
    curve = scr_curve(model, sweep, int(_pick(args, cfg, "stage", 2)))
    return {"command": "scr-sweep-eval", "seed": int(_pick(args, cfg, "seed", 0)), **curve}


def cmd_attribute(args, cfg):
    from .checkpoint import load_checkpoint
    from .evalkit import REGIONS, attribute, corpus_clutter_mean
    model, _ = load_checkpoint(args.checkpoint)
    chips = _read_many(args.corpus)
    n = int(_pick(args, cfg, "n_chips", 50))
    chips = chips[:n]
    fill = corpus_clutter_mean(chips)
    seed = int(_pick(args, cfg, "seed", 0))
    budget = int(_pick(args, cfg, "coalitions", 256))
    reports = [attribute(model, c, fill_value=fill, n_coalitions=budget, seed=seed + i)
               for i, c in enumerate(chips)]
    if args.map_out:
        maps = np.stack([r.pixel_db for r in reports]).astype("<f4")
        path = Path(args.map_out)
        path.parent.mkdir(parents=True, exist_ok=True)
        maps.tofile(path)
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(
            {"shape": list(maps.shape), "dtype": "float32-le", "units": "dB re per-chip max",
             "floor_db": -40.0, "labels": [c.label for c in chips]}, indent=1))
    return {"command": "attribute", "seed": seed, "n": len(reports), "fill_value": fill,
            "method": reports[0].method if reports else None, "coalitions": budget,
            "mean_shares": {r: float(np.mean([rep.shares[r] for rep in reports]))
                            for r in REGIONS},
            "n_degenerate": sum(r.degenerate for r in reports),
            "per_chip": [r.to_dict() for r in reports]}


def cmd_ablate(args, cfg):
    from .evalkit import ABLATION_GRID, run_ablation
    seeds = [int(s) for s in (_pick(args, cfg, "seeds", [0, 1, 2]))]
    train_cfg = _train_config(args, cfg, seeds[0])
    rows = run_ablation(ABLATION_GRID, _read_many(args.corpus), _read_many(args.test), seeds,
                        model_cfg=_model_config(args, cfg), train_cfg=train_cfg)
    return {"command": "ablate", "seeds": seeds, "rows": rows}


# -- parser --------------------------------------------------------------------

def _add_train_flags(p):
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lam", type=float)
    p.add_argument("--channels", type=int, nargs=2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="irasnet", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help=f"JSON config (default: ${CONFIG_ENV})")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--report", help="also write the JSON report here")
        p.add_argument("--seed", type=int)
        return p

    p = add("gen-data", cmd_gen_data, "render a synthetic or measured-like corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--scenario", type=int)
    p.add_argument("--classes", type=int)
    p.add_argument("--per-class", type=int)
    p.add_argument("--split", choices=("train", "test"))

    p = add("segment", cmd_segment, "threshold segmentation into corpus masks")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--params", choices=("synthetic", "measured"))

    p = add("augment", cmd_augment, "build the augmented source domain")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--factor", type=int)
    p.add_argument("--sigma-g", type=float)

    p = add("build-scenarios", cmd_build_scenarios, "write a scenario's test sets")
    p.add_argument("--out", required=True)
    p.add_argument("--scenario", type=int)
    p.add_argument("--per-class", type=int)

    p = add("train", cmd_train, "train a model on one or more corpus directories")
    p.add_argument("--corpus", required=True, nargs="+")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--log", help="JSON-lines training log (default: next to the checkpoint)")
    p.add_argument("--variant", choices=("cnn", "cnn_grl", "irasnet"))
    _add_train_flags(p)

    p = add("eval", cmd_eval, "accuracy of a checkpoint on a corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True, nargs="+")
    p.add_argument("--scenario", type=int)

    p = add("scr-sweep", cmd_scr_sweep, "write the 13 SCR-shifted copies of a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--step", type=float)

    p = add("scr-sweep-eval", cmd_scr_sweep_eval, "accuracy and feature SCR across the sweep")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True, nargs="+")
    p.add_argument("--stage", type=int)
    p.add_argument("--step", type=float)

    p = add("attribute", cmd_attribute, "region attribution shares")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True, nargs="+")
    p.add_argument("--n-chips", type=int)
    p.add_argument("--coalitions", type=int)
    p.add_argument("--map-out", help="float32 per-pixel dB maps (+ .json sidecar)")

    p = add("ablate", cmd_ablate, "train and score the ablation grid")
    p.add_argument("--corpus", required=True, nargs="+")
    p.add_argument("--test", required=True, nargs="+")
    p.add_argument("--seeds", type=int, nargs="+")
    _add_train_flags(p)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args.config)
        section = dict(cfg.get(args.command, {}))
        # top-level seed applies to every subcommand unless the section overrides it
        if "seed" in cfg and "seed" not in section:
            section["seed"] = cfg["seed"]
        for key in ("model", "train", "aug"):
            if key in cfg:
                section.setdefault(key, cfg[key])
        _emit(args.func(args, section), args)
    except Exception as exc:  # noqa: BLE001 - single-line report for any failure
        msg = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
