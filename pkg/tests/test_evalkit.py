import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

import irasnet.evalkit as ek
from irasnet.evalkit import (
    ABLATION_GRID, AblationConfig, attribute, evaluate_accuracy, mean_feature_scr,
    run_ablation, scr_curve, stage_features,
)
from irasnet.network import IrasNet, ModelConfig
from irasnet.scenarios import make_dataset, scenario
from irasnet.scr_lab import build_scr_sweep
from irasnet.trainer import TrainConfig, train

SMALL = ModelConfig(channels=(4, 8))


@pytest.fixture(scope="module")
def chips():
    return make_dataset(scenario(2), 3, seed=21, split="test")


@pytest.fixture(scope="module")
def net():
    torch.manual_seed(1)
    return IrasNet(SMALL).eval()


class _ConstantNet(IrasNet):
    """Logits independent of the input."""

    def forward(self, x, *args, **kwargs):
        out = super().forward(x, *args, **kwargs)
        return out._replace(logits=torch.zeros_like(out.logits))


def test_random_model_accuracy_near_chance():
    big = make_dataset(scenario(2), 50, seed=0, split="test")
    torch.manual_seed(0)
    acc = evaluate_accuracy(IrasNet(SMALL), big)
    assert 0.05 <= acc <= 0.20


def test_single_chip_accuracy(net, chips):
    assert evaluate_accuracy(net, chips[:1]) in (0.0, 1.0)
    with pytest.raises(ValueError):
        evaluate_accuracy(net, [])


def test_stage_features_shapes(net, chips):
    assert stage_features(net, chips[:2], 1).shape == (2, 4, 32, 32)
    assert stage_features(net, chips[:2], 2).shape == (2, 8, 16, 16)
    with pytest.raises(ValueError):
        stage_features(net, chips[:2], 3)


def test_scr_curve(net, chips):
    sweep = build_scr_sweep(chips)
    curve = scr_curve(net, sweep, 2)
    assert len(curve["points"]) == 13
    zero = next(p for p in curve["points"] if p["delta_db"] == 0.0)
    assert zero["accuracy"] == evaluate_accuracy(net, chips)
    assert curve["delta_acc_0_p3"] == zero["accuracy"] - curve["points"][-1]["accuracy"]
    with pytest.raises(ValueError):
        scr_curve(net, sweep, 0)


def test_mean_feature_scr_reports_infinities(net, chips):
    rep = mean_feature_scr(net, chips, 2)
    assert rep["n"] == len(chips) and rep["n_inf"] >= 0


@settings(max_examples=5, deadline=None)
@given(idx=st.integers(0, 29), seed=st.integers(0, 100))
def test_attribution_shares_form_probability_vector(net, chips, idx, seed):
    rep = attribute(net, chips[idx], n_coalitions=128, seed=seed)
    assert set(rep.shares) == {"target", "shadow", "clutter"}
    assert sum(rep.shares.values()) == pytest.approx(1.0, abs=1e-6)
    assert all(v >= 0 for v in rep.shares.values())
    assert rep.pixel_db.max() == 0.0 and rep.pixel_db.min() >= -40.0


def test_attribution_is_deterministic(net, chips):
    a = attribute(net, chips[0], seed=4)
    b = attribute(net, chips[0], seed=4)
    assert a.shares == b.shares and np.array_equal(a.pixel_db, b.pixel_db)


def test_constant_model_is_degenerate(chips):
    null = _ConstantNet(SMALL).eval()
    rep = attribute(null, chips[0], n_coalitions=128)
    assert rep.degenerate
    assert rep.shares == {"target": 1 / 3, "shadow": 1 / 3, "clutter": 1 / 3}


def test_attribution_budget_and_masks(net, chips):
    with pytest.raises(ValueError):
        attribute(net, chips[0], n_coalitions=100)
    with pytest.raises(ValueError):
        attribute(net, chips[0].replace(m_t=None))


def test_attribution_sees_target_only_model(chips):
    """A model that reads only target pixels gets no clutter attribution."""

    class TargetOnly(IrasNet):
        def forward(self, x, *args, **kwargs):
            out = super().forward(x, *args, **kwargs)
            region = torch.from_numpy(chips[0].m_t).to(x.dtype)
            score = (x.view(x.shape[0], -1) * region.view(1, -1)).sum(1) / region.sum()
            logits = torch.stack([10 * score] + [torch.zeros_like(score)] * 9, dim=1)
            return out._replace(logits=logits)

    rep = attribute(TargetOnly(SMALL).eval(), chips[0], n_coalitions=128)
    assert rep.shares["clutter"] == 0.0 and rep.shares["shadow"] == 0.0


def test_ablation_grid_layout():
    assert len(ABLATION_GRID) == 10
    assert ABLATION_GRID[0].label == "CNN" and not ABLATION_GRID[0].uses_crm
    assert ABLATION_GRID[-1] == AblationConfig(label="IRASNet")
    m, t = ABLATION_GRID[5].configure(SMALL, TrainConfig())
    assert m.use_crm and not t.use_l_t and not t.use_l_s


def test_run_ablation_table(monkeypatch, chips):
    calls = []

    def fake_train(corpus, t_cfg, m_cfg):
        calls.append((m_cfg, t_cfg))
        torch.manual_seed(t_cfg.seed)
        return IrasNet(m_cfg).eval(), None

    monkeypatch.setattr(ek, "train", fake_train)
    rows = run_ablation(ABLATION_GRID, None, chips, seeds=[0, 1], model_cfg=SMALL)
    assert len(rows) == 10 and len(calls) == 20
    assert rows[0]["delta_vs_first"] == 0.0
    assert all(len(r["accuracies"]) == 2 for r in rows)
    cache = {}
    run_ablation(ABLATION_GRID[:2], None, chips, seeds=[0], model_cfg=SMALL, cache=cache)
    n = len(calls)
    run_ablation(ABLATION_GRID[:2], None, chips, seeds=[0], model_cfg=SMALL, cache=cache)
    assert len(calls) == n
    with pytest.raises(ValueError):
        run_ablation(ABLATION_GRID, None, chips, seeds=[])


def test_full_row_equals_fresh_training(chips):
    doms = {"Syn": [c.replace(domain="Syn") for c in chips[:10]], "Aug": [c.replace(domain="Aug") for c in chips[10:20]]}
    t_cfg = TrainConfig(epochs=1, batch_size=10, seed=5)
    rows = run_ablation(ABLATION_GRID[-1:], doms, chips, seeds=[5], model_cfg=SMALL,
                        train_cfg=t_cfg)
    fresh, _ = train(doms, t_cfg, SMALL)
    assert rows[0]["accuracies"][0] == evaluate_accuracy(fresh, chips)
