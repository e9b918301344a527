import math

import pytest
import torch
from hypothesis import given, settings, strategies as st

from irasnet.crm import CRM, crm_forward, mask_loss, normalize_encoding
from irasnet.errors import ConfigurationError, ContractError
from irasnet.network import IrasNet, MaskEncoder, ModelConfig


def _zero_convs(module):
    with torch.no_grad():
        for m in module.modules():
            if isinstance(m, torch.nn.Conv2d):
                m.weight.zero_()
                m.bias.zero_()


@pytest.fixture
def crm():
    torch.manual_seed(0)
    return CRM(4).eval()


def test_branch_shapes_and_sign(crm):
    f_tm, f_sm, f_in_p = crm.branch_split(torch.randn(2, 4, 8, 8))
    for t in (f_tm, f_sm, f_in_p):
        assert t.shape == (2, 4, 8, 8)
        assert (t >= 0).all()


def test_zero_branches_give_zero(crm):
    _zero_convs(crm)
    outs = crm.branch_split(torch.randn(1, 4, 8, 8))
    assert all(not t.any() for t in outs)


def test_region_features_hand_values():
    f_t, f_s = CRM.region_features(torch.tensor([2.0, -1.0]), torch.tensor([0.0, 1.0]),
                                   torch.tensor([0.5, 3.0]))
    assert f_t.tolist() == [1.0, 0.0]
    assert f_s.tolist() == [0.0, 3.0]
    zero_t, zero_s = CRM.region_features(torch.randn(5), torch.randn(5), torch.zeros(5))
    assert not zero_t.any() and not zero_s.any()


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_region_features_bounded_by_product(seed):
    g = torch.Generator().manual_seed(seed)
    a, b = torch.randn(50, generator=g), torch.randn(50, generator=g)
    f_t, _ = CRM.region_features(a, a, b)
    prod = a * b
    assert (f_t >= prod).all() and (f_t >= 0).all()
    assert torch.equal(f_t[prod >= 0], prod[prod >= 0])


def test_attention_shape_sign_and_zero(crm):
    f = torch.rand(3, 4, 8, 8)
    z = crm.attention(f, f)
    assert z.shape == (3, 1, 8, 8) and (z >= 0).all()
    _zero_convs(crm)
    assert not crm.attention(f, f).any()


def test_attention_identity_and_null(crm, monkeypatch):
    f_in = torch.randn(2, 4, 8, 8)
    monkeypatch.setattr(crm, "attention", lambda a, b: torch.ones(2, 1, 8, 8))
    assert torch.equal(crm(f_in).f_out, f_in)
    monkeypatch.setattr(crm, "attention", lambda a, b: torch.zeros(2, 1, 8, 8))
    assert not crm(f_in).f_out.any()


def test_mask_free_call_matches_training_value_path(crm):
    f_in = torch.randn(2, 4, 8, 8)
    masks = (torch.ones(2, 1, 32, 32), torch.zeros(2, 1, 32, 32))
    a = crm_forward(crm, f_in, masks=None, training=False)
    b = crm_forward(crm, f_in, masks=masks, training=True)
    assert torch.equal(a.f_out, b.f_out)
    with pytest.raises(ContractError):
        crm_forward(crm, f_in, masks=None, training=True)


def test_mask_loss_closed_forms():
    big = torch.full((1, 2, 3, 3), 1e4)
    assert mask_loss(big, torch.rand(1, 2, 3, 3)).item() == pytest.approx(0.0, abs=1e-9)
    assert mask_loss(torch.randn(1, 2, 3, 3), torch.zeros(1, 2, 3, 3)).item() == 0.0
    f = torch.zeros(1, 1, 1, 2, dtype=torch.float64)       # sigmoid(0) = 0.5
    h = torch.tensor([[[[1.0, 0.0]]]], dtype=torch.float64)  # normalises to (1, 0)
    # mean over N_S = 2 elements of -h log 0.5
    assert mask_loss(f, h).item() == pytest.approx(math.log(2) / 2, abs=1e-12)


def test_mask_loss_single_element_value():
    f = torch.zeros(1, 1, 1, 1, dtype=torch.float64)
    h = torch.ones(1, 1, 1, 1, dtype=torch.float64)
    assert mask_loss(f, h, normalize=False).item() == pytest.approx(0.693147, abs=1e-6)
    # the same map is constant, so the normalising path treats it as degenerate
    loss, flags = mask_loss(f, h, return_flags=True)
    assert loss.item() == 0.0 and flags.tolist() == [True]


def test_mask_loss_clamps_log():
    f = torch.full((1, 1, 2, 2), -1e6, dtype=torch.float64)
    h = torch.tensor([[[[1.0, 0.0], [0.0, 0.0]]]], dtype=torch.float64)
    assert math.isfinite(mask_loss(f, h).item())
    assert mask_loss(f, h).item() == pytest.approx(-math.log(1e-12) / 4)


def test_normalize_encoding_flags_constant_samples():
    h = torch.stack([torch.full((2, 3, 3), 0.7), torch.arange(18.0).view(2, 3, 3)])
    scaled, degenerate = normalize_encoding(h)
    assert degenerate.tolist() == [True, False]
    assert not scaled[0].any()
    assert scaled[1].min() == 0 and scaled[1].max() == 1


def test_mask_loss_shape_mismatch():
    with pytest.raises(ValueError):
        mask_loss(torch.zeros(1, 2, 4, 4), torch.zeros(1, 2, 8, 8))


def test_mask_encoder_shapes_and_purity():
    enc = MaskEncoder(ModelConfig()).eval()
    m = (torch.rand(3, 1, 64, 64) > 0.5).float()
    a, b = enc(m), enc(m.clone())
    assert [tuple(t.shape[1:]) for t in a] == [(16, 32, 32), (32, 16, 16)]
    assert all(torch.equal(x, y) for x, y in zip(a, b))
    _zero_convs(enc)
    assert all(not t.any() for t in enc(torch.zeros(1, 1, 64, 64)))


def test_network_shapes_and_probabilities():
    net = IrasNet(ModelConfig()).eval()
    out = net(torch.rand(5, 1, 64, 64))
    assert out.probs.shape == (5, 10) and out.domain_probs.shape == (5, 2)
    assert torch.allclose(out.probs.sum(1), torch.ones(5), atol=1e-6)
    assert [tuple(f.shape[1:]) for f in out.features] == [(16, 32, 32), (32, 16, 16)]
    assert out.mask_losses == []


def test_network_rejects_bad_shapes():
    with pytest.raises(ConfigurationError):
        ModelConfig(in_size=66)
    with pytest.raises(ConfigurationError):
        IrasNet(ModelConfig())(torch.rand(1, 1, 32, 32))


def test_supervised_forward_requires_masks():
    with pytest.raises(ContractError):
        IrasNet(ModelConfig())(torch.rand(1, 1, 64, 64), supervise=True)


def test_prediction_independent_of_masks():
    torch.manual_seed(3)
    net = IrasNet(ModelConfig(channels=(4, 8))).eval()
    x = torch.rand(2, 1, 64, 64)
    plain = net(x).logits
    for _ in range(3):
        m_t = (torch.rand(2, 1, 64, 64) > 0.5).float()
        m_s = (torch.rand(2, 1, 64, 64) > 0.5).float()
        assert torch.equal(net(x, m_t, m_s, supervise=True).logits, plain)


def test_param_groups_are_disjoint_and_complete():
    net = IrasNet(ModelConfig())
    groups = net.param_groups()
    ids = [id(p) for g in groups.values() for _, p in g]
    assert len(ids) == len(set(ids)) == len(list(net.parameters()))
    assert all(groups[k] for k in ("theta_F", "theta_Y", "theta_D", "theta_M"))
