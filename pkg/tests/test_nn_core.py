import math

import numpy as np
import pytest
import torch
import torch.nn.functional as F
from hypothesis import given, settings, strategies as st

from _oracles import finite_difference_check
from irasnet.crm import mask_loss
from irasnet.errors import ConfigurationError
from irasnet.nn_core import (
    ConvBnRelu, GradientReversal, GrlConfig, adv_loss, cls_loss, conv_bn_relu, grl,
    nll_from_logits,
)


def test_zero_weights_give_zero_output():
    block = ConvBnRelu(2, 3, 3).eval()
    torch.nn.init.zeros_(block.conv.weight)
    torch.nn.init.zeros_(block.conv.bias)
    assert not block(torch.randn(1, 2, 5, 5)).any()


def test_output_nonnegative():
    assert (conv_bn_relu(torch.randn(2, 3, 8, 8), 3, 4) >= 0).all()


def test_identity_kernel_oracle():
    block = ConvBnRelu(1, 1, 3).eval()
    with torch.no_grad():
        block.conv.weight.zero_()
        block.conv.weight[0, 0, 1, 1] = 1.0
        block.conv.bias.zero_()
    x = torch.tensor([[[[0.5, -1.0, 2.0], [-0.3, 0.0, 1.5], [3.0, -2.0, 0.7]]]])
    # inference-mode BN with unit scale/zero shift and running stats (0, 1)
    expected = torch.relu(x / math.sqrt(1.0 + block.bn.eps))
    assert torch.allclose(block(x), expected, atol=1e-7)
    assert torch.allclose(block(x), torch.relu(x), atol=1e-5)


def test_even_kernel_and_channel_mismatch():
    with pytest.raises(ConfigurationError):
        ConvBnRelu(1, 1, 4)
    with pytest.raises(ConfigurationError):
        ConvBnRelu(2, 1, 3)(torch.zeros(1, 3, 4, 4))


@settings(max_examples=25, deadline=None)
@given(lam=st.floats(0, 5), seed=st.integers(0, 1000))
def test_grl_identity_forward_and_scaled_backward(lam, seed):
    g = torch.Generator().manual_seed(seed)
    x = torch.randn(4, 3, generator=g, dtype=torch.float64, requires_grad=True)
    up = torch.randn(4, 3, generator=g, dtype=torch.float64)
    y = grl(x, lam)
    assert torch.equal(y, x)
    y.backward(up)
    assert torch.equal(x.grad, -lam * up)


@pytest.mark.parametrize("lam,expected", [(1.0, [-2.0, 4.0]), (0.5, [-1.0, 2.0])])
def test_grl_hand_values(lam, expected):
    x = torch.zeros(2, requires_grad=True)
    GradientReversal(lam)(x).backward(torch.tensor([2.0, -4.0]))
    assert x.grad.tolist() == expected


def test_grl_rejects_negative_lambda():
    with pytest.raises(ValueError):
        grl(torch.zeros(1), -1.0)


def test_grl_schedule():
    ramp = GrlConfig(1.0, "ramp")
    assert ramp.at(0.0) == 0.0
    assert ramp.at(1.0) == pytest.approx(2 / (1 + math.exp(-10)) - 1)
    assert GrlConfig(0.3, "constant").at(0.5) == 0.3
    with pytest.raises(ValueError):
        GrlConfig(1.0, "cosine")


def test_cls_loss_closed_forms():
    one_hot = torch.eye(10)[[3, 7]]
    assert cls_loss(one_hot, torch.tensor([3, 7])).item() == pytest.approx(0.0, abs=1e-12)
    uniform = torch.full((4, 10), 0.1, dtype=torch.float64)
    assert cls_loss(uniform, torch.zeros(4)).item() == pytest.approx(math.log(10), abs=1e-9)
    probs = torch.tensor([[0.5, 0.5], [0.25, 0.75]], dtype=torch.float64)
    assert cls_loss(probs, torch.tensor([0, 0])).item() == pytest.approx(1.039721, abs=1e-6)


def test_cls_loss_rejects_unnormalised_rows():
    with pytest.raises(ValueError):
        cls_loss(torch.tensor([[0.5, 0.6]]), torch.tensor([0]))


def test_adv_loss_closed_forms():
    assert adv_loss(torch.eye(2), torch.tensor([0, 1])).item() == pytest.approx(0.0, abs=1e-12)
    half = torch.full((3, 2), 0.5, dtype=torch.float64)
    assert adv_loss(half, torch.tensor([0, 1, 1])).item() == pytest.approx(0.693147, abs=1e-6)
    with pytest.raises(ValueError):
        adv_loss(torch.full((1, 3), 1 / 3), torch.tensor([0]))


def test_logits_form_matches_probability_form():
    logits = torch.randn(6, 10, dtype=torch.float64)
    y = torch.randint(0, 10, (6,))
    assert nll_from_logits(logits, y).item() == pytest.approx(
        cls_loss(F.softmax(logits, 1), y).item(), rel=1e-12)


def test_cls_loss_gradient_matches_finite_differences():
    y = torch.randint(0, 10, (16,), generator=torch.Generator().manual_seed(0))
    logits = torch.randn(16, 10, dtype=torch.float64)
    err = finite_difference_check(lambda z: cls_loss(F.softmax(z, 1), y), logits, 100)
    assert err < 1e-4


def test_adv_loss_gradient_matches_finite_differences():
    d = torch.randint(0, 2, (64,), generator=torch.Generator().manual_seed(1))
    logits = torch.randn(64, 2, dtype=torch.float64)
    err = finite_difference_check(lambda z: adv_loss(F.softmax(z, 1), d), logits, 100)
    assert err < 1e-4


def test_mask_loss_gradient_matches_finite_differences():
    g = torch.Generator().manual_seed(2)
    h = torch.rand(2, 4, 6, 6, generator=g, dtype=torch.float64)
    f = torch.randn(2, 4, 6, 6, generator=g, dtype=torch.float64)
    assert finite_difference_check(lambda z: mask_loss(z, h), f, 120) < 1e-4
