import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irasnet.sar_scene import ChipSpec, SarChip, render_chip
from irasnet.scenarios import build_test_sets, scenario, unknown_clutter_set
from irasnet.scr_lab import (
    build_scr_sweep, chip_scr, composite_clutter, downsample_masks, feature_scr, image_scr,
    shift_scr, sweep_deltas,
)


def _brute_scr(img, m_t, m_c):
    peak, total, n = -np.inf, 0.0, 0
    for i in range(img.shape[0]):
        for j in range(img.shape[1]):
            if m_t[i, j]:
                peak = max(peak, img[i, j])
            if m_c[i, j]:
                total += img[i, j]
                n += 1
    return math.inf if n == 0 or total == 0 else 20 * math.log10(peak / (total / n))


def test_image_scr_closed_form():
    img = np.full((4, 4), 0.1)
    img[1, 1] = 1.0
    m_t = np.zeros((4, 4), bool)
    m_t[1, 1] = True
    assert image_scr(img, m_t, ~m_t).value_db == pytest.approx(20.0)


def test_image_scr_zero_clutter_is_infinite():
    img = np.zeros((4, 4))
    img[0, 0] = 0.5
    m_t = np.zeros((4, 4), bool)
    m_t[0, 0] = True
    assert image_scr(img, m_t, ~m_t).value_db == math.inf
    assert image_scr(img, m_t, np.zeros_like(m_t)).value_db == math.inf


def test_image_scr_after_target_masking_is_infinite():
    chip = render_chip(ChipSpec(class_id=2, seed=3))
    masked = chip.amplitude * chip.m_t
    assert image_scr(masked, chip.m_t, chip.m_c).value_db == math.inf


@pytest.mark.parametrize("seed", range(10))
def test_image_scr_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    img = rng.uniform(0.01, 1, (8, 8))
    region = rng.integers(0, 3, (8, 8))
    m_t, m_s = region == 0, region == 1
    m_t[0, 0] = True
    m_s[0, 0] = False
    m_c = ~(m_t | m_s)
    assert image_scr(img, m_t, m_c).value_db == pytest.approx(_brute_scr(img, m_t, m_c), abs=1e-12)


def test_image_scr_empty_target_raises():
    with pytest.raises(ValueError):
        image_scr(np.ones((3, 3)), np.zeros((3, 3), bool), np.ones((3, 3), bool))


@pytest.fixture(scope="module")
def chip():
    return render_chip(ChipSpec(class_id=5, seed=77))


def test_shift_zero_is_identity(chip):
    out = shift_scr(chip, 0.0)
    assert np.array_equal(out.amplitude, chip.amplitude)


def test_shift_minus_three():
    amp = np.random.default_rng(1).uniform(0.05, 0.15, (16, 16))
    m_t = np.zeros((16, 16), bool)
    m_t[6:10, 6:10] = True
    amp[m_t] = 0.6
    chip = SarChip(amp, m_t, np.zeros_like(m_t), 0)
    # bring the chip to 12 dB first (a downward shift, so nothing clips), then shift by -3
    at12 = shift_scr(chip, 12.0 - chip_scr(chip).value_db)
    assert chip_scr(at12).value_db == pytest.approx(12.0, abs=1e-9)
    assert chip_scr(shift_scr(at12, -3.0)).value_db == pytest.approx(9.0, abs=0.05)


def test_shift_gain_factor(chip):
    out = shift_scr(chip, 3.0)
    m_c = chip.m_c
    np.testing.assert_allclose(out.amplitude[m_c], chip.amplitude[m_c] * 10 ** (-3 / 20))
    assert 10 ** (-3 / 20) == pytest.approx(0.70795, abs=1e-5)
    keep = ~m_c
    assert np.array_equal(out.amplitude[keep], chip.amplitude[keep])


def test_shift_clips_and_flags():
    img = np.full((8, 8), 0.9)
    m_t = np.zeros((8, 8), bool)
    m_t[3:5, 3:5] = True
    c = SarChip(img, m_t, np.zeros_like(m_t), 0)
    out = shift_scr(c, -6.0)
    assert out.flags.get("clipped")
    assert out.amplitude.max() <= 1.0
    assert "clipped" not in c.flags


@settings(max_examples=30, deadline=None)
@given(delta=st.floats(-3, 3), seed=st.integers(0, 1000))
def test_shift_round_trip(delta, seed):
    chip = render_chip(ChipSpec(class_id=seed % 10, seed=seed))
    there = shift_scr(chip, delta)
    back = shift_scr(there, -delta)
    if not there.flags.get("clipped"):
        np.testing.assert_allclose(back.amplitude, chip.amplitude, rtol=1e-12, atol=1e-15)
        assert chip_scr(there).value_db - chip_scr(chip).value_db == pytest.approx(delta, abs=1e-9)


def test_sweep_has_thirteen_sets(chip):
    sweep = build_scr_sweep([chip])
    assert len(sweep) == 13
    assert sorted(sweep) == [-3 + 0.5 * k for k in range(13)]
    assert np.array_equal(sweep[0.0][0].amplitude, chip.amplitude)


def test_sweep_offsets_and_no_mutation():
    chips = [render_chip(ChipSpec(class_id=k % 10, seed=k)) for k in range(12)]
    before = [c.amplitude.copy() for c in chips]
    sweep = build_scr_sweep(chips)
    base = np.mean([chip_scr(c).value_db for c in sweep[0.0]])
    for d, cs in sweep.items():
        assert np.mean([chip_scr(c).value_db for c in cs]) - base == pytest.approx(d, abs=0.05)
    for c, b in zip(chips, before):
        assert np.array_equal(c.amplitude, b)


def test_sweep_step_must_divide_range():
    with pytest.raises(ValueError):
        sweep_deltas((-3, 3), 0.7)


def test_composite_identity_patch(chip):
    out = composite_clutter(chip, chip.amplitude.copy())
    assert np.array_equal(out.amplitude, chip.amplitude)


def test_composite_preserves_target_and_shadow(chip):
    patch = np.random.default_rng(0).uniform(0, 1, (80, 80))
    out = composite_clutter(chip, patch)
    keep = chip.m_t | chip.m_s
    assert np.array_equal(out.amplitude[keep], chip.amplitude[keep])
    assert np.array_equal(out.m_t, chip.m_t) and np.array_equal(out.m_s, chip.m_s)
    m_c = chip.m_c
    expected = 20 * np.log10(chip.amplitude[chip.m_t].max() / patch[:64, :64][m_c].mean())
    assert chip_scr(out).value_db == pytest.approx(expected)


def test_composite_small_patch_raises(chip):
    with pytest.raises(ValueError):
        composite_clutter(chip, np.zeros((10, 64)))


def test_feature_scr_constant_map_is_zero_db():
    m_t = np.zeros((8, 8), bool)
    m_t[2:4, 2:4] = True
    assert feature_scr(np.ones((4, 8, 8)), m_t, ~m_t) == pytest.approx(0.0)


def test_feature_scr_zero_clutter_is_infinite():
    m_t = np.zeros((8, 8), bool)
    m_t[2:4, 2:4] = True
    F = np.zeros((4, 8, 8))
    F[:, 2:4, 2:4] = 1.0
    assert feature_scr(F, m_t, ~m_t) == math.inf


@pytest.mark.parametrize("seed", range(5))
def test_feature_scr_matches_triple_loop(seed):
    rng = np.random.default_rng(seed)
    F = rng.normal(size=(4, 8, 8))
    m_t = rng.uniform(size=(8, 8)) < 0.2
    m_t[0, 0] = True
    m_c = ~m_t & (rng.uniform(size=(8, 8)) < 0.7)
    peak, total, n = -np.inf, 0.0, 0
    for c in range(4):
        for w in range(8):
            for h in range(8):
                if m_t[w, h]:
                    peak = max(peak, F[c, w, h])
                if m_c[w, h]:
                    total += abs(F[c, w, h])
                    n += 1
    expected = 20 * math.log10(peak / (total / n)) if peak > 0 else -math.inf
    assert feature_scr(F, m_t, m_c) == pytest.approx(expected)


def test_feature_scr_shape_and_empty_checks():
    with pytest.raises(ValueError):
        feature_scr(np.ones((2, 4, 4)), np.ones((8, 8), bool), np.ones((8, 8), bool))
    with pytest.raises(ValueError):
        feature_scr(np.ones((2, 4, 4)), np.zeros((4, 4), bool), np.ones((4, 4), bool))


def test_downsample_excludes_mixed_cells():
    m_t = np.zeros((8, 8), bool)
    m_t[2:6, 2:6] = True
    m_s = np.zeros((8, 8), bool)
    m_s[6:8, 2:6] = True
    t_ds, c_ds = downsample_masks(m_t, m_s, (4, 4))
    assert t_ds[1:3, 1:3].all() and t_ds.sum() == 4
    assert not (t_ds & c_ds).any()
    assert not c_ds[3, 1:3].any()   # shadow cells
    assert c_ds[0].all()


def test_scenario_test_sets():
    sets = build_test_sets(scenario(3), 1, seed=0)
    assert len([k for k in sets if k.startswith("scr_")]) == 13
    sets4 = build_test_sets(scenario(4), 1, seed=0)
    base, unk = sets4["measured"], sets4["unknown_clutter"]
    for a, b in zip(base, unk):
        keep = a.m_t | a.m_s
        assert np.array_equal(a.amplitude[keep], b.amplitude[keep])
        assert not np.array_equal(a.amplitude, b.amplitude)


def test_unknown_clutter_is_deterministic():
    base = build_test_sets(scenario(2), 1, seed=4)["measured"]
    a = unknown_clutter_set(base, ("urban_blobs",), 9)
    b = unknown_clutter_set(base, ("urban_blobs",), 9)
    assert all(np.array_equal(x.amplitude, y.amplitude) for x, y in zip(a, b))
