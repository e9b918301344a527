"""
Threshold segmentation baseline
===============================

Pixel-level segmentation is the preprocessing route that clutter reduction
inside the network is meant to replace. Here it is run on clean and speckled
chips, with both parameter sets, and scored against the ground truth.
"""
import numpy as np

from irasnet.sar_scene import ChipSpec, render_chip, shadow_length, shadow_mask, target_mask
from irasnet.scenarios import make_dataset, scenario
from irasnet.scr_lab import image_scr
from irasnet.segmentation import (
    MEASURED_PARAMS, SYNTHETIC_PARAMS, apply_target_mask, mask_iou, segment,
)

# %%
# On a piecewise-constant chip the thresholds recover the masks exactly.
spec = ChipSpec(class_id=0)
m_t = target_mask(spec)
m_s = shadow_mask(m_t, shadow_length(spec))
img = np.where(m_t, 0.9, np.where(m_s, 0.02, 0.2))
seg = segment(img)
print("exact recovery:", np.array_equal(seg.m_t, m_t) and np.array_equal(seg.m_s, m_s))

# %%
# Speckle and textured clutter make it much less reliable, more so on the
# measured-like domain.
for split in ("train", "test"):
    chips = make_dataset(scenario(2), 5, seed=4, split=split)
    for name, params in (("synthetic", SYNTHETIC_PARAMS), ("measured", MEASURED_PARAMS)):
        ious = [mask_iou(segment(c.amplitude, params).m_t, c.m_t) for c in chips]
        print(f"{chips[0].domain:8s} params={name:9s} mean target IoU {np.mean(ious):.2f}")

# %%
# Masking out everything but the target drives the image SCR to infinity,
# which is what segmentation-based pipelines implicitly rely on.
chip = render_chip(ChipSpec(class_id=5, seed=2))
masked = apply_target_mask(chip.amplitude, chip.m_t)
print("SCR before %.1f dB, after masking %s" % (
    image_scr(chip.amplitude, chip.m_t, chip.m_c).value_db,
    image_scr(masked, chip.m_t, chip.m_c).value_db))
