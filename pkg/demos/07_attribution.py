"""
Which region drives the decision?
=================================

Shapley-style attribution over region-pure superpixels, summarised as the
share of evidence that falls on target, shadow and clutter. A briefly
trained model is used so the script stays quick.
"""
import numpy as np
import torch

from irasnet.evalkit import attribute, corpus_clutter_mean
from irasnet.protocol import ToyProtocol, train_variant

torch.set_num_threads(1)
proto = ToyProtocol(epochs=3, augment_factor=1)
model, _ = train_variant(proto, "irasnet", seed=0)
test = proto.test_set(0)[::30]
fill = corpus_clutter_mean(test)

# %%
for chip in test:
    rep = attribute(model, chip, fill_value=fill, n_coalitions=256)
    shares = "  ".join(f"{k} {v:.2f}" for k, v in rep.shares.items())
    print(f"class {chip.label}: {shares}  (pixels above floor: {(rep.pixel_db > -40).sum()})")
