"""
Training on synthetic + augmented data, testing on measured-like chips
======================================================================

One seed of the toy protocol for the plain CNN, the CNN with the domain
adversarial branch, and the full model. Pass a number of epochs to shorten
or lengthen the run (default 30; about eight minutes on one core).
"""
import sys

import torch

from irasnet.evalkit import evaluate_accuracy, mean_feature_scr, scr_curve
from irasnet.protocol import ToyProtocol, train_variant

torch.set_num_threads(1)
epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 30
proto = ToyProtocol(epochs=epochs)
seed = 0
domains = proto.source_domains(seed)
test = proto.test_set(seed)
sweep = proto.sweep(seed, step=3.0)
print(f"train: {len(domains['Syn'])} Syn + {len(domains['Aug'])} Aug chips; "
      f"test: {len(test)} MeaLike chips")

# %%
for variant in ("cnn", "cnn_grl", "irasnet"):
    model, log = train_variant(proto, variant, seed, domains)
    line = f"{variant:8s} train acc {log.records[-1]['train_acc']:.2f}  " \
           f"test acc {evaluate_accuracy(model, test):.3f}"
    if variant != "cnn":
        s1 = mean_feature_scr(model, test, 1)["mean_db"]
        s2 = mean_feature_scr(model, test, 2)["mean_db"]
        gap = scr_curve(model, sweep, 2)["delta_acc_0_p3"]
        line += f"  feature SCR {s1:.1f}/{s2:.1f} dB  acc(0)-acc(+3) {gap:+.3f}"
    print(line)
