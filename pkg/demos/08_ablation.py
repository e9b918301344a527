"""
Component ablation
==================

Train every row of the ablation grid (feature toggles F_T/F_S, mask losses
L_T/L_S, adversarial loss) on one seed with a short schedule and print the
accuracy table. A full three-seed run lives in the acceptance suite.
"""
import sys

import torch

from irasnet.evalkit import ABLATION_GRID, run_ablation
from irasnet.protocol import ToyProtocol

torch.set_num_threads(1)
epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 4
proto = ToyProtocol(epochs=epochs, augment_factor=1)
rows = run_ablation(ABLATION_GRID, proto.source_domains(0), proto.test_set(0), seeds=[0],
                    model_cfg=proto.model_config(), train_cfg=proto.train_config(0))
for r in rows:
    on = [k[4:].upper() for k, v in r["toggles"].items() if v]
    print(f"{r['label']:22s} {r['mean_accuracy']:.3f} ({r['delta_vs_first']:+.3f})  {' '.join(on)}")
