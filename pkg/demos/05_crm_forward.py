"""
Inside the clutter reduction module
===================================

Run the network once with masks (training path, mask losses returned) and
once without (inference path) and check that the prediction does not depend
on the masks.
"""
import torch

from irasnet.network import IrasNet, ModelConfig
from irasnet.sar_scene import ChipSpec, render_chip

torch.manual_seed(0)
net = IrasNet(ModelConfig()).eval()
chip = render_chip(ChipSpec(class_id=7, azimuth_deg=25.0, seed=3))
x = torch.from_numpy(chip.amplitude).float()[None, None]
m_t = torch.from_numpy(chip.m_t).float()[None, None]
m_s = torch.from_numpy(chip.m_s).float()[None, None]

# %%
with torch.no_grad():
    sup = net(x, m_t, m_s, supervise=True)
    free = net(x)
for k, (crm, feat) in enumerate(zip(sup.crm, sup.features), start=1):
    print(f"stage {k}: features {tuple(feat.shape[1:])}, attention {tuple(crm.z_s.shape[1:])},"
          f" z_s range [{crm.z_s.min():.3f}, {crm.z_s.max():.3f}]")
for k, (l_t, l_s) in enumerate(sup.mask_losses, start=1):
    print(f"stage {k}: L_T {l_t.item():.4f}  L_S {l_s.item():.4f}")

# %%
print("mask-free logits identical:", torch.equal(sup.logits, free.logits))
for group, params in net.param_groups().items():
    print(f"{group}: {sum(p.numel() for _, p in params)} parameters")
