"""
Motion features and attention fusion
====================================

Run the eight-layer motion network on a motion input and fuse the result
with semantic features through a one-channel attention map.
"""

# %%
import numpy as np

from munet.motion_fusion import MsamParams, additive_fuse, attention_map, motion_net_forward, motion_net_init
from munet.mu_layer import assemble_motion_input

params = motion_net_init(d_out=32, seed=0)
for c_in, c_out, k in params.layer_shapes():
    print(f"conv {k}x{k}: {c_in:3d} -> {c_out:3d}")

# %%
# A motion input is the radius-normalised displacement plus the confidence map.
rng = np.random.default_rng(1)
disp = rng.uniform(-4, 4, (2, 6, 6))
unc = rng.uniform(-1, 1, (1, 6, 6))
x = assemble_motion_input(disp, unc, window=(9, 9))
f_m = motion_net_forward(params, x)
print("motion features:", f_m.shape)

# %%
# With zero attention weights the map is 0.5 everywhere and the fusion
# scales semantic features by 1.5.  Trained weights would vary it per cell.
f_s = rng.uniform(0, 1, (32, 6, 6))
neutral = MsamParams.zeros(32)
print("neutral attention:", np.unique(attention_map(f_m, neutral)))
p = MsamParams(rng.standard_normal((1, 32, 1, 1)), np.zeros(1))
a = attention_map(f_m, p)
print("attention range:", a.min().round(3), a.max().round(3))

# %%
# The additive variant simply sums the two streams.
print("additive fusion shape:", additive_fuse(f_s, f_m).shape)
