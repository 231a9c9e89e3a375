"""
Cost volume, soft-argmin and the confidence map
===============================================

Build a correlation volume between two feature maps with a known shift,
read off the displacement and look at where matching is confident.
"""

# %%
# Two random feature maps where the query is the previous map shifted by
# (2, 1) cells.  ``f_t(x) = f_prev(x + shift)``.
import numpy as np

from munet.mu_layer import build_cost_volume, soft_argmin_displacement, uncertainty_map
from munet.oracles import hard_argmax_displacement
from munet.synthetic import shifted_features

rng = np.random.default_rng(0)
f_t, f_prev = shifted_features(rng, d=8, h=12, w=12, shift=(2, 1))
cost = build_cost_volume(f_t, f_prev, window=(7, 7))
print("cost volume layout (U, V, H, W):", cost.values.shape)

# %%
# The hard argmax sees the true offset on interior cells.
hard = hard_argmax_displacement(cost.values)
print("hard argmax, interior u:", np.unique(hard[0, 3:-3, 3:-3]), "v:", np.unique(hard[1, 3:-3, 3:-3]))

# %%
# Soft-argmin is an expectation over the window.  Cosine scores live in
# [-1, 1], so at unit temperature the softmax stays broad and the estimate
# is pulled toward the window centre.  A larger inverse temperature sharpens it.
for beta in (1.0, 50.0, 400.0):
    disp = soft_argmin_displacement(cost, beta=beta)
    err = np.abs(disp[:, 3:-3, 3:-3] - np.array([2.0, 1.0])[:, None, None]).max()
    print(f"beta {beta:5.0f}: worst interior error {err:.4f}")

# %%
# The confidence map is the best score per cell.  Interior cells find an
# exact copy; border cells whose match left the frame score lower.
unc = uncertainty_map(cost)[0]
print("interior confidence min:", unc[3:-3, 3:-3].min().round(6))
print("corner confidence:", unc[-1, -1].round(3))

# %%
# Colour renderings of the flow and confidence map, as written by the CLI.
from munet.visualize import visualize_flow, visualize_uncertainty

rgb = visualize_flow(soft_argmin_displacement(cost, beta=400.0))
heat = visualize_uncertainty(uncertainty_map(cost), 48, 48)
print("flow image", rgb.shape, "heat map", heat.shape)
