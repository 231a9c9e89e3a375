"""Motion-uncertainty video object segmentation in plain numpy."""

from .config import RunConfig, load_config, parse_config, serialize_config
from .losses import LossResult, bootstrap_ce, fit_linear_head, mask_iou_loss, total_loss
from .masks import ObjectMask, soft_aggregate
from .memory import MemoryBank, NoReferenceError, QueryEmbedding, embed_kv, memory_read, memory_write
from .metrics import boundary_f, boundary_f_exact, jaccard_j
from .motion_fusion import (
    MotionNetParams,
    MsamParams,
    additive_fuse,
    attention_map,
    motion_net_forward,
    motion_net_init,
    msam_fuse,
)
from .mu_layer import (
    CostVolume,
    MotionBundle,
    assemble_motion_input,
    build_cost_volume,
    project_features,
    soft_argmin_displacement,
    soft_argmin_grad,
    uncertainty_map,
)
from .pipeline import init_params, init_state, run_sequence, segment_frame
from .tensor_core import ShapeError

__version__ = "0.1.0"
