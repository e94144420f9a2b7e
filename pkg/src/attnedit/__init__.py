"""Attention-guided one-step drag editing on a toy latent-diffusion substrate."""

from .grids import (AttentionMap, BinaryMask, LatentGrid, MovementField, Point,
                    deserialize_grid, flatten_index, serialize_grid,
                    unflatten_index)
from .diffusion import (AttentionRecord, DenoiserConfig, InversionTrace,
                        NoiseSchedule, ddim_invert, ddim_sample, predict_noise)
from .attention import aggregate_maps, slice_attention_map, slice_attention_row
from .masks import MaskConfig, generate_mask
from .movement import (DragInstruction, WarpResult, compute_movement_field,
                       drag_vector, warp_latent)
from .interpolation import interpolate_blanks
from .pipeline import (EditConfig, EditReport, EditRequest, baseline_roundtrip,
                       compose_multi_point, run_edit, run_inpaint)
from .scenes import (SyntheticScene, make_scene, mean_distance, random_scene,
                     region_fidelity, tau_sweep)

__version__ = "0.1.0"
