"""Video-frame mosaicing with CS-LBP texture features and multi-band blending."""
from .blending import blend_multiband, build_gaussian_pyramid, build_laplacian_pyramid, collapse
from .color import align_channels, align_colors
from .cslbp import CslbpParams, cslbp_code, cslbp_codes, describe, describe_keypoints
from .detect import Keypoint, ScaleSpaceConfig, detect_keypoints
from .evaluation import GroundTruth, MetricRow, evaluate_pair, recall_precision, repeatability
from .imaging import Frame, load_frames, to_grayscale, warp_perspective
from .pipeline import PipelineConfig, build_mosaic, compose_transforms
from .registration import RansacConfig, estimate_homography, match_nndr, ransac_iterations
from .selection import BlockMatchConfig, sad_block_offset, select_frames
from .synthetic import SceneSpec, generate_sequence

__version__ = "0.1.0"
