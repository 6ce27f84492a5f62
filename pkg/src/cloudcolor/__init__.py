"""Color consistency correction for aligned color point clouds.

The pipeline estimates how much the target cloud overlaps the aligned
source, splits the target into proximity groups by nearest-source
distance (two- or three-level Otsu thresholding), and corrects each
group with the kernel suited to it: bilateral K-nearest interpolation
up close, a blended interpolation/equalization correction at moderate
range, and histogram equalization far away.  Classical baselines and
CMD/CPSNR metrics are included for side-by-side evaluation.
"""

from .baselines import agl_correct, hm_correct, knn_correct, nn_correct
from .cloud import ColorPointCloud, RigidTransform, apply_transform
from .colorspace import (
    ChannelCdf,
    ChannelHistogram,
    LabColor,
    build_histogram,
    cumulative,
    delta_e,
    delta_e_array,
    he_map,
    he_map_lut,
    quantize_colors,
    rgb_array_to_lab,
    rgb_to_lab,
)
from .correction import (
    CorrectionReport,
    KbiParams,
    ModerateWeighting,
    PipelineConfig,
    ValidNeighborSet,
    build_he_working_sets,
    correct_close,
    correct_distant,
    correct_moderate,
    filter_valid_neighbors,
    kbi_delta,
    moderate_weighting,
    resolve_sigma_d,
    run_pipeline,
)
from .grouping import (
    GroupAssignment,
    GroupLabel,
    OverlapEstimate,
    choose_partition,
    estimate_overlap,
    partition,
)
from .metrics import MetricReport, cmd, cpsnr, evaluate
from .ply_io import read_ply, write_ply
from .spatial import NeighborSet, SpatialIndex, build_index
from .synth import SynthSpec, generate_pair
from .thresholding import (
    DistanceDistribution,
    ThresholdSet,
    build_distance_distribution,
    distribution_from_distances,
    otsu_three_level,
    otsu_two_level,
)
from . import errors

__version__ = "0.1.0"

__all__ = [
    "ColorPointCloud", "RigidTransform", "apply_transform",
    "read_ply", "write_ply",
    "SpatialIndex", "NeighborSet", "build_index",
    "LabColor", "rgb_to_lab", "rgb_array_to_lab", "delta_e", "delta_e_array",
    "ChannelHistogram", "ChannelCdf", "build_histogram", "cumulative",
    "he_map", "he_map_lut", "quantize_colors",
    "DistanceDistribution", "ThresholdSet", "build_distance_distribution",
    "distribution_from_distances", "otsu_two_level", "otsu_three_level",
    "OverlapEstimate", "GroupAssignment", "GroupLabel",
    "estimate_overlap", "choose_partition", "partition",
    "KbiParams", "ValidNeighborSet", "ModerateWeighting", "PipelineConfig",
    "CorrectionReport", "filter_valid_neighbors", "kbi_delta",
    "moderate_weighting", "build_he_working_sets",
    "correct_close", "correct_moderate", "correct_distant",
    "resolve_sigma_d", "run_pipeline",
    "nn_correct", "knn_correct", "hm_correct", "agl_correct",
    "MetricReport", "cmd", "cpsnr", "evaluate",
    "SynthSpec", "generate_pair",
    "errors",
]
