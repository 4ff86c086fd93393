"""Vessel segmentation with an adjustable skeleton-to-pixel operating point."""

from lalseg._core import (
    DegenerateCurveError,
    Image,
    LabelPair,
    LalError,
    Mask,
    MetricRecord,
    Model,
    NetworkConfig,
    NoVesselError,
    Phantom,
    PhantomConfig,
    RecommendResult,
    SweepResult,
    TrainConfig,
    TrainReport,
    binarize,
    build_unet,
    compute_metrics,
    denoise,
    expected_parameter_count,
    forward,
    lal_loss_value,
    load_checkpoint,
    make_phantom,
    read_pgm_image,
    read_pgm_mask,
    recommend_from_curve,
    recommend_w,
    save_checkpoint,
    skeletonize,
    sweep,
    train,
    uncertainty_map,
    write_pgm_image,
    write_pgm_mask,
)

__all__ = [
    "DegenerateCurveError",
    "Image",
    "LabelPair",
    "LalError",
    "Mask",
    "MetricRecord",
    "Model",
    "NetworkConfig",
    "NoVesselError",
    "Phantom",
    "PhantomConfig",
    "RecommendResult",
    "SweepResult",
    "TrainConfig",
    "TrainReport",
    "binarize",
    "build_unet",
    "compute_metrics",
    "denoise",
    "expected_parameter_count",
    "forward",
    "lal_loss_value",
    "load_checkpoint",
    "make_phantom",
    "read_pgm_image",
    "read_pgm_mask",
    "recommend_from_curve",
    "recommend_w",
    "save_checkpoint",
    "skeletonize",
    "sweep",
    "train",
    "uncertainty_map",
    "write_pgm_image",
    "write_pgm_mask",
]
