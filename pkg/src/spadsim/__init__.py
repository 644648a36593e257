"""Single-photon-camera simulation and HDR dataset toolkit.

Converts linear-radiance HDR images into statistically faithful monochrome
photon-count frames (non-paralyzable dead-time model), reconstructs flux by
count inversion, tone-maps to 8-bit, emits paired training datasets at
multiple resolutions, and scores predictions with full-reference metrics.
"""

from .hdr_io import (
    HdrFormatError,
    HdrImage,
    LdrImage,
    RgbePixel,
    downsample,
    float_to_rgbe,
    load_hdr,
    read_ldr,
    read_radiance_hdr,
    rgbe_to_float,
    save_hdr,
    write_ldr,
    write_radiance_hdr,
)
from .metrics import MetricReport, MetricRow, evaluate_set, log_psnr, psnr, ssim
from .pipeline_cli import (
    DatasetManifest,
    PipelineConfig,
    assign_splits,
    export_for_model,
    generate_dataset,
    main,
    score_predictions,
    simulate_single,
)
from .radiometry import ExposurePlan, FluxField, flux_from_image, luminance, plan_exposure
from .rng import PixelStream
from .spad_core import (
    CountFrame,
    SpadConfig,
    average_frames,
    count_ceiling,
    count_variance,
    expected_count,
    invert_count,
    sample_count_exact,
    sample_count_gaussian,
    saturation_ceiling,
    simulate_frame,
    snr_flux,
)
from .tonemap import (
    TonemapParams,
    inverse_tonemap_gamma,
    quantize8,
    tonemap_log,
    tonemap_reinhard,
)

__version__ = "0.1.0"

__all__ = [
    "CountFrame",
    "DatasetManifest",
    "ExposurePlan",
    "FluxField",
    "HdrFormatError",
    "HdrImage",
    "LdrImage",
    "MetricReport",
    "MetricRow",
    "PipelineConfig",
    "PixelStream",
    "RgbePixel",
    "SpadConfig",
    "TonemapParams",
    "assign_splits",
    "average_frames",
    "count_ceiling",
    "count_variance",
    "downsample",
    "evaluate_set",
    "expected_count",
    "export_for_model",
    "float_to_rgbe",
    "flux_from_image",
    "generate_dataset",
    "inverse_tonemap_gamma",
    "invert_count",
    "load_hdr",
    "log_psnr",
    "luminance",
    "main",
    "plan_exposure",
    "psnr",
    "quantize8",
    "read_ldr",
    "read_radiance_hdr",
    "rgbe_to_float",
    "sample_count_exact",
    "sample_count_gaussian",
    "saturation_ceiling",
    "save_hdr",
    "score_predictions",
    "simulate_frame",
    "simulate_single",
    "snr_flux",
    "ssim",
    "tonemap_log",
    "tonemap_reinhard",
    "write_ldr",
    "write_radiance_hdr",
]
