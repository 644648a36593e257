"""Radiance-to-photon-flux conversion and luminance-based exposure planning."""

import math
from dataclasses import dataclass

import numpy as np

# Rec.601 luma weights
_WR, _WG, _WB = 0.299, 0.587, 0.114


@dataclass(frozen=True)
class FluxField:
    """Per-pixel photon flux, photons/second; float64, shape (height, width)."""

    phi: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.phi, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("phi must have shape (height, width)")
        if not np.all(np.isfinite(p)):
            raise ValueError("flux must be finite")
        if np.any(p < 0):
            raise ValueError("flux must be nonnegative")
        p = np.ascontiguousarray(p)
        p.flags.writeable = False
        object.__setattr__(self, "phi", p)

    @property
    def width(self):
        return self.phi.shape[1]

    @property
    def height(self):
        return self.phi.shape[0]


@dataclass(frozen=True)
class ExposurePlan:
    """Chosen exposure: integration time, radiance-to-flux scale, median flux."""

    exposure_time_T: float
    flux_scale_s: float
    median_flux: float

    def __post_init__(self):
        if not (math.isfinite(self.exposure_time_T) and self.exposure_time_T > 0):
            raise ValueError("exposure time must be finite and positive")
        if not (math.isfinite(self.flux_scale_s) and self.flux_scale_s > 0):
            raise ValueError("flux scale must be finite and positive")
        if not (math.isfinite(self.median_flux) and self.median_flux >= 0):
            raise ValueError("median flux must be finite and nonnegative")


def luminance(image):
    """Per-pixel Rec.601 luma Y = 0.299 R + 0.587 G + 0.114 B, float64."""
    px = np.asarray(getattr(image, "pixels", image), dtype=np.float64)
    if px.ndim != 3 or px.shape[2] != 3:
        raise ValueError("expected an RGB image")
    return px[:, :, 0] * _WR + px[:, :, 1] * _WG + px[:, :, 2] * _WB


def flux_from_image(gray, scale_s):
    """Scale a nonnegative gray field into photon flux: phi = s * gray."""
    if not (math.isfinite(scale_s) and scale_s > 0):
        raise ValueError("flux scale must be finite and positive")
    g = np.asarray(gray, dtype=np.float64)
    return FluxField(scale_s * g)


def _lower_median(values):
    # exact order statistic; the lower of the two middle values for even counts
    k = (values.size - 1) // 2
    return float(np.partition(values, k)[k])


def plan_exposure(gray, config, target_count=870.0, target_x=0.15):
    """Pick the flux scale and exposure time from the median luminance.

    Two independent knobs pin the two free parameters: the flux scale s is
    set so the median pixel sits at q*phi_med*tau_d = target_x on the
    saturation curve (its fill fraction relative to the ceiling is then
    target_x/(1+target_x) no matter what T is), and the exposure time is set
    so the median expected count equals target_count:

        T = target_count * (1 + q*phi_med*tau_d) / (q*phi_med)

    The plan is invariant to uniform rescaling of the input radiance: scaling
    gray by k scales s by 1/k and leaves T and all expected counts unchanged.
    """
    if not (math.isfinite(target_count) and target_count > 0):
        raise ValueError("target count must be finite and positive")
    if not (math.isfinite(target_x) and target_x > 0):
        raise ValueError("target saturation position must be finite and positive")
    if config.dead_time_tau <= 0:
        raise ValueError("dead time must be positive to anchor the saturation target")
    g = np.asarray(gray, dtype=np.float64)
    positive = g[g > 0]
    if positive.size == 0:
        raise ValueError("exposure planning needs at least one positive-luminance pixel")
    q = config.quantum_efficiency_q
    tau = config.dead_time_tau
    g_med = _lower_median(positive)
    s = target_x / (q * tau * g_med)
    phi_med = s * g_med
    T = target_count * (1.0 + q * phi_med * tau) / (q * phi_med)
    return ExposurePlan(exposure_time_T=T, flux_scale_s=s, median_flux=phi_med)
