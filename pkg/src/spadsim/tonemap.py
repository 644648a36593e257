"""Dynamic-range compression and expansion.

Forward operators map nonnegative radiance into [0, 1] for 8-bit export; the
inverse operator expands a normalized 8-bit image back to linear radiance
with a gamma curve.  All operators are strictly monotone on positive inputs,
so pixel ordering survives the round trip.
"""

import math
from dataclasses import dataclass

import numpy as np

from .hdr_io import HdrImage, LdrImage

_OPERATORS = ("log", "reinhard")


@dataclass(frozen=True)
class TonemapParams:
    """Tone curve parameters.

    log_mu steers the log curve (larger compresses highlights harder);
    reinhard_white is the radiance mapped to exactly 1 (infinite by default);
    gamma and hdr_scale shape the inverse mapping y = hdr_scale * x**gamma.
    """

    operator: str = "log"
    log_mu: float = 500.0
    reinhard_white: float = math.inf
    gamma: float = 2.2
    hdr_scale: float = 1.0

    def __post_init__(self):
        if self.operator not in _OPERATORS:
            raise ValueError(f"operator must be one of {_OPERATORS}")
        if not (math.isfinite(self.log_mu) and self.log_mu > 0):
            raise ValueError("log_mu must be finite and positive")
        if not self.reinhard_white > 0:
            raise ValueError("reinhard_white must be positive (may be inf)")
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError("gamma must be finite and positive")
        if not (math.isfinite(self.hdr_scale) and self.hdr_scale > 0):
            raise ValueError("hdr_scale must be finite and positive")


def _as_field(field):
    x = np.asarray(getattr(field, "pixels", field), dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("field values must be finite")
    if np.any(x < 0):
        raise ValueError("field values must be nonnegative")
    return x


def tonemap_log(field, params=None):
    """Normalized log curve y = log(1 + mu*x/x_max) / log(1 + mu).

    x_max is the global field maximum (all channels), so the curve is
    invariant to uniform scaling and the maximum maps to exactly 1.  An
    all-zero field stays all-zero.
    """
    params = params or TonemapParams()
    x = _as_field(field)
    x_max = x.max()
    if x_max == 0.0:
        return np.zeros_like(x)
    mu = params.log_mu
    return np.log1p(mu * (x / x_max)) / np.log1p(mu)


def tonemap_reinhard(field, params=None):
    """Global curve y = x*(1 + x/white**2) / (1 + x), clipped to [0, 1].

    With the default infinite white point this is x/(1+x), bounded below 1;
    a finite white point maps x = white to exactly 1.
    """
    params = params or TonemapParams()
    x = _as_field(field)
    r = x / params.reinhard_white
    y = (x + r * r) / (1.0 + x)
    return np.minimum(y, 1.0)


def quantize8(field):
    """Round-half-up of 255*y to 8 bits; input clamped into [0, 1] first."""
    y = np.asarray(getattr(field, "pixels", field), dtype=np.float64)
    if y.ndim not in (2, 3) or (y.ndim == 3 and y.shape[2] != 3):
        raise ValueError("field must have shape (h, w) or (h, w, 3)")
    y = np.clip(y, 0.0, 1.0)
    return LdrImage(np.floor(255.0 * y + 0.5).astype(np.uint8))


def inverse_tonemap_gamma(field, params=None):
    """Expand a normalized [0, 1] field to linear radiance.

    y = hdr_scale * x**gamma per channel; 8-bit input is divided by 255
    first.  Output is a float32 HdrImage in [0, hdr_scale]; 2D input becomes
    monochrome content with r = g = b.
    """
    params = params or TonemapParams()
    if isinstance(field, LdrImage):
        x = field.pixels.astype(np.float64) / 255.0
    else:
        x = np.asarray(getattr(field, "pixels", field), dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise ValueError("field values must be finite")
        if np.any(x < 0) or np.any(x > 1):
            raise ValueError("field values must lie in [0, 1]")
    y = params.hdr_scale * np.power(x, params.gamma)
    if y.ndim == 2:
        return HdrImage.from_gray(y.astype(np.float32))
    return HdrImage(y.astype(np.float32))
