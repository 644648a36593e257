"""Dead-time photon statistics: closed-form moments, exact renewal sampling,
a moment-matched gaussian sampler, count inversion and frame averaging.

A pixel observing flux phi with quantum efficiency q registers detections at
rate q*phi.  After each detection the detector is blind for a fixed dead time
tau_d; the dead time is non-paralyzable, so photons arriving while blind are
lost and do not extend it.  Over an exposure T the detected count N satisfies

    E[N]   = q*phi*T / (1 + q*phi*tau_d)
    Var[N] = q*phi*T / (1 + q*phi*tau_d)**3

with a hard ceiling of floor(T/tau_d) + 1 detections and a soft saturation
level of T/tau_d that the mean approaches from below as flux grows.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .rng import U64, derive_state, next_gaussian_pair, next_open_unit

_SAMPLERS = ("exact", "gaussian")


@dataclass(frozen=True)
class SpadConfig:
    """Detector physics and simulation parameters.

    quantum_efficiency_q: probability that a live-time photon is detected.
    dead_time_tau: blind interval after each detection, seconds.
    exposure_time_T: integration window, seconds.
    sampler: "exact" (renewal-process draw) or "gaussian" (moment-matched).
    seed: 64-bit stream seed; frames_to_average_K: frames per sample.
    """

    quantum_efficiency_q: float = 0.4
    dead_time_tau: float = 150e-9
    exposure_time_T: float = 1e-3
    sampler: str = "gaussian"
    seed: int = 0
    frames_to_average_K: int = 1

    def __post_init__(self):
        if not 0.0 < self.quantum_efficiency_q <= 1.0:
            raise ValueError("quantum efficiency must be in (0, 1]")
        if not (math.isfinite(self.dead_time_tau) and self.dead_time_tau >= 0.0):
            raise ValueError("dead time must be finite and nonnegative")
        if not (math.isfinite(self.exposure_time_T) and self.exposure_time_T > 0.0):
            raise ValueError("exposure time must be finite and positive")
        if self.sampler not in _SAMPLERS:
            raise ValueError(f"sampler must be one of {_SAMPLERS}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if int(self.frames_to_average_K) < 1:
            raise ValueError("frames_to_average_K must be at least 1")


@dataclass(frozen=True)
class CountFrame:
    """Per-pixel detected-photon counts for one exposure.

    Counts are integer-valued for single simulated frames and fractional
    after averaging; stored float64, shape (height, width).
    """

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise ValueError("counts must have shape (height, width)")
        if not np.all(np.isfinite(c)):
            raise ValueError("counts must be finite")
        if np.any(c < 0):
            raise ValueError("counts must be nonnegative")
        c = np.ascontiguousarray(c)
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)

    @property
    def width(self):
        return self.counts.shape[1]

    @property
    def height(self):
        return self.counts.shape[0]


def _unwrap(x):
    return x.item() if isinstance(x, np.ndarray) and x.ndim == 0 else x


def expected_count(phi, q, T, tau_d):
    """Mean detected count q*phi*T / (1 + q*phi*tau_d); 0 at phi = 0."""
    phi = np.asarray(phi, dtype=np.float64)
    if np.any(phi < 0):
        raise ValueError("flux must be nonnegative")
    r = q * phi
    return _unwrap(r * T / (1.0 + r * tau_d))


def count_variance(phi, q, T, tau_d):
    """Count variance q*phi*T / (1 + q*phi*tau_d)**3."""
    phi = np.asarray(phi, dtype=np.float64)
    if np.any(phi < 0):
        raise ValueError("flux must be nonnegative")
    r = q * phi
    d = 1.0 + r * tau_d
    return _unwrap(r * T / (d * d * d))


def saturation_ceiling(T, tau_d):
    """Soft saturation level T/tau_d that the mean approaches from below."""
    if tau_d <= 0.0:
        raise ValueError("no ceiling: dead time is zero")
    return T / tau_d


def count_ceiling(T, tau_d):
    """Hard ceiling on a single draw: floor(T/tau_d) + 1, inf when tau_d = 0."""
    if tau_d <= 0.0:
        return math.inf
    return math.floor(T / tau_d) + 1.0


def invert_count(n, q, T, tau_d, return_saturated=False):
    """Flux estimate phi_hat = n / (q*(T - n*tau_d)) from a (mean) count.

    Exact inverse of expected_count: invert_count(expected_count(phi)) = phi.
    Counts at or above the ceiling T/tau_d are clamped to (1 - 1e-6) of it and
    flagged; pass return_saturated=True to also get the flag array.
    """
    n_arr = np.asarray(n, dtype=np.float64)
    if np.any(n_arr < 0) or not np.all(np.isfinite(n_arr)):
        raise ValueError("counts must be finite and nonnegative")
    if tau_d > 0.0:
        ceiling = T / tau_d
        saturated = n_arr >= ceiling
        n_eff = np.where(saturated, (1.0 - 1e-6) * ceiling, n_arr)
    else:
        saturated = np.zeros_like(n_arr, dtype=bool)
        n_eff = n_arr
    phi = n_eff / (q * (T - n_eff * tau_d))
    if return_saturated:
        return _unwrap(phi), _unwrap(saturated)
    return _unwrap(phi)


def snr_flux(phi, q, T, tau_d):
    """First-order flux SNR, equal to sqrt of the expected count."""
    return _unwrap(np.sqrt(expected_count(phi, q, T, tau_d)))


# Exact sampling works in survival space.  With detection rate r, exposure T
# and dead time tau_d, the k-th detection happens iff the running product of
# uniforms stays at or above exp(-(r*T - k*r*tau_d)): each exponential gap is
# -log(u)/r, and comparing accumulated gaps against remaining live time is
# equivalent to comparing the product of the u's against that shrinking
# survival threshold.  Keeping the comparison in product space replaces a log
# per event with one multiply; the log only runs on underflow renormalization
# (every ~640 events).  L tracks the remaining log-space budget, m the product
# since the last renormalization, t_mid the current threshold exp(-L).  While
# L >= 700 the threshold is below every representable product, so events are
# accepted unconditionally.

_RENORM = 1e-280
_EXP_LIMIT = 700.0


@njit("Tuple((int64, uint64))(uint64, float64, float64, float64)", cache=True, nogil=True)
def _renewal_count(state, rate, T, tau_d):
    if rate <= 0.0 or T <= 0.0:
        return 0, state
    c = rate * tau_d
    d = np.exp(c) if c < _EXP_LIMIT else np.inf
    L = rate * T
    m = 1.0
    t_mid = -1.0
    count = 0
    while True:
        state, u = next_open_unit(state)
        m *= u
        if m < _RENORM:
            L += np.log(m)
            if t_mid >= 0.0:
                t_mid /= m
            m = 1.0
        if L >= _EXP_LIMIT:
            count += 1
            L -= c
            continue
        if t_mid < 0.0:
            t_mid = np.exp(-L)
        if m >= t_mid:
            count += 1
            L -= c
            t_mid *= d
        else:
            break
    return count, state


@njit(
    "Tuple((float64, uint64))(uint64, float64, float64, float64, float64)",
    cache=True,
    nogil=True,
)
def _gaussian_count(state, rate, T, tau_d, ceiling):
    if rate <= 0.0:
        return 0.0, state
    denom = 1.0 + rate * tau_d
    mean = rate * T / denom
    sd = np.sqrt(rate * T) / (denom * np.sqrt(denom))
    state, g, _ = next_gaussian_pair(state)
    x = np.floor(mean + sd * g + 0.5)
    if x < 0.0:
        x = 0.0
    elif x > ceiling:
        x = ceiling
    return x, state


@njit(
    "void(float64[::1], float64, float64, uint64, uint64, float64[::1])",
    cache=True,
    nogil=True,
)
def _frame_exact(rate, T, tau_d, seed, frame, out):
    for i in range(rate.size):
        s0 = derive_state(seed, frame, U64(i))
        cnt, _ = _renewal_count(s0, rate[i], T, tau_d)
        out[i] = cnt


@njit(
    "void(float64[::1], float64, float64, float64, uint64, uint64, float64[::1])",
    cache=True,
    nogil=True,
)
def _frame_gaussian(rate, T, tau_d, ceiling, seed, frame, out):
    for i in range(rate.size):
        s0 = derive_state(seed, frame, U64(i))
        out[i], _ = _gaussian_count(s0, rate[i], T, tau_d, ceiling)


def sample_count_exact(phi, config, rng_stream):
    """One renewal-process draw: exponential arrival gaps at rate q*phi, a
    detection whenever a gap lands inside the exposure, tau_d of blindness
    after each.  Advances rng_stream; phi = 0 returns 0 without drawing."""
    if phi < 0:
        raise ValueError("flux must be nonnegative")
    rate = config.quantum_efficiency_q * phi
    count, rng_stream.state = _renewal_count(
        U64(rng_stream.state), rate, config.exposure_time_T, config.dead_time_tau
    )
    return int(count)


def sample_count_gaussian(phi, config, rng_stream):
    """Moment-matched draw: Normal(mean, variance) rounded to the nearest
    integer and clamped to [0, floor(T/tau_d) + 1].  Advances rng_stream."""
    if phi < 0:
        raise ValueError("flux must be nonnegative")
    rate = config.quantum_efficiency_q * phi
    ceiling = count_ceiling(config.exposure_time_T, config.dead_time_tau)
    x, rng_stream.state = _gaussian_count(
        U64(rng_stream.state), rate, config.exposure_time_T,
        config.dead_time_tau, ceiling,
    )
    return int(x)


def simulate_frame(flux, config, frame_index):
    """Simulate one exposure over a whole flux field.

    Each pixel draws from its own stream derived from (seed, frame_index,
    pixel index), so the result is a pure function of (flux, config,
    frame_index) regardless of evaluation order or thread count.
    """
    if int(frame_index) < 0:
        raise ValueError("frame index must be nonnegative")
    phi = flux.phi if hasattr(flux, "phi") else np.asarray(flux, dtype=np.float64)
    rate = np.ascontiguousarray(
        (config.quantum_efficiency_q * phi).ravel(), dtype=np.float64
    )
    out = np.empty(rate.size, dtype=np.float64)
    seed = U64(int(config.seed))
    frame = U64(int(frame_index))
    if config.sampler == "exact":
        _frame_exact(rate, config.exposure_time_T, config.dead_time_tau, seed, frame, out)
    else:
        ceiling = count_ceiling(config.exposure_time_T, config.dead_time_tau)
        _frame_gaussian(
            rate, config.exposure_time_T, config.dead_time_tau, ceiling, seed, frame, out
        )
    return CountFrame(out.reshape(phi.shape))


def average_frames(frames):
    """Arithmetic per-pixel mean of K frames; variance drops by 1/K."""
    frames = list(frames)
    if not frames:
        raise ValueError("need at least one frame")
    shape = frames[0].counts.shape
    for f in frames[1:]:
        if f.counts.shape != shape:
            raise ValueError("frame dimension mismatch")
    acc = np.zeros(shape, dtype=np.float64)
    for f in frames:
        acc += f.counts
    return CountFrame(acc / len(frames))
