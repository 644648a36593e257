"""Full-reference image quality metrics and set-level aggregation.

PSNR and SSIM follow the standard definitions (SSIM: 11x11 Gaussian window,
sigma 1.5, K1 = 0.01, K2 = 0.03, valid windows only).  log_psnr is PSNR on
log2(1 + x) encodings, a dynamic-range-aware fidelity proxy for HDR content.
Identical inputs give PSNR of +inf (serialized as the string "inf") and SSIM
of exactly 1.0.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import correlate1d

from .hdr_io import HdrImage, LdrImage, load_hdr, read_ldr

_WINDOW_RADIUS = 5
_SSIM_SIGMA = 1.5
_K1 = 0.01
_K2 = 0.03


def _window_1d():
    r = np.arange(-_WINDOW_RADIUS, _WINDOW_RADIUS + 1, dtype=np.float64)
    w = np.exp(-(r * r) / (2.0 * _SSIM_SIGMA * _SSIM_SIGMA))
    return w / w.sum()


_WINDOW = _window_1d()


def _as_metric_array(img):
    """Normalize metric input to float64; 8-bit content is divided by 255."""
    if isinstance(img, LdrImage):
        return img.pixels.astype(np.float64) / 255.0
    if isinstance(img, HdrImage):
        return img.pixels.astype(np.float64)
    arr = np.asarray(img)
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    return arr.astype(np.float64)


def _pair(a, b):
    A = _as_metric_array(a)
    B = _as_metric_array(b)
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    if A.ndim not in (2, 3):
        raise ValueError("images must be 2D or 3D arrays")
    return A, B


def psnr(a, b, peak=1.0):
    """10*log10(peak**2 / MSE) over all channels; +inf for identical images."""
    if not peak > 0:
        raise ValueError("peak must be positive")
    A, B = _pair(a, b)
    mse = float(np.mean((A - B) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _filter_valid(x):
    t = correlate1d(x, _WINDOW, axis=0, mode="constant")
    t = correlate1d(t, _WINDOW, axis=1, mode="constant")
    return t[_WINDOW_RADIUS:-_WINDOW_RADIUS, _WINDOW_RADIUS:-_WINDOW_RADIUS]


def _ssim_channel(x, y, c1, c2):
    mu_x = _filter_valid(x)
    mu_y = _filter_valid(y)
    var_x = _filter_valid(x * x) - mu_x * mu_x
    var_y = _filter_valid(y * y) - mu_y * mu_y
    cov = _filter_valid(x * y) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def ssim(a, b, peak=1.0):
    """Mean local SSIM over valid 11x11 Gaussian windows.

    RGB images score as the mean of per-channel SSIM.  The numerator and
    denominator reduce to bitwise-equal expressions when a and b are the
    same image, so ssim(a, a) is exactly 1.0.
    """
    if not peak > 0:
        raise ValueError("peak must be positive")
    A, B = _pair(a, b)
    size = 2 * _WINDOW_RADIUS + 1
    if A.shape[0] < size or A.shape[1] < size:
        raise ValueError(f"image smaller than the {size}x{size} SSIM window")
    c1 = (_K1 * peak) ** 2
    c2 = (_K2 * peak) ** 2
    if A.ndim == 2:
        return _ssim_channel(A, B, c1, c2)
    vals = [_ssim_channel(A[:, :, c], B[:, :, c], c1, c2) for c in range(A.shape[2])]
    return float(np.mean(vals))


def log_psnr(a, b):
    """PSNR on log2(1 + x) encodings, peak log2(1 + max(b)); b is the reference."""
    A, B = _pair(a, b)
    if np.any(A < 0) or np.any(B < 0):
        raise ValueError("log_psnr inputs must be nonnegative")
    la = np.log2(1.0 + A)
    lb = np.log2(1.0 + B)
    peak = float(np.log2(1.0 + B.max()))
    if peak <= 0.0:
        if np.array_equal(la, lb):
            return math.inf
        raise ValueError("reference image is all black; log-domain peak is zero")
    return psnr(la, lb, peak)


def _fmt(v):
    if v is None:
        return ""
    if math.isinf(v):
        return "inf"
    return repr(float(v))


def _jsonable(v):
    if v is not None and math.isinf(v):
        return "inf"
    return v


@dataclass(frozen=True)
class MetricRow:
    """Scores for one sample; log_psnr_db is None outside HDR scoring."""

    sample_id: str
    psnr_db: float
    ssim: float
    log_psnr_db: float = None


@dataclass
class MetricReport:
    """Per-image metric rows plus their arithmetic means.

    Rows are kept in sample-id order.  Samples whose prediction file was
    missing are listed in `missing` and excluded from the means; a complete
    evaluation has an empty missing list.
    """

    per_image: list
    missing: list

    @property
    def count(self):
        return len(self.per_image)

    @property
    def aggregates(self):
        agg = {}
        if self.per_image:
            psnrs = [r.psnr_db for r in self.per_image]
            agg["psnr_db"] = math.inf if any(map(math.isinf, psnrs)) else float(np.mean(psnrs))
            agg["ssim"] = float(np.mean([r.ssim for r in self.per_image]))
            logs = [r.log_psnr_db for r in self.per_image]
            if all(v is not None for v in logs):
                agg["log_psnr_db"] = (
                    math.inf if any(map(math.isinf, logs)) else float(np.mean(logs))
                )
            agg["psnr_inf_count"] = sum(1 for v in psnrs if math.isinf(v))
        return agg

    def to_csv(self):
        lines = ["id,psnr_db,ssim,log_psnr_db"]
        for r in self.per_image:
            lines.append(
                f"{r.sample_id},{_fmt(r.psnr_db)},{_fmt(r.ssim)},{_fmt(r.log_psnr_db)}"
            )
        return "\n".join(lines) + "\n"

    def to_json(self):
        payload = {
            "count": self.count,
            "aggregates": {k: _jsonable(v) for k, v in self.aggregates.items()},
            "per_image": [
                {
                    "id": r.sample_id,
                    "psnr_db": _jsonable(r.psnr_db),
                    "ssim": r.ssim,
                    "log_psnr_db": _jsonable(r.log_psnr_db),
                }
                for r in self.per_image
            ],
            "missing": list(self.missing),
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def write(self, prefix):
        prefix = Path(prefix)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        csv_path = prefix.with_suffix(".csv")
        json_path = prefix.with_suffix(".json")
        csv_path.write_text(self.to_csv())
        json_path.write_text(self.to_json())
        return csv_path, json_path


def _score_ldr(pred_path, gt_path, peak):
    a = read_ldr(pred_path)
    b = read_ldr(gt_path)
    return MetricRow(
        sample_id="",
        psnr_db=psnr(a, b, peak=peak),
        ssim=ssim(a, b, peak=peak),
    )


def _score_hdr(pred_path, gt_path):
    a = load_hdr(pred_path)
    b = load_hdr(gt_path)
    scale = float(b.pixels.max())
    if scale <= 0.0:
        scale = 1.0
    an = a.pixels.astype(np.float64) / scale
    bn = b.pixels.astype(np.float64) / scale
    return MetricRow(
        sample_id="",
        psnr_db=psnr(an, bn, peak=1.0),
        ssim=ssim(an, bn, peak=1.0),
        log_psnr_db=log_psnr(a.pixels, b.pixels),
    )


def evaluate_set(pred_dir, gt_dir, samples, kind="ldr", peak=1.0):
    """Score every sample's prediction against its ground truth.

    samples: iterable of (sample_id, ground truth path relative to gt_dir).
    Predictions live in pred_dir, named <sample_id>.png for kind "ldr" and
    <sample_id>.hdr for kind "hdr".  Missing predictions are recorded and
    excluded; everything else is scored and averaged.
    """
    if kind not in ("ldr", "hdr"):
        raise ValueError("kind must be 'ldr' or 'hdr'")
    pred_dir = Path(pred_dir)
    gt_dir = Path(gt_dir)
    ext = ".png" if kind == "ldr" else ".hdr"
    rows = []
    missing = []
    for sample_id, gt_name in sorted(samples, key=lambda item: item[0]):
        pred_path = pred_dir / f"{sample_id}{ext}"
        if not pred_path.exists():
            missing.append(sample_id)
            continue
        gt_path = gt_dir / gt_name
        if kind == "ldr":
            row = _score_ldr(pred_path, gt_path, peak)
        else:
            row = _score_hdr(pred_path, gt_path)
        rows.append(
            MetricRow(
                sample_id=sample_id,
                psnr_db=row.psnr_db,
                ssim=row.ssim,
                log_psnr_db=row.log_psnr_db,
            )
        )
    return MetricReport(per_image=rows, missing=missing)
