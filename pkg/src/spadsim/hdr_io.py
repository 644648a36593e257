"""Radiance RGBE (.hdr) codec, 8-bit PNG I/O and box-filter downsampling.

The RGBE format stores each pixel as three 8-bit mantissas sharing one 8-bit
exponent.  Decoding uses the pure-mantissa convention

    value = mantissa * 2 ** (exponent - 136)

where an exponent byte of zero means exact black regardless of the mantissas.
Scanlines come in three layouts: flat 4-byte records, old-style run-length
(a (1,1,1,n) record repeats the previous pixel n times, with consecutive run
records shifting n by 8 bits each), and new-style per-component run-length
introduced by a (2, 2, hi, lo) marker carrying the scanline width.  The writer
emits new-style RLE for widths in [8, 32767] and flat records otherwise; the
reader accepts all three layouts and reports malformed input with the byte
offset of the defect.
"""

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import sparse

_SIGNATURES = (b"#?RADIANCE", b"#?RGBE")
_FORMAT_VALUE = b"32-bit_rle_rgbe"
# smallest max-channel value that still gets a nonzero exponent byte
_MIN_ENCODABLE = 1e-32


class HdrFormatError(ValueError):
    """Malformed .hdr content.  Carries the byte offset of the defect."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


@dataclass(frozen=True)
class HdrImage:
    """Linear-radiance RGB image; float32 channels, shape (height, width, 3).

    Every channel value is finite and nonnegative.  Monochrome content is
    stored with r = g = b.  Pixel data is frozen after construction so images
    can be shared freely between threads.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float32)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("pixels must have shape (height, width, 3)")
        if not np.all(np.isfinite(px)):
            raise ValueError("radiance values must be finite")
        if np.any(px < 0):
            raise ValueError("radiance values must be nonnegative")
        px = np.ascontiguousarray(px)
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    @staticmethod
    def from_gray(field):
        """Wrap a 2D scalar field as a monochrome image with r = g = b."""
        f = np.asarray(field, dtype=np.float32)
        if f.ndim != 2:
            raise ValueError("gray field must be 2D")
        return HdrImage(np.repeat(f[:, :, None], 3, axis=2))


@dataclass(frozen=True)
class LdrImage:
    """8-bit image; shape (height, width) grayscale or (height, width, 3) RGB."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.dtype != np.uint8:
            raise ValueError("pixels must be uint8")
        if not (px.ndim == 2 or (px.ndim == 3 and px.shape[2] == 3)):
            raise ValueError("pixels must have shape (h, w) or (h, w, 3)")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        px = np.ascontiguousarray(px)
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def channels(self):
        return 1 if self.pixels.ndim == 2 else 3


@dataclass(frozen=True)
class RgbePixel:
    """One shared-exponent pixel record: three mantissas and an exponent byte."""

    r_m: int
    g_m: int
    b_m: int
    e: int

    def __post_init__(self):
        for v in (self.r_m, self.g_m, self.b_m, self.e):
            if not 0 <= v <= 255:
                raise ValueError("RGBE components must be 8-bit")

    def to_floats(self):
        rgb = rgbe_to_float(np.array([[self.r_m, self.g_m, self.b_m, self.e]], np.uint8))
        return tuple(float(v) for v in rgb[0])

    @classmethod
    def from_floats(cls, r, g, b):
        rec = float_to_rgbe(np.array([[r, g, b]], np.float64))[0]
        return cls(int(rec[0]), int(rec[1]), int(rec[2]), int(rec[3]))


def rgbe_to_float(rgbe):
    """Decode (..., 4) uint8 RGBE records to (..., 3) float32 radiances."""
    rgbe = np.asarray(rgbe, dtype=np.uint8)
    if rgbe.shape[-1] != 4:
        raise ValueError("RGBE data must have 4 components in the last axis")
    mant = rgbe[..., :3].astype(np.float32)
    e = rgbe[..., 3].astype(np.int32)
    out = mant * np.ldexp(np.float32(1.0), e - 136)[..., None]
    out[e == 0] = 0.0
    return out


def float_to_rgbe(rgb):
    """Encode (..., 3) radiances to (..., 4) uint8 RGBE records.

    The shared exponent is taken from the largest channel; mantissas are
    rounded half-up.  Max channels below 1e-32 encode as exact black.
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.shape[-1] != 3:
        raise ValueError("radiance data must have 3 channels in the last axis")
    out = np.zeros(rgb.shape[:-1] + (4,), dtype=np.uint8)
    m = rgb.max(axis=-1)
    live = m >= _MIN_ENCODABLE
    if not np.any(live):
        return out
    _, e = np.frexp(m[live])
    # exponents above the byte range saturate at the largest representable value
    e = np.minimum(e, 127)
    mant = np.floor(np.ldexp(rgb[live], (8 - e)[:, None]) + 0.5)
    out[live, :3] = np.minimum(mant, 255.0).astype(np.uint8)
    out[live, 3] = (e + 128).astype(np.uint8)
    return out


def _looks_like_resolution(line):
    toks = line.split()
    return len(toks) == 4 and toks[0] in (b"-Y", b"+Y", b"-X", b"+X")


def _parse_header(data):
    """Return (width, height, offset of first scanline byte)."""
    if not data.startswith(_SIGNATURES):
        raise HdrFormatError("missing Radiance signature", offset=0)
    pos = 0
    n = len(data)
    format_seen = False
    while True:
        if pos >= n:
            raise HdrFormatError("header ends before resolution line", offset=pos)
        nl = data.find(b"\n", pos)
        if nl < 0:
            raise HdrFormatError("unterminated header line", offset=pos)
        line = data[pos:nl]
        line_off = pos
        pos = nl + 1
        if line == b"":
            break
        if line.startswith(b"#"):
            continue
        if b"=" in line:
            key, _, value = line.partition(b"=")
            if key.strip() == b"FORMAT":
                if value.strip() != _FORMAT_VALUE:
                    raise HdrFormatError(
                        f"unsupported FORMAT {value.strip().decode('ascii', 'replace')!r}",
                        offset=line_off,
                    )
                format_seen = True
            continue
        if _looks_like_resolution(line):
            # tolerate writers that omit the blank line before the resolution
            pos = line_off
            break
    if not format_seen:
        raise HdrFormatError("missing FORMAT=32-bit_rle_rgbe declaration", offset=pos)
    nl = data.find(b"\n", pos)
    if nl < 0:
        raise HdrFormatError("missing resolution line", offset=pos)
    toks = data[pos:nl].split()
    if len(toks) != 4 or toks[0] not in (b"-Y", b"+Y") or toks[2] not in (b"-X", b"+X"):
        raise HdrFormatError("malformed resolution line", offset=pos)
    if toks[0] != b"-Y" or toks[2] != b"+X":
        raise HdrFormatError(
            "unsupported resolution orientation (only -Y <H> +X <W>)", offset=pos
        )
    try:
        h = int(toks[1])
        w = int(toks[3])
    except ValueError:
        raise HdrFormatError("malformed resolution line", offset=pos) from None
    if w < 1 or h < 1:
        raise HdrFormatError("resolution must be positive", offset=pos)
    return w, h, nl + 1


def _decode_scanline(data, pos, row):
    """Decode one scanline into row (w, 4); returns the offset after it."""
    w = row.shape[0]
    n = len(data)
    if pos + 4 <= n and data[pos] == 2 and data[pos + 1] == 2 and data[pos + 2] & 0x80 == 0:
        declared = (data[pos + 2] << 8) | data[pos + 3]
        if declared != w:
            raise HdrFormatError(
                f"RLE scanline declares width {declared}, header says {w}", offset=pos
            )
        pos += 4
        for c in range(4):
            j = 0
            while j < w:
                if pos >= n:
                    raise HdrFormatError("truncated scanline", offset=pos)
                code = data[pos]
                pos += 1
                if code > 128:
                    run = code - 128
                    if pos >= n:
                        raise HdrFormatError("truncated scanline", offset=pos)
                    if j + run > w:
                        raise HdrFormatError("RLE run overrun", offset=pos - 1)
                    row[j : j + run, c] = data[pos]
                    pos += 1
                    j += run
                elif code > 0:
                    if pos + code > n:
                        raise HdrFormatError("truncated scanline", offset=pos)
                    if j + code > w:
                        raise HdrFormatError("RLE run overrun", offset=pos - 1)
                    row[j : j + code, c] = np.frombuffer(data, np.uint8, code, pos)
                    pos += code
                    j += code
                else:
                    raise HdrFormatError("zero-length RLE packet", offset=pos - 1)
        return pos
    # flat records, with old-style (1,1,1,n) repeats of the previous pixel
    j = 0
    shift = 0
    prev = None
    while j < w:
        if pos + 4 > n:
            raise HdrFormatError("truncated scanline", offset=pos)
        r, g, b, e = data[pos], data[pos + 1], data[pos + 2], data[pos + 3]
        if r == 1 and g == 1 and b == 1:
            if prev is None:
                raise HdrFormatError("old-style run with no preceding pixel", offset=pos)
            run = e << shift
            if j + run > w:
                raise HdrFormatError("RLE run overrun", offset=pos)
            row[j : j + run] = prev
            j += run
            shift += 8
        else:
            row[j] = (r, g, b, e)
            prev = row[j].copy()
            j += 1
            shift = 0
        pos += 4
    return pos


def read_radiance_hdr(data):
    """Decode a complete .hdr byte sequence into an HdrImage."""
    data = bytes(data)
    w, h, pos = _parse_header(data)
    rgbe = np.empty((h, w, 4), dtype=np.uint8)
    for row in range(h):
        pos = _decode_scanline(data, pos, rgbe[row])
    return HdrImage(rgbe_to_float(rgbe))


def _emit_run(value, length, out):
    while length > 0:
        chunk = min(length, 127)
        out.append(128 + chunk)
        out.append(value)
        length -= chunk


def _emit_literal(seg, out):
    for k in range(0, seg.size, 128):
        piece = seg[k : k + 128]
        out.append(piece.size)
        out += piece.tobytes()


def _rle_component(comp):
    """New-style RLE for one component of one scanline."""
    w = comp.size
    out = bytearray()
    change = np.flatnonzero(comp[1:] != comp[:-1]) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [w]))
    # runs shorter than 4 cost more as run packets than inside a literal
    run_idx = np.flatnonzero(ends - starts >= 4)
    cursor = 0
    for k in run_idx:
        s = int(starts[k])
        e = int(ends[k])
        if cursor < s:
            _emit_literal(comp[cursor:s], out)
        _emit_run(int(comp[s]), e - s, out)
        cursor = e
    if cursor < w:
        _emit_literal(comp[cursor:w], out)
    return bytes(out)


def _encode_rle_scanline(row, out):
    w = row.shape[0]
    out += bytes((2, 2, w >> 8, w & 0xFF))
    prev_comp = None
    prev_bytes = None
    for c in range(4):
        comp = np.ascontiguousarray(row[:, c])
        # monochrome rows repeat the same component stream three times
        if prev_comp is not None and np.array_equal(comp, prev_comp):
            out += prev_bytes
            continue
        prev_bytes = _rle_component(comp)
        prev_comp = comp
        out += prev_bytes


def write_radiance_hdr(image):
    """Encode an HdrImage as .hdr bytes (new-style RLE for widths 8..32767)."""
    if not isinstance(image, HdrImage):
        image = HdrImage(np.asarray(image))
    rgbe = float_to_rgbe(image.pixels)
    h, w = rgbe.shape[:2]
    out = bytearray()
    out += b"#?RADIANCE\n"
    out += b"FORMAT=32-bit_rle_rgbe\n\n"
    out += f"-Y {h} +X {w}\n".encode("ascii")
    if 8 <= w <= 32767:
        for row in rgbe:
            _encode_rle_scanline(row, out)
    else:
        out += rgbe.tobytes()
    return bytes(out)


def load_hdr(path):
    """Read a .hdr file from disk."""
    return read_radiance_hdr(Path(path).read_bytes())


def save_hdr(image, path):
    """Write a .hdr file to disk."""
    Path(path).write_bytes(write_radiance_hdr(image))


def read_ldr(source):
    """Read an 8-bit grayscale or RGB image from a path or PNG byte sequence."""
    if isinstance(source, (bytes, bytearray, memoryview)):
        fh = io.BytesIO(bytes(source))
    else:
        fh = str(source)
    with Image.open(fh) as im:
        mode = im.mode
        if mode in ("L", "RGB"):
            arr = np.asarray(im, dtype=np.uint8)
        elif mode in ("I", "I;16", "I;16B", "I;16L", "I;16N"):
            raise ValueError("unsupported bit depth: expected 8-bit, got 16-bit")
        else:
            raise ValueError(f"unsupported channel count or mode {mode!r}")
    return LdrImage(arr)


def write_ldr(image, path=None):
    """Encode an LdrImage as PNG bytes; also writes to path when given."""
    if not isinstance(image, LdrImage):
        image = LdrImage(np.asarray(image))
    im = Image.fromarray(image.pixels)
    buf = io.BytesIO()
    im.save(buf, format="PNG", optimize=False)
    data = buf.getvalue()
    if path is not None:
        Path(path).write_bytes(data)
    return data


def _overlap_weights(n_src, n_dst):
    """Sparse (n_dst, n_src) row-stochastic matrix of box-filter overlaps.

    Destination cell i covers the source interval [i*r, (i+1)*r) with
    r = n_src/n_dst; each source cell contributes in proportion to the length
    of its overlap with that interval.  Rows are normalized to sum to 1.
    """
    edges = (np.arange(n_dst + 1, dtype=np.float64) * n_src) / n_dst
    rows = []
    cols = []
    vals = []
    for i in range(n_dst):
        a = edges[i]
        b = edges[i + 1]
        k0 = int(np.floor(a))
        k1 = min(int(np.ceil(b)), n_src)
        ks = np.arange(k0, k1)
        w = np.minimum(ks + 1.0, b) - np.maximum(ks.astype(np.float64), a)
        keep = w > 0
        ks = ks[keep]
        w = w[keep]
        w = w / w.sum()
        rows.append(np.full(ks.size, i, dtype=np.int64))
        cols.append(ks.astype(np.int64))
        vals.append(w)
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_dst, n_src),
    )


def downsample(image, target_w, target_h):
    """Box-filter area average in linear radiance.

    Non-integer ratios use exact overlapping-area weights, so a constant
    field stays constant and total flux (sum times pixel area) is conserved.
    Upsampling is rejected.
    """
    target_w = int(target_w)
    target_h = int(target_h)
    if target_w < 1 or target_h < 1:
        raise ValueError("target dimensions must be at least 1")
    if target_w > image.width or target_h > image.height:
        raise ValueError(
            f"upsampling rejected: target {target_w}x{target_h} exceeds "
            f"source {image.width}x{image.height}"
        )
    if target_w == image.width and target_h == image.height:
        return image
    wr = _overlap_weights(image.height, target_h)
    wc = _overlap_weights(image.width, target_w)
    px = image.pixels.astype(np.float64)
    out = np.empty((target_h, target_w, 3), dtype=np.float64)
    for c in range(3):
        t = wr @ px[:, :, c]
        out[:, :, c] = (wc @ t.T).T
    return HdrImage(out.astype(np.float32))
