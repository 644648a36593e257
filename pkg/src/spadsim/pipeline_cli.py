"""Dataset generation and evaluation orchestration, plus the command line.

A run walks every `.hdr` file in an input directory and, for each requested
resolution and frame count, produces four artifacts: the simulated mono 8-bit
PNG, the averaged mono flux estimate as `.hdr`, the color LDR ground truth
(log tone map of the downsampled color image) and the downsampled color HDR
ground truth.  A JSON-Lines manifest records every sample with its exposure
plan, seed, saturation statistics and train/test split tag.

Everything is deterministic for a fixed config and seed: per-sample streams
are derived from a stable hash of the seed and the sample's identity, splits
are assigned by a stable hash of the source filename, and manifests carry no
timestamps, so reruns reproduce output trees byte for byte regardless of the
worker count.
"""

import argparse
import configparser
import hashlib
import json
import math
import os
import shutil
import sys
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .hdr_io import HdrFormatError, HdrImage, downsample, load_hdr, save_hdr, write_ldr
from .metrics import evaluate_set
from .radiometry import flux_from_image, luminance, plan_exposure
from .spad_core import SpadConfig, average_frames, invert_count, simulate_frame
from .tonemap import TonemapParams, quantize8, tonemap_log

_MONO_PNG = "spc_png"
_MONO_HDR = "spc_hdr"
_GT_LDR = "gt_ldr"
_GT_HDR = "gt_hdr"

_STAGES = {
    "colorization": ("mono_png", "color_ldr"),
    "hdr_reconstruction": ("color_ldr", "color_hdr"),
    "single_stage": ("mono_png", "color_hdr"),
}

_DEFAULT_RESOLUTIONS = ((1024, 512), (2048, 1024))
_DEFAULT_FRAME_COUNTS = (1, 4)


def _hash64(text):
    """Stable 64-bit hash (first 8 bytes of SHA-256 of the UTF-8 text)."""
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def assign_splits(names, test_count=None, test_fraction=None):
    """Deterministic train/test assignment by hash of the source filename.

    test_count mode ranks names by hash and takes the smallest test_count as
    the test set (a fixed-size held-out set).  test_fraction mode compares
    each hash against a fixed threshold, so one name's assignment never
    depends on which other names are present.
    """
    names = list(names)
    if (test_count is None) == (test_fraction is None):
        raise ValueError("exactly one of test_count or test_fraction is required")
    hashes = {n: _hash64(n) for n in names}
    if test_count is not None:
        if test_count < 0:
            raise ValueError("test_count must be nonnegative")
        k = min(int(test_count), len(names))
        test = set(sorted(names, key=lambda n: (hashes[n], n))[:k])
    else:
        if not 0.0 < test_fraction < 1.0:
            raise ValueError("test_fraction must be in (0, 1)")
        threshold = int(test_fraction * 2.0**64)
        test = {n for n in names if hashes[n] < threshold}
    return {n: ("test" if n in test else "train") for n in names}


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a dataset run needs; CLI flags and config files map onto this."""

    input_dir: str
    output_dir: str
    resolutions: tuple = _DEFAULT_RESOLUTIONS
    frame_counts: tuple = _DEFAULT_FRAME_COUNTS
    test_count: int = None
    test_fraction: float = None
    spad: SpadConfig = field(default_factory=SpadConfig)
    tone: TonemapParams = field(default_factory=TonemapParams)
    target_x: float = 0.15
    target_count: float = 870.0
    workers: int = None

    def __post_init__(self):
        res = tuple((int(w), int(h)) for (w, h) in self.resolutions)
        if not res or any(w < 1 or h < 1 for (w, h) in res):
            raise ValueError("resolutions must be a nonempty list of positive (w, h)")
        object.__setattr__(self, "resolutions", res)
        fc = tuple(int(k) for k in self.frame_counts)
        if not fc or any(k < 1 for k in fc):
            raise ValueError("every frame count must be at least 1")
        if len(set(fc)) != len(fc):
            raise ValueError("frame counts must be unique")
        object.__setattr__(self, "frame_counts", fc)
        if self.test_count is not None and self.test_fraction is not None:
            raise ValueError("test_count and test_fraction are mutually exclusive")
        if self.test_count is None and self.test_fraction is None:
            object.__setattr__(self, "test_fraction", 0.1)
        if self.test_fraction is not None and not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must be in (0, 1)")
        if not (math.isfinite(self.target_x) and self.target_x > 0):
            raise ValueError("target_x must be finite and positive")
        if not (math.isfinite(self.target_count) and self.target_count > 0):
            raise ValueError("target_count must be finite and positive")
        if self.workers is not None and int(self.workers) < 1:
            raise ValueError("workers must be at least 1")


@dataclass
class DatasetManifest:
    """Sample records (id-sorted), skip log, and completion flag for one run."""

    root: Path
    samples: list
    skipped: list = field(default_factory=list)
    complete: bool = True

    def __post_init__(self):
        self.root = Path(self.root)
        ids = [rec["id"] for rec in self.samples]
        if len(set(ids)) != len(ids):
            raise ValueError("manifest sample ids must be unique")

    def by_id(self):
        return {rec["id"]: rec for rec in self.samples}

    def split_counts(self):
        counts = {}
        for rec in self.samples:
            counts[rec["split"]] = counts.get(rec["split"], 0) + 1
        return counts

    def save(self):
        lines = [json.dumps(rec, sort_keys=True) for rec in self.samples]
        (self.root / "manifest.jsonl").write_text("".join(s + "\n" for s in lines))
        summary = {
            "complete": self.complete,
            "count": len(self.samples),
            "split_counts": self.split_counts(),
            "skipped": self.skipped,
        }
        (self.root / "manifest.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n"
        )

    @classmethod
    def load(cls, path):
        path = Path(path)
        root = path if path.is_dir() else path.parent
        jsonl = root / "manifest.jsonl"
        if not jsonl.exists():
            raise FileNotFoundError(f"no manifest.jsonl under {root}")
        samples = _read_records(jsonl)
        summary_path = root / "manifest.json"
        summary = json.loads(summary_path.read_text()) if summary_path.exists() else {}
        return cls(
            root=root,
            samples=samples,
            skipped=summary.get("skipped", []),
            complete=summary.get("complete", True),
        )


def _read_records(path):
    records = []
    if not path.exists():
        return records
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError:
            continue  # torn tail line from an interrupted run
    return records


def _reusable_records(root):
    """Records from previous (possibly interrupted) runs whose files all exist."""
    out = {}
    for name in ("manifest.jsonl", "manifest.partial.jsonl"):
        for rec in _read_records(root / name):
            files = rec.get("files")
            if isinstance(files, dict) and all(
                (root / rel).exists() for rel in files.values()
            ):
                out[rec["id"]] = rec
    return out


def _worker_count(requested):
    n = int(requested) if requested else (os.cpu_count() or 1)
    env = os.environ.get("SPADSIM_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ValueError("SPADSIM_THREADS must be an integer") from None
        if cap < 1:
            raise ValueError("SPADSIM_THREADS must be at least 1")
        n = min(n, cap)
    return max(1, n)


def _render_sample(flux, scfg, sid, source_name, res, plan, split_tag, tone,
                   out_root, gt_ldr_rel, gt_hdr_rel):
    """Simulate, average, invert and write one sample; returns its record."""
    frames = [simulate_frame(flux, scfg, f) for f in range(scfg.frames_to_average_K)]
    avg = average_frames(frames)
    phi_hat, saturated = invert_count(
        avg.counts,
        scfg.quantum_efficiency_q,
        scfg.exposure_time_T,
        scfg.dead_time_tau,
        return_saturated=True,
    )
    mono_radiance = phi_hat / plan.flux_scale_s
    mono_png_rel = f"{_MONO_PNG}/{sid}.png"
    mono_hdr_rel = f"{_MONO_HDR}/{sid}.hdr"
    save_hdr(HdrImage.from_gray(mono_radiance.astype(np.float32)), out_root / mono_hdr_rel)
    write_ldr(quantize8(tonemap_log(mono_radiance, tone)), out_root / mono_png_rel)
    return {
        "id": sid,
        "source": source_name,
        "resolution": [res[0], res[1]],
        "frames_averaged": scfg.frames_to_average_K,
        "exposure_time_s": plan.exposure_time_T,
        "flux_scale": plan.flux_scale_s,
        "median_flux": plan.median_flux,
        "seed": scfg.seed,
        "sampler": scfg.sampler,
        "quantum_efficiency": scfg.quantum_efficiency_q,
        "dead_time_s": scfg.dead_time_tau,
        "saturated_fraction": float(np.mean(saturated)),
        "split": split_tag,
        "tonemap": {"operator": tone.operator, "log_mu": tone.log_mu},
        "files": {
            "mono_png": mono_png_rel,
            "mono_hdr": mono_hdr_rel,
            "color_ldr": gt_ldr_rel,
            "color_hdr": gt_hdr_rel,
        },
    }


def _write_ground_truth(small, gtid, tone, out_root):
    gt_hdr_rel = f"{_GT_HDR}/{gtid}.hdr"
    gt_ldr_rel = f"{_GT_LDR}/{gtid}.png"
    if not (out_root / gt_hdr_rel).exists():
        save_hdr(small, out_root / gt_hdr_rel)
    if not (out_root / gt_ldr_rel).exists():
        write_ldr(quantize8(tonemap_log(small.pixels, tone)), out_root / gt_ldr_rel)
    return gt_ldr_rel, gt_hdr_rel


def _process_source(src, config, split_tag, out_root, reusable, lock, partial_path):
    name = src.name
    try:
        full = load_hdr(src)
    except (OSError, HdrFormatError) as exc:
        print(f"warning: skipping {name}: {exc}", file=sys.stderr)
        return [], [{"source": name, "reason": f"unreadable: {exc}"}]
    records = []
    skips = []
    for (w, h) in config.resolutions:
        gtid = f"{src.stem}_{w}x{h}"
        if w > full.width or h > full.height:
            skips.append({"source": name, "reason": f"smaller than {w}x{h}"})
            print(f"warning: skipping {name} at {w}x{h}: source too small", file=sys.stderr)
            continue
        small = downsample(full, w, h)
        gray = luminance(small)
        if not np.any(gray > 0):
            skips.append({"source": name, "reason": f"all-black at {w}x{h}"})
            print(f"warning: skipping {name} at {w}x{h}: all-black", file=sys.stderr)
            continue
        plan = plan_exposure(gray, config.spad, config.target_count, config.target_x)
        flux = flux_from_image(gray, plan.flux_scale_s)
        gt_ldr_rel, gt_hdr_rel = _write_ground_truth(small, gtid, config.tone, out_root)
        sample_seed = _hash64(f"{int(config.spad.seed)}:{gtid}")
        group_cfg = replace(
            config.spad, exposure_time_T=plan.exposure_time_T, seed=sample_seed
        )
        fresh = []
        for K in config.frame_counts:
            sid = f"{gtid}_k{K}"
            if sid in reusable:
                records.append(reusable[sid])
                continue
            scfg = replace(group_cfg, frames_to_average_K=int(K))
            rec = _render_sample(
                flux, scfg, sid, name, (w, h), plan, split_tag, config.tone,
                out_root, gt_ldr_rel, gt_hdr_rel,
            )
            records.append(rec)
            fresh.append(rec)
        if fresh:
            with lock:
                with open(partial_path, "a", encoding="utf-8") as fh:
                    for rec in fresh:
                        fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return records, skips


def generate_dataset(config):
    """Run the full pipeline over every `.hdr` file in config.input_dir.

    Sources are processed by a bounded worker pool (SPADSIM_THREADS caps it);
    per-sample randomness is derived, never shared, so the worker count has
    no effect on the output bytes.  An interrupted run leaves a flagged
    partial manifest; rerunning skips samples whose files already exist.
    """
    input_dir = Path(config.input_dir)
    out_root = Path(config.output_dir)
    sources = sorted(
        (p for p in input_dir.iterdir() if p.is_file() and p.suffix.lower() == ".hdr"),
        key=lambda p: p.name,
    )
    if not sources:
        raise ValueError(f"no .hdr files found in {input_dir}")
    stems = [p.stem for p in sources]
    if len(set(stems)) != len(stems):
        raise ValueError("duplicate source stems would collide in sample ids")
    splits = assign_splits(
        [p.name for p in sources], config.test_count, config.test_fraction
    )
    for d in (_MONO_PNG, _MONO_HDR, _GT_LDR, _GT_HDR):
        (out_root / d).mkdir(parents=True, exist_ok=True)
    reusable = _reusable_records(out_root)
    partial_path = out_root / "manifest.partial.jsonl"
    lock = threading.Lock()
    records = []
    skipped = []
    failure = None
    with ThreadPoolExecutor(max_workers=_worker_count(config.workers)) as pool:
        futures = {
            pool.submit(
                _process_source, src, config, splits[src.name], out_root,
                reusable, lock, partial_path,
            ): src
            for src in sources
        }
        for fut in as_completed(futures):
            try:
                recs, skips = fut.result()
            except OSError as exc:
                failure = exc
                for other in futures:
                    other.cancel()
                break
            records.extend(recs)
            skipped.extend(skips)
    manifest = DatasetManifest(
        root=out_root,
        samples=sorted(records, key=lambda r: r["id"]),
        skipped=sorted(skipped, key=lambda s: (s["source"], s["reason"])),
        complete=failure is None,
    )
    manifest.save()
    if failure is not None:
        raise failure
    if partial_path.exists():
        partial_path.unlink()
    return manifest


def simulate_single(input_path, config, resolution=None):
    """One-image pipeline: returns {"record", "paths", "plan"}.

    resolution of None keeps the source's native size.  Output files land in
    config.output_dir using the same layout as generate_dataset; the frame
    count is config.frame_counts[0].
    """
    src = Path(input_path)
    full = load_hdr(src)
    if resolution is not None:
        w, h = int(resolution[0]), int(resolution[1])
        img = downsample(full, w, h)
    else:
        img, w, h = full, full.width, full.height
    gray = luminance(img)
    if not np.any(gray > 0):
        raise ValueError(f"{src.name} is all-black; nothing to expose")
    plan = plan_exposure(gray, config.spad, config.target_count, config.target_x)
    flux = flux_from_image(gray, plan.flux_scale_s)
    out_root = Path(config.output_dir)
    for d in (_MONO_PNG, _MONO_HDR, _GT_LDR, _GT_HDR):
        (out_root / d).mkdir(parents=True, exist_ok=True)
    gtid = f"{src.stem}_{w}x{h}"
    gt_ldr_rel, gt_hdr_rel = _write_ground_truth(img, gtid, config.tone, out_root)
    K = config.frame_counts[0]
    sid = f"{gtid}_k{K}"
    scfg = replace(
        config.spad,
        exposure_time_T=plan.exposure_time_T,
        seed=_hash64(f"{int(config.spad.seed)}:{gtid}"),
        frames_to_average_K=K,
    )
    rec = _render_sample(
        flux, scfg, sid, src.name, (w, h), plan, "single", config.tone,
        out_root, gt_ldr_rel, gt_hdr_rel,
    )
    paths = {key: str(out_root / rel) for key, rel in rec["files"].items()}
    return {"record": rec, "paths": paths, "plan": plan}


def export_for_model(manifest, stage, out_dir):
    """Copy manifest samples into `<stage>/<split>/{input,target}/<id>.<ext>`."""
    if stage not in _STAGES:
        raise ValueError(
            f"unknown stage {stage!r}; valid stages: {', '.join(sorted(_STAGES))}"
        )
    in_key, tgt_key = _STAGES[stage]
    stage_root = Path(out_dir) / stage
    for rec in manifest.samples:
        for role, key in (("input", in_key), ("target", tgt_key)):
            src = manifest.root / rec["files"][key]
            if not src.exists():
                raise ValueError(f"manifest/file mismatch: {src} is missing")
            dst_dir = stage_root / rec["split"] / role
            dst_dir.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(src, dst_dir / (rec["id"] + src.suffix))
    return stage_root


def score_predictions(pred_dir, manifest, which, peak=1.0):
    """Score predictions named by sample id against manifest ground truth.

    which = "ldr" compares against the color LDR PNGs; "hdr" against the
    color HDR files, adding the log-domain PSNR column.
    """
    if which not in ("ldr", "hdr"):
        raise ValueError("which must be 'ldr' or 'hdr'")
    key = "color_ldr" if which == "ldr" else "color_hdr"
    samples = [(rec["id"], rec["files"][key]) for rec in manifest.samples]
    return evaluate_set(pred_dir, manifest.root, samples, kind=which, peak=peak)


# ---------------------------------------------------------------------------
# command line


def _parse_resolution(text):
    try:
        w, _, h = text.lower().partition("x")
        return int(w), int(h)
    except ValueError:
        raise ValueError(f"bad resolution {text!r}; expected WxH like 1024x512") from None


def _parse_int_list(text):
    return tuple(int(tok) for tok in str(text).replace(",", " ").split())


def _parse_resolution_list(text):
    return tuple(_parse_resolution(tok) for tok in str(text).replace(",", " ").split())


def _load_config_file(path):
    cp = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    return {section: dict(cp.items(section)) for section in cp.sections()}


def _pick(cli_value, section, key, cast, default):
    if cli_value is not None:
        return cli_value
    if key in section:
        return cast(section[key])
    return default


def _merge_config(args, input_dir, output_dir, resolutions_cli, frames_cli,
                  test_count_cli=None, test_fraction_cli=None, workers_cli=None):
    file_cfg = _load_config_file(args.config) if args.config else {}
    spad_sec = file_cfg.get("spad", {})
    exposure_sec = file_cfg.get("exposure", {})
    tone_sec = file_cfg.get("tonemap", {})
    pipe_sec = file_cfg.get("pipeline", {})
    split_sec = file_cfg.get("split", {})

    frames = frames_cli or _pick(None, spad_sec, "frames", _parse_int_list,
                                 _DEFAULT_FRAME_COUNTS)
    resolutions = resolutions_cli or _pick(None, pipe_sec, "resolutions",
                                           _parse_resolution_list, _DEFAULT_RESOLUTIONS)
    spad = SpadConfig(
        quantum_efficiency_q=_pick(args.q, spad_sec, "q", float, 0.4),
        dead_time_tau=_pick(args.dead_time_ns, spad_sec, "dead_time_ns", float, 150.0) * 1e-9,
        sampler=_pick(args.sampler, spad_sec, "sampler", str, "gaussian"),
        seed=_pick(args.seed, spad_sec, "seed", int, 0),
        frames_to_average_K=int(frames[0]),
    )
    tone = TonemapParams(
        operator=_pick(args.operator, tone_sec, "operator", str, "log"),
        log_mu=_pick(args.mu, tone_sec, "mu", float, 500.0),
        gamma=_pick(args.gamma, tone_sec, "gamma", float, 2.2),
        hdr_scale=_pick(args.hdr_scale, tone_sec, "hdr_scale", float, 1.0),
    )
    test_count = test_count_cli
    test_fraction = test_fraction_cli
    if test_count is None and test_fraction is None:
        if "test_count" in split_sec:
            test_count = int(split_sec["test_count"])
        elif "test_fraction" in split_sec:
            test_fraction = float(split_sec["test_fraction"])
    return PipelineConfig(
        input_dir=str(input_dir),
        output_dir=str(output_dir),
        resolutions=resolutions,
        frame_counts=frames,
        test_count=test_count,
        test_fraction=test_fraction,
        spad=spad,
        tone=tone,
        target_x=_pick(args.target_x, exposure_sec, "target_x", float, 0.15),
        target_count=_pick(args.target_count, exposure_sec, "target_count", float, 870.0),
        workers=workers_cli if workers_cli is not None else _pick(
            None, pipe_sec, "workers", int, None
        ),
    )


def _add_common_flags(parser):
    parser.add_argument("--config", metavar="FILE", help="INI config file; flags override it")
    parser.add_argument("--q", type=float, help="quantum efficiency in (0, 1]")
    parser.add_argument("--dead-time-ns", type=float, dest="dead_time_ns",
                        help="dead time in nanoseconds (default 150)")
    parser.add_argument("--sampler", choices=("exact", "gaussian"))
    parser.add_argument("--seed", type=int)
    parser.add_argument("--target-x", type=float, dest="target_x",
                        help="median q*phi*tau_d operating point (default 0.15)")
    parser.add_argument("--target-count", type=float, dest="target_count",
                        help="median expected count (default 870)")
    parser.add_argument("--operator", choices=("log", "reinhard"), help="tone operator")
    parser.add_argument("--mu", type=float, help="log tone curve steepness (default 500)")
    parser.add_argument("--gamma", type=float, help="inverse tone map gamma (default 2.2)")
    parser.add_argument("--hdr-scale", type=float, dest="hdr_scale",
                        help="inverse tone map peak radiance (default 1.0)")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="spadsim",
        description="Single-photon-camera simulator and HDR dataset pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dataset", help="generate a paired dataset from a directory of .hdr files")
    p.add_argument("input_dir")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--resolution", action="append", metavar="WxH",
                   help="repeatable; default 1024x512 and 2048x1024")
    p.add_argument("--frames", action="append", type=int, metavar="K",
                   help="repeatable frame-average count; default 1 and 4")
    p.add_argument("--test-count", type=int, dest="test_count",
                   help="hold out the N smallest-hash sources as the test split")
    p.add_argument("--test-fraction", type=float, dest="test_fraction",
                   help="hold out sources whose hash falls below this fraction")
    p.add_argument("--workers", type=int, help="worker pool size (SPADSIM_THREADS caps it)")
    _add_common_flags(p)
    p.set_defaults(func=_cmd_dataset)

    p = sub.add_parser("simulate", help="run the pipeline on one .hdr file")
    p.add_argument("input")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--resolution", metavar="WxH", help="downsample first (default: native size)")
    p.add_argument("--frames", type=int, metavar="K", help="frames to average (default 1)")
    _add_common_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("export", help="lay out paired training directories for one stage")
    p.add_argument("manifest", help="dataset directory or its manifest.jsonl")
    p.add_argument("--stage", required=True, choices=sorted(_STAGES))
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("score", help="score predictions against dataset ground truth")
    p.add_argument("pred_dir")
    p.add_argument("--manifest", required=True, help="dataset directory or its manifest.jsonl")
    p.add_argument("--which", required=True, choices=("ldr", "hdr"))
    p.add_argument("--peak", type=float, default=1.0, help="PSNR peak for ldr scoring")
    p.add_argument("--out", help="report path prefix (default <pred_dir>/metrics)")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("inspect", help="print header and radiance statistics of an .hdr file")
    p.add_argument("path")
    p.set_defaults(func=_cmd_inspect)

    return parser


def _cmd_dataset(args):
    resolutions = tuple(_parse_resolution(r) for r in args.resolution) if args.resolution else None
    frames = tuple(args.frames) if args.frames else None
    if args.test_count is not None and args.test_fraction is not None:
        raise ValueError("--test-count and --test-fraction are mutually exclusive")
    config = _merge_config(
        args, args.input_dir, args.out, resolutions, frames,
        test_count_cli=args.test_count, test_fraction_cli=args.test_fraction,
        workers_cli=args.workers,
    )
    manifest = generate_dataset(config)
    counts = manifest.split_counts()
    print(
        f"wrote {len(manifest.samples)} samples to {config.output_dir} "
        f"({counts.get('train', 0)} train / {counts.get('test', 0)} test, "
        f"{len(manifest.skipped)} skipped)"
    )
    return 0


def _cmd_simulate(args):
    frames = (args.frames,) if args.frames else (1,)
    config = _merge_config(args, ".", args.out, None, frames)
    resolution = _parse_resolution(args.resolution) if args.resolution else None
    result = simulate_single(args.input, config, resolution=resolution)
    plan = result["plan"]
    rec = result["record"]
    print(
        f"exposure_time_s={plan.exposure_time_T:.6e} "
        f"flux_scale={plan.flux_scale_s:.6e} "
        f"median_flux={plan.median_flux:.6e} "
        f"saturated_fraction={rec['saturated_fraction']:.6f}"
    )
    for key in ("mono_png", "mono_hdr", "color_ldr", "color_hdr"):
        print(f"{key}: {result['paths'][key]}")
    return 0


def _cmd_export(args):
    manifest = DatasetManifest.load(args.manifest)
    stage_root = export_for_model(manifest, args.stage, args.out)
    print(f"exported {len(manifest.samples)} pairs to {stage_root}")
    return 0


def _cmd_score(args):
    manifest = DatasetManifest.load(args.manifest)
    report = score_predictions(args.pred_dir, manifest, args.which, peak=args.peak)
    prefix = Path(args.out) if args.out else Path(args.pred_dir) / "metrics"
    csv_path, json_path = report.write(prefix)
    agg = ", ".join(f"{k}={v}" for k, v in sorted(report.aggregates.items()))
    print(f"scored {report.count} images -> {csv_path}, {json_path}")
    print(f"aggregates: {agg}" if agg else "aggregates: none")
    if report.missing:
        print(f"missing predictions: {', '.join(report.missing)}", file=sys.stderr)
        return 3
    return 0


def _cmd_inspect(args):
    img = load_hdr(args.path)
    px = img.pixels.astype(np.float64)
    lum = px.max(axis=2)
    lit = int(np.count_nonzero(lum > 0))
    total = img.width * img.height
    print(f"{args.path}: {img.width} x {img.height}")
    print(f"radiance min={px.min():.6g} max={px.max():.6g} mean={px.mean():.6g}")
    print(f"lit pixels: {lit}/{total} ({100.0 * lit / total:.2f}%)")
    return 0


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 0
        return 0 if code == 0 else 1
    try:
        return args.func(args)
    except HdrFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
