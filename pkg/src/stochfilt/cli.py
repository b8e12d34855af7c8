"""Experiment command line.

Subcommands rescale images, measure estimator convergence, compare
filter-before vs filter-after shading orders, run the volumetric MSE
comparison, and exercise the DCT-compressed backend. Every run is a pure
function of its config: identical flags + seed give bitwise-identical
images and CSVs.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .det_filters import (FILTER_NAMES_2D, FILTER_NAMES_3D, FilterConfig,
                          det_filter_value)
from .dct_tex import compress_dct, decode_full, filter_over_dct, save_dct
from .fixtures import checker_ramp_image, puff_volume
from .rng import RngStream, uniform_grid
from .shading import order_divergence_report, parse_map, write_report_csv
from .stoch import stoch_filter_values, uniform_shape
from .texio import (TextureFormatError, load_image, load_volume, store_image)
from .texture import FetchCounter, MipPyramid, TextureGrid, build_mip_pyramid

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

PSNR_CAP = 999.0  # sentinel for lossless/constant reconstructions

_FIS_FILTERS = ("bilinear", "bicubic-bspline", "gaussian", "trilinear",
                "tricubic-bspline")


@dataclass
class ExperimentConfig:
    """Flat record of one experiment invocation; round-trips through JSON."""

    command: str
    input: str | None = None
    output: str | None = None
    filter: str = "bilinear"
    estimator: str = "det"
    spp: int = 64
    seed: int = 0
    sigma: float = 0.5
    keys_a: float = -0.5
    scale: float = 2.0
    map: str = "identity"
    csv: str | None = None
    ref_spp: int = 2048
    queries: int = 8
    reps: int = 8

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config fields: {', '.join(unknown)}")
        if "command" not in data:
            raise ValueError("config needs a command")
        return cls(**data)

    def filter_config(self) -> FilterConfig:
        return FilterConfig(name=self.filter, sigma=self.sigma,
                            keys_a=self.keys_a)


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.spp < 1:
        raise ValueError("spp must be a positive integer")
    if cfg.ref_spp < 1:
        raise ValueError("ref-spp must be a positive integer")
    if cfg.reps < 1:
        raise ValueError("reps must be a positive integer")
    if cfg.queries < 1:
        raise ValueError("queries must be a positive integer")
    if cfg.scale <= 0.0:
        raise ValueError("scale must be positive")
    if cfg.estimator not in ("det", "stoch", "fis"):
        raise ValueError(f"unknown estimator {cfg.estimator!r}")
    if cfg.estimator == "fis" and cfg.filter not in _FIS_FILTERS:
        raise ValueError(
            f"filter importance sampling supports {_FIS_FILTERS}, "
            f"not {cfg.filter!r}")


# ============================================================
# Shared helpers
# ============================================================

def _load_input_2d(cfg: ExperimentConfig) -> TextureGrid:
    if cfg.input is None:
        return checker_ramp_image(256)
    return load_image(cfg.input)


def _load_input_any(cfg: ExperimentConfig) -> TextureGrid:
    if cfg.input is None:
        return checker_ramp_image(256)
    if str(cfg.input).endswith(".stxv"):
        return load_volume(cfg.input)
    return load_image(cfg.input)


def _check_filter_rank(name: str, nd: int) -> None:
    names = FILTER_NAMES_2D if nd == 2 else FILTER_NAMES_3D
    if name not in names:
        raise ValueError(f"filter {name!r} does not apply to {nd}D textures "
                         f"(choose from {names})")


def _pixel_grid(out_w: int, out_h: int, scale: float) -> np.ndarray:
    """(H, W, 2) source sample coords for a scale-factor resample."""
    xs = (np.arange(out_w) + 0.5) / scale - 0.5
    ys = (np.arange(out_h) + 0.5) / scale - 0.5
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    return np.stack([gx, gy], axis=-1)


def _query_grid(tex: TextureGrid, k: int) -> np.ndarray:
    """(k*k, 2) queries on half-texel offsets so filter windows straddle
    texel boundaries."""
    w, h = tex.dims[0], tex.dims[1]
    xs = (np.arange(k) + 0.5) * (w / k) - 0.5
    ys = (np.arange(k) + 0.5) * (h / k) - 0.5
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    return np.stack([gx, gy], axis=-1).reshape(-1, 2)


def _stoch_image(tex, pts: np.ndarray, cfg: ExperimentConfig,
                 fcfg: FilterConfig, counter: FetchCounter,
                 dst0=None, dst1=None) -> tuple[np.ndarray, float]:
    """Per-pixel spp-averaged stochastic estimate plus mean sample variance.

    Pixels stream through `uniform_grid` keyed by flat pixel index, so the
    result is independent of chunk size.
    """
    lead = pts.shape[:-1]
    flat = pts.reshape(-1, pts.shape[-1])
    n_pix = flat.shape[0]
    tail = uniform_shape(fcfg, cfg.estimator, flat.shape[-1])
    per_pixel = cfg.spp * int(np.prod(tail, dtype=np.int64))
    chans = tex.levels[0].channels if isinstance(tex, MipPyramid) else tex.channels
    out = np.empty((n_pix, chans))
    var_sum = 0.0
    chunk = max(1, (1 << 21) // max(per_pixel, 1))
    for start in range(0, n_pix, chunk):
        stop = min(start + chunk, n_pix)
        idx = np.arange(start, stop)
        xi = uniform_grid(cfg.seed, idx, per_pixel)
        xi = xi.reshape((stop - start, cfg.spp) + tail)
        pts_c = flat[start:stop, None, :]
        est = stoch_filter_values(tex, pts_c, fcfg, xi, counter,
                                  estimator=cfg.estimator,
                                  dst0=dst0, dst1=dst1)
        out[start:stop] = est.mean(axis=1)
        if cfg.spp > 1:
            var_sum += float(est.var(axis=1, ddof=1).mean(axis=-1).sum())
    mean_var = var_sum / n_pix if cfg.spp > 1 else 0.0
    return out.reshape(lead + (chans,)), mean_var


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in row])


def _finite_or_die(*arrays) -> None:
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError("non-finite values in experiment output")


# ============================================================
# Subcommands
# ============================================================

def cmd_resample(cfg: ExperimentConfig) -> int:
    tex = _load_input_2d(cfg)
    _check_filter_rank(cfg.filter, 2)
    fcfg = cfg.filter_config()
    w, h = tex.dims
    out_w = max(1, round(w * cfg.scale))
    out_h = max(1, round(h * cfg.scale))
    pts = _pixel_grid(out_w, out_h, cfg.scale)
    dst0 = np.array([1.0 / cfg.scale, 0.0])
    dst1 = np.array([0.0, 1.0 / cfg.scale])

    src = build_mip_pyramid(tex) if cfg.filter == "trilinear-mip" else tex
    ref_counter = FetchCounter()
    ref = det_filter_value(src, pts, fcfg, ref_counter, dst0=dst0, dst1=dst1)

    if cfg.estimator == "det":
        image, mean_var, counter = ref, 0.0, ref_counter
    else:
        counter = FetchCounter()
        image, mean_var = _stoch_image(src, pts, cfg, fcfg, counter,
                                       dst0=dst0, dst1=dst1)
    mse = float(np.mean((image - ref) ** 2))
    _finite_or_die(image)

    if cfg.output:
        store_image(cfg.output, TextureGrid(data=image,
                                            address_mode=tex.address_mode))
    if cfg.csv:
        _write_csv(cfg.csv,
                   ["filter", "estimator", "spp", "seed", "mse_vs_det",
                    "mean_variance", "fetches"],
                   [[cfg.filter, cfg.estimator, cfg.spp, cfg.seed, mse,
                     mean_var, counter.count]])
    print(f"resample {w}x{h} -> {out_w}x{out_h} filter={cfg.filter} "
          f"estimator={cfg.estimator} mse_vs_det={mse:.3e} "
          f"fetches={counter.count}")
    return EXIT_OK


def cmd_converge(cfg: ExperimentConfig) -> int:
    tex = _load_input_any(cfg)
    nd = tex.spatial_ndim
    _check_filter_rank(cfg.filter, nd)
    if cfg.filter in ("ewa", "trilinear-mip"):
        raise ValueError("convergence runs use footprint-free filters")
    if cfg.estimator == "det":
        raise ValueError("converge needs --estimator stoch or fis")
    fcfg = cfg.filter_config()

    k = cfg.queries
    if nd == 2:
        side = int(math.ceil(math.sqrt(k)))
        queries = _query_grid(tex, side)[:k]
    else:
        w, h, d = tex.dims
        ts = (np.arange(k) + 0.5) / k
        queries = np.stack([ts * (w - 1), ts * (h - 1), ts * (d - 1)], axis=-1)
        queries = np.floor(queries) + 0.5
    refs = det_filter_value(tex, queries, fcfg)

    ladder = []
    n = 1
    while n <= cfg.spp:
        ladder.append(n)
        n *= 4
    tail = uniform_shape(fcfg, cfg.estimator, nd)
    per_sample = int(np.prod(tail, dtype=np.int64))

    rows = []
    for n in ladder:
        rows.append([cfg.filter, "det", n, 0.0, 0.0])
    stoch_errs = []
    for n in ladder:
        sq_err = 0.0
        var_acc = 0.0
        for qi in range(len(queries)):
            for rep in range(cfg.reps):
                stream = RngStream(cfg.seed, pixel=qi, sample=rep)
                xi = stream.uniforms(n * per_sample).reshape((n,) + tail)
                est = stoch_filter_values(
                    tex, np.broadcast_to(queries[qi], (n, nd)), fcfg, xi,
                    estimator=cfg.estimator)
                err = float(np.mean(est.mean(axis=0) - refs[qi]))
                sq_err += err * err
                if n > 1:
                    var_acc += float(est.var(axis=0, ddof=1).mean())
        rms = math.sqrt(sq_err / (len(queries) * cfg.reps))
        var = var_acc / (len(queries) * cfg.reps) if n > 1 else 0.0
        rows.append([cfg.filter, cfg.estimator, n, rms, var])
        stoch_errs.append(rms)
    _finite_or_die(np.array(stoch_errs))

    slope = float("nan")
    positive = [(n, e) for n, e in zip(ladder, stoch_errs) if e > 0.0]
    if len(positive) >= 2:
        ln = np.log10([n for n, _ in positive])
        le = np.log10([e for _, e in positive])
        slope = float(np.polyfit(ln, le, 1)[0])
    if cfg.csv:
        _write_csv(cfg.csv, ["filter", "estimator", "n", "abs_error",
                             "variance"], rows)
    print(f"converge filter={cfg.filter} estimator={cfg.estimator} "
          f"queries={len(queries)} reps={cfg.reps} slope={slope:.3f}")
    return EXIT_OK


def cmd_order(cfg: ExperimentConfig) -> int:
    tex = _load_input_2d(cfg)
    _check_filter_rank(cfg.filter, 2)
    if cfg.filter in ("ewa", "trilinear-mip"):
        raise ValueError("order comparisons use footprint-free filters")
    fcfg = cfg.filter_config()
    g = parse_map(cfg.map)
    queries = _query_grid(tex, cfg.queries)
    rows = order_divergence_report(tex, fcfg, g, queries,
                                   RngStream(cfg.seed), cfg.spp)
    _finite_or_die(np.array([[r["before"], r["after_ref"],
                              r["after_stoch_mean"], r["after_stoch_sem"]]
                             for r in rows]))
    if cfg.csv:
        write_report_csv(cfg.csv, rows)
    max_diff = max(r["abs_diff"] for r in rows)
    max_sem = max(r["after_stoch_sem"] for r in rows)
    print(f"order filter={cfg.filter} map={cfg.map} queries={len(rows)} "
          f"max_abs_diff={max_diff:.3e} max_sem={max_sem:.3e}")
    return EXIT_OK


def _volume_image(vol: TextureGrid, fcfg: FilterConfig, estimator: str,
                  spp: int, seed: int, counter: FetchCounter,
                  image_size: int = 32) -> np.ndarray:
    """Render the volume to an image: each pixel averages the filtered field
    over a jittered (x, y) footprint and uniform depth.

    Geometry uniforms come from dimensions 1-3 keyed per pixel, so arms that
    share a seed integrate the same sample positions (common random numbers);
    tap uniforms for the stochastic arm use dimension 4.
    """
    w, h, d = vol.dims
    n_pix = image_size * image_size
    px = np.arange(n_pix)
    ix = (px % image_size)[:, None]
    iy = (px // image_size)[:, None]
    tail = uniform_shape(fcfg, estimator, 3) if estimator != "det" else ()
    per_sample = int(np.prod(tail, dtype=np.int64))
    chunk = max(1, (1 << 22) // max(spp, 1))
    acc = np.zeros((n_pix, vol.channels))
    for start in range(0, n_pix, chunk):
        stop = min(start + chunk, n_pix)
        idx = px[start:stop]
        u1 = uniform_grid(seed, idx, spp, dimension=1)
        u2 = uniform_grid(seed, idx, spp, dimension=2)
        u3 = uniform_grid(seed, idx, spp, dimension=3)
        sx = (ix[start:stop] + u1) * (w / image_size) - 0.5
        sy = (iy[start:stop] + u2) * (h / image_size) - 0.5
        sz = u3 * d - 0.5
        pts = np.stack([sx, sy, sz], axis=-1)
        if estimator == "det":
            vals = det_filter_value(vol, pts, fcfg, counter)
        else:
            xi = uniform_grid(seed, idx, spp * per_sample, dimension=4)
            xi = xi.reshape((stop - start, spp) + tail)
            vals = stoch_filter_values(vol, pts, fcfg, xi, counter,
                                       estimator=estimator)
        acc[start:stop] = vals.mean(axis=1)
    return acc.reshape(image_size, image_size, vol.channels)


def cmd_volume(cfg: ExperimentConfig) -> int:
    if cfg.input is not None:
        vol = load_volume(cfg.input)
    else:
        vol = puff_volume(64)
    _check_filter_rank(cfg.filter, 3)
    fcfg = cfg.filter_config()

    ref_counter = FetchCounter()
    ref = _volume_image(vol, fcfg, "det", cfg.ref_spp, cfg.seed, ref_counter)
    det_counter = FetchCounter()
    det_img = _volume_image(vol, fcfg, "det", cfg.spp, cfg.seed, det_counter)
    sto_counter = FetchCounter()
    sto_img = _volume_image(vol, fcfg, cfg.estimator if cfg.estimator != "det"
                            else "stoch", cfg.spp, cfg.seed, sto_counter)
    _finite_or_die(ref, det_img, sto_img)

    mse_det = float(np.mean((det_img - ref) ** 2))
    mse_sto = float(np.mean((sto_img - ref) ** 2))
    rows = [
        [cfg.filter, "det", cfg.spp, mse_det, det_counter.count],
        [cfg.filter, "stoch", cfg.spp, mse_sto, sto_counter.count],
        [cfg.filter, "reference", cfg.ref_spp, 0.0, ref_counter.count],
    ]
    if cfg.csv:
        _write_csv(cfg.csv, ["filter", "estimator", "spp", "mse", "fetches"],
                   rows)
    if cfg.output:
        store_image(cfg.output, TextureGrid(data=sto_img))
    ratio = mse_sto / mse_det if mse_det > 0 else float("inf")
    print(f"volume filter={cfg.filter} spp={cfg.spp} ref_spp={cfg.ref_spp} "
          f"mse_det={mse_det:.4e} mse_stoch={mse_sto:.4e} ratio={ratio:.4f} "
          f"fetches_det={det_counter.count} fetches_stoch={sto_counter.count}")
    return EXIT_OK


def cmd_dct(cfg: ExperimentConfig) -> int:
    tex = _load_input_2d(cfg)
    dct = compress_dct(tex)
    if cfg.output:
        save_dct(cfg.output, dct)
    decoded = decode_full(dct)
    mse = float(np.mean((decoded.data - tex.data) ** 2))
    peak = max(1.0, float(np.abs(tex.data).max()))
    psnr = PSNR_CAP if mse == 0.0 else min(
        PSNR_CAP, 10.0 * math.log10(peak * peak / mse))

    probe = _query_grid(tex, 2)[:1]
    counts = {}
    for name in ("bilinear", "bicubic-bspline"):
        fc = FilterConfig(name=name)
        c_det = FetchCounter()
        filter_over_dct(dct, probe[0], fc, "det", counter=c_det)
        c_sto = FetchCounter()
        xi = RngStream(cfg.seed).uniforms(1)[0]
        filter_over_dct(dct, probe[0], fc, "stoch", xi=xi, counter=c_sto)
        counts[name] = (c_det.decode_count, c_sto.decode_count)

    rows = [
        ["payload_bytes", dct.payload_bytes],
        ["sidecar_bytes", dct.sidecar_bytes],
        ["compression_ratio", float(dct.compression_ratio())],
        ["psnr_db", psnr],
        ["det_bilinear_decodes", counts["bilinear"][0]],
        ["stoch_bilinear_decodes", counts["bilinear"][1]],
        ["det_bicubic_decodes", counts["bicubic-bspline"][0]],
        ["stoch_bicubic_decodes", counts["bicubic-bspline"][1]],
    ]
    if cfg.csv:
        _write_csv(cfg.csv, ["metric", "value"], rows)
    print(f"dct {tex.dims[0]}x{tex.dims[1]} ratio="
          f"{dct.compression_ratio():.2f} psnr={psnr:.2f}dB "
          f"payload={dct.payload_bytes}B sidecar={dct.sidecar_bytes}B")
    return EXIT_OK


# ============================================================
# Entry point
# ============================================================

def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--input", default=None,
                     help="input image (.png/.pfm) or volume (.stxv); "
                          "bundled fixture when omitted")
    sub.add_argument("--output", default=None, help="output image path")
    sub.add_argument("--filter", default="bilinear",
                     help="|".join(sorted(set(FILTER_NAMES_2D + FILTER_NAMES_3D))))
    sub.add_argument("--estimator", default="det",
                     choices=("det", "stoch", "fis"))
    sub.add_argument("--spp", type=int, default=64,
                     help="samples per pixel (converge: top of the N ladder)")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--sigma", type=float, default=0.5,
                     help="gaussian kernel stddev in texels")
    sub.add_argument("--keys-a", type=float, default=-0.5,
                     help="Keys cubic free parameter")
    sub.add_argument("--scale", type=float, default=2.0,
                     help="resample scale factor")
    sub.add_argument("--map", default="identity",
                     help="identity|power:k|exp:s|planck:c|threshold:t")
    sub.add_argument("--csv", default=None, help="stats CSV path")
    sub.add_argument("--ref-spp", type=int, default=2048,
                     help="reference samples per pixel (volume)")
    sub.add_argument("--queries", type=int, default=8,
                     help="query grid size per side (order) or count (converge)")
    sub.add_argument("--reps", type=int, default=8,
                     help="independent repetitions (converge)")
    sub.add_argument("--dump-config", action="store_true",
                     help="print the parsed config as JSON and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stochfilt",
        description="stochastic texture filtering experiments")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
            ("resample", "rescale an image with a chosen filter/estimator"),
            ("converge", "estimator error vs sample count"),
            ("order", "filter-before vs filter-after shading comparison"),
            ("volume", "volumetric filtering MSE comparison"),
            ("dct", "compress an image into the DCT block format")):
        _add_common(subs.add_parser(name, help=helptext))
    return parser


_DISPATCH = {
    "resample": cmd_resample,
    "converge": cmd_converge,
    "order": cmd_order,
    "volume": cmd_volume,
    "dct": cmd_dct,
}


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    kwargs = {f.name: getattr(ns, f.name) for f in fields(ExperimentConfig)}
    return ExperimentConfig(**kwargs)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = config_from_args(ns)
        _validate(cfg)
        if ns.dump_config:
            print(cfg.to_json())
            return EXIT_OK
        return _DISPATCH[cfg.command](cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TextureFormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FloatingPointError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
