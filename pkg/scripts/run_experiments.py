#!/usr/bin/env python3
"""Run the full experiment battery and collect CSVs + images.

Sections mirror the CLI subcommands: resampling quality/economics,
estimator convergence, filtering-order divergence, volumetric MSE, and the
compressed-texture decode comparison. Results land in --out (default
results/). Expect a few minutes at the default sample counts.
"""
import argparse
import sys
from pathlib import Path

from stochfilt import checker_ramp_image, puff_volume, store_image, store_volume
from stochfilt.cli import main as cli_main


def banner(text: str) -> None:
    print()
    print("=" * 64)
    print(f"== {text}")
    print("=" * 64)


def run(argv: list[str]) -> None:
    code = cli_main(argv)
    if code != 0:
        sys.exit(f"command failed with exit code {code}: {' '.join(argv)}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--quick", action="store_true",
                        help="cut sample counts for a fast smoke pass")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = str(args.seed)

    banner("fixtures")
    img_path = out / "checker_ramp.pfm"
    vol_path = out / "puff.stxv"
    store_image(img_path, checker_ramp_image(256))
    store_volume(vol_path, puff_volume(64))
    print(f"wrote {img_path} and {vol_path}")

    spp = "16" if args.quick else "256"
    banner("resample: deterministic vs stochastic vs filter importance")
    for filt, est in (("bicubic-bspline", "det"),
                      ("bicubic-bspline", "stoch"),
                      ("bicubic-bspline", "fis"),
                      ("bicubic-keys", "stoch"),
                      ("gaussian", "stoch")):
        tag = f"{filt}_{est}"
        run(["resample", "--input", str(img_path),
             "--output", str(out / f"up_{tag}.png"),
             "--csv", str(out / f"resample_{tag}.csv"),
             "--filter", filt, "--estimator", est,
             "--scale", "1.7", "--spp", spp, "--seed", seed])

    banner("converge: error decay per estimator")
    top = "1024" if args.quick else "16384"
    for filt, est in (("bilinear", "stoch"), ("bicubic-bspline", "stoch"),
                      ("bicubic-bspline", "fis"), ("gaussian", "stoch")):
        run(["converge", "--input", str(img_path), "--filter", filt,
             "--estimator", est, "--spp", top, "--queries", "4",
             "--reps", "8", "--seed", seed,
             "--csv", str(out / f"converge_{filt}_{est}.csv")])

    banner("order: filter-before vs filter-after shading")
    ospp = "1000" if args.quick else "10000"
    for mp in ("identity", "planck:1", "threshold:0.5", "power:4"):
        tag = mp.replace(":", "_")
        run(["order", "--input", str(img_path), "--filter", "bilinear",
             "--map", mp, "--spp", ospp, "--queries", "8", "--seed", seed,
             "--csv", str(out / f"order_{tag}.csv")])

    banner("volume: tricubic MSE, deterministic vs single-tap")
    vspp = "64" if args.quick else "256"
    vref = "1024" if args.quick else "16384"
    for filt in ("trilinear", "tricubic-bspline"):
        run(["volume", "--input", str(vol_path), "--filter", filt,
             "--spp", vspp, "--ref-spp", vref, "--seed", seed,
             "--csv", str(out / f"volume_{filt}.csv")])

    banner("dct: compression + decode economics")
    run(["dct", "--input", str(img_path),
         "--output", str(out / "checker.stxd"),
         "--csv", str(out / "dct_stats.csv"), "--seed", seed])

    banner("done")
    print(f"all outputs in {out}/")


if __name__ == "__main__":
    main()
