#!/usr/bin/env python3
"""Generate the bundled procedural fixtures as files.

Writes the high-contrast checker/ramp image (PNG + PFM), the binary checker,
and the puff volume (STXV) into an output directory. Everything is
deterministic; rerunning overwrites byte-identical files.
"""
import argparse
from pathlib import Path

from stochfilt import (binary_checker, checker_ramp_image, puff_volume,
                       store_image, store_volume)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixtures", help="output directory")
    parser.add_argument("--image-size", type=int, default=256)
    parser.add_argument("--volume-size", type=int, default=64)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    checker = checker_ramp_image(args.image_size, channels=3)
    store_image(out / "checker_ramp.png", checker)
    store_image(out / "checker_ramp.pfm", checker)
    store_image(out / "binary_checker.png", binary_checker(args.image_size))
    store_volume(out / "puff.stxv", puff_volume(args.volume_size))
    for name in ("checker_ramp.png", "checker_ramp.pfm",
                 "binary_checker.png", "puff.stxv"):
        print(f"wrote {out / name}")


if __name__ == "__main__":
    main()
