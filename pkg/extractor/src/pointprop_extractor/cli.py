"""CLI: extract patch-token tensors for a directory of images."""

from __future__ import annotations

import argparse
import logging
import sys

from .backends import VARIANTS, WeightLoadError, load_embedder
from .extract import extract_directory


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="extract",
        description="Write FTNS patch-token tensors for every image in a directory",
    )
    parser.add_argument("--images", required=True, help="input image directory")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--variant", default="denoised", choices=VARIANTS)
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        embedder = load_embedder(args.variant, device=args.device)
    except WeightLoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    summary = extract_directory(args.images, args.out, embedder, args.variant)
    print(f"wrote {len(summary['written'])} tensors "
          f"({len(summary['skipped'])} skipped) to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
