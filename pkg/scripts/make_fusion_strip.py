#!/usr/bin/env python3
"""Render a synthetic scene at all eleven fusion levels into one strip image.

Usage:
    python3 scripts/make_fusion_strip.py --out /tmp/fusion_strip.png
"""

import argparse
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from luxfuse.fusion import ALL_LEVELS, blend
from luxfuse.synthetic import SceneSpec, generate_synthetic_pair


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--size", type=int, default=96)
    args = parser.parse_args()

    spec = SceneSpec(
        args.size, args.size, (args.size / 2, args.size / 2), args.size / 6,
        background=60, disc_rgb=(210, 70, 50), disc_lwir=245,
    )
    rgb, lwir = generate_synthetic_pair(spec)
    tiles = [blend(rgb, lwir, level).pixels for level in reversed(ALL_LEVELS)]
    strip = np.concatenate(tiles, axis=1)
    Image.fromarray(strip, mode="RGB").save(args.out)
    print(f"wrote {len(tiles)}-tile strip (RGB-only on the left) to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
