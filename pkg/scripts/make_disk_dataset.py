#!/usr/bin/env python3
"""Write the deterministic growing-disk dataset to a directory.

Produces one binary PGM per frame plus a manifest.json that the
`slekit analyze` command accepts. The dataset is fully deterministic,
so two runs with the same arguments produce byte-identical files.
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from slekit.masks import write_pgm
from slekit.synth import growing_disk_sequence


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("out_dir", type=Path, help="directory to create the dataset in")
    p.add_argument("--width", type=int, default=120)
    p.add_argument("--height", type=int, default=120)
    p.add_argument("--r-start", type=float, default=8.0)
    p.add_argument("--r-end", type=float, default=52.0)
    p.add_argument("--frames", type=int, default=40)
    p.add_argument("--frame-seconds", type=float, default=60.0)
    p.add_argument("--channel", default="brightening")
    args = p.parse_args(argv)

    seq = growing_disk_sequence(
        width=args.width, height=args.height,
        center=(args.width / 2.0, args.height / 2.0),
        r_start=args.r_start, r_end=args.r_end,
        n_frames=args.frames, frame_seconds=args.frame_seconds,
        channel=args.channel)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, fr in enumerate(seq.frames):
        name = f"frame_{i:03d}.pgm"
        write_pgm(args.out_dir / name, fr.bits)
        entries.append({"path": name, "t_seconds": fr.timestamp})

    manifest = {
        "channel": seq.channel,
        "pixel_scale_mm": seq.pixel_scale,
        "frames": entries,
    }
    (args.out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(entries)} frames + manifest.json to {args.out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
