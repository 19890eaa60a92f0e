"""Render a grid of synthetic digits (rows: participants, columns: digits) to one PNG.

    python scripts/render_gallery.py --out gallery.png [--participants 4] [--seed 0]
"""
import argparse

import numpy as np

from airscript.difviz import DifVizConfig, trajectory
from airscript.render import render_raster, save_png
from airscript.synthgen import generate_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="gallery.png")
    ap.add_argument("--participants", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--noise", default="default")
    ap.add_argument("--cell", type=int, default=96)
    args = ap.parse_args()

    data = generate_dataset(args.participants, 1, args.noise, args.seed)
    cfg = DifVizConfig()
    rows = []
    for pid in data.participants:
        own = sorted(data.of_participant(pid), key=lambda r: r.label)
        rows.append(np.hstack([render_raster(trajectory(r, cfg), size=args.cell, line_width=3.0) for r in own]))
    save_png(np.vstack(rows), args.out)
    print(f"wrote {args.out} ({len(rows)} x 10 digits)")


if __name__ == "__main__":
    main()
