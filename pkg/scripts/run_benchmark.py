"""Synthetic benchmark: both evaluation protocols on the default dataset.

    python scripts/run_benchmark.py --out results/ [--epochs 60] [--threads N]

Writes dependent.json, independent.json and timing.json to the output directory
and prints the accuracy tables.
"""
import argparse
import json
import logging
import time
from pathlib import Path

from airscript.evalharness import EvalConfig, person_dependent_eval, person_independent_eval, summarize
from airscript.synthgen import generate_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--participants", type=int, default=12)
    ap.add_argument("--per-digit", type=int, default=10)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--epochs", type=int, default=60)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--modes", default="independent,dependent")
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING)

    args.out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    data = generate_dataset(args.participants, args.per_digit, "default", args.seed)
    timing = {"generate_s": time.perf_counter() - t0}
    config = EvalConfig(epochs=args.epochs)
    runners = {"dependent": person_dependent_eval, "independent": person_independent_eval}
    for mode in args.modes.split(","):
        t = time.perf_counter()
        report = runners[mode](data, config, seed=args.seed, threads=args.threads)
        timing[f"{mode}_s"] = time.perf_counter() - t
        text, js = summarize(report)
        (args.out / f"{mode}.json").write_text(js)
        print(text, flush=True)
        print(f"{mode}: {timing[f'{mode}_s']:.0f} s", flush=True)
    timing["total_s"] = time.perf_counter() - t0
    (args.out / "timing.json").write_text(json.dumps(timing, indent=2) + "\n")
    print(f"total: {timing['total_s']:.0f} s")


if __name__ == "__main__":
    main()
