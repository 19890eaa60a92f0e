"""Measure training cost per sample-epoch for each network and project benchmark runtime.

    python scripts/time_training.py [--samples 160] [--epochs 3]
"""
import argparse
import time

from airscript.datastore import Dataset
from airscript.neuralnet import ModelConfig, default_adam, featurize, preprocessing_for, train_on_features
from airscript.synthgen import generate_dataset

# training samples per network in the default benchmark: LOPO 10 x 1100 + dependent 10 x 5 x 80
BENCHMARK_SAMPLES = 10 * 1100 + 10 * 5 * 80


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=160)
    ap.add_argument("--epochs", type=int, default=3)
    ap.add_argument("--benchmark-epochs", type=int, default=60)
    args = ap.parse_args()

    data = generate_dataset(12, 10, "default", seed=0)
    recs = Dataset(data.recordings[: args.samples])
    model = ModelConfig()
    total = 0.0
    for kind in ("gru1", "gru2", "cnn"):
        prep = preprocessing_for(kind, recs, model)
        x, y, _ = featurize(kind, recs, prep)
        adam = default_adam(kind, epochs=1)
        train_on_features(kind, x, y, prep, adam, model, seed=0)  # JIT warm-up
        adam = default_adam(kind, epochs=args.epochs)
        t0 = time.perf_counter()
        train_on_features(kind, x, y, prep, adam, model, seed=0)
        per = (time.perf_counter() - t0) / (len(y) * args.epochs)
        total += per
        print(f"{kind}: {per * 1e3:.2f} ms per sample-epoch")
    projected = total * BENCHMARK_SAMPLES * args.benchmark_epochs
    print(f"projected single-thread benchmark training time: {projected / 60:.0f} min")


if __name__ == "__main__":
    main()
