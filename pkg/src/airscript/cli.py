"""Command-line entry point: ``airscript {synth,viz,train,eval,predict}``.

Errors go to stderr as a single line ``airscript: error[CODE]: message`` with a
stable code and a non-zero exit status.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .datastore import load_jsonl, save_jsonl
from .difviz import CARRY, PER_STEP, DifVizConfig, trajectory
from .errors import ContractError, DomainError, TrainingDiverged
from .fusion import borda_fuse
from .neuralnet.checkpoint import Checkpoint
from .neuralnet.training import ModelConfig, default_adam, predict_ranked, train

EXIT_CODES = {
    "E_DOMAIN": 3,
    "E_CONTRACT": 4,
    "E_DIVERGED": 5,
    "E_IO": 6,
}


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _difviz_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sensitivity", type=float, default=5.0, help="pixels per degree (default 5)")
    p.add_argument("--pixel-density", type=float, default=1.0, help="canvas density factor (default 1)")
    p.add_argument("--rounding", choices=[PER_STEP, CARRY], default=PER_STEP, help="per-sample rounding mode")


def _difviz_config(args) -> DifVizConfig:
    return DifVizConfig(sensitivity=args.sensitivity, pixel_density=args.pixel_density, rounding=args.rounding)


def _load(path) -> object:
    try:
        return load_jsonl(path)
    except OSError as exc:
        raise CliError("E_IO", f"cannot read {path}: {exc.strerror or exc}") from exc


def _pick(data, index: int):
    if not 0 <= index < len(data):
        raise CliError("E_DOMAIN", f"index {index} out of range (dataset has {len(data)} recordings)")
    return data[index]


def _write(path: Path, content) -> None:
    try:
        if isinstance(content, bytes):
            Path(path).write_bytes(content)
        else:
            Path(path).write_text(content, encoding="utf-8")
    except OSError as exc:
        raise CliError("E_IO", f"cannot write {path}: {exc.strerror or exc}") from exc


def cmd_synth(args) -> int:
    from .synthgen import NOISE_PROFILES, generate_dataset

    if args.participants < 1 or args.per_digit < 1:
        raise CliError("E_DOMAIN", "--participants and --per-digit must be at least 1")
    if args.noise not in NOISE_PROFILES:
        raise CliError("E_DOMAIN", f"unknown noise profile {args.noise!r}")
    data = generate_dataset(args.participants, args.per_digit, args.noise, args.seed)
    try:
        save_jsonl(data, args.out)
    except OSError as exc:
        raise CliError("E_IO", f"cannot write {args.out}: {exc.strerror or exc}") from exc
    print(f"wrote {len(data)} recordings from {len(data.participants)} participants to {args.out}")
    return 0


def cmd_viz(args) -> int:
    from .render import render_raster, render_svg, save_png

    suffix = Path(args.out).suffix.lower()
    if suffix not in (".svg", ".png"):
        raise CliError("E_DOMAIN", f"unknown output extension {suffix!r} (use .svg or .png)")
    rec = _pick(_load(args.inp), args.index)
    coords = trajectory(rec, _difviz_config(args))
    if suffix == ".svg":
        _write(args.out, render_svg(coords))
    else:
        try:
            save_png(render_raster(coords, size=args.size, line_width=max(2.0, args.size / 64)), args.out)
        except OSError as exc:
            raise CliError("E_IO", f"cannot write {args.out}: {exc}") from exc
    print(f"rendered recording {args.index} (digit {rec.label}, {len(coords)} points) to {args.out}")
    return 0


def cmd_train(args) -> int:
    data = _load(args.data)
    if len(data) < 2:
        raise CliError("E_DOMAIN", f"dataset too small to train ({len(data)} recordings)")
    adam = default_adam(args.model, args.epochs, args.batch)
    if args.lr is not None:
        adam = type(adam)(**{**adam.to_dict(), "learning_rate": args.lr})
    model = ModelConfig(hidden_size=args.hidden, candidate=args.candidate, difviz=_difviz_config(args))

    def progress(epoch, loss):
        logging.getLogger("airscript.train").info("epoch %d loss %.6f", epoch, loss)

    t0 = time.perf_counter()
    ckpt = train(args.model, data, adam, model, args.seed, progress)
    _write(args.out, ckpt.to_bytes())
    final = ckpt.loss_history[-1] if ckpt.loss_history else float("nan")
    print(f"trained {args.model} for {adam.epochs} epochs on {len(data)} recordings "
          f"(final loss {final:.4f}, {time.perf_counter() - t0:.1f} s) -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    from .evalharness import EvalConfig, person_dependent_eval, person_independent_eval, summarize

    data = _load(args.data)
    models = tuple(m.strip() for m in args.models.split(",") if m.strip())
    config = EvalConfig(models=models, epochs=args.epochs, batch_size=args.batch)
    run = person_dependent_eval if args.mode == "dependent" else person_independent_eval
    t0 = time.perf_counter()
    report = run(data, config, seed=args.seed, threads=args.threads)
    text, js = summarize(report)
    _write(args.report, js)
    sys.stdout.write(text)
    print(f"# report written to {args.report} ({time.perf_counter() - t0:.0f} s)", file=sys.stderr)
    return 0


def cmd_predict(args) -> int:
    ckpts = []
    for path in args.ckpt:
        try:
            ckpts.append(Checkpoint.load(path))
        except OSError as exc:
            raise CliError("E_IO", f"cannot read {path}: {exc.strerror or exc}") from exc
    kinds = [c.kind for c in ckpts]
    dup = sorted({k for k in kinds if kinds.count(k) > 1})
    if dup:
        raise CliError("E_CONTRACT", f"checkpoint kind(s) {', '.join(dup)} given more than once")
    rec = _pick(_load(args.inp), args.index)
    preds = [predict_ranked(c, rec) for c in ckpts]
    ranking = preds[0] if len(preds) == 1 else borda_fuse(preds)
    source = kinds[0] if len(kinds) == 1 else "fusion(" + ",".join(kinds) + ")"
    print(f"# {source} ranking for recording {args.index}")
    for pos, label in enumerate(ranking.labels, start=1):
        print(f"{pos}\t{label}\t{ranking.scores[label]:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="airscript", description="Air-written digit recognition from IMU recordings.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic JSONL dataset")
    p.add_argument("--participants", type=int, required=True)
    p.add_argument("--per-digit", type=int, required=True, help="recordings per digit per participant")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--noise", default="default", help="noise profile: default or none")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("viz", help="render one recording's 2-DifViz trajectory as SVG or PNG")
    p.add_argument("--in", dest="inp", type=Path, required=True)
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--out", type=Path, required=True, help="output file, .svg or .png")
    p.add_argument("--size", type=int, default=256, help="PNG edge length in pixels (default 256)")
    _difviz_args(p)
    p.set_defaults(func=cmd_viz)

    p = sub.add_parser("train", help="train one classifier and write a checkpoint")
    p.add_argument("--model", choices=["gru1", "gru2", "cnn"], required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--epochs", type=int, default=150, help="default 150")
    p.add_argument("--lr", type=float, default=None, help="default 0.001 for gru1/gru2, 0.0001 for cnn")
    p.add_argument("--batch", type=int, default=16, help="mini-batch size (default 16)")
    p.add_argument("--hidden", type=int, default=32, help="GRU units per direction (default 32)")
    p.add_argument("--candidate", choices=["tanh", "sigmoid"], default="tanh", help="GRU candidate activation")
    _difviz_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run the person-dependent or person-independent protocol")
    p.add_argument("--mode", choices=["dependent", "independent"], required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--report", type=Path, required=True)
    p.add_argument("--models", default="gru1,gru2,cnn,fusion")
    p.add_argument("--epochs", type=int, default=60, help="training epochs per fold (default 60)")
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default $AIRSCRIPT_THREADS or 1); results do not depend on it")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="rank the digits for one recording; several checkpoints are Borda-fused")
    p.add_argument("--ckpt", type=Path, action="append", required=True, help="checkpoint file; repeat to Borda-fuse several models")
    p.add_argument("--in", dest="inp", type=Path, required=True)
    p.add_argument("--index", type=int, required=True)
    p.set_defaults(func=cmd_predict)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CliError as exc:
        code, msg = exc.code, str(exc)
    except TrainingDiverged as exc:
        code, msg = "E_DIVERGED", str(exc)
    except ContractError as exc:
        code, msg = "E_CONTRACT", str(exc)
    except DomainError as exc:
        code, msg = "E_DOMAIN", str(exc)
    except OSError as exc:
        code, msg = "E_IO", str(exc)
    print(f"airscript: error[{code}]: {' '.join(msg.split())}", file=sys.stderr)
    return EXIT_CODES[code]


if __name__ == "__main__":
    sys.exit(main())
