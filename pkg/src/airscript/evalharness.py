"""Person-dependent and person-independent evaluation protocols.

Every training job (one model kind on one split) is independent and gets
its own seed derived from the protocol seed and its position, so jobs can
run on worker threads without changing any result.  Reports are assembled
in a fixed order.
"""
from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .datastore import Dataset, leave_one_person_out, stratified_kfold
from .errors import ContractError, DomainError
from .fusion import borda_fuse
from .neuralnet.training import (
    ModelConfig,
    default_adam,
    featurize_one,
    fingerprint,
    predict_proba,
    preprocessing_for,
    train_on_features,
)
from .ranking import RankedPrediction

log = logging.getLogger(__name__)

REPORT_FORMAT = "airscript-report/1"
BASE_KINDS = ("gru1", "gru2", "cnn")
FUSION = "fusion"
NUM_CLASSES = 10
SELECTED_RUNS = 10
FOLDS = 5


@dataclass(frozen=True)
class EvalConfig:
    models: tuple[str, ...] = ("gru1", "gru2", "cnn", FUSION)
    epochs: int = 60
    batch_size: int = 16
    folds: int = FOLDS
    runs: int = SELECTED_RUNS
    model: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        bad = [m for m in self.models if m not in BASE_KINDS + (FUSION,)]
        if bad:
            raise ContractError(f"unknown model names {bad}")

    @property
    def base_kinds(self) -> tuple[str, ...]:
        """Models that need training; fusion pulls in all three."""
        if FUSION in self.models:
            return BASE_KINDS
        return tuple(k for k in BASE_KINDS if k in self.models)

    def to_dict(self) -> dict:
        return {
            "models": list(self.models),
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "folds": self.folds,
            "runs": self.runs,
            "model": self.model.to_dict(),
        }


# -- confusion / report types ------------------------------------------------


def confusion(predicted: Sequence[int], true: Sequence[int], num_classes: int = NUM_CLASSES) -> np.ndarray:
    """Counts with rows = true label, columns = predicted label."""
    p = np.asarray(predicted, dtype=int)
    t = np.asarray(true, dtype=int)
    if p.shape != t.shape:
        raise ContractError(f"{len(p)} predictions for {len(t)} labels")
    if p.size and (min(p.min(), t.min()) < 0 or max(p.max(), t.max()) >= num_classes):
        raise ContractError(f"labels must lie in 0..{num_classes - 1}")
    m = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(m, (t, p), 1)
    return m


def matrix_accuracy(m: np.ndarray) -> float:
    total = int(m.sum())
    return float(np.trace(m)) / total if total else float("nan")


@dataclass
class ClassifierResult:
    name: str
    run_accuracies: list[float]  # fractions, one per participant (dependent) or round (independent)
    confusion: np.ndarray  # pooled over all runs

    @property
    def mean(self) -> float:
        """Mean accuracy in percent."""
        return 100.0 * float(np.mean(self.run_accuracies)) if self.run_accuracies else float("nan")

    @property
    def std(self) -> float:
        """Population standard deviation across runs, in percentage points."""
        return 100.0 * float(np.std(self.run_accuracies)) if self.run_accuracies else float("nan")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "run_accuracies": [float(a) for a in self.run_accuracies],
            "mean_percent": self.mean,
            "std_percent": self.std,
            "pooled_accuracy": matrix_accuracy(self.confusion),
            "confusion": self.confusion.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClassifierResult":
        return cls(d["name"], [float(a) for a in d["run_accuracies"]], np.array(d["confusion"], dtype=np.int64))


@dataclass
class EvalReport:
    mode: str
    seed: int
    config: dict
    dataset_fingerprint: str
    run_labels: list[str]  # participant ids, or withheld participant ids
    classifiers: list[ClassifierResult]
    train_fingerprints: list[str] = field(default_factory=list)

    def result(self, name: str) -> ClassifierResult:
        for c in self.classifiers:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "mode": self.mode,
            "seed": self.seed,
            "config": self.config,
            "dataset_fingerprint": self.dataset_fingerprint,
            "run_labels": list(self.run_labels),
            "classifiers": [c.to_dict() for c in self.classifiers],
            "train_fingerprints": list(self.train_fingerprints),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        d = json.loads(text)
        if d.get("format") != REPORT_FORMAT:
            raise DomainError(f"not a {REPORT_FORMAT} document")
        return cls(
            mode=d["mode"],
            seed=int(d["seed"]),
            config=d["config"],
            dataset_fingerprint=d["dataset_fingerprint"],
            run_labels=list(d["run_labels"]),
            classifiers=[ClassifierResult.from_dict(c) for c in d["classifiers"]],
            train_fingerprints=list(d.get("train_fingerprints", [])),
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, EvalReport) and self.to_dict() == other.to_dict()


def summarize(report: EvalReport) -> tuple[str, str]:
    """Text table (accuracies to one decimal) and the JSON rendering."""
    title = {"dependent": "person-dependent", "independent": "person-independent"}.get(report.mode, report.mode)
    lines = [
        f"# {title} evaluation, seed {report.seed}, {len(report.run_labels)} runs",
        "model | mean acc (%) | std (pp) | runs",
    ]
    for c in report.classifiers:
        lines.append(f"{c.name} | {c.mean:.1f} | {c.std:.1f} | {len(c.run_accuracies)}")
    return "\n".join(lines) + "\n", report.to_json()


# -- classifiers -----------------------------------------------------------

Predictor = Callable[[Sequence], list]  # recordings -> list[RankedPrediction | None]
Fitter = Callable[[str, Dataset, int], Predictor]  # (kind, train split, seed) -> predictor


def uniform_prediction() -> RankedPrediction:
    return RankedPrediction.from_scores(np.full(NUM_CLASSES, 1.0 / NUM_CLASSES))


class NeuralFitter:
    """Trains the real networks; split-independent features are computed once."""

    def __init__(self, config: EvalConfig):
        self.config = config
        self._cache: dict[tuple[str, int], np.ndarray | None] = {}

    def _features(self, kind: str, recs, prep: dict) -> list:
        if kind == "gru2":  # scaler depends on the split
            return [self._try(kind, r, prep) for r in recs]
        out = []
        for r in recs:
            key = (kind, id(r))
            if key not in self._cache:
                self._cache[key] = self._try(kind, r, prep)
            out.append(self._cache[key])
        return out

    @staticmethod
    def _try(kind, rec, prep):
        try:
            return featurize_one(kind, rec, prep)
        except DomainError as exc:
            log.warning("recording of %s (label %d) unusable for %s: %s", rec.participant_id, rec.label, kind, exc)
            return None

    def warm(self, dataset: Dataset) -> None:
        """Fill the shared feature cache before worker threads start."""
        for kind in self.config.base_kinds:
            if kind != "gru2":
                self._features(kind, dataset, preprocessing_for(kind, dataset, self.config.model))

    def __call__(self, kind: str, train: Dataset, seed: int) -> Predictor:
        prep = preprocessing_for(kind, train, self.config.model)
        feats = self._features(kind, train, prep)
        keep = [i for i, f in enumerate(feats) if f is not None]
        if not keep:
            raise DomainError(f"no usable training recordings for {kind}")
        x = np.stack([feats[i] for i in keep])
        y = train.labels[keep]
        adam = default_adam(kind, self.config.epochs, self.config.batch_size)
        ckpt = train_on_features(kind, x, y, prep, adam, self.config.model, seed, fingerprint(train))
        if ckpt.train_fingerprint != fingerprint(train):
            raise ContractError("checkpoint was not trained on the declared split")

        def predict(recs) -> list:
            f = self._features(kind, recs, prep)
            idx = [i for i, v in enumerate(f) if v is not None]
            out = [None] * len(f)
            if idx:
                probs = predict_proba(ckpt, np.stack([f[i] for i in idx]))
                for i, p in zip(idx, probs):
                    out[i] = RankedPrediction.from_scores(p)
            return out

        return predict


# -- protocol plumbing -----------------------------------------------------


def derive_seed(seed: int, *path: int) -> int:
    return int(np.random.SeedSequence([int(seed), *map(int, path)]).generate_state(1)[0])


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("AIRSCRIPT_THREADS", "1") or 1)
    return max(1, int(threads))


def _run_jobs(jobs: list, threads: int) -> list:
    if threads <= 1 or len(jobs) <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [f.result() for f in futures]


@dataclass
class _Split:
    run: int
    fold: int
    train: Dataset
    test: Dataset


def _evaluate_splits(
    splits: list[_Split],
    n_runs: int,
    config: EvalConfig,
    fitter: Fitter,
    seed: int,
    threads: int,
):
    """Train every (split, kind) job, then pool predictions per run."""
    kinds = config.base_kinds
    jobs = []
    for s in splits:
        for ki, kind in enumerate(kinds):

            def job(s=s, ki=ki, kind=kind):
                predictor = fitter(kind, s.train, derive_seed(seed, s.run, s.fold, ki))
                preds = predictor(list(s.test))
                return [p if p is not None else uniform_prediction() for p in preds]

            jobs.append(job)
    outputs = _run_jobs(jobs, threads)

    names = [k for k in kinds if k in config.models]
    if FUSION in config.models:
        names.append(FUSION)
    per_run = {name: [np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64) for _ in range(n_runs)] for name in names}
    fold_acc = {name: [[] for _ in range(n_runs)] for name in names}
    for si, s in enumerate(splits):
        by_kind = {kind: outputs[si * len(kinds) + ki] for ki, kind in enumerate(kinds)}
        if FUSION in config.models:
            by_kind[FUSION] = [borda_fuse([by_kind[k][i] for k in kinds]) for i in range(len(s.test))]
        truth = s.test.labels
        for name in names:
            m = confusion([p.top for p in by_kind[name]], truth)
            per_run[name][s.run] += m
            fold_acc[name][s.run].append(matrix_accuracy(m))
    results = []
    for name in names:
        run_acc = [float(np.mean(f)) for f in fold_acc[name]]
        results.append(ClassifierResult(name, run_acc, sum(per_run[name])))
    return results


def select_participants(dataset: Dataset, count: int, seed: int) -> list[str]:
    """Seeded choice of ``count`` participants, all of them when there are fewer."""
    pids = dataset.participants
    if len(pids) <= count:
        return list(pids)
    rng = np.random.default_rng(derive_seed(seed, 0xA11))
    chosen = rng.choice(len(pids), size=count, replace=False)
    return [pids[i] for i in chosen]


def person_dependent_eval(
    dataset: Dataset,
    config: EvalConfig = EvalConfig(),
    seed: int = 0,
    fitter: Fitter | None = None,
    threads: int | None = None,
) -> EvalReport:
    """Within-participant stratified k-fold CV for up to ``config.runs`` participants."""
    if len(dataset.participants) < config.runs:
        raise DomainError(f"person-dependent protocol needs at least {config.runs} participants")
    chosen = select_participants(dataset, config.runs, seed)
    splits = []
    for run, pid in enumerate(chosen):
        own = dataset.of_participant(pid)
        counts = np.bincount(own.labels, minlength=NUM_CLASSES)
        if counts.min() < config.folds:
            raise DomainError(
                f"participant {pid} has only {int(counts.min())} recordings of digit "
                f"{int(counts.argmin())}; {config.folds} per class are required"
            )
        for fold, (train, test) in enumerate(stratified_kfold(own, config.folds, derive_seed(seed, run, 0xF01D))):
            splits.append(_Split(run, fold, train, test))
    return _finish("dependent", dataset, chosen, splits, config, seed, fitter, threads)


def person_independent_eval(
    dataset: Dataset,
    config: EvalConfig = EvalConfig(),
    seed: int = 0,
    fitter: Fitter | None = None,
    threads: int | None = None,
) -> EvalReport:
    """Leave-one-participant-out rounds for up to ``config.runs`` withheld participants."""
    if len(dataset.participants) < config.runs + 1:
        raise DomainError(f"person-independent protocol needs at least {config.runs + 1} participants")
    chosen = select_participants(dataset, config.runs, seed)
    splits = []
    for run, pid in enumerate(chosen):
        train, test = leave_one_person_out(dataset, pid)
        splits.append(_Split(run, 0, train, test))
    return _finish("independent", dataset, chosen, splits, config, seed, fitter, threads)


def _finish(mode, dataset, chosen, splits, config, seed, fitter, threads) -> EvalReport:
    if fitter is None:
        fitter = NeuralFitter(config)
        fitter.warm(dataset)
    results = _evaluate_splits(splits, len(chosen), config, fitter, seed, resolve_threads(threads))
    return EvalReport(
        mode=mode,
        seed=int(seed),
        config=config.to_dict(),
        dataset_fingerprint=dataset.fingerprint(),
        run_labels=list(chosen),
        classifiers=results,
        train_fingerprints=[fingerprint(s.train) for s in splits],
    )
