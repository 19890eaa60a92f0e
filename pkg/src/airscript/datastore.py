"""Recordings, the JSONL dataset format, and train/test split strategies."""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Optional

import numpy as np

from .errors import DomainError
from .quatmath import DRIFT_TOLERANCE, Quaternion, Vec3

log = logging.getLogger(__name__)

FORMAT = "airscript-rec/1"
SAMPLE_RATE_HZ = 50


class ImuSample(NamedTuple):
    t: float
    accel: Vec3
    gyro: Vec3
    quat: Quaternion


@dataclass(eq=False)
class Recording:
    """One air-written digit.

    Samples are kept column-wise: ``t`` (n,), ``accel`` (n, 3) in g, ``gyro``
    (n, 3) in deg/s, ``quat`` (n, 4) scalar-first.
    """

    participant_id: str
    label: int
    t: np.ndarray
    accel: np.ndarray
    gyro: np.ndarray
    quat: np.ndarray
    sample_rate: float = SAMPLE_RATE_HZ
    emg: Optional[np.ndarray] = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float).reshape(-1)
        self.accel = np.asarray(self.accel, dtype=float).reshape(-1, 3)
        self.gyro = np.asarray(self.gyro, dtype=float).reshape(-1, 3)
        self.quat = np.asarray(self.quat, dtype=float).reshape(-1, 4)
        n = len(self.t)
        if not (len(self.accel) == len(self.gyro) == len(self.quat) == n):
            raise DomainError("sample columns have different lengths")
        if n < 2:
            raise DomainError(f"recording needs at least 2 samples, got {n}")
        if int(self.label) != self.label or not 0 <= int(self.label) <= 9:
            raise DomainError(f"label must be a digit 0-9, got {self.label!r}")
        self.label = int(self.label)
        if np.any(np.diff(self.t) < 0):
            raise DomainError("timestamps must be non-decreasing")
        if self.emg is not None:
            self.emg = np.asarray(self.emg, dtype=np.int64).reshape(-1, 8)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def samples(self) -> list[ImuSample]:
        return [
            ImuSample(float(t), Vec3(*a), Vec3(*g), Quaternion(*q))
            for t, a, g, q in zip(self.t, self.accel.tolist(), self.gyro.tolist(), self.quat.tolist())
        ]

    def imu_matrix(self) -> np.ndarray:
        """The 10-channel vector per time step: accel(3), gyro(3), quat(4)."""
        return np.hstack([self.accel, self.gyro, self.quat])

    def to_json(self) -> dict:
        obj = {
            "format": FORMAT,
            "participant": self.participant_id,
            "label": self.label,
            "rate_hz": self.sample_rate,
            "samples": [
                {"t": t, "a": a, "g": g, "q": q}
                for t, a, g, q in zip(
                    self.t.tolist(), self.accel.tolist(), self.gyro.tolist(), self.quat.tolist()
                )
            ],
        }
        if self.emg is not None:
            obj["emg"] = self.emg.tolist()
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "Recording":
        fmt = obj.get("format")
        if fmt != FORMAT:
            raise DomainError(f"unsupported recording format {fmt!r}")
        samples = obj["samples"]
        quat = np.array([s["q"] for s in samples], dtype=float).reshape(-1, 4)
        norms = np.linalg.norm(quat, axis=1)
        if np.any(np.abs(norms - 1.0) > DRIFT_TOLERANCE):
            raise DomainError("orientation quaternion is not unit within 1e-3")
        drifted = np.abs(norms - 1.0) > 1e-9
        if np.any(drifted):
            quat[drifted] /= norms[drifted, None]
        return cls(
            participant_id=str(obj["participant"]),
            label=obj["label"],
            t=[s["t"] for s in samples],
            accel=[s["a"] for s in samples],
            gyro=[s["g"] for s in samples],
            quat=quat,
            sample_rate=obj.get("rate_hz", SAMPLE_RATE_HZ),
            emg=obj.get("emg"),
        )

    def to_line(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.to_line().encode()).hexdigest()

    def same_as(self, other: "Recording") -> bool:
        return self.to_line() == other.to_line()


@dataclass(eq=False)
class Dataset:
    recordings: list[Recording] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.recordings)

    def __iter__(self) -> Iterator[Recording]:
        return iter(self.recordings)

    def __getitem__(self, i):
        return self.recordings[i]

    @property
    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.recordings], dtype=int)

    @property
    def participants(self) -> list[str]:
        """Participant ids in order of first appearance."""
        return list(dict.fromkeys(r.participant_id for r in self.recordings))

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset([self.recordings[i] for i in indices])

    def of_participant(self, participant_id: str) -> "Dataset":
        return Dataset([r for r in self.recordings if r.participant_id == participant_id])

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for r in self.recordings:
            h.update(r.digest().encode())
        return h.hexdigest()


def save_jsonl(dataset: Dataset | Iterable[Recording], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in dataset:
            fh.write(rec.to_line())
            fh.write("\n")


def load_jsonl(path) -> Dataset:
    recordings = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                recordings.append(Recording.from_json(obj))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DomainError(f"{path}:{lineno}: malformed recording: {exc}") from exc
    if not recordings:
        log.warning("%s contains no recordings", Path(path))
    return Dataset(recordings)


# ---------------------------------------------------------------------------
# splits


def stratified_kfold(dataset: Dataset, k: int = 5, seed: int = 0) -> list[tuple[Dataset, Dataset]]:
    """Seeded stratified k-fold; returns ``k`` (train, test) pairs.

    Each class is shuffled and dealt round-robin over the folds, starting where
    the previous class stopped so fold sizes stay balanced too.
    """
    if k < 2:
        raise DomainError("k must be at least 2")
    labels = dataset.labels
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(labels), dtype=int)
    start = 0
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if len(idx) < k:
            raise DomainError(f"class {c} has {len(idx)} instances, fewer than k={k}")
        idx = rng.permutation(idx)
        fold_of[idx] = (start + np.arange(len(idx))) % k
        start = (start + len(idx)) % k
    out = []
    for f in range(k):
        test = np.flatnonzero(fold_of == f)
        train = np.flatnonzero(fold_of != f)
        out.append((dataset.subset(train), dataset.subset(test)))
    return out


def leave_one_person_out(dataset: Dataset, participant_id: str) -> tuple[Dataset, Dataset]:
    participants = dataset.participants
    if participant_id not in participants:
        raise DomainError(f"unknown participant {participant_id!r}")
    if len(participants) < 2:
        raise DomainError("leave-one-person-out needs at least 2 participants")
    train = [r for r in dataset if r.participant_id != participant_id]
    test = [r for r in dataset if r.participant_id == participant_id]
    return Dataset(train), Dataset(test)
