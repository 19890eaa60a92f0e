from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError


@dataclass(frozen=True)
class RankedPrediction:
    """Classes ordered best-first plus the per-class scores they were ranked by.

    ``scores[c]`` is the score of class ``c`` (not of rank position ``c``).
    """

    labels: tuple[int, ...]
    scores: np.ndarray

    @classmethod
    def from_scores(cls, scores) -> "RankedPrediction":
        s = np.asarray(scores, dtype=float).reshape(-1)
        # lexsort: last key is primary -> descending score, then ascending label
        order = np.lexsort((np.arange(len(s)), -s))
        return cls(tuple(int(i) for i in order), s)

    @property
    def top(self) -> int:
        return self.labels[0]

    @property
    def num_classes(self) -> int:
        return len(self.labels)

    def check(self) -> None:
        m = len(self.scores)
        if sorted(self.labels) != list(range(m)):
            raise ContractError(f"ranking {self.labels} is not a permutation of 0..{m - 1}")
