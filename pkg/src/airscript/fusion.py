"""Borda-count fusion of ranked classifier outputs."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError
from .ranking import RankedPrediction


@dataclass(frozen=True)
class BordaTally:
    points: np.ndarray  # int, per class
    score_sums: np.ndarray  # float, per class; tie-break channel


def tally(predictions: Sequence[RankedPrediction]) -> BordaTally:
    if not predictions:
        raise ContractError("need at least one ranking to fuse")
    m = predictions[0].num_classes
    points = np.zeros(m, dtype=np.int64)
    for p in predictions:
        if p.num_classes != m:
            raise ContractError("rankings cover different numbers of classes")
        p.check()
        points[list(p.labels)] += np.arange(m - 1, -1, -1)
    # fsum is exactly rounded, so the tie-break does not depend on voter order
    stacked = np.array([p.scores for p in predictions], dtype=float)
    score_sums = np.array([math.fsum(col) for col in stacked.T])
    return BordaTally(points, score_sums)


def borda_fuse(predictions: Sequence[RankedPrediction]) -> RankedPrediction:
    """Class at 0-based position p earns m-1-p points from each voter.

    Ties on points fall back to the summed scores, then the smaller label.
    The fused scores are the normalized point totals.
    """
    t = tally(predictions)
    m = len(t.points)
    order = np.lexsort((np.arange(m), -t.score_sums, -t.points))
    total = t.points.sum()
    scores = t.points / total if total > 0 else np.full(m, 1.0 / m)
    return RankedPrediction(tuple(int(i) for i in order), scores)
