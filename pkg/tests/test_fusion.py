import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from airscript.errors import ContractError
from airscript.fusion import borda_fuse, tally
from airscript.ranking import RankedPrediction


def from_order(order, scores=None):
    m = len(order)
    if scores is None:
        scores = np.zeros(m)
        scores[list(order)] = np.linspace(0.5, 0.01, m)
        scores /= scores.sum()
    return RankedPrediction(tuple(order), np.asarray(scores, dtype=float))


def brute_force(orders, score_lists):
    m = len(orders[0])
    pts = {c: 0 for c in range(m)}
    sums = {c: 0.0 for c in range(m)}
    for order, scores in zip(orders, score_lists):
        for pos, c in enumerate(order):
            pts[c] += m - 1 - pos
        for c in range(m):
            sums[c] += scores[c]
    return sorted(range(m), key=lambda c: (-pts[c], -sums[c], c)), pts


def test_single_voter_identity():
    p = from_order((3, 1, 4, 0, 2, 5, 9, 8, 7, 6))
    assert borda_fuse([p]).labels == p.labels


def test_majority_top():
    tail = [0, 2, 3, 4, 5, 6, 8, 9]
    votes = [from_order([7, 1] + tail), from_order([1, 7] + tail), from_order([7, 1] + tail)]
    assert borda_fuse(votes).top == 7


def test_exhaustive_three_voters_four_classes():
    perms = list(itertools.permutations(range(4)))
    flat = np.full(4, 0.25)  # equal scores: ties fall through to the label
    for a, b, c in itertools.product(perms, repeat=3):
        fused = borda_fuse([from_order(a, flat), from_order(b, flat), from_order(c, flat)])
        want, pts = brute_force([a, b, c], [flat] * 3)
        assert list(fused.labels) == want
        np.testing.assert_allclose(fused.scores, [pts[i] / 18 for i in range(4)])


def test_tie_break_uses_scores_then_label():
    # two voters disagree symmetrically: points tie, the summed scores decide
    a = RankedPrediction((0, 1), np.array([0.51, 0.49]))
    b = RankedPrediction((1, 0), np.array([0.2, 0.8]))
    assert borda_fuse([a, b]).labels == (1, 0)
    c = RankedPrediction((1, 0), np.array([0.49, 0.51]))
    assert borda_fuse([a, c]).labels == (0, 1)


def test_rejects_bad_input():
    with pytest.raises(ContractError):
        borda_fuse([])
    with pytest.raises(ContractError):
        borda_fuse([RankedPrediction((0, 0, 1), np.ones(3) / 3)])
    with pytest.raises(ContractError):
        borda_fuse([from_order(range(3)), from_order(range(4))])


rankings = st.permutations(list(range(10)))


@given(st.lists(rankings, min_size=1, max_size=5), st.randoms(use_true_random=False))
def test_order_invariance_and_conservation(orders, rnd):
    rng = np.random.default_rng(rnd.randint(0, 2**31))
    preds = [from_order(o, rng.dirichlet(np.ones(10))) for o in orders]
    base = borda_fuse(preds)
    shuffled = preds[:]
    rnd.shuffle(shuffled)
    assert borda_fuse(shuffled).labels == base.labels
    assert tally(preds).points.sum() == len(preds) * 45


@given(rankings, st.integers(1, 4))
def test_unanimity(order, voters):
    p = from_order(order)
    assert borda_fuse([p] * voters).labels == p.labels


@given(st.lists(rankings, min_size=1, max_size=4), st.integers(0, 3), st.integers(1, 9))
def test_promotion_never_lowers_points(orders, voter, pos):
    voter %= len(orders)
    before = tally([from_order(o) for o in orders]).points
    promoted = [list(o) for o in orders]
    r = promoted[voter]
    c = r[pos]
    r[pos - 1], r[pos] = r[pos], r[pos - 1]
    after = tally([from_order(o) for o in promoted]).points
    assert after[c] >= before[c]


def test_ranked_prediction_from_scores():
    p = RankedPrediction.from_scores([0.1, 0.3, 0.3, 0.3])
    assert p.labels == (1, 2, 3, 0)
    assert p.top == 1
