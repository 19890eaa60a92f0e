import json

import numpy as np
import pytest

from airscript.errors import ContractError, DomainError
from airscript.evalharness import (
    REPORT_FORMAT,
    ClassifierResult,
    EvalConfig,
    EvalReport,
    confusion,
    matrix_accuracy,
    person_dependent_eval,
    person_independent_eval,
    resolve_threads,
    select_participants,
    summarize,
)
from airscript.ranking import RankedPrediction


@pytest.fixture(scope="module")
def twelve():
    from airscript.synthgen import generate_dataset

    return generate_dataset(12, 5, "none", seed=3)


def ranked_with_top(label):
    s = np.full(10, 0.05)
    s[label] = 0.55
    return RankedPrediction.from_scores(s)


def perfect_fitter(kind, train, seed):
    return lambda recs: [ranked_with_top(r.label) for r in recs]


def constant_fitter(kind, train, seed):
    return lambda recs: [ranked_with_top(0) for _ in recs]


def random_fitter(kind, train, seed):
    rng = np.random.default_rng(seed)
    return lambda recs: [RankedPrediction.from_scores(rng.dirichlet(np.ones(10))) for _ in recs]


def test_confusion_examples():
    assert np.array_equal(confusion([1, 2, 3], [1, 2, 3]), np.diag([0, 1, 1, 1, 0, 0, 0, 0, 0, 0]))
    m = confusion([5], [3])
    assert m[3, 5] == 1 and m.sum() == 1
    with pytest.raises(ContractError):
        confusion([1, 2], [1])


def test_confusion_brute_force():
    rng = np.random.default_rng(0)
    p, t = rng.integers(0, 10, 500), rng.integers(0, 10, 500)
    m = confusion(p, t)
    for i in range(10):
        for j in range(10):
            assert m[i, j] == sum(1 for a, b in zip(t, p) if a == i and b == j)
    assert abs(matrix_accuracy(m) - np.mean(p == t)) < 1e-12


@pytest.mark.parametrize("protocol", [person_dependent_eval, person_independent_eval])
def test_perfect_classifier(twelve, protocol):
    rep = protocol(twelve, EvalConfig(), seed=1, fitter=perfect_fitter)
    for c in rep.classifiers:
        assert c.mean == 100.0 and c.std == 0.0
        assert np.trace(c.confusion) == c.confusion.sum()
    assert [c.name for c in rep.classifiers] == ["gru1", "gru2", "cnn", "fusion"]


@pytest.mark.parametrize("protocol", [person_dependent_eval, person_independent_eval])
def test_constant_classifier(twelve, protocol):
    rep = protocol(twelve, EvalConfig(models=("gru1",)), seed=1, fitter=constant_fitter)
    assert [c.name for c in rep.classifiers] == ["gru1"]
    assert abs(rep.classifiers[0].mean - 10.0) < 1e-9


def test_random_classifier_near_chance(twelve):
    rep = person_independent_eval(twelve, EvalConfig(models=("cnn",)), seed=2, fitter=random_fitter)
    assert 5.0 < rep.classifiers[0].mean < 15.0


def test_run_counts_and_participants(twelve):
    dep = person_dependent_eval(twelve, EvalConfig(), seed=4, fitter=perfect_fitter)
    ind = person_independent_eval(twelve, EvalConfig(), seed=4, fitter=perfect_fitter)
    for rep in (dep, ind):
        assert len(rep.run_labels) == 10 == len(set(rep.run_labels))
        assert all(len(c.run_accuracies) == 10 for c in rep.classifiers)
    assert dep.result("fusion").confusion.sum() == 10 * 50
    assert ind.result("fusion").confusion.sum() == 10 * 50
    assert len(dep.train_fingerprints) == 50 and len(ind.train_fingerprints) == 10


def test_never_trains_on_test(twelve):
    seen = []

    def spying(kind, train, seed):
        ids = {id(r) for r in train}

        def predict(recs):
            assert ids.isdisjoint(id(r) for r in recs)
            seen.append(kind)
            return [ranked_with_top(0) for _ in recs]

        return predict

    person_dependent_eval(twelve, EvalConfig(), seed=0, fitter=spying)
    person_independent_eval(twelve, EvalConfig(), seed=0, fitter=spying)
    assert len(seen) == 3 * 50 + 3 * 10


def test_independent_needs_eleven_participants(twelve):
    eleven = twelve.subset([i for i, r in enumerate(twelve) if r.participant_id != "P12"])
    person_independent_eval(eleven, EvalConfig(models=("gru1",)), seed=0, fitter=perfect_fitter)
    ten = eleven.subset([i for i, r in enumerate(eleven) if r.participant_id != "P11"])
    with pytest.raises(DomainError):
        person_independent_eval(ten, EvalConfig(), seed=0, fitter=perfect_fitter)
    # dependent mode degrades to all participants when exactly ten exist
    rep = person_dependent_eval(ten, EvalConfig(models=("gru1",)), seed=0, fitter=perfect_fitter)
    assert sorted(rep.run_labels) == sorted(ten.participants)


def test_dependent_names_short_participant(twelve):
    keep = [i for i, r in enumerate(twelve) if not (r.participant_id == "P04" and r.label == 6)][:-3]
    keep += [i for i, r in enumerate(twelve) if r.participant_id == "P04" and r.label == 6][:4]
    with pytest.raises(DomainError, match="P04"):
        person_dependent_eval(twelve.subset(sorted(keep)), EvalConfig(runs=12), seed=0, fitter=perfect_fitter)


def test_thread_count_does_not_change_report(twelve):
    a = person_independent_eval(twelve, EvalConfig(), seed=9, fitter=random_fitter, threads=1)
    b = person_independent_eval(twelve, EvalConfig(), seed=9, fitter=random_fitter, threads=4)
    assert a.to_json() == b.to_json()


def test_selection_seeded(twelve):
    a = select_participants(twelve, 10, seed=1)
    assert a == select_participants(twelve, 10, seed=1)
    assert len(set(a)) == 10
    assert select_participants(twelve, 20, seed=1) == twelve.participants


def test_summarize_rows():
    runs = [0.967] * 10
    rep = EvalReport("dependent", 0, {}, "x", [f"P{i}" for i in range(10)],
                     [ClassifierResult("fusion", runs, np.eye(10, dtype=np.int64))])
    text, js = summarize(rep)
    assert "fusion | 96.7 | 0.0 | 10" in text.splitlines()
    assert EvalReport.from_json(js) == rep
    assert json.loads(js)["format"] == REPORT_FORMAT
    empty = EvalReport("independent", 0, {}, "x", [], [])
    assert summarize(empty)[0].splitlines()[1:] == ["model | mean acc (%) | std (pp) | runs"]


def test_report_rejects_other_formats():
    with pytest.raises(DomainError):
        EvalReport.from_json(json.dumps({"format": "other"}))


def test_threads_env(monkeypatch):
    monkeypatch.setenv("AIRSCRIPT_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2


def test_config_rejects_unknown_model():
    with pytest.raises(ContractError):
        EvalConfig(models=("svm",))


def test_real_networks_end_to_end(small_dataset):
    cfg = EvalConfig(epochs=2, folds=2, runs=2)
    a = person_dependent_eval(small_dataset, cfg, seed=0, threads=1)
    b = person_dependent_eval(small_dataset, cfg, seed=0, threads=2)
    assert a.to_json() == b.to_json()
    for c in a.classifiers:
        assert 0 <= c.mean <= 100
        assert c.confusion.sum() == 2 * 20
