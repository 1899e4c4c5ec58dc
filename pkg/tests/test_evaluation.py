import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anmm.corpus import Dataset, QAPair
from anmm.evaluation import (
    EvaluationError, RankedList, average_precision, lists_from_run, mean_average_precision,
    mean_reciprocal_rank, rank, read_qrels, read_run, write_qrels, write_run,
)


def rl(labels, qid="q"):
    return RankedList(qid, [(f"a{i}", float(len(labels) - i), y) for i, y in enumerate(labels)])


def naive_ap(labels):
    rel = [i for i, y in enumerate(labels) if y]
    return sum(sum(labels[: i + 1]) / (i + 1) for i in rel) / len(rel)


def naive_rr(labels):
    return 1.0 / (labels.index(1) + 1)


def test_average_precision_examples():
    assert average_precision(rl([1, 0, 1, 0, 0])) == pytest.approx(0.8333333, abs=1e-6)
    assert average_precision(rl([1, 1, 1])) == 1.0
    assert average_precision(rl([0, 0, 0, 1])) == 0.25


def test_mrr_and_map_examples():
    assert mean_reciprocal_rank([rl([1, 0]), rl([0, 1])]) == 0.75
    assert mean_reciprocal_rank([rl([1, 0]), rl([1, 1])]) == 1.0
    assert mean_average_precision([rl([0, 1])]) == 0.5
    assert mean_average_precision([rl([1]), rl([0, 1])]) == 0.75


def test_zero_positive_handling():
    lists = [rl([1, 0]), rl([0, 0])]
    assert mean_average_precision(lists) == 1.0
    assert mean_average_precision(lists, zero_positive="zero") == 0.5
    assert mean_reciprocal_rank(lists, zero_positive="zero") == 0.5
    with pytest.raises(EvaluationError):
        mean_average_precision([rl([0])])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.lists(st.integers(0, 1), min_size=1, max_size=15).filter(any), min_size=1, max_size=8))
def test_metrics_match_naive(all_labels):
    lists = [rl(l) for l in all_labels]
    assert abs(mean_average_precision(lists) - np.mean([naive_ap(l) for l in all_labels])) < 1e-12
    assert abs(mean_reciprocal_rank(lists) - np.mean([naive_rr(l) for l in all_labels])) < 1e-12


def test_single_positive_map_equals_mrr():
    lists = [rl([0, 0, 1, 0]), rl([0, 1]), rl([1, 0, 0])]
    assert mean_average_precision(lists) == mean_reciprocal_rank(lists)


def _dataset(n):
    return Dataset([QAPair("q", ("x",), f"a{i}", ("y",), i % 2) for i in range(n)])


def test_rank_orders_and_is_stable():
    data = _dataset(3)
    scores = {"a0": 0.1, "a1": 0.9, "a2": 0.5}
    lists = rank(data, lambda q, a: 0.0)
    assert [i[0] for i in lists[0].items] == ["a0", "a1", "a2"]
    it = iter([0.1, 0.9, 0.5])
    lists = rank(data, lambda q, a: next(it))
    assert [i[0] for i in lists[0].items] == ["a1", "a2", "a0"]
    assert scores  # keep mapping for reference


def test_rank_permutation_of_input(rng):
    scores = rng.permutation(10) / 10.0
    ids = [f"a{i}" for i in range(10)]
    base = RankedList.from_scores("q", ids, list(scores), [0] * 10)
    perm = rng.permutation(10)
    other = RankedList.from_scores("q", [ids[i] for i in perm], list(scores[perm]), [0] * 10)
    assert [i[0] for i in base.items] == [i[0] for i in other.items]


def test_monotone_transform_invariance(rng):
    labels = [int(x) for x in rng.integers(0, 2, size=12)]
    labels[0] = 1
    s = rng.normal(size=12)
    ids = [f"a{i}" for i in range(12)]
    a = RankedList.from_scores("q", ids, list(s), labels)
    b = RankedList.from_scores("q", ids, list(np.exp(3 * s) + 7), labels)
    assert a.items[0][0] == b.items[0][0]
    assert mean_average_precision([a]) == mean_average_precision([b])
    assert mean_reciprocal_rank([a]) == mean_reciprocal_rank([b])


def test_run_file_format_and_roundtrip(tmp_path):
    lists = [RankedList("q1", [("a2", 0.91234567, 1), ("a1", 0.5, 0)])]
    path = tmp_path / "run.txt"
    write_run(lists, "tag", path)
    text = path.read_text()
    assert text == "q1 Q0 a2 1 0.912346 tag\nq1 Q0 a1 2 0.500000 tag\n"
    assert [aid for aid, _ in read_run(path)["q1"]] == ["a2", "a1"]


def test_qrels_join(tmp_path):
    data = Dataset([QAPair("q1", ("x",), "a1", ("y",), 1), QAPair("q1", ("x",), "a2", ("y",), 0)])
    write_qrels(data, tmp_path / "qrels")
    assert read_qrels(tmp_path / "qrels") == {"q1": {"a1": 1, "a2": 0}}
    run = {"q1": [("a2", 0.9), ("a1", 0.1)], "q9": [("a1", 0.1)]}
    lists = lists_from_run(run, read_qrels(tmp_path / "qrels"))
    assert len(lists) == 1 and mean_average_precision(lists) == 0.5
    with pytest.raises(EvaluationError):
        lists_from_run({"zz": [("a", 1.0)]}, {"q1": {"a1": 1}})


def test_trec_eval_parity(tmp_path, rng):
    pytrec_eval = pytest.importorskip("pytrec_eval")
    lists = []
    for q in range(30):
        n = int(rng.integers(2, 20))
        labels = [int(x) for x in rng.integers(0, 2, size=n)]
        labels[int(rng.integers(n))] = 1
        lists.append(RankedList.from_scores(f"q{q}", [f"d{i}" for i in range(n)], list(rng.normal(size=n)), labels))
    write_run(lists, "t", tmp_path / "run")
    run = read_run(tmp_path / "run")
    qrels = {r.qid: {aid: y for aid, _, y in r.items} for r in lists}
    ev = pytrec_eval.RelevanceEvaluator(qrels, {"map", "recip_rank"})
    res = ev.evaluate({q: {aid: s for aid, s in v} for q, v in run.items()})
    ours = lists_from_run(run, qrels)
    assert abs(np.mean([r["map"] for r in res.values()]) - mean_average_precision(ours)) < 1e-4
    assert abs(np.mean([r["recip_rank"] for r in res.values()]) - mean_reciprocal_rank(ours)) < 1e-4
