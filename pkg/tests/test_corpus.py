import pytest
from hypothesis import given, strategies as st

from anmm.corpus import DataError, Dataset, QAPair, make_triples, parse_dataset, tokenize


def test_tokenize_examples():
    assert tokenize("Where was the first Burger King restaurant opened?") == [
        "where", "was", "the", "first", "burger", "king", "restaurant", "opened",
    ]
    assert tokenize("") == []
    assert tokenize("U.S.-based") == ["u", "s", "based"]


@given(st.text())
def test_tokenize_idempotent(text):
    toks = tokenize(text)
    assert tokenize(" ".join(toks)) == toks


def write_tsv(tmp_path, rows):
    p = tmp_path / "data.tsv"
    p.write_text("".join("\t".join(r) + "\n" for r in rows), encoding="utf-8")
    return p


def test_parse_groups_by_qid(tmp_path):
    rows = [("q1", "who is king", f"a{i}", f"answer {i}", str(i % 2)) for i in range(3)]
    data = parse_dataset(write_tsv(tmp_path, rows))
    assert len(data.questions) == 1
    assert len(data) == 3
    q = data.questions["q1"]
    assert q.tokens == ("who", "is", "king")
    assert [p.answer_id for p in q.pairs] == ["a0", "a1", "a2"]


def test_parse_bad_label(tmp_path):
    with pytest.raises(DataError, match="label"):
        parse_dataset(write_tsv(tmp_path, [("q1", "who", "a1", "x", "2")]))


def test_parse_wrong_field_count(tmp_path):
    with pytest.raises(DataError, match="5 tab-separated"):
        parse_dataset(write_tsv(tmp_path, [("q1", "who", "a1", "1")]))


def test_parse_drops_empty_tokenizations(tmp_path):
    data = parse_dataset(write_tsv(tmp_path, [("q1", "who", "a1", "?!", "1"), ("q1", "who", "a2", "x", "0")]))
    assert len(data) == 1 and data.dropped == 1


def _pair(qid, aid, label, q=("q",)):
    return QAPair(qid, q, aid, (aid,), label)


def test_make_triples_cartesian_product():
    data = Dataset([_pair("q", f"p{i}", 1) for i in range(2)] + [_pair("q", f"n{i}", 0) for i in range(3)])
    triples = make_triples(data)
    assert len(triples) == 6
    assert [(t.pos_answer[0], t.neg_answer[0]) for t in triples[:3]] == [("p0", "n0"), ("p0", "n1"), ("p0", "n2")]


def test_make_triples_degenerate():
    assert make_triples(Dataset([_pair("q", "n0", 0), _pair("q", "n1", 0)])) == []
    data = Dataset([_pair("a", "p", 1), _pair("a", "n", 0), _pair("b", "p1", 1), _pair("b", "p2", 1)])
    triples = make_triples(data)
    assert len(triples) == 1 and triples[0].qid == "a"


def test_inconsistent_question_text_rejected():
    with pytest.raises(DataError):
        Dataset([_pair("q", "a", 1, ("x",)), _pair("q", "b", 0, ("y",))])
