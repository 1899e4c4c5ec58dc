"""Question/answer candidate data: tokenization, TSV ingestion, triples."""

import logging
import re
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

_SPLIT = re.compile(r"[\W_]+")


class DataError(ValueError):
    pass


def tokenize(text):
    """Lowercase and split on runs of non-alphanumerics. Stopwords are kept."""
    return [t for t in _SPLIT.split(text.lower()) if t]


@dataclass(frozen=True)
class QAPair:
    qid: str
    question_tokens: tuple
    answer_id: str
    answer_tokens: tuple
    label: int


@dataclass(frozen=True)
class Triple:
    qid: str
    question_tokens: tuple
    pos_answer: tuple
    neg_answer: tuple


@dataclass
class Question:
    qid: str
    tokens: tuple
    pairs: list = field(default_factory=list)


class Dataset:
    """QA pairs grouped by question id, in first-seen file order."""

    def __init__(self, pairs=()):
        self.questions = {}
        self.dropped = 0
        for p in pairs:
            self.add(p)

    def add(self, pair):
        if pair.label not in (0, 1):
            raise DataError(f"label must be 0 or 1, got {pair.label!r}")
        if not pair.question_tokens or not pair.answer_tokens:
            raise DataError(f"empty token list in pair {pair.qid}/{pair.answer_id}")
        q = self.questions.get(pair.qid)
        if q is None:
            q = self.questions[pair.qid] = Question(pair.qid, tuple(pair.question_tokens))
        elif q.tokens != tuple(pair.question_tokens):
            raise DataError(f"question {pair.qid} has inconsistent text across rows")
        q.pairs.append(pair)

    @property
    def pairs(self):
        return [p for q in self.questions.values() for p in q.pairs]

    def __len__(self):
        return sum(len(q.pairs) for q in self.questions.values())

    def __iter__(self):
        return iter(self.questions.values())


def parse_dataset(path):
    """Read ``qid<TAB>question<TAB>answer_id<TAB>answer<TAB>label`` rows."""
    data = Dataset()
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 5:
                raise DataError(f"{path}:{lineno}: expected 5 tab-separated fields, got {len(fields)}")
            qid, question, aid, answer, label = fields
            if label.strip() not in ("0", "1"):
                raise DataError(f"{path}:{lineno}: label must be 0 or 1, got {label!r}")
            qt, at = tokenize(question), tokenize(answer)
            if not qt or not at:
                data.dropped += 1
                continue
            data.add(QAPair(qid, tuple(qt), aid, tuple(at), int(label)))
    if data.dropped:
        logger.warning("%s: dropped %d rows with empty tokenization", path, data.dropped)
    return data


def write_dataset(data, path):
    """Write a dataset back as TSV, joining tokens with spaces."""
    with open(path, "w", encoding="utf-8") as fh:
        for p in data.pairs:
            fh.write(
                f"{p.qid}\t{' '.join(p.question_tokens)}\t{p.answer_id}\t"
                f"{' '.join(p.answer_tokens)}\t{p.label}\n"
            )


def make_triples(data):
    triples = []
    for q in data:
        pos = [p for p in q.pairs if p.label == 1]
        neg = [p for p in q.pairs if p.label == 0]
        for a in pos:
            for b in neg:
                triples.append(Triple(q.qid, q.tokens, a.answer_tokens, b.answer_tokens))
    return triples
