"""Candidate ranking, MAP/MRR and TREC run/qrels files."""

import logging
from dataclasses import dataclass

logger = logging.getLogger(__name__)

SKIP, ZERO = "skip", "zero"


class EvaluationError(ValueError):
    pass


@dataclass
class RankedList:
    """Candidates of one question sorted by descending score (stable on ties)."""

    qid: str
    items: list  # (answer_id, score, label)

    @classmethod
    def from_scores(cls, qid, answer_ids, scores, labels):
        order = sorted(range(len(scores)), key=lambda i: -scores[i])
        return cls(qid, [(answer_ids[i], float(scores[i]), int(labels[i])) for i in order])

    @property
    def num_relevant(self):
        return sum(1 for _, _, y in self.items if y > 0)


def rank(dataset, scorer):
    """Score every candidate with ``scorer(question_tokens, answer_tokens)``."""
    lists = []
    for q in dataset:
        scores = [scorer(q.tokens, p.answer_tokens) for p in q.pairs]
        lists.append(
            RankedList.from_scores(
                q.qid, [p.answer_id for p in q.pairs], scores, [p.label for p in q.pairs]
            )
        )
    return lists


def average_precision(ranked, zero_positive=SKIP):
    """Mean of precision@rank over the correct items; None if there are none and ``skip``."""
    hits = 0
    total = 0.0
    for i, (_, _, label) in enumerate(ranked.items, 1):
        if label > 0:
            hits += 1
            total += hits / i
    if hits == 0:
        return None if zero_positive == SKIP else 0.0
    return total / hits


def reciprocal_rank(ranked, zero_positive=SKIP):
    for i, (_, _, label) in enumerate(ranked.items, 1):
        if label > 0:
            return 1.0 / i
    return None if zero_positive == SKIP else 0.0


def _mean(values):
    values = [v for v in values if v is not None]
    if not values:
        raise EvaluationError("no question has a correct answer")
    return sum(values) / len(values)


def mean_average_precision(lists, zero_positive=SKIP):
    return _mean(average_precision(r, zero_positive) for r in lists)


def mean_reciprocal_rank(lists, zero_positive=SKIP):
    return _mean(reciprocal_rank(r, zero_positive) for r in lists)


# -- TREC files ---------------------------------------------------------------


def write_run(lists, tag, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in lists:
            for i, (aid, score, _) in enumerate(r.items, 1):
                fh.write(f"{r.qid} Q0 {aid} {i} {score:.6f} {tag}\n")


def read_run(path):
    """Parse a run file into ``{qid: [(answer_id, score)]}`` in rank order."""
    runs = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 6:
                raise EvaluationError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
            qid, _, aid, rnk, score, _ = parts
            runs.setdefault(qid, []).append((int(rnk), aid, float(score)))
    return {q: [(aid, s) for _, aid, s in sorted(v, key=lambda t: t[0])] for q, v in runs.items()}


def write_qrels(dataset, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in dataset.pairs:
            fh.write(f"{p.qid} 0 {p.answer_id} {p.label}\n")


def read_qrels(path):
    qrels = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 4:
                raise EvaluationError(f"{path}:{lineno}: expected 4 fields, got {len(parts)}")
            qid, _, aid, label = parts
            qrels.setdefault(qid, {})[aid] = int(label)
    return qrels


def lists_from_run(run, qrels):
    """Join a parsed run with qrels; unjudged answers count as incorrect."""
    shared = [q for q in run if q in qrels]
    if not shared:
        raise EvaluationError("run and qrels share no question ids")
    missing = len(run) - len(shared)
    if missing:
        logger.warning("%d run questions have no qrels and are ignored", missing)
    extra = len(set(qrels) - set(run))
    if extra:
        logger.warning("%d qrels questions are absent from the run", extra)
    out = []
    for q in shared:
        judged = qrels[q]
        out.append(RankedList(q, [(aid, s, judged.get(aid, 0)) for aid, s in run[q]]))
    return out
