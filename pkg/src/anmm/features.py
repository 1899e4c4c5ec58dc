"""Query likelihood, IDF weights and the linear score blend."""

import math
from collections import Counter
from dataclasses import dataclass, field


@dataclass
class CollectionStats:
    """Counts over candidate answers, each treated as one document."""

    doc_count: int = 0
    doc_freq: Counter = field(default_factory=Counter)
    term_freq_total: Counter = field(default_factory=Counter)
    total_tokens: int = 0

    def add_document(self, tokens):
        self.doc_count += 1
        self.total_tokens += len(tokens)
        self.term_freq_total.update(tokens)
        self.doc_freq.update(set(tokens))

    def __add__(self, other):
        return CollectionStats(
            self.doc_count + other.doc_count,
            self.doc_freq + other.doc_freq,
            self.term_freq_total + other.term_freq_total,
            self.total_tokens + other.total_tokens,
        )

    @property
    def vocab_size(self):
        return len(self.term_freq_total)


def build_stats(dataset):
    pairs = dataset.pairs
    if not pairs:
        raise ValueError("cannot build collection statistics from an empty dataset")
    stats = CollectionStats()
    for p in pairs:
        stats.add_document(p.answer_tokens)
    return stats


def idf(stats, token):
    """``ln((N + 1) / (df + 1))``; unseen tokens get the maximum ``ln(N + 1)``."""
    return math.log((stats.doc_count + 1) / (stats.doc_freq.get(token, 0) + 1))


def collection_prob(stats, token):
    return (stats.term_freq_total.get(token, 0) + 1) / (stats.total_tokens + stats.vocab_size)


def ql_score(question, answer, stats, mu=2000.0):
    """Dirichlet-smoothed log query likelihood of ``question`` under ``answer``."""
    if not answer:
        raise ValueError("answer must be nonempty")
    if mu < 0:
        raise ValueError(f"mu must be non-negative, got {mu}")
    tf = Counter(answer)
    denom = len(answer) + mu
    score = 0.0
    for t in question:
        num = tf.get(t, 0) + mu * collection_prob(stats, t)
        if num == 0.0:
            return -math.inf
        score += math.log(num / denom)
    return score


class MinMaxNormalizer:
    """Per-question min-max scaling of the aNMM and QL features to ``[0, 1]``.

    A feature that is constant over the candidate list maps to 0, as does
    a ``-inf`` log-likelihood.
    """

    def __init__(self, anmm_scores, ql_scores):
        self._a = self._bounds(anmm_scores)
        self._q = self._bounds(ql_scores)

    @staticmethod
    def _bounds(values):
        finite = [v for v in values if math.isfinite(v)]
        return (min(finite), max(finite)) if finite else (0.0, 0.0)

    @staticmethod
    def _scale(x, bounds):
        lo, hi = bounds
        if not math.isfinite(x):
            return 0.0 if x < 0 else 1.0
        return 0.0 if hi == lo else (x - lo) / (hi - lo)

    def __call__(self, anmm, ql):
        return self._scale(anmm, self._a), self._scale(ql, self._q)


def blend(anmm, ql, alpha, normalizer):
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    a, q = normalizer(anmm, ql)
    return alpha * a + (1.0 - alpha) * q


def blend_scores(anmm_scores, ql_scores, alpha):
    norm = MinMaxNormalizer(anmm_scores, ql_scores)
    return [blend(a, q, alpha, norm) for a, q in zip(anmm_scores, ql_scores)]
