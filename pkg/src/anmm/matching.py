"""QA matching matrices and their value-binned row aggregates."""

from dataclasses import dataclass

import numpy as np

from anmm import kernels


@dataclass(frozen=True)
class BinConfig:
    """Bin layout over matching-signal values.

    ``bin_count - 1`` half-open bins of equal width cover ``[lo, 1)`` and the
    last bin holds exact matches (value 1.0) only.  ``lo`` is -1, or 0 when
    ``drop_negative`` discards negative signals entirely.
    """

    bin_count: int
    drop_negative: bool = False

    def __post_init__(self):
        if self.bin_count < 2:
            raise ValueError(f"bin_count must be >= 2, got {self.bin_count}")

    @property
    def lo(self):
        return 0.0 if self.drop_negative else -1.0

    @property
    def width(self):
        return (1.0 - self.lo) / (self.bin_count - 1)

    def bin_index(self, value):
        """Scalar reference for the bin rule; None for dropped values."""
        if value == 1.0:
            return self.bin_count - 1
        if value < self.lo:
            return None
        regular = self.bin_count - 1
        k = int(np.floor((value - self.lo) * regular / (1.0 - self.lo)))
        return min(max(k, 0), regular - 1)

    def edges(self):
        """``(lo, hi)`` per bin; the exact-match bin is ``(1.0, 1.0)``."""
        out = [
            (self.lo + k * self.width, self.lo + (k + 1) * self.width)
            for k in range(self.bin_count - 1)
        ]
        out.append((1.0, 1.0))
        return out


@dataclass
class MatchingMatrix:
    entries: np.ndarray
    question_tokens: tuple
    answer_tokens: tuple


def _token_ids(question, answer):
    ids = {}
    q = np.array([ids.setdefault(t, len(ids)) for t in question], dtype=np.int64)
    a = np.array([ids.setdefault(t, len(ids)) for t in answer], dtype=np.int64)
    return q, a


def build_matching_matrix(question, answer, store, q_embs=None):
    """``P[j, i] = 1`` for identical tokens, else embedding cosine.

    ``q_embs`` may carry precomputed question vectors.
    """
    if not question or not answer:
        raise ValueError("question and answer must be nonempty")
    qids, aids = _token_ids(question, answer)
    if q_embs is None:
        q_embs = store.matrix(question)
    P = kernels.match_matrix(
        np.ascontiguousarray(q_embs, dtype=np.float64), store.matrix(answer), qids, aids
    )
    return MatchingMatrix(P, tuple(question), tuple(answer))


def bin_signals(pm, cfg):
    """Sum each row's signals into bins; returns the ``(M, B)`` matrix ``x``."""
    entries = pm.entries if isinstance(pm, MatchingMatrix) else pm
    return kernels.bin_rows(
        np.ascontiguousarray(entries, dtype=np.float64), cfg.bin_count, cfg.lo
    )
