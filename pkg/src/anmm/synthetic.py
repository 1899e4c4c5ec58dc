"""Seeded synthetic data: the planted-token ranking fixture and random triples."""

import os
from dataclasses import dataclass

import numpy as np

from anmm.corpus import Dataset, QAPair, write_dataset
from anmm.embeddings import EmbeddingStore, save_embeddings
from anmm.matching import bin_signals, build_matching_matrix


def _unit(x):
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


@dataclass
class Fixture:
    dataset: Dataset
    store: EmbeddingStore
    planted: dict  # qid -> planted token


def planted_fixture(seed=7, n_questions=20, dim=20, n_pos=2, n_neg=4,
                    question_fillers=4, answer_len=6, n_noise=200):
    """Questions whose correct answers share one planted content token.

    Each question is some filler words plus a planted token. Positive answers
    contain the planted token among noise words; negatives hold noise words
    only, and noise words never occur in questions.  Planted tokens cluster
    around one embedding direction, filler words around another.
    """
    rng = np.random.default_rng(seed)
    content_dir, filler_dir = _unit(rng.normal(size=(2, dim)))
    fillers = ["what", "is", "the", "of", "in", "did", "who", "when", "a", "to"]
    table = {}
    for tok, vec in zip(fillers, _unit(filler_dir + 0.6 * _unit(rng.normal(size=(len(fillers), dim))))):
        table[tok] = vec
    noise = [f"n{i:03d}" for i in range(n_noise)]
    for tok, vec in zip(noise, _unit(rng.normal(size=(n_noise, dim)))):
        table[tok] = vec

    data = Dataset()
    planted = {}
    for qi in range(n_questions):
        qid = f"q{qi:02d}"
        tok = f"topic{qi:02d}"
        table[tok] = _unit(content_dir + 0.6 * _unit(rng.normal(size=dim)))
        planted[qid] = tok
        words = list(rng.choice(fillers, size=question_fillers, replace=False)) + [tok]
        question = tuple(words[i] for i in rng.permutation(len(words)))
        for k in range(n_pos + n_neg):
            body = list(rng.choice(noise, size=answer_len, replace=False))
            label = int(k < n_pos)
            if label:
                body[int(rng.integers(answer_len))] = tok
            data.add(QAPair(qid, question, f"{qid}_a{k}", tuple(body), label))
    return Fixture(data, EmbeddingStore(table, dim, oov_seed=seed), planted)


def write_fixture(directory, **kwargs):
    """Write ``train.tsv`` and ``embeddings.txt`` for the planted fixture."""
    fx = planted_fixture(**kwargs)
    os.makedirs(directory, exist_ok=True)
    data_path = os.path.join(directory, "train.tsv")
    emb_path = os.path.join(directory, "embeddings.txt")
    write_dataset(fx.dataset, data_path)
    save_embeddings(fx.store, emb_path)
    return data_path, emb_path


def random_store(rng, vocab_size=60, dim=20):
    vocab = [f"t{i}" for i in range(vocab_size)]
    return EmbeddingStore(dict(zip(vocab, rng.normal(size=(vocab_size, dim)))), dim), vocab


def random_question_answer(rng, vocab, m_range=(2, 7), n_range=(3, 13)):
    m = int(rng.integers(*m_range))
    n = int(rng.integers(*n_range))
    question = tuple(rng.choice(vocab, size=m))
    answer = tuple(rng.choice(vocab, size=n))
    return question, answer


def random_encoded_triples(rng, store, vocab, bins, count):
    """``(q_embs, x_pos, x_neg)`` tuples from random questions and answers."""
    out = []
    for _ in range(count):
        question, pos = random_question_answer(rng, vocab)
        _, neg = random_question_answer(rng, vocab)
        neg = neg if neg else pos
        q_embs = store.matrix(question)
        xp = bin_signals(build_matching_matrix(question, pos, store, q_embs), bins)
        xn = bin_signals(build_matching_matrix(question, neg, store, q_embs), bins)
        out.append((q_embs, xp, xn))
    return out
