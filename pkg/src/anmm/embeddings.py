"""Pretrained word embeddings with deterministic out-of-vocabulary vectors."""

import hashlib
import logging

import numpy as np

logger = logging.getLogger(__name__)

OOV_LOW, OOV_HIGH = -0.25, 0.25


class EmbeddingError(ValueError):
    pass


def _oov_raw(seed, token, dim):
    digest = hashlib.blake2b(
        f"{seed}\x00{token}".encode("utf-8"), digest_size=16
    ).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    return rng.uniform(OOV_LOW, OOV_HIGH, size=dim)


class EmbeddingStore:
    """Token to unit-norm vector table.

    Unknown tokens get a vector drawn from ``U[-0.25, 0.25]`` with an RNG
    seeded by ``(oov_seed, token)``, then normalized, so the same token always
    maps to the same vector without persisting anything.
    """

    def __init__(self, table, dim, oov_seed=0):
        if dim <= 0:
            raise EmbeddingError(f"dim must be positive, got {dim}")
        self.dim = int(dim)
        self.oov_seed = int(oov_seed)
        self.table = {}
        for token, vec in table.items():
            vec = np.asarray(vec, dtype=np.float64)
            if vec.shape != (self.dim,):
                raise EmbeddingError(
                    f"vector for {token!r} has shape {vec.shape}, expected ({self.dim},)"
                )
            norm = np.linalg.norm(vec)
            if not np.isfinite(norm) or norm == 0.0:
                raise EmbeddingError(f"zero or non-finite vector for {token!r}")
            self.table[token] = vec / norm
        self._oov = {}

    def __len__(self):
        return len(self.table)

    def __contains__(self, token):
        return token in self.table

    def vector(self, token):
        if not token:
            raise EmbeddingError("empty token")
        vec = self.table.get(token)
        if vec is not None:
            return vec
        vec = self._oov.get(token)
        if vec is None:
            raw = _oov_raw(self.oov_seed, token, self.dim)
            vec = raw / np.linalg.norm(raw)
            self._oov[token] = vec
        return vec

    def matrix(self, tokens):
        """Stack the vectors of ``tokens`` into a C-contiguous ``(len, dim)`` array."""
        out = np.empty((len(tokens), self.dim), dtype=np.float64)
        for i, tok in enumerate(tokens):
            out[i] = self.vector(tok)
        return out

    def cosine(self, t1, t2):
        if not t1 or not t2:
            raise EmbeddingError("empty token")
        if t1 == t2:
            return 1.0
        s = float(np.dot(self.vector(t1), self.vector(t2)))
        return min(1.0, max(-1.0, s))


def vector(store, token):
    return store.vector(token)


def cosine(store, t1, t2):
    return store.cosine(t1, t2)


def load_embeddings(path, dim=None, oov_seed=0):
    """Read a word2vec-style text file.

    Each line is a token followed by ``dim`` reals. A leading ``count dim``
    header is skipped. When ``dim`` is None it is taken from the header or
    the first vector line.
    """
    table = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise EmbeddingError(f"cannot read embeddings {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2:
                try:
                    _, header_dim = int(parts[0]), int(parts[1])
                except ValueError:
                    pass
                else:
                    if dim is None:
                        dim = header_dim
                    continue
            if dim is None:
                dim = len(parts) - 1
            if len(parts) != dim + 1:
                raise EmbeddingError(
                    f"{path}:{lineno}: expected {dim} values, got {len(parts) - 1}"
                )
            try:
                vec = np.array([float(x) for x in parts[1:]])
            except ValueError as exc:
                raise EmbeddingError(f"{path}:{lineno}: {exc}") from exc
            if parts[0] in table:
                logger.warning("%s:%d: duplicate token %r, keeping last", path, lineno, parts[0])
            table[parts[0]] = vec
    if dim is None:
        raise EmbeddingError(f"no vectors in {path}")
    return EmbeddingStore(table, dim, oov_seed=oov_seed)


def save_embeddings(store, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(store.table)} {store.dim}\n")
        for token, vec in store.table.items():
            fh.write(token + " " + " ".join(repr(float(x)) for x in vec) + "\n")
