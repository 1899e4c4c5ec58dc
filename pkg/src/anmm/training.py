"""Pairwise hinge training with analytic gradients and a finite-difference checker."""

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from anmm import kernels
from anmm.corpus import make_triples
from anmm.evaluation import RankedList, mean_average_precision, mean_reciprocal_rank
from anmm.matching import BinConfig, bin_signals, build_matching_matrix
from anmm.model import Model, ModelParams1, ModelParams2, attention, forward, init_params

logger = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


class InactiveTriple(ValueError):
    """The triple already satisfies the margin; it contributes no gradient."""


@dataclass
class TrainConfig:
    variant: str = "anmm1"
    bin_count: int = 600
    hidden: int = 1
    eta0: float = 0.05
    max_epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    patience: int = 10
    drop_negative: bool = False

    def __post_init__(self):
        if self.variant not in ("anmm1", "anmm2"):
            raise ValueError(f"variant must be anmm1 or anmm2, got {self.variant!r}")
        for name in ("eta0", "max_epochs", "batch_size", "hidden"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.patience < 0:
            raise ValueError("patience must be non-negative")

    @property
    def bins(self):
        return BinConfig(self.bin_count, self.drop_negative)


@dataclass
class GradientSet:
    dw: np.ndarray
    dv: np.ndarray
    dr: np.ndarray = None

    @classmethod
    def zeros_like(cls, params):
        dr = np.zeros_like(params.r) if isinstance(params, ModelParams2) else None
        return cls(np.zeros_like(params.w), np.zeros_like(params.v), dr)

    def scale(self, c):
        self.dw *= c
        self.dv *= c
        if self.dr is not None:
            self.dr *= c


def hinge_loss(s_pos, s_neg):
    return max(0.0, 1.0 - s_pos + s_neg)


# -- encoding ---------------------------------------------------------------


@dataclass
class EncodedQuestion:
    qid: str
    tokens: tuple
    q_embs: np.ndarray
    signals: list
    answer_ids: list
    labels: list


def encode_pair(question, answer, store, bins, q_embs=None):
    if q_embs is None:
        q_embs = store.matrix(question)
    return bin_signals(build_matching_matrix(question, answer, store, q_embs), bins)


def encode_dataset(data, store, bins):
    """Precompute question vectors and binned signals for every candidate."""
    out = []
    for q in data:
        q_embs = store.matrix(q.tokens)
        signals = [encode_pair(q.tokens, p.answer_tokens, store, bins, q_embs) for p in q.pairs]
        out.append(
            EncodedQuestion(
                q.qid, q.tokens, q_embs, signals,
                [p.answer_id for p in q.pairs], [p.label for p in q.pairs],
            )
        )
    return out


def encoded_triples(encoded):
    """``(q_embs, x_pos, x_neg)`` tuples in the same order as ``make_triples``."""
    out = []
    for q in encoded:
        pos = [x for x, y in zip(q.signals, q.labels) if y == 1]
        neg = [x for x, y in zip(q.signals, q.labels) if y == 0]
        out.extend((q.q_embs, a, b) for a in pos for b in neg)
    return out


# -- gradients --------------------------------------------------------------


def triple_loss_grad(q_embs, x_pos, x_neg, params, grads):
    """Hinge loss of one encoded triple; accumulates its gradient into ``grads``."""
    if isinstance(params, ModelParams2):
        return kernels.anmm2_triple(
            x_pos, x_neg, q_embs, params.w, params.r, params.v, grads.dw, grads.dr, grads.dv
        )
    return kernels.anmm1_triple(x_pos, x_neg, q_embs, params.w, params.v, grads.dw, grads.dv)


def triple_loss(q_embs, x_pos, x_neg, params):
    """Hinge loss through the forward kernels only."""
    g = attention(q_embs, params.v)
    if isinstance(params, ModelParams2):
        yp = kernels.anmm2_forward(x_pos, g, params.w, params.r)
        yn = kernels.anmm2_forward(x_neg, g, params.w, params.r)
    else:
        yp = kernels.anmm1_forward(x_pos, g, params.w)
        yn = kernels.anmm1_forward(x_neg, g, params.w)
    return hinge_loss(yp, yn)


def _bins(cfg):
    return cfg.bins if isinstance(cfg, TrainConfig) else cfg


def _grad(triple, params, store, cfg):
    bins = _bins(cfg)
    q_embs = store.matrix(triple.question_tokens)
    xp = encode_pair(triple.question_tokens, triple.pos_answer, store, bins, q_embs)
    xn = encode_pair(triple.question_tokens, triple.neg_answer, store, bins, q_embs)
    grads = GradientSet.zeros_like(params)
    if triple_loss_grad(q_embs, xp, xn, params, grads) <= 0.0:
        raise InactiveTriple("margin satisfied; skip this triple")
    return grads


def grad_anmm1(triple, params, store, cfg):
    if not isinstance(params, ModelParams1):
        raise TypeError("grad_anmm1 needs ModelParams1")
    return _grad(triple, params, store, cfg)


def grad_anmm2(triple, params, store, cfg):
    if not isinstance(params, ModelParams2):
        raise TypeError("grad_anmm2 needs ModelParams2")
    return _grad(triple, params, store, cfg)


def sgd_step(params, grads, eta):
    """Return ``params - eta * grads`` as a new parameter set."""
    if grads.dw.shape != params.w.shape or grads.dv.shape != params.v.shape:
        raise ValueError("gradient shapes do not match parameters")
    if isinstance(params, ModelParams2):
        if grads.dr is None or grads.dr.shape != params.r.shape:
            raise ValueError("gradient shapes do not match parameters")
        return ModelParams2(params.w - eta * grads.dw, params.r - eta * grads.dr, params.v - eta * grads.dv)
    return ModelParams1(params.w - eta * grads.dw, params.v - eta * grads.dv)


def _sgd_inplace(params, grads, eta):
    params.w -= eta * grads.dw
    params.v -= eta * grads.dv
    if grads.dr is not None:
        params.r -= eta * grads.dr


# -- gradient checking ------------------------------------------------------


def check_gradient(f, grad, theta, step=1e-5):
    """Max relative error between ``grad(theta)`` and central differences of ``f``.

    ``theta`` is a flat float array perturbed in place and restored.
    """
    analytic = np.asarray(grad(theta), dtype=np.float64).ravel()
    worst = 0.0
    for i in range(theta.size):
        orig = theta[i]
        theta[i] = orig + step
        fp = f(theta)
        theta[i] = orig - step
        fm = f(theta)
        theta[i] = orig
        num = (fp - fm) / (2.0 * step)
        a = analytic[i]
        err = abs(a - num) / max(abs(a), abs(num), 1e-8)
        worst = max(worst, err)
    return worst


def _sigmoid_ld(z):
    return 1.0 / (1.0 + np.exp(-z))


def precise_triple_loss(q_embs, x_pos, x_neg, arrays):
    """Hinge loss in extended precision from a dict of parameter arrays.

    Used as the finite-difference oracle: rounding noise of a float64 loss
    (about 1e-16 / step) would swamp partials smaller than ~1e-7.
    """
    ld = np.longdouble
    Q = q_embs.astype(ld)
    logits = Q @ arrays["v"]
    e = np.exp(logits - logits.max())
    g = e / e.sum()

    def y(x):
        x = x.astype(ld)
        if "r" in arrays:
            return g @ _sigmoid_ld(_sigmoid_ld(x @ arrays["w"]) @ arrays["r"])
        return g @ _sigmoid_ld(x @ arrays["w"])

    return max(ld(0), 1 - y(x_pos) + y(x_neg))


def grad_check_groups(params, triples, store=None, cfg=None, step=1e-5):
    """Per-parameter-group max relative error over a sample of triples.

    ``triples`` are :class:`~anmm.corpus.Triple` objects (encoded with
    ``store`` and ``cfg``) or pre-encoded ``(q_embs, x_pos, x_neg)`` tuples.
    Inactive triples are skipped.
    """
    arrays = {k: a.astype(np.longdouble) for k, a in params.arrays().items()}
    errors = {name: 0.0 for name in arrays}
    for t in triples:
        if isinstance(t, tuple):
            q_embs, xp, xn = t
        else:
            q_embs = store.matrix(t.question_tokens)
            xp = encode_pair(t.question_tokens, t.pos_answer, store, _bins(cfg), q_embs)
            xn = encode_pair(t.question_tokens, t.neg_answer, store, _bins(cfg), q_embs)
        grads = GradientSet.zeros_like(params)
        if triple_loss_grad(q_embs, xp, xn, params, grads) <= 0.0:
            continue
        analytic = {"w": grads.dw, "v": grads.dv, "r": grads.dr}
        for name, arr in arrays.items():
            flat = arr.reshape(-1)  # view; perturbations reach ``arrays``
            err = check_gradient(
                lambda _: precise_triple_loss(q_embs, xp, xn, arrays),
                lambda _: analytic[name], flat, step,
            )
            errors[name] = max(errors[name], float(err))
    return errors


def grad_check(params, triples, store=None, cfg=None, step=1e-5):
    return max(grad_check_groups(params, triples, store, cfg, step).values())


# -- training loop ----------------------------------------------------------


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    active_triples: int
    eta: float
    dev_map: float = None


@dataclass
class TrainResult:
    model: Model
    history: list = field(default_factory=list)
    best_epoch: int = None


def score_encoded(encoded, params):
    """Ranked lists for pre-encoded questions."""
    lists = []
    for q in encoded:
        g = attention(q.q_embs, params.v)
        scores = [_score_x(x, g, params) for x in q.signals]
        lists.append(RankedList.from_scores(q.qid, q.answer_ids, scores, q.labels))
    return lists


def _score_x(x, g, params):
    if isinstance(params, ModelParams2):
        return kernels.anmm2_forward(x, g, params.w, params.r)
    return kernels.anmm1_forward(x, g, params.w)


def learning_rate(eta0, epoch, max_epochs):
    """``eta0 * (1 - eps)`` with ``eps = epoch / (max_epochs + 1)``, epoch 0-based."""
    return eta0 * (1.0 - epoch / (max_epochs + 1))


def train(train_data, dev_data, cfg, store, progress=None):
    """Mini-batch SGD over all (q, a+, a-) triples of ``train_data``."""
    bins = cfg.bins
    enc_train = encode_dataset(train_data, store, bins)
    triples = encoded_triples(enc_train)
    if not triples:
        raise TrainingError("training data yields no (positive, negative) triples")
    enc_dev = encode_dataset(dev_data, store, bins) if dev_data is not None else None

    params = init_params(cfg.variant, cfg.bin_count, store.dim, cfg.hidden, seed=cfg.seed)
    order_rng = np.random.default_rng([cfg.seed, 1])
    grads = GradientSet.zeros_like(params)

    result = TrainResult(Model(params.copy(), bins, cfg.seed))
    best_map = -math.inf
    stale = 0
    for epoch in range(cfg.max_epochs):
        eta = learning_rate(cfg.eta0, epoch, cfg.max_epochs)
        order = order_rng.permutation(len(triples))
        total_loss = 0.0
        n_active = 0
        for start in range(0, len(order), cfg.batch_size):
            grads.dw[...] = 0.0
            grads.dv[...] = 0.0
            if grads.dr is not None:
                grads.dr[...] = 0.0
            batch_active = 0
            for idx in order[start : start + cfg.batch_size]:
                q_embs, xp, xn = triples[idx]
                loss = triple_loss_grad(q_embs, xp, xn, params, grads)
                if not math.isfinite(loss):
                    raise TrainingError(
                        f"non-finite loss at epoch {epoch + 1}, triple {idx}; "
                        f"try a smaller eta0 (now {cfg.eta0})"
                    )
                total_loss += loss
                if loss > 0.0:
                    batch_active += 1
            if batch_active:
                grads.scale(1.0 / batch_active)
                _sgd_inplace(params, grads, eta)
                n_active += batch_active

        record = EpochRecord(epoch + 1, total_loss / len(triples), n_active, eta)
        if enc_dev is not None:
            record.dev_map = mean_average_precision(score_encoded(enc_dev, params))
            if record.dev_map > best_map:
                best_map = record.dev_map
                stale = 0
                result.model = Model(params.copy(), bins, cfg.seed)
                result.best_epoch = epoch + 1
            else:
                stale += 1
        result.history.append(record)
        if progress is not None:
            progress(record)
        logger.debug("epoch %d loss %.6f active %d", record.epoch, record.mean_loss, n_active)
        if enc_dev is not None and stale > 0 and stale >= cfg.patience:
            break

    if enc_dev is None:
        result.model = Model(params.copy(), bins, cfg.seed)
        result.best_epoch = len(result.history)
    return result


def write_history(history, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "mean_loss", "active_triples", "eta", "dev_map"])
        for r in history:
            writer.writerow(
                [r.epoch, repr(r.mean_loss), r.active_triples, repr(r.eta),
                 "" if r.dev_map is None else repr(r.dev_map)]
            )


def evaluate_model(model, data, store):
    enc = encode_dataset(data, store, model.bins)
    lists = score_encoded(enc, model.params)
    return mean_average_precision(lists), mean_reciprocal_rank(lists)


__all__ = [
    "TrainConfig", "GradientSet", "hinge_loss", "grad_anmm1", "grad_anmm2", "sgd_step",
    "train", "grad_check", "grad_check_groups", "check_gradient", "make_triples",
    "forward",
]
