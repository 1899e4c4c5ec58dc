"""aNMM forward scoring, question attention and model persistence."""

from dataclasses import dataclass

import numpy as np

from anmm import kernels
from anmm.matching import BinConfig, bin_signals, build_matching_matrix

VARIANTS = ("anmm1", "anmm2")
FORMAT_MAGIC = "anmm-model 1"


class ModelFormatError(ValueError):
    pass


@dataclass
class ModelParams1:
    """Value-shared weights ``w`` (length B) and attention vector ``v`` (length d)."""

    w: np.ndarray
    v: np.ndarray
    variant = "anmm1"

    @property
    def bin_count(self):
        return self.w.shape[0]

    @property
    def hidden(self):
        return 1

    def arrays(self):
        return {"w": self.w, "v": self.v}

    def copy(self):
        return ModelParams1(self.w.copy(), self.v.copy())


@dataclass
class ModelParams2:
    """Weights ``w`` (B x T), hidden combination ``r`` (T) and attention ``v`` (d)."""

    w: np.ndarray
    r: np.ndarray
    v: np.ndarray
    variant = "anmm2"

    def __post_init__(self):
        if self.w.ndim != 2 or self.w.shape[1] != self.r.shape[0] or self.r.shape[0] < 1:
            raise ValueError(f"inconsistent shapes w{self.w.shape} r{self.r.shape}")

    @property
    def bin_count(self):
        return self.w.shape[0]

    @property
    def hidden(self):
        return self.r.shape[0]

    def arrays(self):
        return {"w": self.w, "r": self.r, "v": self.v}

    def copy(self):
        return ModelParams2(self.w.copy(), self.r.copy(), self.v.copy())


def init_params(variant, bin_count, dim, hidden=1, seed=0, scale=0.1):
    """Uniform ``[-scale, scale]`` initialization from ``seed``."""
    rng = np.random.default_rng(seed)
    if variant == "anmm1":
        w = rng.uniform(-scale, scale, size=bin_count)
        v = rng.uniform(-scale, scale, size=dim)
        return ModelParams1(w, v)
    if variant == "anmm2":
        w = rng.uniform(-scale, scale, size=(bin_count, hidden))
        r = rng.uniform(-scale, scale, size=hidden)
        v = rng.uniform(-scale, scale, size=dim)
        return ModelParams2(w, r, v)
    raise ValueError(f"unknown variant {variant!r}")


def attention(q_embs, v):
    """Softmax gate over question terms from ``v . q_j``."""
    q_embs = np.ascontiguousarray(q_embs, dtype=np.float64)
    if q_embs.ndim != 2 or q_embs.shape[0] == 0:
        raise ValueError("attention needs at least one question term")
    if q_embs.shape[1] != len(v):
        raise ValueError(f"embedding dim {q_embs.shape[1]} != len(v) {len(v)}")
    return kernels.softmax(q_embs @ v)


def hidden_anmm1(x_j, w):
    x_j = np.asarray(x_j, dtype=np.float64)
    if x_j.shape != np.shape(w):
        raise ValueError(f"length mismatch {x_j.shape} vs {np.shape(w)}")
    return float(kernels.sigmoid(np.array([np.dot(x_j, w)]))[0])


def _check_x(x, params):
    if x.ndim != 2 or x.shape[1] != params.bin_count:
        raise ValueError(f"binned signals of shape {x.shape} do not match {params.bin_count} bins")


def _gated(x, g, params):
    x = np.ascontiguousarray(x, dtype=np.float64)
    _check_x(x, params)
    if g.shape[0] != x.shape[0]:
        raise ValueError(f"{g.shape[0]} gate values for {x.shape[0]} question terms")
    if isinstance(params, ModelParams2):
        return kernels.anmm2_forward(x, g, params.w, params.r)
    return kernels.anmm1_forward(x, g, params.w)


def forward_anmm1(x, q_embs, params):
    return _gated(x, attention(q_embs, params.v), params)


def forward_anmm2(x, q_embs, params):
    return _gated(x, attention(q_embs, params.v), params)


def forward(x, q_embs, params):
    return _gated(x, attention(q_embs, params.v), params)


def forward_anmm_idf(x, question_tokens, idf, params):
    """Forward pass with the attention gate replaced by raw IDF weights."""
    lookup = idf if callable(idf) else idf.__getitem__
    try:
        g = np.array([float(lookup(t)) for t in question_tokens], dtype=np.float64)
    except KeyError as exc:
        raise ValueError(f"no idf value for question token {exc.args[0]!r}") from None
    return _gated(x, g, params)


def score_pair(question, answer, store, cfg, params, variant=None, idf=None):
    """Matching matrix, binning and forward pass for one QA pair.

    ``variant`` is ``"anmm1"``, ``"anmm2"`` or ``"anmm_idf"``; by default it
    follows the parameter type.
    """
    variant = variant or params.variant
    q_embs = store.matrix(question)
    x = bin_signals(build_matching_matrix(question, answer, store, q_embs), cfg)
    if variant == "anmm_idf":
        if idf is None:
            raise ValueError("anmm_idf scoring needs idf weights")
        return forward_anmm_idf(x, question, idf, params)
    if variant != params.variant:
        raise ValueError(f"variant {variant!r} does not match {params.variant} parameters")
    return forward(x, q_embs, params)


@dataclass
class Model:
    """Trained parameters plus the configuration needed to reuse them."""

    params: object
    bins: BinConfig
    seed: int = 0

    @property
    def variant(self):
        return self.params.variant

    @property
    def dim(self):
        return self.params.v.shape[0]


def save_model(model, path):
    p = model.params
    lines = [
        FORMAT_MAGIC,
        f"variant {p.variant}",
        f"bins {model.bins.bin_count}",
        f"hidden {p.hidden}",
        f"dim {model.dim}",
        f"seed {model.seed}",
        f"drop_negative {int(model.bins.drop_negative)}",
    ]
    for name, arr in p.arrays().items():
        lines.append(f"[{name}] " + " ".join(str(s) for s in arr.shape))
        lines.extend(repr(float(x)) for x in arr.ravel(order="C"))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"cannot read model {path}: {exc}") from exc
    if not lines or lines[0] != FORMAT_MAGIC:
        raise ModelFormatError(f"{path}: not an aNMM model file")
    header = {}
    pos = 1
    while pos < len(lines) and not lines[pos].startswith("["):
        key, _, value = lines[pos].partition(" ")
        header[key] = value
        pos += 1
    try:
        variant = header["variant"]
        bins = int(header["bins"])
        hidden = int(header["hidden"])
        dim = int(header["dim"])
        seed = int(header["seed"])
        drop_negative = bool(int(header.get("drop_negative", "0")))
    except (KeyError, ValueError) as exc:
        raise ModelFormatError(f"{path}: bad header: {exc}") from exc
    if variant not in VARIANTS:
        raise ModelFormatError(f"{path}: unknown variant {variant!r}")

    arrays = {}
    while pos < len(lines):
        head = lines[pos]
        if not head.startswith("[") or "]" not in head:
            raise ModelFormatError(f"{path}:{pos + 1}: expected section header")
        name = head[1 : head.index("]")]
        try:
            shape = tuple(int(s) for s in head[head.index("]") + 1 :].split())
            size = int(np.prod(shape))
            values = [float(s) for s in lines[pos + 1 : pos + 1 + size]]
        except ValueError as exc:
            raise ModelFormatError(f"{path}: section [{name}]: {exc}") from exc
        if len(values) != size:
            raise ModelFormatError(f"{path}: section [{name}] truncated")
        arrays[name] = np.array(values, dtype=np.float64).reshape(shape)
        pos += 1 + size

    expected = {"w": (bins,), "v": (dim,)}
    if variant == "anmm2":
        expected = {"w": (bins, hidden), "r": (hidden,), "v": (dim,)}
    for name, shape in expected.items():
        if name not in arrays or arrays[name].shape != shape:
            got = arrays[name].shape if name in arrays else None
            raise ModelFormatError(f"{path}: section [{name}] has shape {got}, expected {shape}")
    if variant == "anmm1":
        params = ModelParams1(arrays["w"], arrays["v"])
    else:
        params = ModelParams2(arrays["w"], arrays["r"], arrays["v"])
    return Model(params, BinConfig(bins, drop_negative), seed)
