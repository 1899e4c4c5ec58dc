"""``anmm`` command line: train, rank, eval, gradcheck, inspect."""

import argparse
import csv
import logging
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from anmm import kernels
from anmm.corpus import DataError, parse_dataset, tokenize
from anmm.embeddings import EmbeddingError, load_embeddings
from anmm.evaluation import (
    EvaluationError, RankedList, lists_from_run, mean_average_precision,
    mean_reciprocal_rank, read_qrels, read_run, write_qrels, write_run,
)
from anmm.features import blend_scores, build_stats, idf, ql_score
from anmm.matching import BinConfig
from anmm.model import ModelFormatError, attention, forward_anmm_idf, init_params, load_model, save_model
from anmm.synthetic import random_encoded_triples, random_store, write_fixture
from anmm.training import (
    TrainConfig, TrainingError, encode_dataset, encoded_triples, evaluate_model,
    grad_check_groups, train, write_history,
)

logger = logging.getLogger("anmm")

DEFAULT_BINS = {"anmm1": 600, "anmm2": 200}

REQUIRED = {
    "train": ("train_data", "embeddings", "model_out"),
    "rank": ("model", "test_data", "embeddings", "run_out"),
    "eval": ("run", "qrels"),
    "gradcheck": (),
    "inspect": ("model",),
    "make-fixture": ("out",),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="anmm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value file; explicit flags take precedence")
        p.add_argument("--seed", type=int, default=0)
        return p

    p = common(sub.add_parser("train", help="train a model"))
    p.add_argument("--train-data")
    p.add_argument("--dev-data")
    p.add_argument("--embeddings")
    p.add_argument("--dim", type=int, help="embedding dimension (default: from file)")
    p.add_argument("--variant", choices=("anmm1", "anmm2"), default="anmm1")
    p.add_argument("--bins", type=int, help="bin count (default 600 for anmm1, 200 for anmm2)")
    p.add_argument("--hidden-t", type=int, default=4, help="hidden nodes T for anmm2")
    p.add_argument("--drop-negative-bins", action="store_true")
    p.add_argument("--eta0", type=float, default=0.05)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--model-out")
    p.add_argument("--history-out", help="default: <model-out>.history.csv")

    p = common(sub.add_parser("rank", help="score candidates and write a TREC run"))
    p.add_argument("--model")
    p.add_argument("--test-data")
    p.add_argument("--embeddings")
    p.add_argument("--run-out")
    p.add_argument("--qrels-out")
    p.add_argument("--tag", default="anmm")
    p.add_argument("--gate", choices=("attention", "idf"), default="attention")
    p.add_argument("--blend-ql", action="store_true")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--mu", type=float, default=2000.0)
    p.add_argument("--threads", type=int, default=1)

    p = common(sub.add_parser("eval", help="MAP/MRR of a run against qrels"))
    p.add_argument("--run")
    p.add_argument("--qrels")
    p.add_argument("--zero-positive", choices=("skip", "zero"), default="skip")

    p = common(sub.add_parser("gradcheck", help="finite-difference gradient check"))
    p.add_argument("--synthetic", action="store_true")
    p.add_argument("--train-data")
    p.add_argument("--embeddings")
    p.add_argument("--variant", choices=("anmm1", "anmm2"), default="anmm1")
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--hidden-t", type=int, default=4)
    p.add_argument("--dim", type=int, default=20, help="embedding dimension for --synthetic")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-4)

    p = common(sub.add_parser("inspect", help="dump learned weights and attention"))
    p.add_argument("--model")
    p.add_argument("--embeddings")
    p.add_argument("--weights-out")
    p.add_argument("--attention-out")
    p.add_argument("--question", action="append", default=[])

    p = common(sub.add_parser("make-fixture", help="write the synthetic planted-token fixture"))
    p.add_argument("--out")
    parser.set_defaults(seed=0)
    return parser, sub


def read_config(path):
    conf = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            conf[key.strip().lstrip("-").replace("-", "_")] = value.strip().strip('"')
    return conf


def _apply_config(subparser, conf):
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in conf.items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            subparser.error(f"unknown config key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._AppendAction):
            defaults[key] = [value]
        else:
            defaults[key] = value
    subparser.set_defaults(**defaults)


def parse_args(argv=None):
    parser, sub = build_parser()
    args = parser.parse_args(argv)
    subparser = sub.choices[args.command]
    if getattr(args, "config", None):
        try:
            conf = read_config(args.config)
        except (OSError, ValueError) as exc:
            subparser.error(str(exc))
        _apply_config(subparser, conf)
        args = parser.parse_args(argv)
    missing = [d for d in REQUIRED[args.command] if getattr(args, d, None) in (None, "")]
    if args.command == "gradcheck" and not args.synthetic and not (args.train_data and args.embeddings):
        missing.append("synthetic (or train_data and embeddings)")
    if missing:
        subparser.error("missing required " + ", ".join("--" + m.replace("_", "-") for m in missing))
    return args


# -- commands -------------------------------------------------------------------


def cmd_train(args):
    bins = args.bins or DEFAULT_BINS[args.variant]
    cfg = TrainConfig(
        variant=args.variant, bin_count=bins, hidden=args.hidden_t if args.variant == "anmm2" else 1,
        eta0=args.eta0, max_epochs=args.epochs, batch_size=args.batch_size, seed=args.seed,
        patience=args.patience, drop_negative=args.drop_negative_bins,
    )
    store = load_embeddings(args.embeddings, args.dim, oov_seed=args.seed)
    train_data = parse_dataset(args.train_data)
    dev_data = parse_dataset(args.dev_data) if args.dev_data else None

    def progress(rec):
        dev = "" if rec.dev_map is None else f" dev_map {rec.dev_map:.4f}"
        logger.info("epoch %d loss %.6f active %d%s", rec.epoch, rec.mean_loss, rec.active_triples, dev)

    result = train(train_data, dev_data, cfg, store, progress=progress)
    save_model(result.model, args.model_out)
    write_history(result.history, args.history_out or args.model_out + ".history.csv")
    print(f"wrote {args.model_out} (best epoch {result.best_epoch} of {len(result.history)})")
    if dev_data is not None:
        dev_map, dev_mrr = evaluate_model(result.model, dev_data, store)
        print(f"dev MAP {dev_map:.4f}")
        print(f"dev MRR {dev_mrr:.4f}")
    return 0


def _score_question(q, model, gate, idf_fn):
    params = model.params
    if gate == "idf":
        return [forward_anmm_idf(x, q.tokens, idf_fn, params) for x in q.signals]
    g = attention(q.q_embs, params.v)
    if params.variant == "anmm2":
        return [kernels.anmm2_forward(x, g, params.w, params.r) for x in q.signals]
    return [kernels.anmm1_forward(x, g, params.w) for x in q.signals]


def cmd_rank(args):
    model = load_model(args.model)
    store = load_embeddings(args.embeddings, oov_seed=model.seed)
    if store.dim != model.dim:
        raise ModelFormatError(f"embedding dim {store.dim} does not match model dim {model.dim}")
    data = parse_dataset(args.test_data)
    stats = build_stats(data) if (args.blend_ql or args.gate == "idf") else None
    encoded = encode_dataset(data, store, model.bins)

    def idf_fn(t):
        return idf(stats, t)

    def run_one(q):
        return _score_question(q, model, args.gate, idf_fn)

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            all_scores = list(pool.map(run_one, encoded))
    else:
        all_scores = [run_one(q) for q in encoded]

    lists = []
    for q, src, scores in zip(encoded, data, all_scores):
        if args.blend_ql:
            ql = [ql_score(q.tokens, p.answer_tokens, stats, args.mu) for p in src.pairs]
            scores = blend_scores(scores, ql, args.alpha)
        lists.append(RankedList.from_scores(q.qid, q.answer_ids, scores, q.labels))
    write_run(lists, args.tag, args.run_out)
    if args.qrels_out:
        write_qrels(data, args.qrels_out)
    print(f"wrote {args.run_out} ({len(lists)} questions)")
    return 0


def cmd_eval(args):
    lists = lists_from_run(read_run(args.run), read_qrels(args.qrels))
    print(f"MAP {mean_average_precision(lists, args.zero_positive):.4f}")
    print(f"MRR {mean_reciprocal_rank(lists, args.zero_positive):.4f}")
    return 0


def cmd_gradcheck(args):
    rng = np.random.default_rng(args.seed)
    bins = BinConfig(args.bins)
    if args.synthetic:
        store, vocab = random_store(rng, dim=args.dim)
        triples = random_encoded_triples(rng, store, vocab, bins, args.samples)
    else:
        store = load_embeddings(args.embeddings, oov_seed=args.seed)
        data = parse_dataset(args.train_data)
        enc = encoded_triples(encode_dataset(data, store, bins))
        if not enc:
            raise TrainingError("data yields no triples")
        pick = rng.choice(len(enc), size=min(args.samples, len(enc)), replace=False)
        triples = [enc[i] for i in sorted(pick)]
    params = init_params(args.variant, args.bins, store.dim, args.hidden_t, seed=args.seed)
    errors = grad_check_groups(params, triples, step=args.step)
    ok = True
    for name, err in errors.items():
        status = "PASS" if err < args.tol else "FAIL"
        ok &= err < args.tol
        print(f"d{name} max_rel_err {err:.3e} {status}")
    print(("PASS" if ok else "FAIL") + f" ({args.variant}, {len(triples)} triples, tol {args.tol:g})")
    return 0 if ok else 1


def cmd_inspect(args):
    model = load_model(args.model)
    params = model.params
    if args.weights_out:
        w = params.w if params.w.ndim == 2 else params.w[:, None]
        with open(args.weights_out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            cols = ["weight"] if w.shape[1] == 1 else [f"weight_{t}" for t in range(w.shape[1])]
            writer.writerow(["bin_index", "bin_lo", "bin_hi"] + cols)
            for k, (lo, hi) in enumerate(model.bins.edges()):
                writer.writerow([k, repr(lo), repr(hi)] + [repr(float(x)) for x in w[k]])
    if args.question:
        if not args.embeddings:
            raise EmbeddingError("--question needs --embeddings")
        store = load_embeddings(args.embeddings, oov_seed=model.seed)
        out = open(args.attention_out, "w", newline="", encoding="utf-8") if args.attention_out else sys.stdout
        try:
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(["question", "token", "g"])
            for qi, text in enumerate(args.question):
                tokens = tokenize(text)
                if not tokens:
                    continue
                g = attention(store.matrix(tokens), params.v)
                for tok, gj in zip(tokens, g):
                    writer.writerow([qi, tok, repr(float(gj))])
        finally:
            if out is not sys.stdout:
                out.close()
    return 0


def cmd_make_fixture(args):
    data_path, emb_path = write_fixture(args.out, seed=args.seed)
    print(f"wrote {data_path} and {emb_path}")
    return 0


COMMANDS = {
    "train": cmd_train,
    "rank": cmd_rank,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "inspect": cmd_inspect,
    "make-fixture": cmd_make_fixture,
}


def main(argv=None):
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (DataError, EmbeddingError, EvaluationError, ModelFormatError, TrainingError,
            ValueError, OSError) as exc:
        print(f"anmm {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
