import csv

import numpy as np
import pytest

from anmm.cli import main
from anmm.synthetic import write_fixture


@pytest.fixture(scope="module")
def fx(tmp_path_factory):
    d = tmp_path_factory.mktemp("fx")
    data, emb = write_fixture(d, seed=7)
    return d, str(data), str(emb)


def train_args(fx, out, *extra):
    d, data, emb = fx
    return ["train", "--train-data", data, "--embeddings", emb, "--bins", "21",
            "--epochs", "30", "--seed", "7", "--model-out", str(out), *extra]


def test_train_writes_model_and_history(fx, tmp_path, capsys):
    assert main(train_args(fx, tmp_path / "m", "--dev-data", fx[1])) == 0
    out = capsys.readouterr().out
    assert "dev MAP" in out and "dev MRR" in out
    rows = list(csv.reader(open(tmp_path / "m.history.csv")))
    assert rows[0] == ["epoch", "mean_loss", "active_triples", "eta", "dev_map"]


def test_train_twice_byte_identical(fx, tmp_path):
    assert main(train_args(fx, tmp_path / "a")) == 0
    assert main(train_args(fx, tmp_path / "b")) == 0
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_missing_embeddings_is_usage_error(fx, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--train-data", fx[1], "--model-out", str(tmp_path / "m")])
    assert exc.value.code == 2


def test_variant_and_hidden_in_header(fx, tmp_path):
    assert main(train_args(fx, tmp_path / "m", "--variant", "anmm2", "--hidden-t", "8", "--epochs", "2")) == 0
    lines = (tmp_path / "m").read_text().splitlines()
    assert "variant anmm2" in lines and "hidden 8" in lines


def test_config_file_merges_under_flags(fx, tmp_path):
    conf = tmp_path / "run.cfg"
    conf.write_text(f"train-data = {fx[1]}\nembeddings={fx[2]}\nbins=21\nepochs=2\nvariant=anmm2\n")
    assert main(["train", "--config", str(conf), "--variant", "anmm1", "--model-out", str(tmp_path / "m")]) == 0
    lines = (tmp_path / "m").read_text().splitlines()
    assert "variant anmm1" in lines and "bins 21" in lines
    conf.write_text("nonsense=1\n")
    with pytest.raises(SystemExit):
        main(["train", "--config", str(conf)])


@pytest.fixture(scope="module")
def trained(fx, tmp_path_factory):
    d = tmp_path_factory.mktemp("model")
    assert main(train_args(fx, d / "m", "--epochs", "60")) == 0
    return d / "m"


def rank_args(fx, model, run, *extra):
    return ["rank", "--model", str(model), "--test-data", fx[1], "--embeddings", fx[2],
            "--run-out", str(run), *extra]


def test_rank_then_eval(fx, trained, tmp_path, capsys):
    assert main(rank_args(fx, trained, tmp_path / "run", "--qrels-out", str(tmp_path / "qrels"))) == 0
    capsys.readouterr()
    assert main(["eval", "--run", str(tmp_path / "run"), "--qrels", str(tmp_path / "qrels")]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["MAP 1.0000", "MRR 1.0000"]


def test_blend_alpha_one_matches_plain(fx, trained, tmp_path):
    main(rank_args(fx, trained, tmp_path / "plain"))
    main(rank_args(fx, trained, tmp_path / "blend", "--blend-ql", "--alpha", "1.0", "--mu", "100"))
    ids = lambda p: [l.split()[2] for l in open(p)]
    assert ids(tmp_path / "plain") == ids(tmp_path / "blend")


def test_rank_threads_and_idf_gate(fx, trained, tmp_path):
    main(rank_args(fx, trained, tmp_path / "one"))
    assert main(rank_args(fx, trained, tmp_path / "four", "--threads", "4")) == 0
    assert (tmp_path / "one").read_bytes() == (tmp_path / "four").read_bytes()
    assert main(rank_args(fx, trained, tmp_path / "idf", "--gate", "idf")) == 0


def test_rank_corrupted_model(fx, trained, tmp_path, capsys):
    bad = tmp_path / "bad"
    bad.write_text(trained.read_text()[:200])
    assert main(rank_args(fx, bad, tmp_path / "run")) == 1
    assert "error" in capsys.readouterr().err


def test_rank_dim_mismatch(fx, trained, tmp_path):
    emb = tmp_path / "e.txt"
    emb.write_text("what 1 0 0\n")
    args = rank_args(fx, trained, tmp_path / "run")
    args[args.index("--embeddings") + 1] = str(emb)
    assert main(args) == 1


def test_eval_hand_run(tmp_path, capsys):
    (tmp_path / "run").write_text("".join(f"q1 Q0 a{i} {i} {1 - i / 10:.6f} t\n" for i in range(1, 6)))
    (tmp_path / "qrels").write_text("q1 0 a1 1\nq1 0 a2 0\nq1 0 a3 1\nq1 0 a4 0\nq1 0 a5 0\n")
    assert main(["eval", "--run", str(tmp_path / "run"), "--qrels", str(tmp_path / "qrels")]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "MAP 0.8333"
    (tmp_path / "qrels").write_text("q9 0 a1 1\n")
    assert main(["eval", "--run", str(tmp_path / "run"), "--qrels", str(tmp_path / "qrels")]) == 1


def test_gradcheck_commands(capsys):
    assert main(["gradcheck", "--synthetic", "--variant", "anmm1", "--samples", "20"]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["gradcheck", "--synthetic", "--samples", "5", "--tol", "1e-12"]) == 1
    assert capsys.readouterr().out.rstrip().splitlines()[-1].startswith("FAIL")
    assert main(["gradcheck", "--synthetic", "--variant", "anmm2", "--samples", "5"]) == 0
    out = capsys.readouterr().out
    assert all(f"d{g} " in out for g in ("w", "r", "v"))


def test_gradcheck_on_data(fx, capsys):
    assert main(["gradcheck", "--train-data", fx[1], "--embeddings", fx[2], "--bins", "21", "--samples", "10"]) == 0


def test_inspect_dumps(fx, trained, tmp_path):
    assert main(["inspect", "--model", str(trained), "--weights-out", str(tmp_path / "w.csv"),
                 "--embeddings", fx[2], "--attention-out", str(tmp_path / "g.csv"),
                 "--question", "what is the topic03", "--question", "who did topic11 in"]) == 0
    rows = list(csv.DictReader(open(tmp_path / "w.csv")))
    assert len(rows) == 21
    assert rows[-1]["bin_lo"] == rows[-1]["bin_hi"] == "1.0"
    att = list(csv.DictReader(open(tmp_path / "g.csv")))
    for qi in ("0", "1"):
        assert abs(sum(float(r["g"]) for r in att if r["question"] == qi) - 1) < 1e-9
