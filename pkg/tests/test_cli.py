import hashlib
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from gridquad.cli import build_parser, run
from gridquad.corpus import read_corpus, write_corpus
from gridquad.synth import synthesize_corpus

from conftest import EXAMPLE_ANN, EXAMPLE_OFFSETS, EXAMPLE_POS, EXAMPLE_TEXT

GOLDEN = Path(__file__).parent / "golden"
COMMANDS = ["convert", "split", "stats", "analyze", "kappa", "synth", "train", "eval", "predict", "gradcheck"]
SMALL = ["--h-x", "8", "--h-p", "4", "--h-s", "8", "--h-e", "6", "--h-r", "4", "--dropout", "0"]


def help_text(command=None):
    parser = build_parser()
    if command is None:
        return parser.format_help()
    sub = next(a for a in parser._actions if a.dest == "command")
    return sub.choices[command].format_help()


@pytest.mark.parametrize("command", [None] + COMMANDS)
def test_help_matches_golden(command):
    path = GOLDEN / f"help_{command or 'main'}.txt"
    text = help_text(command)
    if os.environ.get("GRIDQUAD_UPDATE_GOLDEN"):
        path.parent.mkdir(exist_ok=True)
        path.write_text(text, encoding="utf-8")
    assert text == path.read_text(encoding="utf-8")


def digest(*paths):
    return [hashlib.sha256(Path(p).read_bytes()).hexdigest() for p in paths]


@pytest.fixture(scope="module")
def corpora(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpora")
    spec = {"doc_count": 20, "doc_length": (8, 14), "quads_per_doc": (1, 2)}
    docs = synthesize_corpus(spec, 4)
    write_corpus(root / "train.jsonl", docs[:14])
    write_corpus(root / "dev.jsonl", docs[14:])
    return root


# exit codes ----------------------------------------------------------------

def test_unknown_subcommand_is_usage_error(capsys):
    assert run(["frobnicate"]) == 1
    assert "usage:" in capsys.readouterr().err


def test_missing_subcommand_and_flag(capsys):
    assert run([]) == 1
    assert run(["split", "--in", "x.jsonl"]) == 1
    assert run(["train", "--train", "a", "--out", "b", "--bogus"]) == 1


def test_missing_input_file_is_usage_error(tmp_path):
    assert run(["stats", "--in", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "s.json")]) == 1


def test_bad_ratio_is_usage_error(tmp_path, corpora):
    assert run(["split", "--in", str(corpora / "dev.jsonl"), "--ratio", "8:1", "--seed", "1",
                "--out-dir", str(tmp_path)]) == 1


def test_malformed_corpus_is_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{not json\n")
    assert run(["stats", "--in", str(bad), "--out", str(tmp_path / "s.json")]) == 2
    assert "data error" in capsys.readouterr().err


def test_bad_config_file_is_data_error(tmp_path, corpora):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"dropout": "lots"}')
    assert run(["train", "--config", str(cfg), "--train", str(corpora / "train.jsonl"),
                "--out", str(tmp_path / "m")]) == 2


def test_bad_flag_value_is_usage_error(tmp_path, corpora):
    assert run(["train", "--train", str(corpora / "train.jsonl"), "--out", str(tmp_path / "m"),
                "--dropout", "1.5"]) == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gridquad", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "gradcheck" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "gridquad", "nope"], capture_output=True, text=True)
    assert proc.returncode == 1 and proc.stderr


# subcommands ---------------------------------------------------------------

def test_split_3064_documents(tmp_path):
    src = tmp_path / "big.jsonl"
    assert run(["synth", "--docs", "3064", "--seed", "2", "--out", str(src)]) == 0
    assert run(["split", "--in", str(src), "--ratio", "8:1:1", "--seed", "13", "--out-dir", str(tmp_path)]) == 0
    sizes = [len(read_corpus(tmp_path / f"{k}.jsonl")) for k in ("train", "dev", "test")]
    assert sizes == [2451, 306, 307]


def test_gradcheck_exit_zero(tmp_path, capsys):
    assert run(["gradcheck", "--out", str(tmp_path / "g.tsv")]) == 0
    rows = (tmp_path / "g.tsv").read_text().splitlines()
    assert rows[0] == "tensor\tentries\tmax_rel_error"
    assert all(float(r.split("\t")[2]) <= 1e-4 for r in rows[1:])
    assert "ok:" in capsys.readouterr().out


def test_gradcheck_fails_on_impossible_tolerance(tmp_path):
    assert run(["gradcheck", "--tol", "0", "--out", str(tmp_path / "g.tsv")]) == 3


def test_convert_stats_analyze(tmp_path):
    src = tmp_path / "ann"
    src.mkdir()
    (src / "a.txt").write_text(EXAMPLE_TEXT)
    (src / "a.ann").write_text(EXAMPLE_ANN)
    (src / "a.tok").write_text("".join(f"{b} {e} {p}\n" for (b, e), p in zip(EXAMPLE_OFFSETS, EXAMPLE_POS)))
    corpus = tmp_path / "c.jsonl"
    assert run(["convert", "--src", str(src), "--lang", "uz", "--out", str(corpus)]) == 0
    doc = read_corpus(corpus)[0]
    assert doc.lang == "uz" and len(doc.quadruples) == 1
    assert run(["stats", "--in", str(corpus), "--out", str(tmp_path / "s.json"),
                "--tsv", str(tmp_path / "s.tsv")]) == 0
    assert json.loads((tmp_path / "s.json").read_text())["quad_count"] == 1
    assert "quadruples\t1" in (tmp_path / "s.tsv").read_text()
    assert run(["analyze", "--in", str(corpus), "--out-dir", str(tmp_path / "an")]) == 0
    assert {p.name for p in (tmp_path / "an").iterdir()} >= {"analysis.json", "analysis.tsv", "doc_length.png"}


def test_convert_missing_sidecar_is_data_error(tmp_path):
    (tmp_path / "a.txt").write_text(EXAMPLE_TEXT)
    (tmp_path / "a.ann").write_text(EXAMPLE_ANN)
    assert run(["convert", "--src", str(tmp_path), "--lang", "uz", "--out", str(tmp_path / "c.jsonl")]) == 2


def test_kappa_both_forms(tmp_path, capsys):
    assert run(["kappa", "--po", "0.9", "--pe", "0.5", "--out", str(tmp_path / "k.json")]) == 0
    assert json.loads((tmp_path / "k.json").read_text())["overall"]["kappa"] == 0.8
    labels = tmp_path / "l.json"
    labels.write_text(json.dumps({"target": [list("xxyy"), list("xyyy")]}))
    assert run(["kappa", "--labels", str(labels), "--out", str(tmp_path / "k2.json")]) == 0
    assert json.loads((tmp_path / "k2.json").read_text())["target"] == {"p_o": 0.75, "p_e": 0.5, "kappa": 0.5}
    assert "target\t0.7500\t0.5000\t0.5000" in capsys.readouterr().out
    assert run(["kappa", "--po", "1", "--pe", "1", "--out", str(tmp_path / "k3.json")]) == 2
    assert run(["kappa", "--out", str(tmp_path / "k4.json")]) == 1


def test_synth_is_reproducible(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for p in (a, b):
        assert run(["synth", "--docs", "30", "--seed", "9", "--out", str(p), "--truth", str(p) + ".truth"]) == 0
    assert digest(a, str(a) + ".truth") == digest(b, str(b) + ".truth")


def test_config_precedence(tmp_path, corpora):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"epochs": 1, "dropout": 0.2, "h_x": 8, "h_p": 4, "h_s": 8, "h_e": 6, "h_r": 4}))
    out = tmp_path / "m"
    assert run(["train", "--config", str(cfg), "--dropout", "0", "--no-pos", "--train",
                str(corpora / "train.jsonl"), "--out", str(out), "--no-figures"]) == 0
    used = json.loads((out / "config.json").read_text())
    assert used["epochs"] == 1 and used["dropout"] == 0.0 and used["use_pos"] is False
    assert used["learning_rate"] == 1e-3


def test_train_then_eval_reproduces_best_dev_metrics(tmp_path, corpora):
    model_dir, report = tmp_path / "m", tmp_path / "r"
    inputs = [corpora / "train.jsonl", corpora / "dev.jsonl"]
    before = digest(*inputs)
    assert run(["train", "--train", str(inputs[0]), "--dev", str(inputs[1]), "--out", str(model_dir),
                "--epochs", "4", "--seed", "3", *SMALL]) == 0
    assert {p.name for p in model_dir.iterdir()} == {"model.npz", "train_log.jsonl", "config.json", "training.png"}
    records = [json.loads(line) for line in (model_dir / "train_log.jsonl").read_text().splitlines()]
    best = records[records[-1]["best_epoch"] - 1]
    assert run(["eval", "--model", str(model_dir / "model.npz"), "--test", str(inputs[1]),
                "--report", str(report)]) == 0
    assert json.loads((report / "eval.json").read_text())["metrics"] == best["dev"]
    assert {"eval.tsv", "errors.tsv", "predictions.jsonl", "errors.png"} <= {p.name for p in report.iterdir()}
    assert digest(*inputs) == before


def test_predict_twice_is_byte_identical(tmp_path, corpora):
    model_dir = tmp_path / "m"
    assert run(["train", "--train", str(corpora / "train.jsonl"), "--out", str(model_dir),
                "--epochs", "2", "--seed", "0", "--no-figures", *SMALL]) == 0
    outs = [tmp_path / "p1.jsonl", tmp_path / "p2.jsonl"]
    for p in outs:
        assert run(["predict", "--model", str(model_dir / "model.npz"), "--in", str(corpora / "dev.jsonl"),
                    "--out", str(p), "--trace", str(p) + ".trace"]) == 0
    assert (tmp_path / "p1.jsonl").read_bytes() == (tmp_path / "p2.jsonl").read_bytes()
    first = json.loads(outs[0].read_text().splitlines()[0])
    assert sorted(first) == ["doc_id", "quadruples"]


def test_predict_rejects_non_finite_checkpoint(tmp_path, corpora):
    from gridquad.model import load_params, save_params
    model_dir = tmp_path / "m"
    assert run(["train", "--train", str(corpora / "train.jsonl"), "--out", str(model_dir),
                "--epochs", "0", "--no-figures", *SMALL]) == 0
    params = load_params(model_dir / "model.npz")
    params.tensors["W_e"][0, 0] = float("nan")
    save_params(params, model_dir / "bad.npz")
    assert run(["predict", "--model", str(model_dir / "bad.npz"), "--in", str(corpora / "dev.jsonl"),
                "--out", str(tmp_path / "p.jsonl")]) == 3
