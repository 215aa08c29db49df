"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line."""

import json
import random
import time

import pytest

from gridquad.brat import agreement_from_labels, ann_to_document, cohen_kappa, parse_ann, split_corpus
from gridquad.cli import run
from gridquad.config import TrainConfig
from gridquad.corpus import Document, Quadruple, Span, write_corpus
from gridquad.gradcheck import grad_check, toy_problem
from gridquad.grid import check_representable, decode_quadruples, encode_grids
from gridquad.metrics import evaluate
from gridquad.synth import synthesize, synthesize_corpus
from gridquad.train import predict, predict_corpus, train

from conftest import ACCEPTANCE, EXAMPLE_ANN, EXAMPLE_OFFSETS, EXAMPLE_POS, EXAMPLE_QUAD, EXAMPLE_TEXT, EXAMPLE_TOKENS

SMALL_DIMS = dict(h_x=32, h_p=20, h_s=64, h_e=32, h_r=16)
LEARN_SPEC = {"doc_length": (10, 30), "quads_per_doc": (1, 4)}


def report(number, ok, what, detail):
    ACCEPTANCE.append(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {what}: {detail}")
    print(ACCEPTANCE[-1])
    assert ok, ACCEPTANCE[-1]


def test_01_codec_round_trip():
    t0 = time.perf_counter()
    docs = synthesize_corpus({"doc_count": 1000}, 2024)
    exact = 0
    for d in docs:
        assert check_representable(d).ok
        eg, rg = encode_grids(d)
        exact += set(decode_quadruples(eg, rg)) == set(d.quadruples)
    elapsed = time.perf_counter() - t0
    report(1, exact == 1000 and elapsed < 30, "codec round trip",
           f"{exact}/1000 exact in {elapsed:.1f}s (limit 30s)")


def test_02_grid_fixture(example_doc):
    eg, rg = encode_grids(example_doc)
    ok = (eg.cells() == {(1, 1): "tgt", (2, 3): "asp", (5, 5): "opin"}
          and rg.cells() == {(1, 2): "rel", (2, 5): "rel", (1, 5): "pos"}
          and set(decode_quadruples(eg, rg)) == {EXAMPLE_QUAD})
    report(2, ok, "worked grid fixture", f"entity {eg.cells()} relation {rg.cells()}")


def test_03_gradient_check():
    t0 = time.perf_counter()
    worst = {}
    for n, seed in ((1, 0), (2, 1), (3, 2), (4, 3)):
        params, inputs, ge, gr = toy_problem(n=n, dim=8, seed=seed)
        for r in grad_check(params, inputs, ge, gr, tensors=tuple(params.tensors)):
            worst[r.tensor] = max(worst.get(r.tensor, 0.0), r.max_rel_error)
    elapsed = time.perf_counter() - t0
    top = max(worst.values())
    key = {k: f"{worst[k]:.1e}" for k in ("W_gcn", "ent_bilinear", "tri_U")}
    report(3, top <= 1e-4 and elapsed < 60, "gradient check",
           f"max rel error {top:.2e} over {len(worst)} tensors {key} in {elapsed:.1f}s")


def test_04_overfit(example_doc):
    t0 = time.perf_counter()
    # 63 synthetic documents plus the worked example make up the 64-doc corpus.
    docs = synthesize_corpus({**LEARN_SPEC, "doc_count": 63}, 11) + [example_doc]
    cfg = TrainConfig(epochs=200, dropout=0.0, seed=0, **SMALL_DIMS)
    params, log = train(docs, docs, cfg)
    f1s = [r["dev"]["quadruple"]["F1"] for r in log.records]
    first = next((k + 1 for k, f in enumerate(f1s) if f >= 0.95), None)
    final = evaluate(predict_corpus(docs, params), docs).quadruple.f1
    elapsed = time.perf_counter() - t0
    example_ok = set(predict(example_doc, params)) == {EXAMPLE_QUAD}
    report(4, first is not None and final >= 0.95 and elapsed < 600 and example_ok, "overfit",
           f"train quad F1 {final:.3f}, first >= 0.95 at epoch {first}, worked example "
           f"{'recovered' if example_ok else 'missed'}, {elapsed:.0f}s (limit 600s)")


@pytest.mark.slow
def test_05_generalization():
    t0 = time.perf_counter()
    train_docs = synthesize({**LEARN_SPEC, "doc_count": 512}, 21).documents
    dev_docs = synthesize({**LEARN_SPEC, "doc_count": 64}, 22).documents
    test_docs = synthesize({**LEARN_SPEC, "doc_count": 64}, 23).documents
    cfg = TrainConfig(epochs=60, dropout=0.1, seed=0, **SMALL_DIMS)
    params, log = train(train_docs, dev_docs, cfg)
    f1 = evaluate(predict_corpus(test_docs, params), test_docs).quadruple.f1
    report(5, f1 >= 0.60, "generalization",
           f"held-out quad F1 {f1:.3f} (>= 0.60), best dev epoch {log.best_epoch}, "
           f"{time.perf_counter() - t0:.0f}s")


def _oracle(pred, gold):
    g = {(q.target, q.aspect, q.opinion, q.sentiment) for q in gold}
    p = {(q.target, q.aspect, q.opinion, q.sentiment) for q in pred}
    return len(g), len(p), len(g & p)


def test_06_metric_oracle():
    rng = random.Random(6)

    def span():
        b = rng.randrange(8)
        return Span(b, b + rng.randint(1, 2))

    def quads():
        return {Quadruple(span(), span() if rng.random() < 0.7 else None, span(), rng.choice(["pos", "neg"]))
                for _ in range(rng.randint(0, 5))}

    agree = 0
    for k in range(200):
        gold, pred = quads(), quads() if rng.random() < 0.5 else set()
        if rng.random() < 0.5 and gold:
            pred |= set(rng.sample(sorted(gold, key=repr), rng.randint(1, len(gold))))
        doc = Document(f"d{k}", "xx", "", tuple("abcdefghij"), (Span(0, 10),), ("X",) * 10, (), frozenset(gold))
        s = evaluate([pred], [doc]).quadruple
        agree += (s.gold, s.pred, s.matched) == _oracle(pred, gold)
    report(6, agree == 200, "metric oracle", f"{agree}/200 pairs with identical counts")


def test_07_kappa():
    k = cohen_kappa(0.9, 0.5)
    a = agreement_from_labels(list("xxyy"), list("xyyy"))
    ok = k == 0.8 and (a.p_o, a.p_e, a.kappa) == (0.75, 0.5, 0.5)
    report(7, ok, "kappa", f"kappa(0.9, 0.5) = {k!r}; labels -> P_o {a.p_o}, P_e {a.p_e}, kappa {a.kappa}")


def test_08_ann_golden():
    graph = parse_ann(EXAMPLE_ANN, EXAMPLE_TEXT)
    doc = ann_to_document(graph, "ex-ann", "uz", EXAMPLE_TEXT, EXAMPLE_TOKENS, EXAMPLE_OFFSETS, EXAMPLE_POS, ())
    quads = set(doc.quadruples)
    report(8, quads == {Quadruple(Span(1, 2), Span(2, 4), Span(5, 6), "pos")}, "ANN golden",
           "; ".join(json.dumps(q.to_dict(), sort_keys=True) for q in quads))


def test_09_split():
    sizes = [len(p) for p in split_corpus(list(range(3064)), (8, 1, 1), seed=13)]
    report(9, sizes == [2451, 306, 307], "split", f"3064 docs at 8:1:1 -> {sizes}")


LEARN_FLAGS = [f"--{k.replace('_', '-')}={v}" for k, v in SMALL_DIMS.items()]
SMALL_FLAGS = ["--h-x", "16", "--h-p", "8", "--h-s", "16", "--h-e", "12", "--h-r", "8"]


@pytest.fixture(scope="module")
def cli_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("acc")
    docs = synthesize_corpus({**LEARN_SPEC, "doc_count": 40}, 10)
    write_corpus(root / "train.jsonl", docs[:30])
    write_corpus(root / "dev.jsonl", docs[30:])
    return root


def test_10_determinism(cli_corpus, tmp_path):
    outputs = []
    for k in range(2):
        model = tmp_path / f"run{k}"
        # Selecting on the training set keeps a model that actually emits quadruples.
        assert run(["train", "--train", str(cli_corpus / "train.jsonl"), "--dev", str(cli_corpus / "train.jsonl"),
                    "--out", str(model), "--epochs", "40", "--seed", "7", "--dropout", "0.2",
                    "--no-figures", *LEARN_FLAGS]) == 0
        out = tmp_path / f"pred{k}.jsonl"
        assert run(["predict", "--model", str(model / "model.npz"), "--in", str(cli_corpus / "train.jsonl"),
                    "--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    logs = [(tmp_path / f"run{k}" / "train_log.jsonl").read_bytes() for k in range(2)]
    emitted = sum(len(json.loads(line)["quadruples"]) for line in outputs[0].decode().splitlines())
    report(10, outputs[0] == outputs[1] and logs[0] == logs[1] and emitted > 0, "determinism",
           f"prediction files {'identical' if outputs[0] == outputs[1] else 'differ'} "
           f"({emitted} quadruples, {len(outputs[0])} bytes), training logs {'identical' if logs[0] == logs[1] else 'differ'}")


def _valid_report(path):
    data = json.loads(path.read_text())
    m = data["metrics"]
    vals = [v for grp in ("entity", "relation") for s in m[grp].values() for v in (s["P"], s["R"], s["F1"])]
    vals += [m["quadruple"][k] for k in ("P", "R", "F1")] + list(data["errors"]["rates"].values())
    return all(0.0 <= v <= 1.0 for v in vals)


def test_11_ablations(cli_corpus, tmp_path):
    outcomes = {}
    for name, flag in (("no-skem", "--no-skem"), ("no-pos", "--no-pos"), ("no-dep", "--no-dep"),
                       ("random-syntax", "--random-syntax")):
        model, rep = tmp_path / name, tmp_path / f"{name}-report"
        code = run(["train", "--train", str(cli_corpus / "train.jsonl"), "--dev", str(cli_corpus / "dev.jsonl"),
                    "--out", str(model), "--epochs", "3", "--seed", "0", flag, "--no-figures", *SMALL_FLAGS])
        code = code or run(["eval", "--model", str(model / "model.npz"), "--test", str(cli_corpus / "dev.jsonl"),
                            "--report", str(rep), "--no-figures"])
        used = json.loads((model / "config.json").read_text()) if code == 0 else {}
        outcomes[name] = (code == 0 and _valid_report(rep / "eval.json")
                          and used.get({"no-skem": "use_skem", "no-pos": "use_pos", "no-dep": "use_dep",
                                        "random-syntax": "randomize_syntax"}[name]) == (name == "random-syntax"))
    report(11, all(outcomes.values()), "ablations",
           ", ".join(f"{k} {'ok' if v else 'failed'}" for k, v in outcomes.items()))
