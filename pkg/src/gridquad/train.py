"""Training loop, grid prediction and throughput measurement."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import TrainConfig
from .corpus import Document, require_valid
from .grid import E_NONE, R_NONE, DecodeResult, check_representable, decode_quadruples
from .metrics import evaluate
from .model import (ModelParams, Vocab, backward, doc_inputs, forward, gold_grids, init_params)

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


class NonFiniteLossError(TrainingError, FloatingPointError):
    pass


class Adam:
    def __init__(self, params: ModelParams, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.t = 0

    def step(self, params: ModelParams, grads: dict) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params.tensors[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class TrainLog:
    records: list = field(default_factory=list)
    best_epoch: Optional[int] = None

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _argmax_none_on_tie(P: np.ndarray, none_label: int) -> np.ndarray:
    """Per-cell argmax over axis 0; any tie for the maximum resolves to ``none``."""
    best = P.max(axis=0)
    labels = P.argmax(axis=0)
    ties = (P == best[None]).sum(axis=0) > 1
    labels[ties] = none_label
    return labels


def predict_grids(doc: Document, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    if doc.n == 0:
        return np.zeros((0, 0), dtype=np.int8), np.zeros((0, 0), dtype=np.int8)
    tape = forward(params, doc_inputs(doc, params))
    return (_argmax_none_on_tie(tape.ent_logits, E_NONE).astype(np.int8),
            _argmax_none_on_tie(tape.rel_logits, R_NONE).astype(np.int8))


def predict(doc: Document, params: ModelParams) -> DecodeResult:
    """Decoded quadruples (with a ``.trace`` of dropped cells); gold annotations are never read."""
    ent, rel = predict_grids(doc, params)
    return decode_quadruples(ent, rel)


def predict_corpus(docs: Sequence[Document], params: ModelParams) -> dict[str, DecodeResult]:
    return {d.doc_id: predict(d, params) for d in docs}


def _prepare(docs: Sequence[Document], what: str):
    require_valid(docs)
    for d in docs:
        report = check_representable(d)
        if not report.ok:
            raise TrainingError(f"{what} document {d.doc_id!r} is not grid-representable: "
                                + "; ".join(report.conflicts))
    return [gold_grids(d) for d in docs]


def train(train_docs: Sequence[Document], dev_docs: Sequence[Document], config: TrainConfig,
          vocab: Optional[Vocab] = None, callback=None) -> tuple[ModelParams, TrainLog]:
    """Adam over single documents; returns the parameters of the best dev quadruple-F1 epoch."""
    config.validate()
    golds = _prepare(train_docs, "training")
    _prepare(dev_docs, "dev")
    vocab = vocab or Vocab.build(train_docs, config.vocab_size)
    params = init_params(config, config.seed, vocab)
    tlog = TrainLog()
    if config.epochs == 0:
        return params, tlog

    inputs = [doc_inputs(d, params) for d in train_docs]
    order_rng = np.random.default_rng([config.seed, 1])
    drop_rng = np.random.default_rng([config.seed, 2]) if config.dropout > 0 else None
    opt = Adam(params, config.learning_rate)
    best_f1, best = -1.0, params.copy()

    for epoch in range(1, config.epochs + 1):
        total = 0.0
        for k in order_rng.permutation(len(train_docs)):
            doc = train_docs[k]
            if doc.n == 0:
                continue
            loss, grads = backward(forward(params, inputs[k], dropout_rng=drop_rng),
                                   *golds[k], params)
            if not np.isfinite(loss):
                raise NonFiniteLossError(f"non-finite loss at epoch {epoch}, document {doc.doc_id!r}")
            opt.step(params, grads)
            total += loss
        rec = {"epoch": epoch, "loss": total / max(len(train_docs), 1)}
        if dev_docs:
            rec["dev"] = evaluate(predict_corpus(dev_docs, params), dev_docs).to_dict()
            f1 = rec["dev"]["quadruple"]["F1"]
        else:
            f1 = float(epoch)  # no dev set: keep the latest epoch
        if f1 > best_f1:
            best_f1, best, tlog.best_epoch = f1, params.copy(), epoch
        rec["best_epoch"] = tlog.best_epoch
        tlog.records.append(rec)
        log.info("epoch %d loss %.5f dev quad F1 %s", epoch, rec["loss"],
                 f"{rec['dev']['quadruple']['F1']:.4f}" if dev_docs else "n/a")
        if callback is not None:
            callback(epoch, params, rec)
    return best, tlog


def throughput(docs: Sequence[Document], params: ModelParams, mode: str = "inference",
               repeats: int = 3) -> float:
    """Median documents per second over ``repeats`` timed passes after one warm-up pass."""
    if not docs:
        raise ValueError("throughput needs a non-empty corpus")
    if mode not in ("train", "inference"):
        raise ValueError(f"mode must be 'train' or 'inference', got {mode!r}")
    if mode == "train":
        golds = [gold_grids(d) for d in docs]
        work = params.copy()
        opt = Adam(work, params.config.learning_rate)
        rng = np.random.default_rng(0)

        def one_pass():
            for d, g in zip(docs, golds):
                if d.n:
                    _, grads = backward(forward(work, doc_inputs(d, work), dropout_rng=rng), *g, work)
                    opt.step(work, grads)
    else:
        def one_pass():
            for d in docs:
                predict(d, params)

    one_pass()
    rates = []
    for _ in range(max(repeats, 3)):
        t0 = time.perf_counter()
        one_pass()
        rates.append(len(docs) / (time.perf_counter() - t0))
    return float(np.median(rates))
