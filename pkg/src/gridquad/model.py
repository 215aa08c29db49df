"""Grid scoring network: token encoder, syntax embedding (POS + dependency GCN),
biaffine entity scorer and triaffine-bridged relation scorer, with hand-derived
backward passes.

Label axes are kept first internally (``(4, n, n)``); the public score
functions return label-last arrays ``(n, n, 4)``.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import TrainConfig
from .corpus import Document
from .grid import encode_grids
from .synth import POS_TAGS

UNK = "<unk>"
LOSS_FLOOR = 1e-12
CHECKPOINT_VERSION = 1
N_LABELS = 4


class ContractError(ValueError):
    pass


class NonFiniteGradientError(FloatingPointError):
    pass


# --------------------------------------------------------------------------
# vocabularies and parameters

@dataclass
class Vocab:
    tokens: list
    pos: list

    def __post_init__(self):
        self._tok = {t: k for k, t in enumerate(self.tokens)}
        self._pos = {t: k for k, t in enumerate(self.pos)}

    @classmethod
    def build(cls, docs: Iterable[Document], max_size: int = 0) -> "Vocab":
        seen: dict[str, int] = {}
        tags = list(POS_TAGS)
        for doc in docs:
            for tok in doc.tokens:
                seen[tok] = seen.get(tok, 0) + 1
            for tag in doc.pos:
                if tag not in tags:
                    tags.append(tag)
        words = sorted(seen, key=lambda w: (-seen[w], w))
        if max_size:
            words = words[: max_size - 1]
        return cls([UNK] + words, [UNK] + tags)

    def token_ids(self, tokens: Sequence[str]) -> np.ndarray:
        return np.array([self._tok.get(t, 0) for t in tokens], dtype=np.int64)

    def pos_ids(self, tags: Sequence[str]) -> np.ndarray:
        return np.array([self._pos.get(t, 0) for t in tags], dtype=np.int64)


def _glorot(rng: np.random.Generator, shape: tuple, stacked: bool) -> np.ndarray:
    core = shape[1:] if stacked else shape
    if 0 in shape:
        raise ContractError(f"zero-sized parameter {shape}")
    fan_in = int(np.prod(core[:-1])) if len(core) > 1 else core[0]
    fan_out = core[-1]
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def param_shapes(cfg: TrainConfig, vocab_size: int, pos_size: int) -> dict[str, tuple]:
    hx, hp, hs, he, hr, L = cfg.h_x, cfg.h_p, cfg.h_s, cfg.h_e, cfg.h_r, N_LABELS
    return {
        "token_embedding": (vocab_size, hx),
        "pos_embedding": (pos_size, hp),
        "W_gcn": (hx + hp, hs),
        "W_proj": (hx, hs),
        "W_e": (hs, he), "b_e": (he,),
        "ent_mlp1_W": (L, he, he), "ent_mlp1_b": (L, he),
        "ent_mlp2_W": (L, he, he), "ent_mlp2_b": (L, he),
        "ent_bilinear": (L, he, he),
        "W_r": (hs, hr), "b_r": (hr,),
        "rel_mlp1_W": (L, hr, hr), "rel_mlp1_b": (L, hr),
        "rel_mlp2_W": (L, hr, hr), "rel_mlp2_b": (L, hr),
        "rel_bilinear": (L, hr, hr),
        "tri_mlp3_W": (L, hr, hr), "tri_mlp3_b": (L, hr),
        "tri_mlp4_W": (L, hr, hr), "tri_mlp4_b": (L, hr),
        "tri_mlp5_W": (L, hr, hr), "tri_mlp5_b": (L, hr),
        "tri_U": (L, hr, hr, hr + 1),
    }


_STACKED = {k for k in param_shapes(TrainConfig(), 2, 2) if k.startswith(("ent_", "rel_", "tri_"))}


@dataclass
class ModelParams:
    tensors: dict
    config: TrainConfig
    vocab: Vocab

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def copy(self) -> "ModelParams":
        return ModelParams({k: v.copy() for k, v in self.tensors.items()}, self.config, self.vocab)

    def check_finite(self) -> None:
        for name, t in self.tensors.items():
            if not np.all(np.isfinite(t)):
                raise FloatingPointError(f"parameter {name} has non-finite values")


def init_params(cfg: TrainConfig, seed: int, vocab: Vocab) -> ModelParams:
    """Glorot-uniform weights, zero biases; deterministic in ``seed``."""
    cfg.validate()
    rng = np.random.default_rng(seed)
    if len(vocab.tokens) == 0 or len(vocab.pos) == 0:
        raise ContractError("vocabularies must be non-empty")
    tensors = {}
    for name, shape in param_shapes(cfg, len(vocab.tokens), len(vocab.pos)).items():
        if 0 in shape:
            raise ContractError(f"{name} would have a zero dimension: {shape}")
        if name.endswith("_b") or name in ("b_e", "b_r"):
            tensors[name] = np.zeros(shape)
        else:
            tensors[name] = _glorot(rng, shape, name in _STACKED)
    return ModelParams(tensors, cfg, vocab)


# --------------------------------------------------------------------------
# checkpoints: npz container with named tensors, config and vocab

def save_params(params: ModelParams, path) -> None:
    meta = {
        "format": "gridquad-checkpoint",
        "version": CHECKPOINT_VERSION,
        "config": params.config.to_dict(),
        "vocab": {"tokens": params.vocab.tokens, "pos": params.vocab.pos},
        "shapes": {k: list(v.shape) for k, v in params.tensors.items()},
    }
    arrays = {f"param/{k}": v for k, v in params.tensors.items()}
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8), **arrays)


def load_params(path) -> ModelParams:
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(bytes(z["meta"]).decode())
        if meta.get("format") != "gridquad-checkpoint" or meta.get("version") != CHECKPOINT_VERSION:
            raise ContractError(f"{path}: not a version-{CHECKPOINT_VERSION} gridquad checkpoint")
        tensors = {k[len("param/"):]: z[k].astype(np.float64) for k in z.files if k.startswith("param/")}
    for name, shape in meta["shapes"].items():
        if list(tensors[name].shape) != shape:
            raise ContractError(f"{path}: tensor {name} has shape {tensors[name].shape}, expected {shape}")
    vocab = Vocab(meta["vocab"]["tokens"], meta["vocab"]["pos"])
    return ModelParams(tensors, TrainConfig.from_dict(meta["config"]), vocab)


# --------------------------------------------------------------------------
# inputs

def adjacency(n: int, deps, self_loops: bool = True) -> np.ndarray:
    A = np.zeros((n, n))
    for i, j, *_ in deps:
        A[i, j] = A[j, i] = 1.0
    if self_loops:
        np.fill_diagonal(A, 1.0)
    return A


def random_syntax(n: int, n_edges: int, pos_size: int, rng: np.random.Generator):
    """Uniform POS ids and a random symmetric 0/1 adjacency with ``n_edges`` edges."""
    pos_ids = rng.integers(1, pos_size, size=n) if pos_size > 1 else np.zeros(n, dtype=np.int64)
    A = np.zeros((n, n))
    iu, ju = np.triu_indices(n, k=1)
    if n_edges and len(iu):
        pick = rng.choice(len(iu), size=min(n_edges, len(iu)), replace=False)
        A[iu[pick], ju[pick]] = 1.0
        A = A + A.T
    np.fill_diagonal(A, 1.0)
    return pos_ids, A


@dataclass
class Inputs:
    token_ids: np.ndarray
    pos_ids: np.ndarray
    adj: np.ndarray

    @property
    def n(self) -> int:
        return len(self.token_ids)


def doc_inputs(doc: Document, params: ModelParams) -> Inputs:
    cfg = params.config
    tok = params.vocab.token_ids(doc.tokens)
    if cfg.randomize_syntax:
        seed = zlib.crc32(f"{cfg.seed}:{doc.doc_id}".encode())
        pos, A = random_syntax(doc.n, len({(min(i, j), max(i, j)) for i, j, _ in doc.deps}),
                               len(params.vocab.pos), np.random.default_rng(seed))
    else:
        pos = params.vocab.pos_ids(doc.pos)
        A = adjacency(doc.n, doc.deps)
    return Inputs(tok, pos, A)


def gold_grids(doc: Document) -> tuple[np.ndarray, np.ndarray]:
    eg, rg = encode_grids(doc)
    return np.asarray(eg.labels, dtype=np.int64), np.asarray(rg.labels, dtype=np.int64)


# --------------------------------------------------------------------------
# building blocks

def _softmax(x: np.ndarray, axis: int = 0) -> np.ndarray:
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def _softmax_backward(p: np.ndarray, dp: np.ndarray, axis: int = 0) -> np.ndarray:
    return p * (dp - (p * dp).sum(axis=axis, keepdims=True))


def _stacked_mlp(H: np.ndarray, W: np.ndarray, b: np.ndarray):
    """Per-label affine map + rectifier: (n, h) -> (L, n, h)."""
    pre = np.matmul(H[None], W) + b[:, None, :]
    return np.maximum(pre, 0.0), pre


def _stacked_mlp_backward(H, W, pre, dout):
    dpre = dout * (pre > 0)
    dW = np.matmul(H.T[None], dpre)
    db = dpre.sum(axis=1)
    dH = np.matmul(dpre, W.transpose(0, 2, 1)).sum(axis=0)
    return dH, dW, db


def _bilinear(left: np.ndarray, B: np.ndarray, right: np.ndarray):
    """Per-label bilinear form: out[l, i, j] = left[l, i] . B[l] . right[l, j]."""
    lb = np.matmul(left, B)
    return np.matmul(lb, right.transpose(0, 2, 1)), lb


def _bilinear_backward(left, B, right, lb, dout):
    dright = np.matmul(dout.transpose(0, 2, 1), lb)
    dlb = np.matmul(dout, right)
    dB = np.matmul(left.transpose(0, 2, 1), dlb)
    dleft = np.matmul(dlb, B.transpose(0, 2, 1))
    return dleft, dB, dright


def _normalize(A: np.ndarray) -> np.ndarray:
    d = A.sum(axis=1)
    inv = np.where(d > 0, 1.0 / np.sqrt(np.maximum(d, 1e-12)), 0.0)
    return A * inv[:, None] * inv[None, :]


# --------------------------------------------------------------------------
# public operations

def encode_text(token_ids: np.ndarray, params: ModelParams) -> np.ndarray:
    """Reference word-level encoder: one embedding row per token."""
    table = params["token_embedding"]
    ids = np.asarray(token_ids, dtype=np.int64)
    ids = np.where((ids >= 0) & (ids < len(table)), ids, 0)
    return table[ids].reshape(len(ids), table.shape[1])


def skem_forward(Hx: np.ndarray, pos_ids: np.ndarray, A: np.ndarray, params: ModelParams) -> np.ndarray:
    return _skem(Hx, pos_ids, A, params)[0]


def _skem(Hx, pos_ids, A, params):
    cfg = params.config
    n = Hx.shape[0]
    if A.shape != (n, n) or len(pos_ids) != n:
        raise ContractError(f"SKEM inputs disagree: H_x {Hx.shape}, pos {len(pos_ids)}, A {A.shape}")
    if not cfg.use_skem:
        W = params["W_proj"]
        if Hx.shape[1] != W.shape[0]:
            raise ContractError(f"H_x width {Hx.shape[1]} != projection input {W.shape[0]}")
        return Hx @ W, {"skem": False}
    Wg = params["W_gcn"]
    Hp = params["pos_embedding"][np.asarray(pos_ids, dtype=np.int64)].reshape(n, params["pos_embedding"].shape[1])
    if not cfg.use_pos:
        Hp = np.zeros_like(Hp)
    Hxp = np.concatenate([Hx, Hp], axis=1)
    if Hxp.shape[1] != Wg.shape[0]:
        raise ContractError(f"[H_x;H_p] width {Hxp.shape[1]} != W_gcn rows {Wg.shape[0]}")
    Aeff = np.eye(n) if not cfg.use_dep else A
    if cfg.normalize_adjacency:
        Aeff = _normalize(Aeff)
    AH = Aeff @ Hxp
    Z = AH @ Wg
    return np.maximum(Z, 0.0), {"skem": True, "Hxp": Hxp, "A": Aeff, "AH": AH, "Z": Z}


def _skem_backward(Hx, pos_ids, cache, dHs, params, grads):
    cfg = params.config
    if not cache["skem"]:
        grads["W_proj"] += Hx.T @ dHs
        return dHs @ params["W_proj"].T
    dZ = dHs * (cache["Z"] > 0)
    grads["W_gcn"] += cache["AH"].T @ dZ
    dHxp = cache["A"].T @ (dZ @ params["W_gcn"].T)
    hx = Hx.shape[1]
    if cfg.use_pos:
        np.add.at(grads["pos_embedding"], np.asarray(pos_ids, dtype=np.int64), dHxp[:, hx:])
    return dHxp[:, :hx]


def _entity(Hs, params):
    He = Hs @ params["W_e"] + params["b_e"]
    E1, pre1 = _stacked_mlp(He, params["ent_mlp1_W"], params["ent_mlp1_b"])
    E2, pre2 = _stacked_mlp(He, params["ent_mlp2_W"], params["ent_mlp2_b"])
    Y, lb = _bilinear(E1, params["ent_bilinear"], E2)
    return Y, {"He": He, "E1": E1, "E2": E2, "pre1": pre1, "pre2": pre2, "lb": lb}


def _entity_backward(Hs, c, dY, params, grads):
    dE1, dB, dE2 = _bilinear_backward(c["E1"], params["ent_bilinear"], c["E2"], c["lb"], dY)
    grads["ent_bilinear"] += dB
    dHe1, dW1, db1 = _stacked_mlp_backward(c["He"], params["ent_mlp1_W"], c["pre1"], dE1)
    dHe2, dW2, db2 = _stacked_mlp_backward(c["He"], params["ent_mlp2_W"], c["pre2"], dE2)
    grads["ent_mlp1_W"] += dW1
    grads["ent_mlp1_b"] += db1
    grads["ent_mlp2_W"] += dW2
    grads["ent_mlp2_b"] += db2
    dHe = dHe1 + dHe2
    grads["W_e"] += Hs.T @ dHe
    grads["b_e"] += dHe.sum(axis=0)
    return dHe @ params["W_e"].T


def entity_scores(Hs: np.ndarray, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Biaffine label scores y (n, n, 4) and their per-cell softmax p (n, n, 4)."""
    Y, _ = _entity(Hs, params)
    return Y.transpose(1, 2, 0), _softmax(Y, 0).transpose(1, 2, 0)


def _triaffine(T3, T4, T5, U):
    """Raw triple scores ytil[q, i, k, j] = sum_abc U[q,a,b,c] T4[q,k,a] T5[q,j,b] [T3;1][q,i,c]."""
    L, n, h = T3.shape
    u = np.concatenate([T3, np.ones((L, n, 1))], axis=2)
    G = np.matmul(u, U.reshape(L, h * h, h + 1).transpose(0, 2, 1)).reshape(L, n, h, h)
    M = np.matmul(T4[:, None], G)                         # (L, i, k, b)
    ytil = np.matmul(M, T5[:, None].transpose(0, 1, 3, 2))  # (L, i, k, j)
    return ytil, {"u": u, "G": G, "M": M}


def _triaffine_backward(T3, T4, T5, U, c, dytil):
    L, n, h = T3.shape
    M, G, u = c["M"], c["G"], c["u"]
    dM = np.matmul(dytil, T5[:, None])
    dT5 = np.matmul(dytil.reshape(L, n * n, n).transpose(0, 2, 1), M.reshape(L, n * n, h))
    dG = np.matmul(T4[:, None].transpose(0, 1, 3, 2), dM)
    dT4 = np.einsum("qikb,qiab->qka", dM, G, optimize=True)
    dU = np.matmul(dG.reshape(L, n, h * h).transpose(0, 2, 1), u).reshape(L, h, h, h + 1)
    du = np.matmul(dG.reshape(L, n, h * h), U.reshape(L, h * h, h + 1))
    return du[:, :, :h], dT4, dT5, dU


def _relation(Hs, params):
    Hr = Hs @ params["W_r"] + params["b_r"]
    R1, p1 = _stacked_mlp(Hr, params["rel_mlp1_W"], params["rel_mlp1_b"])
    R2, p2 = _stacked_mlp(Hr, params["rel_mlp2_W"], params["rel_mlp2_b"])
    Yhat, lb = _bilinear(R1, params["rel_bilinear"], R2)
    T3, p3 = _stacked_mlp(Hr, params["tri_mlp3_W"], params["tri_mlp3_b"])
    T4, p4 = _stacked_mlp(Hr, params["tri_mlp4_W"], params["tri_mlp4_b"])
    T5, p5 = _stacked_mlp(Hr, params["tri_mlp5_W"], params["tri_mlp5_b"])
    ytil, tc = _triaffine(T3, T4, T5, params["tri_U"])
    Wt = _softmax(ytil, 0)
    # Bridge: every k contributes (yhat[i,k] + yhat[k,j]) weighted by the triple weight.
    S = Yhat[:, :, :, None] + Yhat[:, None, :, :]
    Y = Yhat + (S * Wt).sum(axis=2)
    cache = {"Hr": Hr, "R1": R1, "R2": R2, "p1": p1, "p2": p2, "lb": lb, "Yhat": Yhat,
             "T3": T3, "T4": T4, "T5": T5, "p3": p3, "p4": p4, "p5": p5, "tri": tc,
             "Wt": Wt, "S": S}
    return Y, cache


def _relation_backward(Hs, c, dY, params, grads):
    dS = dY[:, :, None, :] * c["Wt"]
    dWt = dY[:, :, None, :] * c["S"]
    dYhat = dY + dS.sum(axis=3) + dS.sum(axis=1)
    dytil = _softmax_backward(c["Wt"], dWt, 0)
    dT3, dT4, dT5, dU = _triaffine_backward(c["T3"], c["T4"], c["T5"], params["tri_U"], c["tri"], dytil)
    grads["tri_U"] += dU

    dR1, dB, dR2 = _bilinear_backward(c["R1"], params["rel_bilinear"], c["R2"], c["lb"], dYhat)
    grads["rel_bilinear"] += dB
    dHr = np.zeros_like(c["Hr"])
    for name, pre, dout in (("rel_mlp1", c["p1"], dR1), ("rel_mlp2", c["p2"], dR2),
                            ("tri_mlp3", c["p3"], dT3), ("tri_mlp4", c["p4"], dT4),
                            ("tri_mlp5", c["p5"], dT5)):
        dH, dW, db = _stacked_mlp_backward(c["Hr"], params[f"{name}_W"], pre, dout)
        grads[f"{name}_W"] += dW
        grads[f"{name}_b"] += db
        dHr += dH
    grads["W_r"] += Hs.T @ dHr
    grads["b_r"] += dHr.sum(axis=0)
    return dHr @ params["W_r"].T


def relation_scores(Hs: np.ndarray, params: ModelParams):
    """Pairwise biaffine scores, triple weights, bridged scores and probabilities.

    Returns ``(yhat (n,n,4), triple weights (n,n,n,4) indexed [i,k,j,q],
    bridged y (n,n,4), p (n,n,4))``.
    """
    Y, c = _relation(Hs, params)
    return (c["Yhat"].transpose(1, 2, 0), c["Wt"].transpose(1, 2, 3, 0),
            Y.transpose(1, 2, 0), _softmax(Y, 0).transpose(1, 2, 0))


def _cell_nll(P: np.ndarray, gold: np.ndarray):
    """Mean negative log-likelihood over cells; P is (4, n, n)."""
    n = gold.shape[0]
    p_gold = np.take_along_axis(P, gold[None], axis=0)[0]
    clamped = p_gold < LOSS_FLOOR
    loss = -np.log(np.maximum(p_gold, LOSS_FLOOR)).sum() / (n * n)
    onehot = np.zeros_like(P)
    np.put_along_axis(onehot, gold[None], 1.0, axis=0)
    dlogits = (P - onehot) / (n * n)
    # Clamped cells sit on the flat part of max(p, floor): no gradient.
    dlogits[:, clamped] = 0.0
    return loss, dlogits


def grid_loss(pe: np.ndarray, pr: np.ndarray, gold_entity: np.ndarray, gold_relation: np.ndarray) -> float:
    """Joint cell-level cross-entropy; probability tensors are label-last (n, n, 4)."""
    gold_entity = np.asarray(gold_entity, dtype=np.int64)
    gold_relation = np.asarray(gold_relation, dtype=np.int64)
    if pe.shape[:2] != gold_entity.shape or pr.shape[:2] != gold_relation.shape:
        raise ContractError("probability tensors and gold grids disagree in size")
    if gold_entity.size == 0:
        return 0.0
    le, _ = _cell_nll(np.moveaxis(pe, -1, 0), gold_entity)
    lr, _ = _cell_nll(np.moveaxis(pr, -1, 0), gold_relation)
    return float(le + lr)


# --------------------------------------------------------------------------
# full forward / backward

@dataclass
class Tape:
    """Everything the backward pass needs from one forward pass."""
    inputs: Inputs
    Hx: np.ndarray
    Hs: np.ndarray
    ent_logits: np.ndarray
    rel_logits: np.ndarray
    pe: np.ndarray
    pr: np.ndarray
    caches: dict = field(default_factory=dict)

    @property
    def entity_probs(self) -> np.ndarray:
        return self.pe.transpose(1, 2, 0)

    @property
    def relation_probs(self) -> np.ndarray:
        return self.pr.transpose(1, 2, 0)


def forward(params: ModelParams, inputs: Inputs, *, dropout_rng: Optional[np.random.Generator] = None) -> Tape:
    """Full forward pass; dropout is active only when ``dropout_rng`` is given."""
    rate = params.config.dropout if dropout_rng is not None else 0.0
    Hx0 = encode_text(inputs.token_ids, params)
    mask_x = _dropout_mask(Hx0.shape, rate, dropout_rng)
    Hx = Hx0 * mask_x if mask_x is not None else Hx0
    Hs0, skem_cache = _skem(Hx, inputs.pos_ids, inputs.adj, params)
    mask_s = _dropout_mask(Hs0.shape, rate, dropout_rng)
    Hs = Hs0 * mask_s if mask_s is not None else Hs0
    Ye, ent_cache = _entity(Hs, params)
    Yr, rel_cache = _relation(Hs, params)
    return Tape(inputs, Hx, Hs, Ye, Yr, _softmax(Ye, 0), _softmax(Yr, 0),
                {"skem": skem_cache, "ent": ent_cache, "rel": rel_cache,
                 "mask_x": mask_x, "mask_s": mask_s})


def _dropout_mask(shape, rate, rng):
    if rng is None or rate <= 0.0:
        return None
    return (rng.random(shape) >= rate) / (1.0 - rate)


def tape_loss(tape: Tape, gold_entity: np.ndarray, gold_relation: np.ndarray) -> float:
    return float(raw_tape_loss(tape, gold_entity, gold_relation))


def raw_tape_loss(tape: Tape, gold_entity: np.ndarray, gold_relation: np.ndarray):
    """Loss in the tape's own floating-point type (no rounding to float64)."""
    if tape.inputs.n == 0:
        return 0.0
    le, _ = _cell_nll(tape.pe, gold_entity)
    lr, _ = _cell_nll(tape.pr, gold_relation)
    return le + lr


def backward(tape: Tape, gold_entity: np.ndarray, gold_relation: np.ndarray,
             params: ModelParams) -> tuple[float, dict[str, np.ndarray]]:
    """Loss value and its gradient with respect to every parameter tensor."""
    grads = {k: np.zeros_like(v) for k, v in params.tensors.items()}
    if tape.inputs.n == 0:
        return 0.0, grads
    le, dYe = _cell_nll(tape.pe, gold_entity)
    lr, dYr = _cell_nll(tape.pr, gold_relation)
    c = tape.caches
    dHs = _entity_backward(tape.Hs, c["ent"], dYe, params, grads)
    dHs += _relation_backward(tape.Hs, c["rel"], dYr, params, grads)
    if c["mask_s"] is not None:
        dHs *= c["mask_s"]
    dHx = _skem_backward(tape.Hx, tape.inputs.pos_ids, c["skem"], dHs, params, grads)
    if c["mask_x"] is not None:
        dHx *= c["mask_x"]
    np.add.at(grads["token_embedding"], tape.inputs.token_ids, dHx)
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(f"gradient of {name} is not finite")
    return float(le + lr), grads


def loss_and_grads(params: ModelParams, inputs: Inputs, gold_entity, gold_relation,
                   dropout_rng: Optional[np.random.Generator] = None):
    tape = forward(params, inputs, dropout_rng=dropout_rng)
    return backward(tape, gold_entity, gold_relation, params)
